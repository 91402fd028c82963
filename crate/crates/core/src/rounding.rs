//! Rounding of approximate designs to exact designs.
//!
//! Budget mode floors `C w_i / c(x_i)` at every support point and spends the
//! remaining budget by exhaustive search over small additions at the support
//! points and their neighbours. Sample-size mode is the same procedure with
//! unit costs, `C = n`, and the rule that every remaining observation is
//! placed.
//!
//! Exact designs are scored through the information matrix with weights
//! `n_i c(x_i) / C`, so unspent budget counts against a design.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{AnchoredCriterion, Phi};
use crate::error::{DesignError, Result};
use crate::linalg::Mat3;
use crate::maximin::MaximinSpec;
use crate::model::{ApproximateDesign, DesignSpace};

/// Budget slack absorbed by floating-point accumulation of unit costs.
const COST_EPS: f64 = 1e-9;
/// Objective values closer than this (relative) are treated as ties.
const TIE_TOL: f64 = 1e-12;

/// Replicate counts at distinct group sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDesign {
    points: Vec<(usize, u64)>,
    realized_cost: f64,
    realized_n: u64,
}

impl ExactDesign {
    /// Builds a design from `(group size, count)` pairs; zero counts are
    /// dropped and duplicate sizes merged.
    pub fn new(points: &[(usize, u64)], space: &DesignSpace) -> Result<Self> {
        let mut merged: Vec<(usize, u64)> = Vec::new();
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        for (x, n) in sorted {
            if x == 0 || x > space.grid().max_size() {
                return Err(DesignError::invalid(format!("group size {x} is outside the grid")));
            }
            if n == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += n,
                _ => merged.push((x, n)),
            }
        }
        if merged.is_empty() {
            return Err(DesignError::EmptySupport { tol: 0.0 });
        }
        let realized_cost = merged.iter().map(|&(x, n)| n as f64 * space.unit_cost(x)).sum();
        let realized_n = merged.iter().map(|p| p.1).sum();
        Ok(Self { points: merged, realized_cost, realized_n })
    }

    /// `(group size, replicates)` in increasing group size.
    pub fn points(&self) -> &[(usize, u64)] {
        &self.points
    }

    /// `sum_i n_i c(x_i)`
    pub fn realized_cost(&self) -> f64 {
        self.realized_cost
    }

    /// `sum_i n_i`
    pub fn realized_n(&self) -> u64 {
        self.realized_n
    }

    /// Information-matrix weights `n_i c(x_i) / total`.
    pub fn weights(&self, total: f64, space: &DesignSpace) -> Vec<(usize, f64)> {
        self.points.iter().map(|&(x, n)| (x, n as f64 * space.unit_cost(x) / total)).collect()
    }
}

/// Support expansion for the allocation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionConfig {
    /// Candidates are `x_i - radius ..= x_i + radius`, clipped to the grid.
    pub radius: usize,
    /// Largest number of allocations the search may enumerate.
    pub cap: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { radius: 2, cap: 5_000_000 }
    }
}

impl ExpansionConfig {
    pub fn new(radius: usize) -> Result<Self> {
        let cfg = Self { radius, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius > 2 {
            return Err(DesignError::invalid(format!("expansion radius must be at most 2, got {}", self.radius)));
        }
        if self.cap == 0 {
            return Err(DesignError::invalid("enumeration cap must be positive"));
        }
        Ok(())
    }
}

/// What the allocation search minimizes.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundingObjective {
    /// The criterion value; the anchor only feeds the reported efficiency.
    Single(AnchoredCriterion),
    /// The negated minimum efficiency over the criteria.
    Maximin(MaximinSpec),
}

impl RoundingObjective {
    fn criteria(&self) -> &[AnchoredCriterion] {
        match self {
            Self::Single(c) => std::slice::from_ref(c),
            Self::Maximin(spec) => spec.criteria(),
        }
    }

    /// Score to minimize; `+inf` for singular information.
    fn score(&self, info: &Mat3) -> f64 {
        match self {
            Self::Single(c) => c.spec.phi().value(info),
            Self::Maximin(spec) => {
                let min = spec
                    .criteria()
                    .iter()
                    .map(|c| efficiency_at(c, info))
                    .fold(f64::INFINITY, f64::min);
                if min > 0.0 { -min } else { f64::INFINITY }
            }
        }
    }
}

fn efficiency_at(c: &AnchoredCriterion, info: &Mat3) -> f64 {
    let phi = c.spec.phi().value(info);
    if !phi.is_finite() {
        return 0.0;
    }
    c.efficiency_of(c.spec.to_objective(phi))
}

/// Step-by-step record of one rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingTrace {
    /// Counts after flooring, at the approximate design's support.
    pub floor_counts: Vec<(usize, u64)>,
    /// Budget (or observations) left after flooring.
    pub remaining: f64,
    /// Added replicates; empty when nothing was added.
    pub delta: Vec<(usize, u64)>,
    /// Budget (or observations) left in the final design.
    pub final_remaining: f64,
    /// Criterion value of the exact design for a single criterion.
    pub objective: Option<f64>,
    /// Efficiency per criterion of the exact design.
    pub efficiencies: Vec<f64>,
    /// Minimum of `efficiencies`.
    pub efficiency: f64,
    /// Allocations scored by the search.
    pub enumerated: usize,
}

/// A group size eligible for additional replicates, with its cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub size: usize,
    pub cap: u64,
}

/// What is left to distribute after flooring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Remaining {
    /// Spend at most this much budget.
    Budget(f64),
    /// Place exactly this many unit-cost observations.
    Observations(u64),
}

/// Best allocation found by [`allocation_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub delta: Vec<(usize, u64)>,
    pub leftover: f64,
    /// The minimized score (criterion value, or negated minimum efficiency).
    pub score: f64,
    pub enumerated: usize,
}

#[derive(Debug, Clone)]
struct Best {
    score: f64,
    leftover: f64,
    /// Added group sizes with multiplicity, ascending.
    sizes: Vec<usize>,
    delta: Vec<u64>,
}

impl Best {
    fn cmp(&self, other: &Best) -> Ordering {
        let scale = self.score.abs().max(other.score.abs()).max(1e-300);
        if (self.score - other.score).abs() > TIE_TOL * scale || !self.score.is_finite() || !other.score.is_finite() {
            return self.score.total_cmp(&other.score);
        }
        self.leftover.total_cmp(&other.leftover).then_with(|| self.sizes.cmp(&other.sizes))
    }

    fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.cmp(&a) == Ordering::Less { b } else { a }),
            (a, b) => a.or(b),
        }
    }
}

struct Search<'a> {
    objective: &'a RoundingObjective,
    /// `c(x) / total * A(x)` per candidate.
    atoms: Vec<Mat3>,
    costs: Vec<f64>,
    caps: Vec<u64>,
    sizes: Vec<usize>,
    exact: bool,
    prune: bool,
}

impl Search<'_> {
    fn fits(&self, rem: f64) -> bool {
        rem >= -COST_EPS
    }

    /// Counts allocations up to `limit`, stopping early once exceeded.
    fn count(&self, k: usize, rem: f64, limit: usize, acc: &mut usize) {
        if *acc > limit {
            return;
        }
        if k == self.costs.len() {
            if self.leaf_ok(rem) {
                *acc += 1;
            }
            return;
        }
        for d in 0..=self.caps[k] {
            let next = rem - d as f64 * self.costs[k];
            if self.prune && !self.fits(next) {
                break;
            }
            self.count(k + 1, next, limit, acc);
        }
    }

    fn leaf_ok(&self, rem: f64) -> bool {
        if self.exact { rem.abs() <= COST_EPS } else { self.fits(rem) }
    }

    fn walk(&self, k: usize, rem: f64, info: Mat3, delta: &mut Vec<u64>, best: &mut Option<Best>, scored: &AtomicUsize) {
        if k == self.costs.len() {
            if !self.leaf_ok(rem) {
                return;
            }
            scored.fetch_add(1, AtomicOrdering::Relaxed);
            let score = self.objective.score(&info);
            let mut sizes = Vec::new();
            for (i, &d) in delta.iter().enumerate() {
                sizes.extend(std::iter::repeat_n(self.sizes[i], d as usize));
            }
            let cand = Best { score, leftover: rem.max(0.0), sizes, delta: delta.clone() };
            *best = Best::better(best.take(), Some(cand));
            return;
        }
        for d in 0..=self.caps[k] {
            let next = rem - d as f64 * self.costs[k];
            if self.prune && !self.fits(next) {
                break;
            }
            delta.push(d);
            self.walk(k + 1, next, info + self.atoms[k] * d as f64, delta, best, scored);
            delta.pop();
        }
    }
}

fn check_candidates(candidates: &[Candidate], space: &DesignSpace) -> Result<()> {
    for w in candidates.windows(2) {
        if w[0].size >= w[1].size {
            return Err(DesignError::invalid("candidates must be distinct and increasing"));
        }
    }
    if let Some(c) = candidates.iter().find(|c| c.size == 0 || c.size > space.grid().max_size()) {
        return Err(DesignError::invalid(format!("candidate {} is outside the grid", c.size)));
    }
    Ok(())
}

/// Exhaustive search for the additions that minimize the objective.
///
/// `base` holds the counts already placed and `total` is the normalizer of
/// the information weights (`C`, or `n` in sample-size mode). Ties in the
/// score go to the smaller leftover, then to the lexicographically smaller
/// list of added group sizes.
pub fn allocation_search(
    candidates: &[Candidate],
    remaining: Remaining,
    base: &[(usize, u64)],
    objective: &RoundingObjective,
    space: &DesignSpace,
    total: f64,
    cap: usize,
) -> Result<Allocation> {
    search_impl(candidates, remaining, base, objective, space, total, cap, true)
}

#[allow(clippy::too_many_arguments)]
fn search_impl(
    candidates: &[Candidate],
    remaining: Remaining,
    base: &[(usize, u64)],
    objective: &RoundingObjective,
    space: &DesignSpace,
    total: f64,
    cap: usize,
    prune: bool,
) -> Result<Allocation> {
    check_candidates(candidates, space)?;
    if !(total > 0.0 && total.is_finite()) {
        return Err(DesignError::invalid(format!("normalizer must be positive, got {total}")));
    }
    let (rem, exact, unit) = match remaining {
        Remaining::Budget(b) if b >= 0.0 && b.is_finite() => (b, false, false),
        Remaining::Budget(b) => return Err(DesignError::invalid(format!("remaining budget must be nonnegative, got {b}"))),
        Remaining::Observations(m) => (m as f64, true, true),
    };
    let cost_of = |x: usize| if unit { 1.0 } else { space.unit_cost(x) };
    let mut base_info = Mat3::zeros();
    for &(x, n) in base {
        base_info += space.atom(x).info * (n as f64 * cost_of(x) / total);
    }
    let search = Search {
        objective,
        atoms: candidates.iter().map(|c| space.atom(c.size).info * (cost_of(c.size) / total)).collect(),
        costs: candidates.iter().map(|c| cost_of(c.size)).collect(),
        caps: candidates.iter().map(|c| c.cap).collect(),
        sizes: candidates.iter().map(|c| c.size).collect(),
        exact,
        prune,
    };
    let mut count = 0;
    search.count(0, rem, cap, &mut count);
    if count > cap {
        return Err(DesignError::EnumerationCapExceeded { cap });
    }
    let scored = AtomicUsize::new(0);
    let best = if search.costs.is_empty() {
        let mut best = None;
        search.walk(0, rem, base_info, &mut Vec::new(), &mut best, &scored);
        best
    } else {
        // First branching level in parallel; reduced in branch order.
        let branches: Vec<Option<Best>> = (0..=search.caps[0])
            .into_par_iter()
            .map(|d| {
                let next = rem - d as f64 * search.costs[0];
                if search.prune && !search.fits(next) {
                    return None;
                }
                let mut best = None;
                let mut delta = vec![d];
                search.walk(1, next, base_info + search.atoms[0] * d as f64, &mut delta, &mut best, &scored);
                best
            })
            .collect();
        branches.into_iter().fold(None, Best::better)
    };
    let best = best.ok_or(DesignError::Infeasible)?;
    if !best.score.is_finite() {
        return Err(DesignError::SingularInformation);
    }
    let delta = candidates
        .iter()
        .zip(&best.delta)
        .filter(|(_, d)| **d > 0)
        .map(|(c, d)| (c.size, *d))
        .collect();
    Ok(Allocation { delta, leftover: best.leftover, score: best.score, enumerated: scored.into_inner() })
}

/// Support points of `oad` with `radius` neighbours each, clipped to the grid.
fn expanded(support: &[(usize, f64)], radius: usize, max_size: usize) -> Vec<usize> {
    let mut out: Vec<usize> = support
        .iter()
        .flat_map(|&(x, _)| x.saturating_sub(radius).max(1)..=(x + radius).min(max_size))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn oad_support(oad: &ApproximateDesign, space: &DesignSpace, prune_tol: f64) -> Result<Vec<(usize, f64)>> {
    if oad.grid() != space.grid() {
        return Err(DesignError::invalid("design and design space use different grids"));
    }
    let support = oad.support(prune_tol)?;
    let total: f64 = support.iter().map(|p| p.1).sum();
    Ok(support.into_iter().map(|(x, w)| (x, w / total)).collect())
}

fn finish(
    floors: Vec<(usize, u64)>,
    remaining: f64,
    alloc: Option<Allocation>,
    objective: &RoundingObjective,
    space: &DesignSpace,
    total: f64,
    unit: bool,
) -> Result<(ExactDesign, RoundingTrace)> {
    let mut counts = floors.clone();
    let (delta, final_remaining, enumerated) = match alloc {
        Some(a) => (a.delta, a.leftover, a.enumerated),
        None => (Vec::new(), remaining, 0),
    };
    counts.extend(delta.iter().copied());
    let exact = ExactDesign::new(&counts, space)?;
    let info = exact_info(&exact, space, total, unit);
    let efficiencies: Vec<f64> = objective.criteria().iter().map(|c| efficiency_at(c, &info)).collect();
    let efficiency = efficiencies.iter().copied().fold(f64::INFINITY, f64::min);
    let objective_value = match objective {
        RoundingObjective::Single(c) => Some(c.spec.to_objective(c.spec.phi().value(&info))),
        RoundingObjective::Maximin(_) => None,
    };
    if efficiency <= 0.0 {
        return Err(DesignError::SingularInformation);
    }
    let final_remaining = if final_remaining.abs() <= COST_EPS { 0.0 } else { final_remaining };
    let trace = RoundingTrace {
        floor_counts: floors.into_iter().filter(|p| p.1 > 0).collect(),
        remaining: if remaining.abs() <= COST_EPS { 0.0 } else { remaining },
        delta,
        final_remaining,
        objective: objective_value,
        efficiencies,
        efficiency,
        enumerated,
    };
    Ok((exact, trace))
}

fn exact_info(exact: &ExactDesign, space: &DesignSpace, total: f64, unit: bool) -> Mat3 {
    let mut acc = Mat3::zeros();
    for &(x, n) in exact.points() {
        let c = if unit { 1.0 } else { space.unit_cost(x) };
        acc += space.atom(x).info * (n as f64 * c / total);
    }
    acc
}

/// Rounds `oad` to an exact design costing at most `budget`.
///
/// Floors `budget * w_i / c(x_i)` at the support of `oad` (weights above
/// `prune_tol`, renormalized), then spends what is left by
/// [`allocation_search`] over the expanded candidate set.
pub fn round_budget(
    oad: &ApproximateDesign,
    budget: f64,
    objective: &RoundingObjective,
    space: &DesignSpace,
    expansion: &ExpansionConfig,
    prune_tol: f64,
) -> Result<(ExactDesign, RoundingTrace)> {
    expansion.validate()?;
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(DesignError::invalid(format!("budget must be positive, got {budget}")));
    }
    let support = oad_support(oad, space, prune_tol)?;
    let floors: Vec<(usize, u64)> = support
        .iter()
        .map(|&(x, w)| (x, (budget * w / space.unit_cost(x) + COST_EPS).floor() as u64))
        .collect();
    let spent: f64 = floors.iter().map(|&(x, n)| n as f64 * space.unit_cost(x)).sum();
    let remaining = (budget - spent).max(0.0);
    let sizes = expanded(&support, expansion.radius, space.grid().max_size());
    let candidates: Vec<Candidate> = sizes
        .iter()
        .map(|&x| Candidate { size: x, cap: ((remaining + COST_EPS) / space.unit_cost(x)).floor() as u64 })
        .collect();
    if floors.iter().all(|p| p.1 == 0) && candidates.iter().all(|c| c.cap == 0) {
        return Err(DesignError::BudgetTooSmall { budget });
    }
    let alloc = if remaining <= COST_EPS || candidates.iter().all(|c| c.cap == 0) {
        None
    } else {
        let active: Vec<Candidate> = candidates.into_iter().filter(|c| c.cap > 0).collect();
        Some(allocation_search(
            &active,
            Remaining::Budget(remaining),
            &floors,
            objective,
            space,
            budget,
            expansion.cap,
        )?)
    };
    finish(floors, remaining, alloc, objective, space, budget, false)
}

/// Rounds `oad` to an exact design with exactly `n` observations.
///
/// The budget procedure with unit costs and `C = n`: floors `n w_i`, then
/// places the `m = n - sum floor(n w_i)` remaining observations by
/// [`allocation_search`]. Requires a cost-free design space (`q = 0`).
pub fn round_fixed_n(
    oad: &ApproximateDesign,
    n: u64,
    objective: &RoundingObjective,
    space: &DesignSpace,
    expansion: &ExpansionConfig,
    prune_tol: f64,
) -> Result<(ExactDesign, RoundingTrace)> {
    expansion.validate()?;
    if space.grid().sizes().any(|x| space.unit_cost(x) != 1.0) {
        return Err(DesignError::invalid("sample-size rounding needs unit costs (q = 0)"));
    }
    let support = oad_support(oad, space, prune_tol)?;
    if (n as usize) < support.len() {
        return Err(DesignError::SampleTooSmall { n, support: support.len() });
    }
    let total = n as f64;
    let floors: Vec<(usize, u64)> = support.iter().map(|&(x, w)| (x, (total * w + COST_EPS).floor() as u64)).collect();
    let m = n - floors.iter().map(|p| p.1).sum::<u64>();
    let alloc = if m == 0 {
        None
    } else {
        let candidates: Vec<Candidate> = expanded(&support, expansion.radius, space.grid().max_size())
            .into_iter()
            .map(|x| Candidate { size: x, cap: m })
            .collect();
        Some(allocation_search(&candidates, Remaining::Observations(m), &floors, objective, space, total, expansion.cap)?)
    };
    finish(floors, m as f64, alloc, objective, space, total, true)
}

/// Efficiency of an exact design against an approximate-design anchor, with
/// information weights `n_i c(x_i) / total` (`total` is the budget, or `n`
/// in sample-size mode).
pub fn exact_efficiency(exact: &ExactDesign, anchored: &AnchoredCriterion, space: &DesignSpace, total: f64) -> Result<f64> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(DesignError::invalid(format!("normalizer must be positive, got {total}")));
    }
    let info = exact_info(exact, space, total, false);
    if !Phi::LogDet.value(&info).is_finite() {
        return Err(DesignError::SingularInformation);
    }
    Ok(efficiency_at(anchored, &info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::CriterionSpec;
    use crate::model::{CostModel, DesignGrid, ModelParams};
    use crate::solvers::{solve_oad, SolverConfig};

    fn space(m: usize, q: f64) -> DesignSpace {
        DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96).unwrap(), CostModel::new(q).unwrap(), DesignGrid::new(m).unwrap())
    }

    fn anchored(spec: CriterionSpec, s: &DesignSpace) -> (ApproximateDesign, AnchoredCriterion) {
        let r = solve_oad(&spec, s, &SolverConfig::default()).unwrap();
        (r.design, AnchoredCriterion::new(spec, r.objective).unwrap())
    }

    #[test]
    fn exact_fit_stops_after_flooring() {
        let s = space(8, 0.0);
        let oad = ApproximateDesign::from_points(s.grid(), &[(1, 0.25), (4, 0.25), (8, 0.5)]).unwrap();
        let (_, a) = anchored(CriterionSpec::d(), &s);
        let (exact, trace) =
            round_fixed_n(&oad, 8, &RoundingObjective::Single(a), &s, &ExpansionConfig::default(), 1e-6).unwrap();
        assert_eq!(exact.points(), &[(1, 2), (4, 2), (8, 4)]);
        assert!(trace.delta.is_empty());
        assert_eq!(trace.remaining, 0.0);
        assert_eq!(trace.final_remaining, 0.0);
    }

    #[test]
    fn zero_remaining_gives_empty_delta() {
        let s = space(8, 0.0);
        let (_, a) = anchored(CriterionSpec::d(), &s);
        let cands = [Candidate { size: 2, cap: 0 }];
        let out = allocation_search(&cands, Remaining::Budget(0.0), &[(1, 3), (4, 3), (8, 3)], &RoundingObjective::Single(a), &s, 9.0, 100).unwrap();
        assert!(out.delta.is_empty());
        assert_eq!(out.enumerated, 1);
    }

    #[test]
    fn oad_as_fractional_counts_has_efficiency_one() {
        let s = space(61, 0.2);
        for spec in [CriterionSpec::d(), CriterionSpec::a(), CriterionSpec::e()] {
            let (oad, a) = anchored(spec, &s);
            let budget = 250.0;
            let mut info = Mat3::zeros();
            for (x, w) in oad.support(0.0).unwrap() {
                let count = budget * w / s.unit_cost(x);
                info += s.atom(x).info * (count * s.unit_cost(x) / budget);
            }
            assert!((efficiency_at(&a, &info) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pruning_does_not_change_the_answer() {
        let s = space(8, 0.5);
        let (_, a) = anchored(CriterionSpec::a(), &s);
        let obj = RoundingObjective::Single(a);
        let cands: Vec<Candidate> = (1..=8).map(|x| Candidate { size: x, cap: (6.0 / s.unit_cost(x)) as u64 }).collect();
        let base = [(1, 2), (8, 1)];
        let with = search_impl(&cands, Remaining::Budget(6.0), &base, &obj, &s, 12.0, 1_000_000, true).unwrap();
        let without = search_impl(&cands, Remaining::Budget(6.0), &base, &obj, &s, 12.0, 1_000_000, false).unwrap();
        assert_eq!(with.delta, without.delta);
        assert_eq!(with.score, without.score);
    }

    #[test]
    fn cap_is_enforced() {
        let s = space(61, 0.0);
        let (oad, a) = anchored(CriterionSpec::d(), &s);
        let cfg = ExpansionConfig { radius: 2, cap: 10 };
        let err = round_fixed_n(&oad, 40, &RoundingObjective::Single(a), &s, &cfg, 1e-6).unwrap_err();
        assert!(matches!(err, DesignError::EnumerationCapExceeded { cap: 10 }));
    }

    #[test]
    fn input_errors() {
        let s = space(61, 0.2);
        let (oad, a) = anchored(CriterionSpec::d(), &s);
        let obj = RoundingObjective::Single(a);
        let cfg = ExpansionConfig::default();
        assert!(matches!(round_budget(&oad, 0.5, &obj, &s, &cfg, 1e-6), Err(DesignError::BudgetTooSmall { .. })));
        assert!(round_budget(&oad, -1.0, &obj, &s, &cfg, 1e-6).is_err());
        assert!(round_fixed_n(&oad, 10, &obj, &s, &cfg, 1e-6).is_err());
        assert!(ExpansionConfig::new(3).is_err());
        let s0 = space(61, 0.0);
        let (oad0, a0) = anchored(CriterionSpec::d(), &s0);
        assert!(matches!(
            round_fixed_n(&oad0, 2, &RoundingObjective::Single(a0), &s0, &cfg, 1e-6),
            Err(DesignError::SampleTooSmall { n: 2, support: 3 })
        ));
    }

    #[test]
    fn budget_is_respected_and_no_unit_fits_afterwards() {
        let s = space(150, 0.2);
        let (oad, a) = anchored(CriterionSpec::d(), &s);
        for budget in [37.0, 100.0, 233.3] {
            let (exact, trace) =
                round_budget(&oad, budget, &RoundingObjective::Single(a), &s, &ExpansionConfig::default(), 1e-6).unwrap();
            assert!(exact.realized_cost() <= budget + 1e-9);
            assert!((budget - exact.realized_cost() - trace.final_remaining).abs() < 1e-9);
        }
    }

    #[test]
    fn d_budget_100_matches_worked_example() {
        let s = space(150, 0.2);
        let (oad, a) = anchored(CriterionSpec::d(), &s);
        let (exact, trace) =
            round_budget(&oad, 100.0, &RoundingObjective::Single(a), &s, &ExpansionConfig::default(), 1e-6).unwrap();
        assert_eq!(trace.floor_counts, vec![(1, 33), (10, 11), (67, 2)]);
        assert!((trace.remaining - 7.8).abs() < 1e-9);
        assert_eq!(trace.delta, vec![(1, 2), (10, 1), (11, 1)]);
        assert_eq!(exact.points(), &[(1, 35), (10, 12), (11, 1), (67, 2)]);
        assert_eq!(trace.final_remaining, 0.0);
        assert!((trace.efficiency - 0.994).abs() < 2e-3);
    }
}
