//! Acceptance suite: one PASS/FAIL line per criterion, with the failing cells
//! or checks listed underneath. Exits non-zero if any criterion fails.

use std::time::Instant;

use gtdesign::lp::{LinearProgram, LpOutcome, Relation};
use gtdesign::maximin::{aggregate_dispersion, criterion_dispersions, phi_values};
use gtdesign::reproduce::{self, Cell, TableReport};
use gtdesign::{
    g_fn, h_fn, objective, positive_prob, regressor, round_budget, round_fixed_n, solve_maximin, solve_oad,
    verify_maximin, AnchoredCriterion, ApproximateDesign, CriterionKind, CriterionSpec, DesignSpace,
    ExpansionConfig, MaximinSpec, ModelParams, RoundingObjective, SolverConfig, TableId,
};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const FD_REL_TOL: f64 = 1e-4;
const REGRESSOR_FD_TOL: f64 = 1e-6;
const EQUAL_WEIGHT_TOL: f64 = 1e-4;
const BRUTE_APPROX_GAP: f64 = 1e-3;
const BRUTE_EXACT_GAP: f64 = 0.005;
const T_STAR: f64 = 1.170;
const T_STAR_TOL: f64 = 0.005;
const REFERENCE_ETA: [f64; 3] = [0.0, 0.183, 3.222];
/// Half a unit in the last printed digit of `REFERENCE_ETA`.
const ETA_PRINT_TOL: f64 = 5e-4;
const ETA_SUM_REL_TOL: f64 = 0.05;
const DELTA: f64 = 1e-5;
const RANDOM_DESIGNS: usize = 1000;
const SEED: u64 = 20_241_015;

struct Outcome {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn from_checks(checks: Vec<(String, bool)>) -> Self {
        let failed: Vec<String> = checks.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect();
        Self {
            passed: failed.is_empty(),
            summary: format!("{} of {} checks", checks.len() - failed.len(), checks.len()),
            details: failed,
        }
    }

    fn from_cells<'a>(cells: impl Iterator<Item = &'a Cell>) -> Self {
        let checks = cells
            .map(|c| {
                (format!("[{}] {}: expected {}, got {}", c.instance, c.field, c.expected, c.actual), c.pass)
            })
            .collect();
        Self::from_checks(checks)
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self { passed: false, summary: format!("error: {e}"), details: Vec::new() }
    }
}

fn check(checks: &mut Vec<(String, bool)>, label: impl Into<String>, pass: bool) {
    checks.push((label.into(), pass));
}

fn table(id: TableId) -> Result<TableReport, String> {
    reproduce::run(id).map_err(|e| e.to_string())
}

fn eff_field(c: &Cell) -> bool {
    c.field.starts_with("eff_")
}

fn certificate_field(c: &Cell) -> bool {
    c.field == "certificate" || c.field == "support |d|"
}

// ---- independent oracle ---------------------------------------------------

/// Per-point information contributions, computed from the closed forms
/// without going through the library's model code.
fn oracle_atoms(m: usize, q: f64) -> Vec<Matrix3<f64>> {
    let (p0, p1, p2) = (0.07_f64, 0.93_f64, 0.96_f64);
    (1..=m)
        .map(|x| {
            let xf = x as f64;
            let neg = (1.0 - p0).powf(xf);
            let pi = p1 - (p1 + p2 - 1.0) * neg;
            let f = Vector3::new(
                (p1 + p2 - 1.0) * xf * (1.0 - p0).powf(xf - 1.0),
                1.0 - neg,
                -neg,
            );
            let c = 1.0 - q + q * xf;
            f * f.transpose() / (c * pi * (1.0 - pi))
        })
        .collect()
}

fn oracle_objective(kind: CriterionKind, info: &Matrix3<f64>) -> f64 {
    if kind == CriterionKind::E {
        return -info.symmetric_eigenvalues().min();
    }
    // det / (tr/3)^3 is a cheap lower bound on the inverse condition number
    let det = info.determinant();
    if det <= 1e-14 * (info.trace() / 3.0).powi(3) {
        return f64::INFINITY;
    }
    let inv = info.try_inverse().expect("nonsingular");
    match kind {
        CriterionKind::D => 1.0 / det,
        CriterionKind::A => inv.trace(),
        CriterionKind::Ds => inv[(0, 0)],
        CriterionKind::C => {
            let c = Vector3::new(0.0, 1.0, 1.0);
            c.dot(&(inv * c))
        }
        CriterionKind::E => unreachable!(),
    }
}

fn oracle_info(atoms: &[Matrix3<f64>], points: &[(usize, f64)]) -> Matrix3<f64> {
    points.iter().fold(Matrix3::zeros(), |acc, &(x, w)| acc + atoms[x - 1] * w)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best approximate design on the weight lattice `1/steps` with at most
/// `max_support` points.
fn brute_approximate(kind: CriterionKind, atoms: &[Matrix3<f64>], steps: usize, max_support: usize) -> f64 {
    // every listed point gets at least one lattice unit; the last takes the rest
    fn go(kind: CriterionKind, atoms: &[&Matrix3<f64>], left: usize, h: f64, acc: Matrix3<f64>) -> f64 {
        if atoms.len() == 1 {
            return oracle_objective(kind, &(acc + atoms[0] * (left as f64 * h)));
        }
        (1..=left + 1 - atoms.len())
            .map(|n| go(kind, &atoms[1..], left - n, h, acc + atoms[0] * (n as f64 * h)))
            .fold(f64::INFINITY, f64::min)
    }
    let jobs: Vec<Vec<usize>> = (1..=max_support.min(atoms.len())).flat_map(|k| subsets(atoms.len(), k)).collect();
    jobs.par_iter()
        .map(|support| {
            let chosen: Vec<&Matrix3<f64>> = support.iter().map(|&i| &atoms[i]).collect();
            go(kind, &chosen, steps, 1.0 / steps as f64, Matrix3::zeros())
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Best exact design with total standardized cost at most `budget`, scored with
/// weights `n_i c_i / budget`.
fn brute_exact(kind: CriterionKind, atoms: &[Matrix3<f64>], costs: &[f64], budget: f64) -> f64 {
    fn go(
        i: usize,
        left: f64,
        counts: &mut Vec<u64>,
        best: &mut f64,
        kind: CriterionKind,
        atoms: &[Matrix3<f64>],
        costs: &[f64],
        budget: f64,
    ) {
        if i == atoms.len() {
            let pts: Vec<(usize, f64)> = counts
                .iter()
                .enumerate()
                .filter(|c| *c.1 > 0)
                .map(|(j, &n)| (j + 1, n as f64 * costs[j] / budget))
                .collect();
            *best = best.min(oracle_objective(kind, &oracle_info(atoms, &pts)));
            return;
        }
        let max = ((left + 1e-9) / costs[i]).floor() as u64;
        for n in 0..=max {
            counts.push(n);
            go(i + 1, left - n as f64 * costs[i], counts, best, kind, atoms, costs, budget);
            counts.pop();
        }
    }
    let mut best = f64::INFINITY;
    go(0, budget, &mut Vec::new(), &mut best, kind, atoms, costs, budget);
    best
}

fn ref_space(m: usize, q: f64) -> DesignSpace {
    reproduce::space(m, q).expect("reference space")
}

fn random_design(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|x| x / total).collect()
}

// ---- criteria ---------------------------------------------------------------

fn criterion_1(t1: &Result<TableReport, String>) -> Outcome {
    match t1 {
        Ok(r) => Outcome::from_cells(r.cells.iter().filter(|c| !eff_field(c) && !certificate_field(c))),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_2(t1: &Result<TableReport, String>) -> Outcome {
    match t1 {
        Ok(r) => Outcome::from_cells(r.cells.iter().filter(|c| eff_field(c))),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_3(t1: &Result<TableReport, String>) -> Outcome {
    match t1 {
        Ok(r) => Outcome::from_cells(r.cells.iter().filter(|c| certificate_field(c))),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_4() -> Outcome {
    let report = match table(TableId::Table2) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let mut checks: Vec<(String, bool)> = report
        .cells
        .iter()
        .map(|c| (format!("[{}] {}: expected {}, got {}", c.instance, c.field, c.expected, c.actual), c.pass))
        .collect();
    // w** is not single-objective optimal, so some criterion's dispersion is
    // positive somewhere; one constraint is active.
    let reference = reproduce::reference().expect("reference data");
    let config = SolverConfig::default();
    for row in &reference.table2 {
        let name = format!("{}/{}/q{}", row.criteria.join("-"), row.m, row.q);
        let space = ref_space(row.m, row.q);
        let specs: Vec<CriterionSpec> = row.criteria.iter().map(|l| reproduce::criterion(l).unwrap()).collect();
        let result = MaximinSpec::anchored(&specs, &space, &config)
            .and_then(|spec| solve_maximin(&spec, &space, &config).map(|s| (spec, s)));
        let (spec, sol) = match result {
            Ok(x) => x,
            Err(e) => {
                check(&mut checks, format!("[{name}] solve: {e}"), false);
                continue;
            }
        };
        let curves = criterion_dispersions(&spec, &sol.design, &space).unwrap();
        let positive = curves.iter().any(|c| c.iter().any(|&d| d > 1e-6));
        check(&mut checks, format!("[{name}] some d_j > 0"), positive);
        let phis = phi_values(&spec, &sol.design, &space);
        let active = spec
            .criteria()
            .iter()
            .zip(&phis)
            .map(|(c, p)| (p - h_fn(c, sol.t_star)).abs())
            .fold(f64::INFINITY, f64::min);
        check(&mut checks, format!("[{name}] active constraint gap {active:.1e} <= 1e-6"), active <= 1e-6);
    }
    Outcome::from_checks(checks)
}

fn criterion_5() -> Outcome {
    let space = ref_space(150, 0.2);
    let config = SolverConfig::default();
    let specs = [CriterionSpec::d(), CriterionSpec::a(), CriterionSpec::ds()];
    let (spec, sol) = match MaximinSpec::anchored(&specs, &space, &config)
        .and_then(|spec| solve_maximin(&spec, &space, &config).map(|s| (spec, s)))
    {
        Ok(x) => x,
        Err(e) => return Outcome::error(e),
    };
    let mut checks = Vec::new();
    let t = sol.t_star;
    check(
        &mut checks,
        format!("t* = {t:.5}, expected {T_STAR} ± {T_STAR_TOL}"),
        (t - T_STAR).abs() <= T_STAR_TOL,
    );
    let cert = match verify_maximin(&sol, &spec, &space, DELTA, DELTA) {
        Ok(c) => c,
        Err(e) => {
            check(&mut checks, format!("LP feasible at delta1 = delta2 = {DELTA:e}: {e}"), false);
            return Outcome::from_checks(checks);
        }
    };
    check(&mut checks, format!("LP feasible at delta1 = delta2 = {DELTA:e}"), true);

    // The printed eta is rounded to three decimals, so it is LP-feasible when
    // some feasible eta lies within half a unit of the last printed digit.
    let k = spec.len();
    let phis = phi_values(&spec, &sol.design, &space);
    let curves = criterion_dispersions(&spec, &sol.design, &space).unwrap();
    let mut lp = LinearProgram::new(vec![0.0; k]);
    lp.push(spec.criteria().iter().map(|c| g_fn(c, t)).collect(), Relation::Eq, 1.0);
    for j in 0..k {
        let mut row = vec![0.0; k];
        row[j] = (phis[j] - h_fn(&spec.criteria()[j], t)).abs();
        lp.push(row.clone(), Relation::Le, DELTA);
        row = vec![0.0; k];
        row[j] = 1.0;
        lp.push(row.clone(), Relation::Le, REFERENCE_ETA[j] + ETA_PRINT_TOL);
        lp.push(row, Relation::Ge, (REFERENCE_ETA[j] - ETA_PRINT_TOL).max(0.0));
    }
    for i in 0..space.len() {
        lp.push(curves.iter().map(|c| c[i]).collect(), Relation::Le, DELTA);
    }
    let box_feasible = match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let worst = aggregate_dispersion(&curves, &x).into_iter().fold(f64::NEG_INFINITY, f64::max);
            worst <= DELTA * (1.0 + 1e-9)
        }
        _ => false,
    };
    let printed = aggregate_dispersion(&curves, &REFERENCE_ETA).into_iter().fold(f64::NEG_INFINITY, f64::max);
    check(
        &mut checks,
        format!(
            "eta {REFERENCE_ETA:?} LP-feasible within ±{ETA_PRINT_TOL} (as printed, max aggregate {printed:.2e})"
        ),
        box_feasible,
    );
    let ours: f64 = cert.eta.iter().sum();
    let reference: f64 = REFERENCE_ETA.iter().sum();
    check(
        &mut checks,
        format!("sum eta = {ours:.5}, expected {reference} ± {}%", ETA_SUM_REL_TOL * 100.0),
        (ours - reference).abs() <= ETA_SUM_REL_TOL * reference,
    );
    Outcome::from_checks(checks)
}

fn criterion_6() -> Outcome {
    match table(TableId::Table3) {
        Ok(r) => Outcome::from_cells(r.cells.iter()),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_7() -> Outcome {
    match table(TableId::Table4) {
        Ok(r) => Outcome::from_cells(r.cells.iter()),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_8() -> Outcome {
    match table(TableId::RobustE) {
        Ok(r) => Outcome::from_cells(r.cells.iter()),
        Err(e) => Outcome::error(e),
    }
}

fn criterion_9() -> Outcome {
    let mut checks = Vec::new();
    let config = SolverConfig::default();
    let params = ModelParams::new(0.07, 0.93, 0.96).unwrap();

    // dispersion functions against directional derivatives of the objective
    let space = ref_space(40, 0.2);
    let w = ApproximateDesign::from_points(
        space.grid(),
        &[(1, 0.3), (8, 0.2), (15, 0.1), (40, 0.4)],
    )
    .unwrap();
    for spec in [CriterionSpec::d(), CriterionSpec::a(), reproduce::criterion("c").unwrap()] {
        let phi = |design: &ApproximateDesign| {
            let v = objective(&spec, design, &space).unwrap();
            if spec.kind() == CriterionKind::D { v.ln() } else { v }
        };
        for u in [1usize, 3, 8, 22, 40] {
            let h = 1e-6;
            let along = |a: f64| {
                let mut v: Vec<f64> = w.weights().iter().map(|x| x * (1.0 - a)).collect();
                v[u - 1] += a;
                ApproximateDesign::new(space.grid(), v).unwrap()
            };
            // one-sided, second order: a < 0 would make zero weights negative
            let fd = -(-3.0 * phi(&along(0.0)) + 4.0 * phi(&along(h)) - phi(&along(2.0 * h))) / (2.0 * h);
            let d = gtdesign::dispersion(&spec, u, &w, &space).unwrap();
            check(
                &mut checks,
                format!("d_{}({u}) = {d:.6e} vs finite difference {fd:.6e}", spec.label()),
                (d - fd).abs() <= FD_REL_TOL * d.abs().max(1e-3),
            );
        }
    }

    // regressor is the gradient of the positive-pool probability
    for x in [1usize, 7, 17, 61, 150] {
        let f = regressor(x, &params);
        let base = [params.p0(), params.p1(), params.p2()];
        for k in 0..3 {
            let h = 1e-6;
            let at = |s: f64| {
                let mut p = base;
                p[k] += s;
                positive_prob(x, &ModelParams::new(p[0], p[1], p[2]).unwrap())
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            check(
                &mut checks,
                format!("regressor x={x} k={k}: {:.8e} vs {fd:.8e}", f[k]),
                (fd - f[k]).abs() <= REGRESSOR_FD_TOL * f[k].abs().max(1e-4),
            );
        }
    }

    // information matrix: linear in the weights, PSD, and equal to the oracle
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let atoms = oracle_atoms(150, 0.2);
    let space = ref_space(150, 0.2);
    for trial in 0..20 {
        let (a, b) = (random_design(&mut rng, 150), random_design(&mut rng, 150));
        let s: f64 = rng.random();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
        let lhs = *space.info(&mix).matrix();
        let rhs = *space.info(&a).matrix() * s + *space.info(&b).matrix() * (1.0 - s);
        let scale = lhs.norm();
        check(&mut checks, format!("info linearity trial {trial}"), (lhs - rhs).norm() <= 1e-12 * scale);
        let pts: Vec<(usize, f64)> = mix.iter().enumerate().map(|(i, &w)| (i + 1, w)).collect();
        let oracle = oracle_info(&atoms, &pts);
        check(&mut checks, format!("info vs oracle trial {trial}"), (lhs - oracle).norm() <= 1e-10 * scale);
        let min_eig = lhs.symmetric_eigenvalues().min();
        check(&mut checks, format!("info PSD trial {trial} (min eig {min_eig:.2e})"), min_eig >= -1e-12 * scale);
    }

    // D-optimal designs with three support points have equal weights
    for m in [61usize, 150] {
        for q in [0.0, 0.2, 0.8] {
            let space = ref_space(m, q);
            let r = solve_oad(&CriterionSpec::d(), &space, &config).unwrap();
            let support = r.design.support(1e-6).unwrap();
            if support.len() == 3 {
                let worst = support.iter().map(|p| (p.1 - 1.0 / 3.0).abs()).fold(0.0, f64::max);
                check(
                    &mut checks,
                    format!("D/{m}/q{q} equal weights (max deviation {worst:.1e})"),
                    worst <= EQUAL_WEIGHT_TOL,
                );
            }
        }
    }

    // brute-force oracle, approximate designs on M = 6
    for q in [0.0, 0.8] {
        let space = ref_space(6, q);
        let atoms = oracle_atoms(6, q);
        for spec in reproduce::all_criteria() {
            let solved = solve_oad(&spec, &space, &config).unwrap().objective;
            let brute = brute_approximate(spec.kind(), &atoms, 200, 4);
            let gap = (brute - solved) / solved.abs();
            check(
                &mut checks,
                format!("M=6 q={q} {}: solver {solved:.6e}, lattice {brute:.6e}", spec.label()),
                (-1e-9..=BRUTE_APPROX_GAP).contains(&gap),
            );
        }
    }

    // brute-force oracle, exact designs on M = 8
    for (q, total, fixed_n) in [(0.0, 10.0, true), (0.0, 16.0, true), (0.2, 20.0, false)] {
        let space = ref_space(8, q);
        let atoms = oracle_atoms(8, q);
        let costs: Vec<f64> = (1..=8).map(|x| 1.0 - q + q * x as f64).collect();
        for spec in reproduce::all_criteria() {
            let oad = solve_oad(&spec, &space, &config).unwrap();
            let obj = RoundingObjective::Single(AnchoredCriterion::new(spec, oad.objective).unwrap());
            let expansion = ExpansionConfig::default();
            let rounded = if fixed_n {
                round_fixed_n(&oad.design, total as u64, &obj, &space, &expansion, 1e-6)
            } else {
                round_budget(&oad.design, total, &obj, &space, &expansion, 1e-6)
            };
            let (exact, _) = match rounded {
                Ok(r) => r,
                Err(e) => {
                    check(&mut checks, format!("M=8 q={q} C={total} {}: {e}", spec.label()), false);
                    continue;
                }
            };
            let ours = oracle_objective(spec.kind(), &oracle_info(&atoms, &exact.weights(total, &space)));
            let brute = brute_exact(spec.kind(), &atoms, &costs, total);
            let gap = (ours - brute) / brute.abs();
            check(
                &mut checks,
                format!("M=8 q={q} C={total} {}: rounded {ours:.6e}, exhaustive {brute:.6e}", spec.label()),
                gap <= BRUTE_EXACT_GAP,
            );
        }
    }

    // larger expansion radius never gives a worse exact design
    for (label, budget) in [("D", 100.0), ("A", 100.0), ("Ds", 500.0), ("c", 100.0), ("E", 100.0)] {
        let space = ref_space(150, 0.2);
        let spec = reproduce::criterion(label).unwrap();
        let oad = solve_oad(&spec, &space, &config).unwrap();
        let obj = RoundingObjective::Single(AnchoredCriterion::new(spec, oad.objective).unwrap());
        let effs: Vec<f64> = (0..=2)
            .map(|r| {
                let expansion = ExpansionConfig::new(r).unwrap();
                round_budget(&oad.design, budget, &obj, &space, &expansion, 1e-6).unwrap().1.efficiency
            })
            .collect();
        check(
            &mut checks,
            format!("{label}/C={budget} efficiency by radius {effs:.4?}"),
            effs[0] <= effs[1] + 1e-12 && effs[1] <= effs[2] + 1e-12,
        );
    }

    // no design beats the maximin value
    let space = ref_space(150, 0.2);
    let spec = MaximinSpec::anchored(&[CriterionSpec::d(), CriterionSpec::a(), CriterionSpec::ds()], &space, &config)
        .unwrap();
    let sol = solve_maximin(&spec, &space, &config).unwrap();
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..RANDOM_DESIGNS {
        let w = ApproximateDesign::new(space.grid(), random_design(&mut rng, 150)).unwrap();
        let min_eff = spec
            .criteria()
            .iter()
            .map(|c| gtdesign::efficiency(c, &w, &space).unwrap())
            .fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.max(min_eff - sol.min_eff);
    }
    check(
        &mut checks,
        format!("{RANDOM_DESIGNS} random designs: max(MinEff - 1/t*) = {worst_gap:.3e} <= 0"),
        worst_gap <= 1e-9,
    );
    check(&mut checks, format!("1/t* = {:.4} <= 1", sol.min_eff), sol.min_eff <= 1.0 + 1e-12);

    Outcome::from_checks(checks)
}

fn main() {
    // Runs as a plain binary; test-harness flags such as --nocapture are ignored.
    let start = Instant::now();
    let t1 = table(TableId::Table1);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Table 1 supports, weights, phi, solve time", Box::new(|| criterion_1(&t1))),
        ("Table 1 cross-efficiencies", Box::new(|| criterion_2(&t1))),
        ("Table 1 optimality certificates", Box::new(|| criterion_3(&t1))),
        ("Table 2 maximin designs", Box::new(criterion_4)),
        ("Maximin multiplier LP, D-A-Ds M=150 q=0.2", Box::new(criterion_5)),
        ("Table 3 budget rounding", Box::new(criterion_6)),
        ("Table 4 maximin rounding", Box::new(criterion_7)),
        ("Robust E path", Box::new(criterion_8)),
        ("Property suite", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        println!(
            "{} criterion {}: {name} ({}, {:.1} s)",
            if outcome.passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.summary,
            t.elapsed().as_secs_f64()
        );
        for d in &outcome.details {
            println!("    {d}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.1} s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
