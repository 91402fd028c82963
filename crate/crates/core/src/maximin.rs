//! Maximin designs over several criteria.
//!
//! With `Phi_j = log phi_D` for D and `Phi_j = phi_j` otherwise, maximizing the
//! smallest efficiency is equivalent to `min t` subject to
//! `Phi_j(w) <= h_j(t)` for every criterion. Feasibility is monotone in `t`, so
//! `t` is found by bisection; each feasibility question is answered by a
//! log-barrier interior-point solve of `min s` subject to
//! `Phi_j(w) - h_j(t) <= s` over the simplex.
//!
//! Newton systems on the barrier have size `M`, but every criterion depends on
//! `w` only through the six distinct entries of `I(w)`, so the Hessian is a
//! diagonal plus a rank-six term. In the scaled variables `dw = w * v` the
//! diagonal becomes the identity and a thin QR factorization of the rank-six
//! factor reduces each solve to a 6x6 eigenproblem.

use std::time::Instant;

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::criteria::{self, AnchoredCriterion, CriterionKind, CriterionSpec, Phi};
use crate::error::{DesignError, Result};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{ApproximateDesign, DesignSpace};
use crate::solvers::{self, SolverConfig};

type V6 = SVector<f64, 6>;
type M6 = SMatrix<f64, 6, 6>;

/// Criteria to balance, each with its single-objective optimum as anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximinSpec {
    criteria: Vec<AnchoredCriterion>,
}

impl MaximinSpec {
    /// Uses the given anchors as-is. A single criterion is accepted so the
    /// degenerate case can be exercised; the CLI requires at least two.
    pub fn new(criteria: Vec<AnchoredCriterion>) -> Result<Self> {
        if criteria.is_empty() {
            return Err(DesignError::invalid("a maximin problem needs at least one criterion"));
        }
        Ok(Self { criteria })
    }

    /// Solves every single-objective problem on `space` and anchors each
    /// criterion at its certified optimum.
    pub fn anchored(specs: &[CriterionSpec], space: &DesignSpace, config: &SolverConfig) -> Result<Self> {
        let mut criteria = Vec::with_capacity(specs.len());
        for spec in specs {
            let report = solvers::solve_oad(spec, space, config)?;
            if !report.converged {
                return Err(DesignError::AnchorUnverified {
                    criterion: spec.label().to_string(),
                    value: report.certificate.1,
                    tol: config.certificate_tol,
                });
            }
            criteria.push(AnchoredCriterion::new(*spec, report.objective)?);
        }
        Self::new(criteria)
    }

    pub fn criteria(&self) -> &[AnchoredCriterion] {
        &self.criteria
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    /// Hyphen-joined criterion labels, e.g. `D-A-Ds`.
    pub fn label(&self) -> String {
        self.criteria.iter().map(|c| c.spec.label()).collect::<Vec<_>>().join("-")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximinSolution {
    pub design: ApproximateDesign,
    pub t_star: f64,
    /// `1 / t_star`
    pub min_eff: f64,
    pub efficiencies: Vec<f64>,
    /// Bisection steps on `t`.
    pub bisection_steps: usize,
    /// Newton steps summed over every barrier solve.
    pub newton_steps: usize,
    pub wall_time: f64,
}

/// Multipliers certifying a maximin design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateWeights {
    pub eta: Vec<f64>,
    pub delta1: f64,
    pub delta2: f64,
    /// `max_u sum_j eta_j d_j(u, w)` over the full grid.
    pub aggregate_max: f64,
}

/// `h_j(t)` on the `Phi` scale: `log phi* + 3 log t` (D), `t phi*` (A, Ds, c)
/// or `phi* / t` (E).
pub fn h_fn(criterion: &AnchoredCriterion, t: f64) -> f64 {
    match criterion.spec.kind() {
        CriterionKind::D => criterion.anchor.ln() + 3.0 * t.ln(),
        CriterionKind::A | CriterionKind::Ds | CriterionKind::C => t * criterion.anchor,
        CriterionKind::E => criterion.anchor / t,
    }
}

/// `h_j'(t)`, positive for every kind.
pub fn g_fn(criterion: &AnchoredCriterion, t: f64) -> f64 {
    match criterion.spec.kind() {
        CriterionKind::D => 3.0 / t,
        CriterionKind::A | CriterionKind::Ds | CriterionKind::C => criterion.anchor,
        CriterionKind::E => -criterion.anchor / (t * t),
    }
}

/// `Phi_j(w)` for every criterion.
pub fn phi_values(spec: &MaximinSpec, design: &ApproximateDesign, space: &DesignSpace) -> Vec<f64> {
    let info = space.info_raw(design.weights());
    spec.criteria.iter().map(|c| c.spec.phi().value(&info)).collect()
}

/// Dispersion curves `d_j(u, w)` for every criterion.
pub fn criterion_dispersions(
    spec: &MaximinSpec,
    design: &ApproximateDesign,
    space: &DesignSpace,
) -> Result<Vec<Vec<f64>>> {
    let info = space.info_raw(design.weights());
    spec.criteria
        .iter()
        .map(|c| criteria::dispersion_curve(&c.spec, &info, space))
        .collect()
}

/// `sum_j eta_j d_j(u, w)` at every grid point.
pub fn aggregate_dispersion(curves: &[Vec<f64>], eta: &[f64]) -> Vec<f64> {
    let m = curves.first().map_or(0, Vec::len);
    (0..m).map(|i| curves.iter().zip(eta).map(|(c, e)| e * c[i]).sum()).collect()
}

enum Mode {
    /// Stop as soon as the sign of the optimal slack is known.
    Decide,
    /// Solve to full accuracy.
    Full,
}

struct Barrier<'a> {
    space: &'a DesignSpace,
    phis: Vec<Phi>,
    h: Vec<f64>,
}

struct Inner {
    w: Vec<f64>,
    s: f64,
    feasible: bool,
    newton_steps: usize,
}

const GAP_TOL: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-9;
/// Relative excess of the attained t over the bisection bracket accepted by
/// the final solve.
const ATTAINED_TOL: f64 = 1e-6;

impl Barrier<'_> {
    fn constraint_values(&self, w: &[f64]) -> Vec<f64> {
        let info = self.space.info_raw(w);
        self.phis.iter().zip(&self.h).map(|(p, h)| p.value(&info) - h).collect()
    }

    /// The barrier-optimal slack for fixed `w`: `s = max_j G_j + delta` with
    /// `sum_j 1 / (s - G_j) = tau`. Returns `s` and the residuals `s - G_j`.
    fn slack(g: &[f64], tau: f64) -> (f64, Vec<f64>) {
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gaps: Vec<f64> = g.iter().map(|x| gmax - x).collect();
        let excess = |delta: f64| gaps.iter().map(|c| 1.0 / (delta + c)).sum::<f64>() - tau;
        // excess(1/tau) >= 0 >= excess(K/tau)
        let (mut lo, mut hi) = (1.0 / tau, g.len() as f64 / tau);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let delta = 0.5 * (lo + hi);
        (gmax + delta, gaps.iter().map(|c| delta + c).collect())
    }

    /// Barrier with the slack eliminated: `tau s(w) - sum ln r_j - sum ln w_i`.
    fn value(&self, w: &[f64], tau: f64) -> f64 {
        if w.iter().any(|x| !(*x > 0.0)) {
            return f64::INFINITY;
        }
        let g = self.constraint_values(w);
        if g.iter().any(|x| !x.is_finite()) {
            return f64::INFINITY;
        }
        let (s, r) = Self::slack(&g, tau);
        tau * s - r.iter().map(|x| x.ln()).sum::<f64>() - w.iter().map(|x| x.ln()).sum::<f64>()
    }

    /// One damped Newton step on the reduced barrier; returns the Newton
    /// decrement squared, or `None` when no step could be taken.
    fn newton(&self, w: &mut [f64], tau: f64) -> Option<f64> {
        let m = w.len();
        let info = self.space.info_raw(w);
        let cols: Vec<V6> = self.space.atoms().iter().map(|a| V6::from(a.svec)).collect();

        let evals: Vec<_> = self.phis.iter().map(|p| p.eval(&info)).collect::<Option<_>>()?;
        let g: Vec<f64> = evals.iter().zip(&self.h).map(|(e, h)| e.value - h).collect();
        let (_, r) = Self::slack(&g, tau);
        let gammas: Vec<V6> = evals.iter().map(|e| V6::from(linalg::svec(&e.grad))).collect();
        let sigma: f64 = r.iter().map(|x| 1.0 / (x * x)).sum();
        let mut mean = V6::zeros();
        for (gamma, rj) in gammas.iter().zip(&r) {
            mean += gamma / (rj * rj * sigma);
        }
        // Hessian of the reduced barrier in svec coordinates; the outer-product
        // part is a weighted covariance so it stays PSD without cancellation.
        let mut big_s = M6::zeros();
        let mut grad_six = V6::zeros();
        for ((phi, gamma), rj) in self.phis.iter().zip(&gammas).zip(&r) {
            if let Some(p) = phi.hessian(&info) {
                big_s += p / *rj;
            }
            let dev = gamma - mean;
            big_s += dev * dev.transpose() / (rj * rj);
            grad_six += gamma / *rj;
        }
        // Newton system in scaled variables dw = w * v: (I + U S U^T) v = -w * grad
        // with U = diag(w) J^T. A thin QR of U turns the inverse into
        // (I - Q Q^T) + Q (I + R S R^T)^-1 Q^T, which has no cancellation.
        // The gradient is centered at w^T grad (a shift along the sum
        // constraint) so it stays O(1) near the central path.
        let center = V6::from(linalg::svec(&info));
        let gv: Vec<f64> = (0..m).map(|i| w[i] * (cols[i] - center).dot(&grad_six) - 1.0).collect();
        let u = DMatrix::from_fn(m, 6, |i, k| w[i] * cols[i][k]);
        let qr = u.qr();
        let q = qr.q();
        let rr = qr.r();
        let r6 = M6::from_fn(|i, k| if i < rr.nrows() && k < rr.ncols() { rr[(i, k)] } else { 0.0 });
        let b6 = r6 * big_s * r6.transpose();
        let eig = SymmetricEigen::new((b6 + b6.transpose()) * 0.5);
        let inner = eig.eigenvectors
            * M6::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / (1.0 + l.max(0.0))))
            * eig.eigenvectors.transpose();
        let qcols = q.ncols();
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut qx = V6::zeros();
            for k in 0..qcols {
                qx[k] = (0..m).map(|i| q[(i, k)] * x[i]).sum();
            }
            let y = inner * qx - qx;
            (0..m).map(|i| x[i] + (0..qcols).map(|k| q[(i, k)] * y[k]).sum::<f64>()).collect()
        };
        let neg_gv: Vec<f64> = gv.iter().map(|x| -x).collect();
        let x0 = apply(&neg_gv);
        let x1 = apply(w);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let nu = dot(w, &x0) / dot(w, &x1);
        let v: Vec<f64> = (0..m).map(|i| x0[i] - nu * x1[i]).collect();
        let decrement = -dot(&gv, &v);
        if !(decrement.is_finite() && decrement > 0.0) {
            return None;
        }
        let dw: Vec<f64> = (0..m).map(|i| w[i] * v[i]).collect();

        let mut alpha: f64 = 1.0;
        for i in 0..m {
            if dw[i] < 0.0 {
                alpha = alpha.min(-0.99 * w[i] / dw[i]);
            }
        }
        let current = self.value(w, tau);
        // tau * Phi_j dominates the rounding error of the barrier value
        let scale = evals.iter().zip(&self.h).fold(0.0f64, |a, (e, h)| a.max(e.value.abs() + h.abs()));
        let noise = 1e-13 * (current.abs() + tau * scale);
        let mut trial = vec![0.0; m];
        loop {
            for i in 0..m {
                trial[i] = w[i] + alpha * dw[i];
            }
            let v = self.value(&trial, tau);
            if v <= current - 1e-4 * alpha * decrement + noise {
                w.copy_from_slice(&trial);
                return Some(decrement);
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return None;
            }
        }
    }

    fn solve(&self, start: &[f64], mode: Mode) -> Result<Inner> {
        let m = start.len();
        let mut w: Vec<f64> = start.iter().map(|x| 0.98 * x + 0.02 / m as f64).collect();
        if self.constraint_values(&w).iter().any(|g| !g.is_finite()) {
            return Err(DesignError::SingularInformation);
        }
        let n_constraints = (m + self.phis.len()) as f64;
        let mut tau = 1.0;
        let mut steps = 0usize;
        loop {
            let mut centered = false;
            for _ in 0..100 {
                let Some(dec) = self.newton(&mut w, tau) else {
                    break;
                };
                steps += 1;
                if dec <= 1e-9 {
                    centered = true;
                    break;
                }
            }
            let s = self.constraint_values(&w).into_iter().fold(f64::NEG_INFINITY, f64::max);
            let gap = n_constraints / tau;
            if matches!(mode, Mode::Decide) {
                if s <= 0.0 {
                    return Ok(Inner { w, s, feasible: true, newton_steps: steps });
                }
                // the duality-gap bound only holds on the central path
                if centered && s - gap > FEASIBILITY_TOL {
                    return Ok(Inner { w, s, feasible: false, newton_steps: steps });
                }
            }
            if gap <= GAP_TOL {
                return Ok(Inner { w, s, feasible: s <= FEASIBILITY_TOL, newton_steps: steps });
            }
            tau *= 10.0;
        }
    }
}

/// Maximin design by bisection on `t` with barrier feasibility solves.
///
/// Fails with [`DesignError::AnchorUnverified`] when the solution beats an
/// anchor, which means that anchor was not optimal.
pub fn solve_maximin(spec: &MaximinSpec, space: &DesignSpace, config: &SolverConfig) -> Result<MaximinSolution> {
    config.validate()?;
    let start = Instant::now();
    let barrier_at = |t: f64| Barrier {
        space,
        phis: spec.criteria.iter().map(|c| c.spec.phi()).collect(),
        h: spec.criteria.iter().map(|c| h_fn(c, t)).collect(),
    };
    let mut warm = solvers::initial_weights(space.len());
    let mut newton_steps = 0;
    let mut steps = 0;

    let mut lo = 1.0;
    let mut hi = 1.0;
    let first = barrier_at(1.0).solve(&warm, Mode::Decide)?;
    newton_steps += first.newton_steps;
    if !first.feasible {
        hi = 2.0;
        loop {
            let r = barrier_at(hi).solve(&warm, Mode::Decide)?;
            newton_steps += r.newton_steps;
            steps += 1;
            if r.feasible {
                warm = r.w;
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 || steps >= config.max_iters {
                return Err(DesignError::NotConverged { iterations: steps, certificate: r.s });
            }
        }
        while hi - lo > config.bisection_tol && steps < config.max_iters {
            let mid = 0.5 * (lo + hi);
            let r = barrier_at(mid).solve(&warm, Mode::Decide)?;
            newton_steps += r.newton_steps;
            steps += 1;
            if r.feasible {
                hi = mid;
                warm = r.w;
            } else {
                lo = mid;
            }
        }
    }
    let fin = barrier_at(hi).solve(&warm, Mode::Full)?;
    newton_steps += fin.newton_steps;
    let mut w = fin.w;
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let design = ApproximateDesign::new(space.grid(), w)?;
    let efficiencies = criteria::efficiency_table(&design, &spec.criteria, space)?;
    for (c, e) in spec.criteria.iter().zip(&efficiencies) {
        if *e > 1.0 + 1e-6 {
            return Err(DesignError::AnchorUnverified {
                criterion: c.spec.label().to_string(),
                value: e - 1.0,
                tol: 1e-6,
            });
        }
    }
    // The reported t* is the value the returned design attains, so the
    // constraints hold exactly at t*; it may sit just above the bracket.
    let min_eff = efficiencies.iter().copied().fold(f64::INFINITY, f64::min);
    let t_star = 1.0 / min_eff;
    if !(t_star <= hi * (1.0 + ATTAINED_TOL)) {
        return Err(DesignError::NotConverged { iterations: steps, certificate: t_star - hi });
    }
    Ok(MaximinSolution {
        design,
        t_star,
        min_eff,
        efficiencies,
        bisection_steps: steps,
        newton_steps,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Finds multipliers `eta >= 0` of minimum sum with `sum_j eta_j g_j(t*) = 1`,
/// `eta_j |Phi_j(w) - h_j(t*)| <= delta1` and
/// `sum_j eta_j d_j(u, w) <= delta2` for every grid point `u`.
///
/// Rows for grid points are generated lazily: the LP is re-solved with the
/// most violated rows until none is violated.
pub fn verify_maximin(
    solution: &MaximinSolution,
    spec: &MaximinSpec,
    space: &DesignSpace,
    delta1: f64,
    delta2: f64,
) -> Result<CertificateWeights> {
    if !(delta1 > 0.0 && delta2 > 0.0) {
        return Err(DesignError::invalid("certificate slacks must be positive"));
    }
    let k = spec.len();
    let t = solution.t_star;
    let phis = phi_values(spec, &solution.design, space);
    let curves = criterion_dispersions(spec, &solution.design, space)?;

    let mut lp = LinearProgram::new(vec![1.0; k]);
    lp.push(spec.criteria.iter().map(|c| g_fn(c, t)).collect(), Relation::Eq, 1.0);
    for j in 0..k {
        let slack = (phis[j] - h_fn(&spec.criteria[j], t)).abs();
        if slack > 0.0 {
            let mut row = vec![0.0; k];
            row[j] = slack;
            lp.push(row, Relation::Le, delta1);
        }
    }
    let row_at = |i: usize| curves.iter().map(|c| c[i]).collect::<Vec<f64>>();
    let mut included = vec![false; space.len()];
    let mut seed: Vec<usize> = solution.design.support(1e-6)?.iter().map(|p| p.0 - 1).collect();
    seed.extend(curves.iter().map(|c| criteria::argmax(c).0 - 1));
    for i in seed {
        if !included[i] {
            included[i] = true;
            lp.push(row_at(i), Relation::Le, delta2);
        }
    }
    loop {
        let eta = match lp.solve() {
            LpOutcome::Optimal { x, .. } => x,
            _ => return Err(DesignError::Infeasible),
        };
        let agg = aggregate_dispersion(&curves, &eta);
        let mut violated: Vec<usize> = (0..agg.len()).filter(|&i| !included[i] && agg[i] > delta2 * (1.0 + 1e-9)).collect();
        if violated.is_empty() {
            let aggregate_max = agg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Ok(CertificateWeights { eta, delta1, delta2, aggregate_max });
        }
        violated.sort_by(|&a, &b| agg[b].total_cmp(&agg[a]).then(a.cmp(&b)));
        for &i in violated.iter().take(8) {
            included[i] = true;
            lp.push(row_at(i), Relation::Le, delta2);
        }
    }
}
