//! Single-objective and robust E-optimal approximate designs.
//!
//! All problems are convex minimizations over the probability simplex on the
//! grid, solved by [`engine`]'s Frank-Wolfe iteration. The equivalence-theorem
//! dispersion function is the Frank-Wolfe gap, so every solve ends with its
//! own optimality certificate.

mod engine;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use engine::TracePoint;

use crate::criteria::{self, CriterionKind, CriterionSpec, Phi};
use crate::error::{DesignError, Result};
use crate::model::{ApproximateDesign, DesignSpace};
use engine::Objective;

const INIT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Certificate tolerance `delta` on the dispersion function.
    pub certificate_tol: f64,
    pub max_iters: usize,
    /// Weights at or below this are dropped when reporting support.
    pub prune_tol: f64,
    /// Final bracket width of the maximin bisection on `t`.
    pub bisection_tol: f64,
    /// Reserved for randomized restarts; every current solver is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            certificate_tol: 1e-5,
            max_iters: 200_000,
            prune_tol: 1e-6,
            bisection_tol: 1e-8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.certificate_tol > 0.0) || !(self.bisection_tol > 0.0) || !(self.prune_tol >= 0.0) {
            return Err(DesignError::invalid("solver tolerances must be positive"));
        }
        if self.prune_tol > 0.01 {
            return Err(DesignError::invalid(format!(
                "prune tolerance must lie in [0, 0.01], got {}",
                self.prune_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(DesignError::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Perturbation magnitude for robust E-optimality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustSpec {
    rho: f64,
}

impl RobustSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(DesignError::invalid(format!("rho must be a finite nonnegative number, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub design: ApproximateDesign,
    /// Objective on the reported scale; for robust E this is the penalized
    /// minimum eigenvalue `lambda_min(I) - rho sqrt(M) ||w||`.
    pub objective: f64,
    /// Worst group size and its dispersion value.
    pub certificate: (usize, f64),
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// Objective and Frank-Wolfe gap at each iteration.
    pub trace: Vec<TracePoint>,
}

impl SolveReport {
    /// The report as an error when the solve did not converge.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(DesignError::NotConverged { iterations: self.iterations, certificate: self.certificate.1 })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Certified,
    /// Worst group size and its dispersion value.
    Violated(usize, f64),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

/// Uniform mass on `{1, ceil(M/2), M}` plus a small mass everywhere else.
pub(crate) fn initial_weights(m: usize) -> Vec<f64> {
    let mut w = vec![INIT_EPSILON; m];
    for x in [1, m.div_ceil(2), m] {
        w[x - 1] = 1.0 / 3.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Optimal approximate design for a D, A, Ds or c criterion. E-criteria are
/// forwarded to [`solve_e_optimal`].
///
/// A run that hits `max_iters` returns a report with `converged == false`.
pub fn solve_oad(spec: &CriterionSpec, space: &DesignSpace, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if spec.kind() == CriterionKind::E {
        return solve_e_optimal(space, config);
    }
    let start = Instant::now();
    let obj = Objective { space, phi: spec.phi(), penalty: 0.0 };
    let out = engine::minimize(&obj, initial_weights(space.len()), config.certificate_tol * 1e-3, config.max_iters);
    let design = ApproximateDesign::new(space.grid(), out.weights)?;
    let (u, value) = criteria::dispersion_max(spec, &design, space)?;
    let objective = criteria::objective(spec, &design, space)?;
    Ok(SolveReport {
        design,
        objective,
        certificate: (u, value),
        iterations: out.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        converged: (out.converged || out.stalled) && value <= config.certificate_tol,
        trace: out.trace,
    })
}

/// E-optimal design maximizing `lambda_min(I(w))`. The reported objective
/// is `-lambda_min`, the E value on the minimization scale.
pub fn solve_e_optimal(space: &DesignSpace, config: &SolverConfig) -> Result<SolveReport> {
    solve_penalized_e(space, 0.0, config)
}

/// Robust E-optimal design maximizing `lambda_min(I(w)) - rho sqrt(M) ||w||_2`.
/// The reported objective is that maximized value, for every `rho`.
pub fn solve_robust_e(robust: &RobustSpec, space: &DesignSpace, config: &SolverConfig) -> Result<SolveReport> {
    let mut report = solve_penalized_e(space, robust_penalty(robust, space), config)?;
    report.objective = -report.objective;
    Ok(report)
}

fn robust_penalty(robust: &RobustSpec, space: &DesignSpace) -> f64 {
    robust.rho * (space.len() as f64).sqrt()
}

fn solve_penalized_e(space: &DesignSpace, penalty: f64, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let obj = Objective { space, phi: Phi::NegMinEig, penalty };
    let tol = config.certificate_tol * 1e-3;
    let mut out = engine::minimize(&obj, initial_weights(space.len()), tol, config.max_iters);
    let mut iterations = out.iterations;
    let mut trace = std::mem::take(&mut out.trace);
    let mut weights = out.weights;
    let mut certificate = penalized_e_certificate(space, &weights, penalty);
    let mut converged = (out.converged || out.stalled) && certificate.1 <= config.certificate_tol;
    if !converged {
        // Repeated smallest eigenvalue: anneal a smooth surrogate, then retry.
        let mut mu = 1e-2;
        while mu >= 1e-8 && iterations < config.max_iters {
            let smooth = Objective { space, phi: Phi::SoftNegMinEig(mu), penalty };
            let step = engine::minimize(&smooth, weights, tol, (config.max_iters - iterations).min(20_000));
            iterations += step.iterations;
            trace.extend(step.trace);
            weights = step.weights;
            mu *= 0.5;
        }
        certificate = penalized_e_certificate(space, &weights, penalty);
        converged = certificate.1 <= config.certificate_tol;
    }
    let design = ApproximateDesign::new(space.grid(), weights)?;
    let info = space.info_raw(design.weights());
    let lmin = crate::linalg::min_eigenvalue(&info);
    let norm = design.weights().iter().map(|x| x * x).sum::<f64>().sqrt();
    let objective = -lmin + penalty * norm;
    Ok(SolveReport {
        design,
        objective,
        certificate,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        trace,
    })
}

/// Dispersion of `-lambda_min + penalty ||w||` with the B-search on repeated
/// eigenvalues.
fn penalized_e_certificate(space: &DesignSpace, w: &[f64], penalty: f64) -> (usize, f64) {
    let info = space.info_raw(w);
    let mut values = criteria::e_certificate(&info, space).values;
    if penalty > 0.0 {
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (v, wi) in values.iter_mut().zip(w) {
            *v += penalty * (n - wi / n);
        }
    }
    criteria::argmax(&values)
}

/// Checks the equivalence-theorem certificate `max_u d(u, w) <= delta`.
pub fn verify_optimality(
    spec: &CriterionSpec,
    design: &ApproximateDesign,
    space: &DesignSpace,
    delta: f64,
) -> Result<Verdict> {
    let (u, value) = criteria::dispersion_max(spec, design, space)?;
    Ok(if value <= delta { Verdict::Certified } else { Verdict::Violated(u, value) })
}

/// Checks the certificate of a robust E-optimal design: the dispersion of
/// the penalized objective is at most `delta` everywhere.
pub fn verify_robust_e(
    robust: &RobustSpec,
    design: &ApproximateDesign,
    space: &DesignSpace,
    delta: f64,
) -> Result<Verdict> {
    if design.grid() != space.grid() {
        return Err(DesignError::invalid("design and design space use different grids"));
    }
    let (u, value) = penalized_e_certificate(space, design.weights(), robust_penalty(robust, space));
    Ok(if value <= delta { Verdict::Certified } else { Verdict::Violated(u, value) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, DesignGrid, ModelParams};

    fn space(m: usize, q: f64) -> DesignSpace {
        DesignSpace::new(
            ModelParams::new(0.07, 0.93, 0.96).unwrap(),
            CostModel::new(q).unwrap(),
            DesignGrid::new(m).unwrap(),
        )
    }

    #[test]
    fn initial_design_is_nonsingular_and_normalized() {
        let w = initial_weights(61);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w[30] > 0.3 && w[0] > 0.3 && w[60] > 0.3);
        assert!(Phi::LogDet.value(&space(61, 0.0).info_raw(&w)).is_finite());
    }

    #[test]
    fn d_optimal_small_grid() {
        let s = space(61, 0.0);
        let r = solve_oad(&CriterionSpec::d(), &s, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{:?}", r.certificate);
        let support = r.design.support(1e-6).unwrap();
        let sizes: Vec<usize> = support.iter().map(|p| p.0).collect();
        assert_eq!(sizes, vec![1, 17, 61]);
        for (_, w) in support {
            assert!((w - 1.0 / 3.0).abs() < 1e-4);
        }
        assert!((r.objective - 0.003).abs() < 5e-4);
    }

    #[test]
    fn e_optimal_small_grid() {
        let s = space(61, 0.0);
        let r = solve_e_optimal(&s, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{:?}", r.certificate);
        let sizes: Vec<usize> = r.design.support(1e-6).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(sizes, vec![1, 16, 61]);
        assert!((r.objective + 2.36).abs() < 0.01);
    }

    #[test]
    fn verify_rejects_uniform_and_perturbed() {
        let s = space(61, 0.0);
        let grid = DesignGrid::new(61).unwrap();
        let uniform = ApproximateDesign::uniform(grid);
        assert!(!verify_optimality(&CriterionSpec::d(), &uniform, &s, 1e-5).unwrap().is_certified());
        let r = solve_oad(&CriterionSpec::d(), &s, &SolverConfig::default()).unwrap();
        assert!(verify_optimality(&CriterionSpec::d(), &r.design, &s, 1e-5).unwrap().is_certified());
        let mut w = r.design.weights().to_vec();
        w[60] -= 0.05;
        w[1] += 0.05;
        let moved = ApproximateDesign::new(grid, w).unwrap();
        assert!(matches!(
            verify_optimality(&CriterionSpec::d(), &moved, &s, 1e-5).unwrap(),
            Verdict::Violated(_, v) if v > 1e-5
        ));
    }

    #[test]
    fn trace_is_monotone() {
        let s = space(150, 0.8);
        let r = solve_oad(&CriterionSpec::a(), &s, &SolverConfig::default()).unwrap();
        for pair in r.trace.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12 * pair[0].objective.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let s = space(10, 0.0);
        let cfg = SolverConfig { max_iters: 0, ..SolverConfig::default() };
        assert!(solve_oad(&CriterionSpec::d(), &s, &cfg).is_err());
        assert!(RobustSpec::new(-1.0).is_err());
    }
}
