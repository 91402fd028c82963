//! Optimal experimental designs for group (pooled) testing.
//!
//! The crate computes approximate designs on the grid of group sizes
//! `{1, ..., M}` under D-, A-, D_s-, c- and E-optimality, certifies them with
//! equivalence-theorem dispersion functions, builds maximin designs that
//! balance several criteria at once, solves a robust E-optimal variant, and
//! rounds approximate designs to exact ones for a fixed sample size or a
//! fixed budget.
//!
//! ```no_run
//! use gtdesign::{CostModel, CriterionSpec, DesignGrid, DesignSpace, ModelParams, SolverConfig};
//!
//! let params = ModelParams::new(0.07, 0.93, 0.96)?;
//! let space = DesignSpace::new(params, CostModel::new(0.0)?, DesignGrid::new(61)?);
//! let report = gtdesign::solve_oad(&CriterionSpec::d(), &space, &SolverConfig::default())?;
//! for (size, weight) in report.design.support(1e-6)? {
//!     println!("{size:>4} {weight:.3}");
//! }
//! # Ok::<(), gtdesign::DesignError>(())
//! ```

pub mod commands;
pub mod criteria;
mod error;
pub mod linalg;
pub mod lp;
pub mod maximin;
pub mod model;
pub mod problem;
pub mod record;
pub mod reproduce;
pub mod rounding;
pub mod solvers;

pub use criteria::{
    dispersion, dispersion_max, efficiency, efficiency_table, objective, AnchoredCriterion,
    CriterionKind, CriterionSpec,
};
pub use error::{DesignError, Result};
pub use problem::ProblemFile;
pub use record::ResultRecord;
pub use reproduce::TableId;
pub use maximin::{
    g_fn, h_fn, solve_maximin, verify_maximin, CertificateWeights, MaximinSolution, MaximinSpec,
};
pub use model::{
    info_matrix, positive_prob, regressor, unit_cost, weight_fn, ApproximateDesign, CostModel,
    DesignGrid, DesignSpace, GroupTestingModel, InfoMatrix, ModelParams, RegressorModel,
};
pub use rounding::{
    allocation_search, exact_efficiency, round_budget, round_fixed_n, Allocation, Candidate, ExactDesign,
    ExpansionConfig, Remaining, RoundingObjective, RoundingTrace,
};
pub use solvers::{
    solve_e_optimal, solve_oad, solve_robust_e, verify_optimality, verify_robust_e, RobustSpec,
    SolveReport, SolverConfig, Verdict,
};
