//! D-optimal design for M = 61 group sizes without subject costs, with its
//! equivalence-theorem certificate.
//!
//! `cargo run --example single_objective -- [criterion] [M] [q]`

use gtdesign::{
    solve_oad, verify_optimality, CostModel, CriterionKind, CriterionSpec, DesignGrid, DesignSpace, ModelParams,
    SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = CriterionKind::parse(args.first().map_or("D", String::as_str))?;
    let m: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(61);
    let q: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(q)?, DesignGrid::new(m)?);
    let spec = CriterionSpec::from_kind(kind, Some([0.0, 1.0, 1.0]))?;
    let report = solve_oad(&spec, &space, &SolverConfig::default())?;

    println!("{}-optimal design, M = {m}, q = {q}", spec.label());
    for (x, w) in report.design.support(1e-6)? {
        println!("  x = {x:>4}  w = {w:.4}");
    }
    println!("objective      {:.6}", report.objective);
    println!("max dispersion {:.2e} at x = {}", report.certificate.1, report.certificate.0);
    println!("iterations     {} ({:.3} s)", report.iterations, report.wall_time);
    println!("verdict        {:?}", verify_optimality(&spec, &report.design, &space, 1e-5)?);
    Ok(())
}
