//! Robust E-optimal designs along a path of perturbation sizes.
//!
//! `cargo run --example robust_e -- [M] [q] [rho...]`

use gtdesign::{solve_robust_e, CostModel, DesignGrid, DesignSpace, ModelParams, RobustSpec, SolverConfig};

fn main() -> gtdesign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(61);
    let q: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let rhos: Vec<f64> = args.iter().skip(2).filter_map(|s| s.parse().ok()).collect();
    let rhos = if rhos.is_empty() { vec![0.0, 0.001, 0.01, 0.05] } else { rhos };

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(q)?, DesignGrid::new(m)?);
    for rho in rhos {
        let report = solve_robust_e(&RobustSpec::new(rho)?, &space, &SolverConfig::default())?;
        let norm = report.design.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
        let support: Vec<String> = report
            .design
            .support(1e-4)?
            .iter()
            .map(|(x, w)| format!("{x}:{w:.3}"))
            .collect();
        println!("rho = {rho:<6} objective {:.5}  ||w|| {norm:.4}  {}", report.objective, support.join(" "));
    }
    Ok(())
}
