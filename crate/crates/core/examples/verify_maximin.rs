//! Certifies a maximin design with the multiplier linear program and checks
//! a hand-supplied multiplier vector against the same conditions.
//!
//! `cargo run --example verify_maximin -- [eta_D eta_A eta_Ds]`

use gtdesign::maximin::{aggregate_dispersion, criterion_dispersions, phi_values};
use gtdesign::{
    g_fn, h_fn, solve_maximin, verify_maximin, CostModel, CriterionSpec, DesignGrid, DesignSpace, MaximinSpec,
    ModelParams, SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let eta: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let eta = if eta.len() == 3 { eta } else { vec![0.0, 0.183, 3.222] };

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(0.2)?, DesignGrid::new(150)?);
    let config = SolverConfig::default();
    let spec = MaximinSpec::anchored(&[CriterionSpec::d(), CriterionSpec::a(), CriterionSpec::ds()], &space, &config)?;
    let solution = solve_maximin(&spec, &space, &config)?;
    let (delta1, delta2) = (1e-5, 1e-5);

    let cert = verify_maximin(&solution, &spec, &space, delta1, delta2)?;
    println!("t* = {:.5}", solution.t_star);
    println!("LP multipliers eta = {:?} (sum {:.5})", cert.eta, cert.eta.iter().sum::<f64>());
    println!("max aggregate dispersion {:.3e}", cert.aggregate_max);

    let t = solution.t_star;
    let normalization: f64 = spec.criteria().iter().zip(&eta).map(|(c, e)| e * g_fn(c, t)).sum();
    let phis = phi_values(&spec, &solution.design, &space);
    let slack = spec
        .criteria()
        .iter()
        .zip(&phis)
        .zip(&eta)
        .map(|((c, p), e)| e * (p - h_fn(c, t)).abs())
        .fold(0.0, f64::max);
    let aggregate = aggregate_dispersion(&criterion_dispersions(&spec, &solution.design, &space)?, &eta);
    let worst = aggregate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("supplied eta = {eta:?} (sum {:.5})", eta.iter().sum::<f64>());
    println!("  sum eta_j g_j(t*) = {normalization:.5}");
    println!("  max eta_j |Phi_j - h_j(t*)| = {slack:.2e} (delta1 {delta1:e})");
    println!("  max aggregate dispersion = {worst:.2e} (delta2 {delta2:e})");
    Ok(())
}
