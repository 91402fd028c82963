//! Maximin design balancing D-, A- and Ds-optimality for M = 150, q = 0.2.
//!
//! `cargo run --example maximin -- [M] [q] [criteria...]`

use gtdesign::{
    solve_maximin, CostModel, CriterionKind, CriterionSpec, DesignGrid, DesignSpace, MaximinSpec, ModelParams,
    SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(150);
    let q: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let labels: Vec<&str> = if args.len() > 2 { args[2..].iter().map(String::as_str).collect() } else { vec!["D", "A", "Ds"] };
    let specs = labels
        .iter()
        .map(|l| CriterionSpec::from_kind(CriterionKind::parse(l)?, Some([0.0, 1.0, 1.0])))
        .collect::<Result<Vec<_>, _>>()?;

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(q)?, DesignGrid::new(m)?);
    let config = SolverConfig::default();
    let spec = MaximinSpec::anchored(&specs, &space, &config)?;
    let solution = solve_maximin(&spec, &space, &config)?;

    println!("{} maximin design, M = {m}, q = {q}", spec.label());
    for (x, w) in solution.design.support(1e-6)? {
        println!("  x = {x:>4}  w = {w:.4}");
    }
    for (c, e) in spec.criteria().iter().zip(&solution.efficiencies) {
        println!("  eff_{:<3} {e:.4}", c.spec.label());
    }
    println!("t* = {:.4}, 1/t* = {:.4}", solution.t_star, solution.min_eff);
    println!("{} bisection steps, {} Newton steps, {:.3} s", solution.bisection_steps, solution.newton_steps, solution.wall_time);
    Ok(())
}
