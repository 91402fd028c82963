//! Exact D-A maximin designs with a fixed number of tests, M = 61, q = 0.
//!
//! `cargo run --example round_sample_size -- [n...]`

use gtdesign::{
    round_fixed_n, solve_maximin, CostModel, CriterionSpec, DesignGrid, DesignSpace, ExpansionConfig, MaximinSpec,
    ModelParams, RoundingObjective, SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let sizes: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let sizes = if sizes.is_empty() { vec![10, 25, 50] } else { sizes };

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::unit(), DesignGrid::new(61)?);
    let config = SolverConfig::default();
    let spec = MaximinSpec::anchored(&[CriterionSpec::d(), CriterionSpec::a()], &space, &config)?;
    let solution = solve_maximin(&spec, &space, &config)?;
    println!("approximate maximin design: 1/t* = {:.4}", solution.min_eff);

    let objective = RoundingObjective::Maximin(spec);
    for n in sizes {
        let (exact, trace) = round_fixed_n(&solution.design, n, &objective, &space, &ExpansionConfig::default(), 1e-6)?;
        println!("n = {n:>3}: {:?}  delta {:?}  MinEff {:.4}", exact.points(), trace.delta, trace.efficiency);
    }
    Ok(())
}
