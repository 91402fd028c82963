//! Rounds the D-optimal design for M = 150, q = 0.2 to exact designs for
//! several budgets.
//!
//! `cargo run --example round_budget -- [criterion] [budget...]`

use gtdesign::{
    round_budget, solve_oad, AnchoredCriterion, CostModel, CriterionKind, CriterionSpec, DesignGrid, DesignSpace,
    ExpansionConfig, ModelParams, RoundingObjective, SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = CriterionKind::parse(args.first().map_or("D", String::as_str))?;
    let budgets: Vec<f64> = args.iter().skip(1).filter_map(|s| s.parse().ok()).collect();
    let budgets = if budgets.is_empty() { vec![100.0, 500.0, 10_000.0] } else { budgets };

    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(0.2)?, DesignGrid::new(150)?);
    let spec = CriterionSpec::from_kind(kind, Some([0.0, 1.0, 1.0]))?;
    let oad = solve_oad(&spec, &space, &SolverConfig::default())?;
    let objective = RoundingObjective::Single(AnchoredCriterion::new(spec, oad.objective)?);

    for budget in budgets {
        let (exact, trace) = round_budget(&oad.design, budget, &objective, &space, &ExpansionConfig::default(), 1e-6)?;
        println!("C = {budget}");
        println!("  floors   {:?}", trace.floor_counts);
        println!("  C_r      {:.2}", trace.remaining);
        println!("  delta    {:?}", trace.delta);
        println!("  exact    {:?} (cost {:.2})", exact.points(), exact.realized_cost());
        println!("  C_r'     {:.2}", trace.final_remaining);
        println!("  phi {:.4}  eff {:.4}  ({} allocations scored)", trace.objective.unwrap_or(f64::NAN), trace.efficiency, trace.enumerated);
    }
    Ok(())
}
