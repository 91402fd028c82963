//! Cross-efficiencies of the five single-objective designs: row `k` shows how
//! the `k`-th optimal design performs under every criterion.
//!
//! `cargo run --example efficiency_table -- [M] [q]`

use gtdesign::{
    efficiency_table, solve_oad, AnchoredCriterion, CostModel, CriterionSpec, DesignGrid, DesignSpace, ModelParams,
    SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(150);
    let q: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(q)?, DesignGrid::new(m)?);

    let specs = [
        CriterionSpec::d(),
        CriterionSpec::a(),
        CriterionSpec::ds(),
        CriterionSpec::c([0.0, 1.0, 1.0])?,
        CriterionSpec::e(),
    ];
    let config = SolverConfig::default();
    let reports = specs.iter().map(|s| solve_oad(s, &space, &config)).collect::<Result<Vec<_>, _>>()?;
    let anchors = specs
        .iter()
        .zip(&reports)
        .map(|(s, r)| AnchoredCriterion::new(*s, r.objective))
        .collect::<Result<Vec<_>, _>>()?;

    print!("{:<4} {:<22} {:>9}", "", "support", "phi");
    for s in &specs {
        print!(" {:>7}", format!("eff_{}", s.label()));
    }
    println!();
    for (spec, report) in specs.iter().zip(&reports) {
        let support: Vec<String> = report.design.support(5e-4)?.iter().map(|p| p.0.to_string()).collect();
        print!("{:<4} {:<22} {:>9.4}", spec.label(), support.join(" "), report.objective);
        for e in efficiency_table(&report.design, &anchors, &space)? {
            print!(" {e:>7.3}");
        }
        println!();
    }
    Ok(())
}
