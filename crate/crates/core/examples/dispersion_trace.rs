//! CSV of the per-criterion dispersion functions and their certificate-weighted
//! sum for the D-A-Ds maximin design, ready for plotting.
//!
//! `cargo run --example dispersion_trace > trace.csv`

use gtdesign::maximin::{aggregate_dispersion, criterion_dispersions};
use gtdesign::{
    solve_maximin, verify_maximin, CostModel, CriterionSpec, DesignGrid, DesignSpace, MaximinSpec, ModelParams,
    SolverConfig,
};

fn main() -> gtdesign::Result<()> {
    let space = DesignSpace::new(ModelParams::new(0.07, 0.93, 0.96)?, CostModel::new(0.2)?, DesignGrid::new(150)?);
    let config = SolverConfig::default();
    let spec = MaximinSpec::anchored(&[CriterionSpec::d(), CriterionSpec::a(), CriterionSpec::ds()], &space, &config)?;
    let solution = solve_maximin(&spec, &space, &config)?;
    let cert = verify_maximin(&solution, &spec, &space, 1e-5, 1e-5)?;
    let curves = criterion_dispersions(&spec, &solution.design, &space)?;
    let aggregate = aggregate_dispersion(&curves, &cert.eta);

    println!("u,d_D,d_A,d_Ds,aggregate");
    for u in space.grid().sizes() {
        let i = u - 1;
        println!("{u},{:.6e},{:.6e},{:.6e},{:.6e}", curves[0][i], curves[1][i], curves[2][i], aggregate[i]);
    }
    Ok(())
}
