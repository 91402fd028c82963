//! Re-runs the reference instances in `data/reference_tables.toml` and
//! compares every reported cell against the stored value.
//!
//! Instances run in parallel; the report lists them in data-file order.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::criteria::{self, AnchoredCriterion, CriterionKind, CriterionSpec};
use crate::error::{DesignError, Result};
use crate::maximin::{self, MaximinSpec};
use crate::model::{ApproximateDesign, CostModel, DesignGrid, DesignSpace, ModelParams};
use crate::rounding::{self, ExactDesign, ExpansionConfig, RoundingObjective, RoundingTrace};
use crate::solvers::{self, RobustSpec, SolverConfig};

const DATA: &str = include_str!("../data/reference_tables.toml");

pub const THETA: (f64, f64, f64) = (0.07, 0.93, 0.96);
pub const C_DIRECTION: [f64; 3] = [0.0, 1.0, 1.0];

/// Weights are printed with three decimals.
pub const WEIGHT_TOL: f64 = 0.002;
/// Criterion values: 0.5% relative, or half a unit in the third decimal.
pub const PHI_REL_TOL: f64 = 0.005;
pub const PHI_ABS_TOL: f64 = 0.0005;
pub const CROSS_EFF_TOL: f64 = 0.01;
pub const INV_T_TOL: f64 = 0.002;
pub const EXACT_EFF_TOL: f64 = 0.002;
/// Remaining budgets are printed with one decimal.
pub const REMAINING_TOL: f64 = 0.05;
pub const CERTIFICATE_TOL: f64 = 1e-5;
pub const SUPPORT_DISPERSION_TOL: f64 = 1e-6;
pub const SINGLE_TIME_LIMIT: f64 = 5.0;
pub const MAXIMIN_TIME_LIMIT: f64 = 30.0;
pub const ROBUST_WEIGHT_TOL: f64 = 1e-3;
/// Solver-accuracy slack on the robust monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1e-8;
/// Weights that print as 0.000 are not part of a printed support.
pub const REPORTED_WEIGHT: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    Table1,
    Table2,
    Table3,
    Table4,
    RobustE,
}

impl TableId {
    pub const ALL: [TableId; 5] = [TableId::Table1, TableId::Table2, TableId::Table3, TableId::Table4, TableId::RobustE];

    pub fn name(&self) -> &'static str {
        match self {
            TableId::Table1 => "table1",
            TableId::Table2 => "table2",
            TableId::Table3 => "table3",
            TableId::Table4 => "table4",
            TableId::RobustE => "robust-e",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableId {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| DesignError::invalid(format!("unknown table '{s}', expected one of table1, table2, table3, table4, robust-e")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub table1: Vec<SingleRow>,
    pub table2: Vec<MaximinRow>,
    pub table3: Vec<BudgetRow>,
    pub table4: Vec<MaximinExactRow>,
    pub robust_e: RobustRows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleRow {
    pub m: usize,
    pub q: f64,
    pub criterion: String,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub phi: f64,
    /// Efficiencies under D, A, Ds, c, E.
    pub eff: [f64; 5],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximinRow {
    pub criteria: Vec<String>,
    pub m: usize,
    pub q: f64,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub inv_t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetRow {
    pub criterion: String,
    pub budget: f64,
    pub design: Vec<(usize, u64)>,
    pub remaining: f64,
    pub delta: Vec<(usize, u64)>,
    pub final_remaining: f64,
    pub phi: f64,
    pub eff: f64,
    #[serde(default = "yes")]
    pub exact_design: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximinExactRow {
    pub criteria: Vec<String>,
    pub q: f64,
    pub n: Option<u64>,
    pub budget: Option<f64>,
    pub design: Vec<(usize, u64)>,
    pub delta: Vec<(usize, u64)>,
    pub min_eff: f64,
    pub inv_t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustRows {
    pub rho: Vec<f64>,
    /// `(M, q)` pairs.
    pub cases: Vec<(usize, f64)>,
}

fn yes() -> bool {
    true
}

/// The embedded reference values.
pub fn reference() -> Result<Reference> {
    toml::from_str(DATA).map_err(|e| DesignError::invalid(format!("reference data: {e}")))
}

/// One compared value.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub instance: String,
    pub field: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub table: TableId,
    pub cells: Vec<Cell>,
    pub wall_time: f64,
}

impl TableReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cells {
            writeln!(
                f,
                "{} {} [{}] {}: expected {}, got {}",
                if c.pass { "PASS" } else { "FAIL" },
                self.table,
                c.instance,
                c.field,
                c.expected,
                c.actual
            )?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{}: {} of {} cells pass ({:.1} s)",
            self.table,
            self.cells.len() - failed,
            self.cells.len(),
            self.wall_time
        )
    }
}

struct Cells {
    instance: String,
    cells: Vec<Cell>,
}

impl Cells {
    fn new(instance: String) -> Self {
        Self { instance, cells: Vec::new() }
    }

    fn push(&mut self, field: &str, expected: String, actual: String, pass: bool) {
        self.cells.push(Cell { instance: self.instance.clone(), field: field.to_string(), expected, actual, pass });
    }

    fn within(&mut self, field: &str, expected: f64, actual: f64, tol: f64) {
        let shown = (tol * 1e6).round() / 1e6;
        self.push(field, format!("{expected} ± {shown}"), format!("{actual:.6}"), (actual - expected).abs() <= tol);
    }

    fn phi(&mut self, expected: f64, actual: f64) {
        let tol = (PHI_REL_TOL * expected.abs()).max(PHI_ABS_TOL);
        self.within("phi", expected, actual, tol);
    }

    fn error(&mut self, field: &str, e: &DesignError) {
        self.push(field, "a result".to_string(), format!("error: {e}"), false);
    }
}

pub fn params() -> ModelParams {
    ModelParams::new(THETA.0, THETA.1, THETA.2).expect("reference parameters are valid")
}

pub fn space(m: usize, q: f64) -> Result<DesignSpace> {
    Ok(DesignSpace::new(params(), CostModel::new(q)?, DesignGrid::new(m)?))
}

pub fn criterion(label: &str) -> Result<CriterionSpec> {
    CriterionSpec::from_kind(CriterionKind::parse(label)?, Some(C_DIRECTION))
}

/// The five criteria in table-column order.
pub fn all_criteria() -> [CriterionSpec; 5] {
    [
        CriterionSpec::d(),
        CriterionSpec::a(),
        CriterionSpec::ds(),
        CriterionSpec::c(C_DIRECTION).expect("nonzero direction"),
        CriterionSpec::e(),
    ]
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn pairs(items: &[(usize, u64)]) -> String {
    if items.is_empty() {
        return "none".to_string();
    }
    items.iter().map(|(x, n)| format!("{x}:{n}")).collect::<Vec<_>>().join(" ")
}

fn compare_design(cells: &mut Cells, support: &[usize], weights: &[f64], design: &ApproximateDesign, weight_tol: f64) {
    let got: Vec<(usize, f64)> = design.weights().iter().enumerate().filter(|(_, w)| **w > REPORTED_WEIGHT).map(|(i, w)| (i + 1, *w)).collect();
    let got_support: Vec<usize> = got.iter().map(|p| p.0).collect();
    cells.push("support", join(support), join(&got_support), got_support == support);
    let got_weights: Vec<f64> = support.iter().map(|&x| design.weight(x)).collect();
    let err = weights.iter().zip(&got_weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    cells.push(
        "weights",
        format!("{} ± {weight_tol}", join(weights)),
        join(&got_weights.iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>()),
        err <= weight_tol,
    );
}

/// Runs every instance of `table`.
pub fn run(table: TableId) -> Result<TableReport> {
    let reference = reference()?;
    let start = Instant::now();
    let groups: Vec<Vec<Cell>> = match table {
        TableId::Table1 => table1(&reference.table1),
        TableId::Table2 => reference.table2.par_iter().map(table2_row).collect(),
        TableId::Table3 => table3(&reference.table3),
        TableId::Table4 => table4(&reference.table4),
        TableId::RobustE => robust(&reference),
    };
    Ok(TableReport { table, cells: groups.into_iter().flatten().collect(), wall_time: start.elapsed().as_secs_f64() })
}

/// Instances sharing `key` are solved together; groups run in parallel and
/// the output keeps the first-appearance order of the keys.
fn grouped<R: Sync, K: PartialEq + Sync>(
    rows: &[R],
    key: impl Fn(&R) -> K + Sync,
    solve: impl Fn(&[&R]) -> Vec<Cell> + Sync,
) -> Vec<Vec<Cell>> {
    let mut keys: Vec<K> = Vec::new();
    for r in rows {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.par_iter()
        .map(|k| {
            let members: Vec<&R> = rows.iter().filter(|r| key(r) == *k).collect();
            solve(&members)
        })
        .collect()
}

struct SingleSolve {
    design: ApproximateDesign,
    objective: f64,
    wall_time: f64,
}

fn table1(rows: &[SingleRow]) -> Vec<Vec<Cell>> {
    grouped(rows, |r| (r.m, r.q.to_bits()), |members| {
        let (m, q) = (members[0].m, members[0].q);
        let mut cells = Cells::new(format!("M={m} q={q}"));
        let space = match space(m, q) {
            Ok(s) => s,
            Err(e) => {
                cells.error("space", &e);
                return cells.cells;
            }
        };
        let specs = all_criteria();
        let solved: Result<Vec<SingleSolve>> = specs
            .iter()
            .map(|s| {
                let r = solvers::solve_oad(s, &space, &SolverConfig::default())?;
                Ok(SingleSolve { design: r.design, objective: r.objective, wall_time: r.wall_time })
            })
            .collect();
        let solved = match solved {
            Ok(s) => s,
            Err(e) => {
                cells.error("solve", &e);
                return cells.cells;
            }
        };
        let anchors: Vec<AnchoredCriterion> = specs
            .iter()
            .zip(&solved)
            .filter_map(|(s, r)| AnchoredCriterion::new(*s, r.objective).ok())
            .collect();
        let mut out = Vec::new();
        for row in members {
            let mut c = Cells::new(format!("M={m} q={q} {}", row.criterion));
            let Some(k) = specs.iter().position(|s| s.label() == row.criterion) else {
                c.push("criterion", row.criterion.clone(), "unknown".into(), false);
                out.extend(c.cells);
                continue;
            };
            let r = &solved[k];
            compare_design(&mut c, &row.support, &row.weights, &r.design, WEIGHT_TOL);
            c.phi(row.phi, r.objective);
            match criteria::efficiency_table(&r.design, &anchors, &space) {
                Ok(effs) if effs.len() == 5 => {
                    for (j, spec) in specs.iter().enumerate() {
                        c.within(&format!("eff_{}", spec.label()), row.eff[j], effs[j], CROSS_EFF_TOL);
                    }
                }
                Ok(_) => c.push("efficiencies", "5 values".into(), "anchor failure".into(), false),
                Err(e) => c.error("efficiencies", &e),
            }
            certificate_cells(&mut c, &specs[k], &r.design, &space);
            c.push(
                "time",
                format!("< {SINGLE_TIME_LIMIT} s"),
                format!("{:.3} s", r.wall_time),
                r.wall_time < SINGLE_TIME_LIMIT,
            );
            out.extend(c.cells);
        }
        out
    })
}

fn certificate_cells(c: &mut Cells, spec: &CriterionSpec, design: &ApproximateDesign, space: &DesignSpace) {
    match solvers::verify_optimality(spec, design, space, CERTIFICATE_TOL) {
        Ok(v) => c.push("certificate", format!("max d <= {CERTIFICATE_TOL:e}"), format!("{v:?}"), v.is_certified()),
        Err(e) => c.error("certificate", &e),
    }
    let support = match design.support(REPORTED_WEIGHT) {
        Ok(s) => s,
        Err(e) => return c.error("support dispersion", &e),
    };
    let mut worst: f64 = 0.0;
    for (u, _) in support {
        match criteria::dispersion(spec, u, design, space) {
            Ok(d) => worst = worst.max(d.abs()),
            Err(e) => return c.error("support dispersion", &e),
        }
    }
    c.push(
        "support |d|",
        format!("<= {SUPPORT_DISPERSION_TOL:e}"),
        format!("{worst:.2e}"),
        worst <= SUPPORT_DISPERSION_TOL,
    );
}

fn maximin_specs(labels: &[String]) -> Result<Vec<CriterionSpec>> {
    labels.iter().map(|l| criterion(l)).collect()
}

fn table2_row(row: &MaximinRow) -> Vec<Cell> {
    let label = row.criteria.join("-");
    let mut c = Cells::new(format!("{label} M={} q={}", row.m, row.q));
    let start = Instant::now();
    let solved = (|| {
        let space = space(row.m, row.q)?;
        let spec = MaximinSpec::anchored(&maximin_specs(&row.criteria)?, &space, &SolverConfig::default())?;
        maximin::solve_maximin(&spec, &space, &SolverConfig::default())
    })();
    let elapsed = start.elapsed().as_secs_f64();
    match solved {
        Ok(sol) => {
            compare_design(&mut c, &row.support, &row.weights, &sol.design, WEIGHT_TOL);
            c.within("1/t*", row.inv_t, 1.0 / sol.t_star, INV_T_TOL);
            c.push("time", format!("< {MAXIMIN_TIME_LIMIT} s"), format!("{elapsed:.3} s"), elapsed < MAXIMIN_TIME_LIMIT);
        }
        Err(e) => c.error("maximin", &e),
    }
    c.cells
}

fn exact_cells(
    c: &mut Cells,
    design: &[(usize, u64)],
    delta: &[(usize, u64)],
    exact: &ExactDesign,
    trace: &RoundingTrace,
) {
    c.push("design", pairs(design), pairs(exact.points()), exact.points() == design);
    c.push("delta", pairs(delta), pairs(&trace.delta), trace.delta == delta);
}

fn table3(rows: &[BudgetRow]) -> Vec<Vec<Cell>> {
    const M: usize = 150;
    const Q: f64 = 0.2;
    grouped(rows, |r| r.criterion.clone(), |members| {
        let label = &members[0].criterion;
        let solved = (|| {
            let space = space(M, Q)?;
            let spec = criterion(label)?;
            let r = solvers::solve_oad(&spec, &space, &SolverConfig::default())?;
            let anchored = AnchoredCriterion::new(spec, r.objective)?;
            Ok::<_, DesignError>((space, r.design, anchored))
        })();
        let mut out = Vec::new();
        for row in members {
            let mut c = Cells::new(format!("{label} C={}", row.budget));
            match &solved {
                Err(e) => c.error("solve", e),
                Ok((space, oad, anchored)) => {
                    let objective = RoundingObjective::Single(*anchored);
                    match rounding::round_budget(oad, row.budget, &objective, space, &ExpansionConfig::default(), 1e-6) {
                        Err(e) => c.error("rounding", &e),
                        Ok((exact, trace)) => {
                            c.within("C_r", row.remaining, trace.remaining, REMAINING_TOL);
                            let phi = trace.objective.unwrap_or(f64::NAN);
                            if row.exact_design {
                                exact_cells(&mut c, &row.design, &row.delta, &exact, &trace);
                                c.within("C_r'", row.final_remaining, trace.final_remaining, REMAINING_TOL);
                                c.phi(row.phi, phi);
                            } else {
                                c.push(
                                    "phi",
                                    format!("<= {} (+{PHI_ABS_TOL})", row.phi),
                                    format!("{phi:.6}"),
                                    phi <= row.phi + PHI_ABS_TOL,
                                );
                            }
                            c.within("eff", row.eff, trace.efficiency, EXACT_EFF_TOL);
                        }
                    }
                }
            }
            out.extend(c.cells);
        }
        out
    })
}

fn table4(rows: &[MaximinExactRow]) -> Vec<Vec<Cell>> {
    const M: usize = 61;
    grouped(rows, |r| (r.criteria.clone(), r.q.to_bits()), |members| {
        let (labels, q) = (&members[0].criteria, members[0].q);
        let solved = (|| {
            let space = space(M, q)?;
            let spec = MaximinSpec::anchored(&maximin_specs(labels)?, &space, &SolverConfig::default())?;
            let sol = maximin::solve_maximin(&spec, &space, &SolverConfig::default())?;
            Ok::<_, DesignError>((space, spec, sol))
        })();
        let mut out = Vec::new();
        for row in members {
            let target = match (row.n, row.budget) {
                (Some(n), None) => format!("n={n}"),
                (None, Some(b)) => format!("C={b}"),
                _ => "bad target".to_string(),
            };
            let mut c = Cells::new(format!("{} q={q} {target}", labels.join("-")));
            match &solved {
                Err(e) => c.error("maximin", e),
                Ok((space, spec, sol)) => {
                    let objective = RoundingObjective::Maximin(spec.clone());
                    let expansion = ExpansionConfig::default();
                    let rounded = match (row.n, row.budget) {
                        (Some(n), None) => rounding::round_fixed_n(&sol.design, n, &objective, space, &expansion, 1e-6),
                        (None, Some(b)) => rounding::round_budget(&sol.design, b, &objective, space, &expansion, 1e-6),
                        _ => Err(DesignError::invalid("a row sets exactly one of n and budget")),
                    };
                    match rounded {
                        Err(e) => c.error("rounding", &e),
                        Ok((exact, trace)) => {
                            exact_cells(&mut c, &row.design, &row.delta, &exact, &trace);
                            c.within("MinEff", row.min_eff, trace.efficiency, EXACT_EFF_TOL);
                            c.within("1/t*", row.inv_t, 1.0 / sol.t_star, INV_T_TOL);
                            c.push(
                                "MinEff <= 1/t*",
                                format!("<= {:.6}", 1.0 / sol.t_star),
                                format!("{:.6}", trace.efficiency),
                                trace.efficiency <= 1.0 / sol.t_star + 1e-12,
                            );
                        }
                    }
                }
            }
            out.extend(c.cells);
        }
        out
    })
}

/// One robust E-optimal solve.
#[derive(Debug, Clone)]
pub struct RobustPoint {
    pub rho: f64,
    pub design: ApproximateDesign,
    pub objective: f64,
    pub norm: f64,
    pub certified: bool,
}

/// Robust E-optimal designs for each `rho`, in the given order.
pub fn robust_path(m: usize, q: f64, rhos: &[f64]) -> Result<Vec<RobustPoint>> {
    let space = space(m, q)?;
    rhos.iter()
        .map(|&rho| {
            let robust = RobustSpec::new(rho)?;
            let r = solvers::solve_robust_e(&robust, &space, &SolverConfig::default())?;
            let certified = solvers::verify_robust_e(&robust, &r.design, &space, CERTIFICATE_TOL)?.is_certified();
            let norm = r.design.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
            Ok(RobustPoint { rho, design: r.design, objective: r.objective, norm, certified })
        })
        .collect()
}

fn robust(reference: &Reference) -> Vec<Vec<Cell>> {
    let rhos = &reference.robust_e.rho;
    reference
        .robust_e
        .cases
        .par_iter()
        .map(|&(m, q)| {
            let mut c = Cells::new(format!("M={m} q={q}"));
            let path = match robust_path(m, q, rhos) {
                Ok(p) => p,
                Err(e) => {
                    c.error("solve", &e);
                    return c.cells;
                }
            };
            for p in &path {
                c.push(&format!("certificate rho={}", p.rho), "certified".into(), p.certified.to_string(), p.certified);
            }
            let e_row = reference.table1.iter().find(|r| r.m == m && r.q == q && r.criterion == "E");
            if let (Some(row), Some(first)) = (e_row, path.iter().find(|p| p.rho == 0.0)) {
                compare_design(&mut c, &row.support, &row.weights, &first.design, ROBUST_WEIGHT_TOL);
            }
            for pair in path.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                let span = format!("rho {} -> {}", a.rho, b.rho);
                c.push(
                    &format!("objective {span}"),
                    format!("<= {:.8}", a.objective),
                    format!("{:.8}", b.objective),
                    b.objective <= a.objective + MONOTONE_SLACK,
                );
                c.push(
                    &format!("||w|| {span}"),
                    format!("<= {:.8}", a.norm),
                    format!("{:.8}", b.norm),
                    b.norm <= a.norm + MONOTONE_SLACK,
                );
            }
            c.cells
        })
        .collect()
}
