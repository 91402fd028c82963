//! The operations behind the `gtdesign` subcommands.
//!
//! Each command takes a validated [`ProblemFile`] and returns a
//! [`ResultRecord`] (or a table for `dispersion` and `reproduce`). Failures
//! carry the process exit code they map to.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::criteria::{self, AnchoredCriterion, CriterionKind, CriterionSpec};
use crate::error::DesignError;
use crate::maximin::{self, MaximinSolution, MaximinSpec};
use crate::model::{ApproximateDesign, DesignSpace};
use crate::problem::{ProblemFile, RoundingTarget};
use crate::record::{
    config_hash, CertificateRecord, CommandKind, CriterionRecord, DesignRecord, ExactRecord, ResultRecord,
    VerdictRecord, SCHEMA_VERSION, TOOL_VERSION,
};
use crate::rounding::{self, ExactDesign, RoundingObjective};
use crate::solvers::{self, Verdict};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Certified = 0,
    InputError = 1,
    NotConverged = 2,
    Mismatch = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of(verdict: VerdictRecord) -> Self {
        match verdict {
            VerdictRecord::Certified => Exit::Certified,
            VerdictRecord::Violated => Exit::NotConverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandError {
    pub exit: Exit,
    pub message: String,
}

impl CommandError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { exit: Exit::InputError, message: message.into() }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CommandError {}

impl From<DesignError> for CommandError {
    fn from(e: DesignError) -> Self {
        let exit = match e {
            DesignError::NotConverged { .. } | DesignError::AnchorUnverified { .. } | DesignError::Infeasible => {
                Exit::NotConverged
            }
            _ => Exit::InputError,
        };
        Self { exit, message: e.to_string() }
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

impl ResultRecord {
    /// Exit code for a freshly written record.
    pub fn exit(&self) -> Exit {
        Exit::of(self.certificate.verdict)
    }
}

fn verdict_record(v: Verdict) -> (VerdictRecord, CertificateRecord) {
    let verdict = if v.is_certified() { VerdictRecord::Certified } else { VerdictRecord::Violated };
    (verdict, CertificateRecord::new(verdict))
}

fn base_record(
    problem: &ProblemFile,
    command: CommandKind,
    certificate: CertificateRecord,
    start: Instant,
) -> CmdResult<ResultRecord> {
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        command,
        config_hash: config_hash(problem)?,
        problem: problem.clone(),
        design: None,
        exact: None,
        objective: None,
        criteria: Vec::new(),
        efficiencies: Vec::new(),
        certificate,
        rounding: None,
        iterations: 0,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn single_criterion(problem: &ProblemFile, command: &str) -> CmdResult<CriterionSpec> {
    let specs = problem.criteria()?;
    match specs.as_slice() {
        [one] => Ok(*one),
        _ => Err(CommandError::input(format!(
            "{command} takes exactly one criterion, the problem lists {}",
            specs.len()
        ))),
    }
}

fn single_certificate(spec: &CriterionSpec, design: &ApproximateDesign, space: &DesignSpace, delta: f64) -> CmdResult<CertificateRecord> {
    let (u, value) = criteria::dispersion_max(spec, design, space)?;
    let (_, mut cert) = verdict_record(solvers::verify_optimality(spec, design, space, delta)?);
    cert.worst_size = Some(u);
    cert.max_dispersion = Some(value);
    Ok(cert)
}

/// A [`MaximinSolution`] for an arbitrary design, with `t*` the design's own
/// `1 / min_j eff_j`.
pub fn maximin_solution_for(spec: &MaximinSpec, design: &ApproximateDesign, space: &DesignSpace) -> CmdResult<MaximinSolution> {
    let efficiencies = criteria::efficiency_table(design, spec.criteria(), space)?;
    let min_eff = efficiencies.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eff > 0.0) {
        return Err(CommandError::input("the design has zero efficiency for some criterion"));
    }
    Ok(MaximinSolution {
        design: design.clone(),
        t_star: 1.0 / min_eff,
        min_eff,
        efficiencies,
        bisection_steps: 0,
        newton_steps: 0,
        wall_time: 0.0,
    })
}

fn maximin_certificate(
    solution: &MaximinSolution,
    spec: &MaximinSpec,
    space: &DesignSpace,
    problem: &ProblemFile,
) -> CmdResult<CertificateRecord> {
    let mut cert = match maximin::verify_maximin(solution, spec, space, problem.verify.delta1, problem.verify.delta2) {
        Ok(cw) => {
            let mut c = CertificateRecord::new(VerdictRecord::Certified);
            c.eta = Some(cw.eta);
            c.aggregate_max = Some(cw.aggregate_max);
            c
        }
        Err(DesignError::Infeasible) => CertificateRecord::new(VerdictRecord::Violated),
        Err(e) => return Err(e.into()),
    };
    cert.t_star = Some(solution.t_star);
    cert.inv_t = Some(1.0 / solution.t_star);
    Ok(cert)
}

fn criterion_records(criteria: &[AnchoredCriterion]) -> Vec<CriterionRecord> {
    criteria.iter().map(|c| CriterionRecord { label: c.spec.label().to_string(), anchor: c.anchor }).collect()
}

/// Optimal approximate design for the problem's single criterion.
pub fn cmd_oad(problem: &ProblemFile) -> CmdResult<ResultRecord> {
    let start = Instant::now();
    let spec = single_criterion(problem, "oad")?;
    let space = problem.space()?;
    let report = solvers::solve_oad(&spec, &space, &problem.solver)?;
    let cert = single_certificate(&spec, &report.design, &space, problem.verify.delta)?;
    let mut record = base_record(problem, CommandKind::Oad, cert, start)?;
    record.design = Some(DesignRecord::from_design(&report.design, problem.solver.prune_tol)?);
    record.objective = Some(report.objective);
    record.criteria = criterion_records(&[AnchoredCriterion::new(spec, report.objective)?]);
    record.efficiencies = vec![1.0];
    record.iterations = report.iterations;
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}

fn maximin_spec(problem: &ProblemFile, space: &DesignSpace) -> CmdResult<MaximinSpec> {
    let specs = problem.criteria()?;
    if specs.len() < 2 {
        return Err(CommandError::input(format!(
            "maximin needs at least two criteria, the problem lists {} (use oad for one)",
            specs.len()
        )));
    }
    Ok(MaximinSpec::anchored(&specs, space, &problem.solver)?)
}

/// Maximin design over the problem's criteria, anchored at their optima.
pub fn cmd_maximin(problem: &ProblemFile) -> CmdResult<ResultRecord> {
    let start = Instant::now();
    let space = problem.space()?;
    let spec = maximin_spec(problem, &space)?;
    let solution = maximin::solve_maximin(&spec, &space, &problem.solver)?;
    let cert = maximin_certificate(&solution, &spec, &space, problem)?;
    let mut record = base_record(problem, CommandKind::Maximin, cert, start)?;
    record.design = Some(DesignRecord::from_design(&solution.design, problem.solver.prune_tol)?);
    record.objective = Some(solution.min_eff);
    record.criteria = criterion_records(spec.criteria());
    record.efficiencies = solution.efficiencies.clone();
    record.iterations = solution.newton_steps;
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Robust E-optimal design for the problem's `[robust]` section.
pub fn cmd_robust_e(problem: &ProblemFile) -> CmdResult<ResultRecord> {
    let start = Instant::now();
    let specs = problem.criteria()?;
    if specs.iter().any(|s| s.kind() != CriterionKind::E) || specs.len() > 1 {
        return Err(CommandError::input("robust-e takes no criteria or the single criterion E"));
    }
    let robust = problem.robust()?;
    let space = problem.space()?;
    let report = solvers::solve_robust_e(&robust, &space, &problem.solver)?;
    let (_, mut cert) = verdict_record(solvers::verify_robust_e(&robust, &report.design, &space, problem.verify.delta)?);
    cert.worst_size = Some(report.certificate.0);
    cert.max_dispersion = Some(report.certificate.1);
    let mut record = base_record(problem, CommandKind::RobustE, cert, start)?;
    record.design = Some(DesignRecord::from_design(&report.design, problem.solver.prune_tol)?);
    record.objective = Some(report.objective);
    record.iterations = report.iterations;
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Rounds the problem's optimal design (or its inline `[design]`) to an
/// exact design for the budget or sample size in `[rounding]`.
pub fn cmd_round(problem: &ProblemFile) -> CmdResult<ResultRecord> {
    let start = Instant::now();
    let space = problem.space()?;
    let target = problem.rounding_target()?;
    let expansion = problem.expansion()?;
    let inline = problem.inline_design()?;
    let specs = problem.criteria()?;
    let (oad, objective, cert, criteria_used) = match specs.as_slice() {
        [] => return Err(CommandError::input("round needs at least one criterion")),
        [spec] => {
            let report = solvers::solve_oad(spec, &space, &problem.solver)?;
            let anchored = AnchoredCriterion::new(*spec, report.objective)?;
            let oad = inline.unwrap_or(report.design);
            let cert = single_certificate(spec, &oad, &space, problem.verify.delta)?;
            (oad, RoundingObjective::Single(anchored), cert, vec![anchored])
        }
        _ => {
            let spec = maximin_spec(problem, &space)?;
            let solution = match inline {
                Some(d) => maximin_solution_for(&spec, &d, &space)?,
                None => maximin::solve_maximin(&spec, &space, &problem.solver)?,
            };
            let cert = maximin_certificate(&solution, &spec, &space, problem)?;
            let used = spec.criteria().to_vec();
            (solution.design, RoundingObjective::Maximin(spec), cert, used)
        }
    };
    let prune = problem.solver.prune_tol;
    let (exact, trace) = match target {
        RoundingTarget::Budget(c) => rounding::round_budget(&oad, c, &objective, &space, &expansion, prune)?,
        RoundingTarget::SampleSize(n) => rounding::round_fixed_n(&oad, n, &objective, &space, &expansion, prune)?,
    };
    let mut record = base_record(problem, CommandKind::Round, cert, start)?;
    record.design = Some(DesignRecord::from_design(&oad, prune)?);
    record.exact = Some(ExactRecord::from(&exact));
    record.objective = trace.objective.or(Some(trace.efficiency));
    record.criteria = criterion_records(&criteria_used);
    record.efficiencies = trace.efficiencies.clone();
    record.iterations = trace.enumerated;
    record.rounding = Some(trace);
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Dispersion curves `d_j(u, w)` over the grid plus the aggregate
/// `sum_j eta_j d_j(u, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    pub header: Vec<String>,
    /// `(u, [d_1, ..., d_K, aggregate])`
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl DispersionTable {
    pub fn write_csv<W: Write>(&self, out: W) -> CmdResult<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CommandError::input(format!("writing CSV: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for (u, values) in &self.rows {
            let mut row = vec![u.to_string()];
            row.extend(values.iter().map(|v| format!("{v:.12e}")));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| CommandError::input(format!("writing CSV: {e}")))
    }

    /// Largest aggregate value over the grid.
    pub fn aggregate_max(&self) -> f64 {
        self.rows.iter().map(|r| *r.1.last().expect("aggregate column")).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Dispersion table for a design taken from `record`, or from the problem's
/// inline `[design]` when no record is given. With several criteria the
/// multipliers `eta` must come from the same source.
pub fn cmd_dispersion(problem: Option<&ProblemFile>, record: Option<&ResultRecord>) -> CmdResult<DispersionTable> {
    let problem = problem
        .or(record.map(|r| &r.problem))
        .ok_or_else(|| CommandError::input("dispersion needs a problem file or a result record"))?;
    let space = problem.space()?;
    let specs = problem.criteria()?;
    if specs.is_empty() {
        return Err(CommandError::input("dispersion needs at least one criterion"));
    }
    let (design, eta) = match record {
        Some(r) => {
            let d = r.design.as_ref().ok_or_else(|| CommandError::input("the record holds no approximate design"))?;
            (d.to_design(space.len())?, r.certificate.eta.clone())
        }
        None => (
            problem
                .inline_design()?
                .ok_or_else(|| CommandError::input("dispersion needs a [design] section or a result record"))?,
            problem.design.as_ref().and_then(|d| d.eta.clone()),
        ),
    };
    let eta = match (eta, specs.len()) {
        (Some(e), k) if e.len() == k => e,
        (Some(e), k) => {
            return Err(CommandError::input(format!("eta has {} entries for {k} criteria", e.len())));
        }
        (None, 1) => vec![1.0],
        (None, _) => return Err(CommandError::input("the aggregate column needs eta for every criterion")),
    };
    let info = space.info_raw(design.weights());
    let curves = specs
        .iter()
        .map(|s| criteria::dispersion_curve(s, &info, &space))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = maximin::aggregate_dispersion(&curves, &eta);
    let mut header = vec!["u".to_string()];
    for (j, s) in specs.iter().enumerate() {
        let repeated = specs.iter().filter(|o| o.label() == s.label()).count() > 1;
        header.push(if repeated { format!("d_{}_{}", s.label(), j + 1) } else { format!("d_{}", s.label()) });
    }
    header.push("aggregate".to_string());
    let rows = space
        .grid()
        .sizes()
        .map(|u| {
            let mut v: Vec<f64> = curves.iter().map(|c| c[u - 1]).collect();
            v.push(aggregate[u - 1]);
            (u, v)
        })
        .collect();
    Ok(DispersionTable { header, rows })
}

/// Outcome of re-verifying a stored record.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub stored: VerdictRecord,
    pub recomputed: VerdictRecord,
    /// Inconsistencies other than the verdict, e.g. an over-budget design.
    pub issues: Vec<String>,
}

impl VerifyReport {
    pub fn exit(&self) -> Exit {
        if self.stored != self.recomputed || !self.issues.is_empty() {
            Exit::Mismatch
        } else {
            Exit::of(self.recomputed)
        }
    }
}

fn anchored_from_record(record: &ResultRecord, specs: &[CriterionSpec]) -> CmdResult<Vec<AnchoredCriterion>> {
    if record.criteria.len() != specs.len() {
        return Err(CommandError::input("the record's criteria do not match its problem"));
    }
    specs
        .iter()
        .zip(&record.criteria)
        .map(|(s, c)| AnchoredCriterion::new(*s, c.anchor).map_err(CommandError::from))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-3)
}

/// Rebuilds the design from a record and re-checks its certificate.
pub fn cmd_verify(record: &ResultRecord) -> CmdResult<VerifyReport> {
    let problem = &record.problem;
    let space = problem.space()?;
    let stored_design = record
        .design
        .as_ref()
        .ok_or_else(|| CommandError::input("the record holds no approximate design"))?;
    let design = stored_design.to_design(space.len())?;
    let specs = problem.criteria()?;
    let mut issues = Vec::new();
    let recomputed = match record.command {
        CommandKind::RobustE => {
            let v = solvers::verify_robust_e(&problem.robust()?, &design, &space, problem.verify.delta)?;
            verdict_record(v).0
        }
        CommandKind::Oad | CommandKind::Round if specs.len() == 1 => {
            verdict_record(solvers::verify_optimality(&specs[0], &design, &space, problem.verify.delta)?).0
        }
        CommandKind::Oad => return Err(CommandError::input("an oad record needs exactly one criterion")),
        CommandKind::Maximin | CommandKind::Round => {
            let spec = MaximinSpec::new(anchored_from_record(record, &specs)?)?;
            let solution = maximin_solution_for(&spec, &design, &space)?;
            maximin_certificate(&solution, &spec, &space, problem)?.verdict
        }
    };
    if record.command == CommandKind::Round {
        check_exact(record, &specs, &space, &mut issues)?;
    }
    Ok(VerifyReport { stored: record.certificate.verdict, recomputed, issues })
}

fn check_exact(record: &ResultRecord, specs: &[CriterionSpec], space: &DesignSpace, issues: &mut Vec<String>) -> CmdResult<()> {
    let stored = record.exact.as_ref().ok_or_else(|| CommandError::input("a round record needs an exact design"))?;
    let exact = ExactDesign::new(&stored.points, space)?;
    let total = match record.problem.rounding_target()? {
        RoundingTarget::Budget(c) => {
            if exact.realized_cost() > c * (1.0 + 1e-12) {
                issues.push(format!("realized cost {} exceeds the budget {c}", exact.realized_cost()));
            }
            c
        }
        RoundingTarget::SampleSize(n) => {
            if exact.realized_n() != n {
                issues.push(format!("realized sample size {} differs from n = {n}", exact.realized_n()));
            }
            n as f64
        }
    };
    let anchored = anchored_from_record(record, specs)?;
    if anchored.len() != record.efficiencies.len() {
        issues.push("efficiency vector length differs from the criteria".to_string());
        return Ok(());
    }
    for (a, stored_eff) in anchored.iter().zip(&record.efficiencies) {
        let eff = rounding::exact_efficiency(&exact, a, space, total)?;
        if !close(eff, *stored_eff) {
            issues.push(format!("{} efficiency {eff} differs from the stored {stored_eff}", a.spec.label()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(extra: &str, overrides: &[&str]) -> ProblemFile {
        let text = format!("[model]\np0 = 0.07\np1 = 0.93\np2 = 0.96\nq = 0.0\nmax_size = 20\n{extra}");
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ProblemFile::parse(&text, &o).unwrap()
    }

    #[test]
    fn oad_record_round_trips_through_verify() {
        let p = problem("[[criteria]]\nkind = \"D\"\n", &[]);
        let record = cmd_oad(&p).unwrap();
        assert_eq!(record.exit(), Exit::Certified);
        let back = ResultRecord::from_json(&record.to_json().unwrap()).unwrap();
        let report = cmd_verify(&back).unwrap();
        assert_eq!(report.exit(), Exit::Certified, "{report:?}");
    }

    #[test]
    fn tampered_record_is_a_mismatch() {
        let p = problem("[[criteria]]\nkind = \"A\"\n", &[]);
        let mut record = cmd_oad(&p).unwrap();
        let d = record.design.as_mut().unwrap();
        d.weights.iter_mut().for_each(|w| *w = 1.0 / 20.0);
        assert_eq!(cmd_verify(&record).unwrap().exit(), Exit::Mismatch);
    }

    #[test]
    fn maximin_rejects_one_criterion() {
        let p = problem("[[criteria]]\nkind = \"D\"\n", &[]);
        assert_eq!(cmd_maximin(&p).unwrap_err().exit, Exit::InputError);
        let two = problem("[[criteria]]\nkind = \"D\"\n[[criteria]]\nkind = \"A\"\n", &[]);
        assert_eq!(cmd_oad(&two).unwrap_err().exit, Exit::InputError);
    }

    #[test]
    fn maximin_round_and_dispersion() {
        let p = problem(
            "[[criteria]]\nkind = \"D\"\n[[criteria]]\nkind = \"A\"\n[rounding]\nn = 12\n",
            &[],
        );
        let record = cmd_maximin(&p).unwrap();
        assert_eq!(record.exit(), Exit::Certified);
        let eta = record.certificate.eta.clone().unwrap();
        assert_eq!(eta.len(), 2);
        let table = cmd_dispersion(None, Some(&record)).unwrap();
        assert_eq!(table.header, ["u", "d_D", "d_A", "aggregate"]);
        assert_eq!(table.rows.len(), 20);
        assert!(table.aggregate_max() <= 1e-5 * (1.0 + 1e-9));

        let rounded = cmd_round(&p).unwrap();
        let exact = rounded.exact.as_ref().unwrap();
        assert_eq!(exact.realized_n, 12);
        assert_eq!(cmd_verify(&rounded).unwrap().exit(), Exit::Certified);
    }

    #[test]
    fn dispersion_needs_eta_for_several_criteria() {
        let p = problem(
            "[[criteria]]\nkind = \"D\"\n[[criteria]]\nkind = \"A\"\n[design]\nsupport = [1, 10, 20]\nweights = [0.3, 0.3, 0.4]\n",
            &[],
        );
        assert_eq!(cmd_dispersion(Some(&p), None).unwrap_err().exit, Exit::InputError);
        let with_eta = ProblemFile::parse(
            &toml::to_string(&p).unwrap(),
            &["design.eta=[0.5, 0.5]".to_string()],
        )
        .unwrap();
        assert_eq!(cmd_dispersion(Some(&with_eta), None).unwrap().rows.len(), 20);
    }

    #[test]
    fn robust_record_verifies() {
        let p = problem("[robust]\nrho = 0.01\n", &[]);
        let record = cmd_robust_e(&p).unwrap();
        assert_eq!(record.exit(), Exit::Certified);
        assert_eq!(cmd_verify(&record).unwrap().exit(), Exit::Certified);
    }

    #[test]
    fn budget_below_cheapest_unit_is_input_error() {
        let p = problem("[[criteria]]\nkind = \"D\"\n[rounding]\nbudget = 0.5\n", &["model.q=0.5"]);
        assert_eq!(cmd_round(&p).unwrap_err().exit, Exit::InputError);
    }
}
