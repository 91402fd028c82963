//! Result records: the JSON document every solving command writes.
//!
//! Floating-point values are stored with 12 significant digits. The record
//! echoes the full problem, so `gtdesign verify` can rebuild the design
//! space and re-check the certificate without the original problem file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DesignError, Result};
use crate::model::ApproximateDesign;
use crate::problem::ProblemFile;
use crate::rounding::{ExactDesign, RoundingTrace};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Oad,
    Maximin,
    Round,
    RobustE,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: CommandKind,
    /// SHA-256 of the canonical JSON form of `problem`.
    pub config_hash: String,
    pub problem: ProblemFile,
    /// The approximate design (for `round`, the one that was rounded).
    pub design: Option<DesignRecord>,
    pub exact: Option<ExactRecord>,
    pub objective: Option<f64>,
    pub criteria: Vec<CriterionRecord>,
    /// Efficiency per criterion, in the order of `criteria`.
    pub efficiencies: Vec<f64>,
    pub certificate: CertificateRecord,
    pub rounding: Option<RoundingTrace>,
    /// Solver iterations, or Newton steps for maximin solves.
    pub iterations: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRecord {
    /// Group sizes with weight above the prune tolerance.
    pub support: Vec<usize>,
    pub support_weights: Vec<f64>,
    /// Weight at every grid point `1..=M`.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactRecord {
    pub points: Vec<(usize, u64)>,
    pub realized_cost: f64,
    pub realized_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionRecord {
    pub label: String,
    /// Optimal objective value of the criterion on this problem.
    pub anchor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictRecord {
    Certified,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub verdict: VerdictRecord,
    /// Largest dispersion value and where it occurs (single-criterion and
    /// robust certificates).
    pub worst_size: Option<usize>,
    pub max_dispersion: Option<f64>,
    pub t_star: Option<f64>,
    pub inv_t: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub aggregate_max: Option<f64>,
}

impl CertificateRecord {
    pub fn new(verdict: VerdictRecord) -> Self {
        Self {
            verdict,
            worst_size: None,
            max_dispersion: None,
            t_star: None,
            inv_t: None,
            eta: None,
            aggregate_max: None,
        }
    }
}

impl DesignRecord {
    pub fn from_design(design: &ApproximateDesign, prune_tol: f64) -> Result<Self> {
        let support = design.support(prune_tol)?;
        Ok(Self {
            support: support.iter().map(|p| p.0).collect(),
            support_weights: support.iter().map(|p| p.1).collect(),
            weights: design.weights().to_vec(),
        })
    }

    /// The full-grid design, renormalized after the 12-digit rounding.
    pub fn to_design(&self, max_size: usize) -> Result<ApproximateDesign> {
        if self.weights.len() != max_size {
            return Err(DesignError::invalid(format!(
                "record holds {} weights for a grid of size {max_size}",
                self.weights.len()
            )));
        }
        let total: f64 = self.weights.iter().sum();
        ApproximateDesign::new(
            crate::model::DesignGrid::new(max_size)?,
            self.weights.iter().map(|w| w / total).collect(),
        )
    }
}

impl From<&ExactDesign> for ExactRecord {
    fn from(e: &ExactDesign) -> Self {
        Self { points: e.points().to_vec(), realized_cost: e.realized_cost(), realized_n: e.realized_n() }
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = r;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_rounded_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(value).map_err(|e| DesignError::invalid(format!("serialization: {e}")))?;
    round_json(&mut v);
    Ok(v)
}

/// Hex SHA-256 of the problem's canonical JSON (sorted keys, rounded numbers).
pub fn config_hash(problem: &ProblemFile) -> Result<String> {
    let canonical = to_rounded_value(problem)?.to_string();
    Ok(Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
}

impl ResultRecord {
    pub fn to_json(&self) -> Result<String> {
        let v = to_rounded_value(self)?;
        serde_json::to_string_pretty(&v).map_err(|e| DesignError::invalid(format!("serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: Self =
            serde_json::from_str(text).map_err(|e| DesignError::invalid(format!("result record: {e}")))?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(DesignError::invalid(format!(
                "result record has schema version {}, this tool reads version {SCHEMA_VERSION}",
                record.schema_version
            )));
        }
        record.problem.validate()?;
        Ok(record)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DesignError::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")
            .map_err(|e| DesignError::invalid(format!("cannot write {}: {e}", path.display())))
    }
}
