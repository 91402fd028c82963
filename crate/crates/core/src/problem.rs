//! Problem files: one TOML document describing a design problem.
//!
//! ```toml
//! [model]
//! p0 = 0.07
//! p1 = 0.93
//! p2 = 0.96
//! q = 0.2
//! max_size = 150
//!
//! [[criteria]]
//! kind = "D"
//!
//! [[criteria]]
//! kind = "c"
//! direction = [0.0, 1.0, 1.0]
//!
//! [rounding]
//! budget = 100.0
//! ```
//!
//! Any field can be overridden with `key.path=value` strings, e.g.
//! `model.q=0.8` or `criteria.0.kind=A`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionKind, CriterionSpec};
use crate::error::{DesignError, Result};
use crate::model::{ApproximateDesign, CostModel, DesignGrid, DesignSpace, ModelParams};
use crate::rounding::ExpansionConfig;
use crate::solvers::{RobustSpec, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub model: ModelSection,
    #[serde(default)]
    pub criteria: Vec<CriterionEntry>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<RoundingSection>,
    #[serde(default)]
    pub verify: VerifySection,
    /// An approximate design supplied inline instead of being solved for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Standardized cost share; give either `q` or both raw costs `q0`, `q1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    pub max_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionEntry {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustSection {
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundingSection {
    /// Standardized budget `C`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Raw budget `C0`, standardized with the model's `q0` and `q1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_budget: Option<f64>,
    /// Sample size for the cost-free case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Dispersion tolerance for single-criterion certificates.
    pub delta: f64,
    /// Slack on `eta_j |Phi_j - h_j(t*)|` in the maximin certificate.
    pub delta1: f64,
    /// Slack on the aggregate dispersion in the maximin certificate.
    pub delta2: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { delta: 1e-5, delta1: 1e-5, delta2: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Maximin certificate multipliers, one per criterion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// What the rounding section asks for once resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundingTarget {
    Budget(f64),
    SampleSize(u64),
}

impl ProblemFile {
    /// Reads and validates a problem file, applying `overrides` first.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DesignError::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| DesignError::invalid(format!("problem file: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let problem: Self = table.try_into().map_err(|e| DesignError::invalid(format!("problem file: {e}")))?;
        problem.validate()?;
        Ok(problem)
    }

    /// Checks every section that is present, so no solve starts on a
    /// malformed problem.
    pub fn validate(&self) -> Result<()> {
        self.space()?;
        self.criteria()?;
        self.solver.validate()?;
        if let Some(r) = &self.robust {
            RobustSpec::new(r.rho)?;
        }
        if self.rounding.is_some() {
            self.expansion()?;
            self.rounding_target()?;
        }
        let v = &self.verify;
        if !(v.delta > 0.0 && v.delta1 > 0.0 && v.delta2 > 0.0) {
            return Err(DesignError::invalid("verify tolerances must be positive"));
        }
        self.inline_design()?;
        if let Some(eta) = self.design.as_ref().and_then(|d| d.eta.as_ref()) {
            if eta.len() != self.criteria.len() || eta.iter().any(|e| !(*e >= 0.0)) {
                return Err(DesignError::invalid("design.eta needs one nonnegative multiplier per criterion"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.p0, self.model.p1, self.model.p2)
    }

    pub fn cost(&self) -> Result<CostModel> {
        let m = &self.model;
        match (m.q, m.q0, m.q1) {
            (Some(q), None, None) => CostModel::new(q),
            (None, Some(q0), Some(q1)) => CostModel::from_raw(q0, q1),
            (None, None, None) => Err(DesignError::invalid("model needs q, or both q0 and q1")),
            _ => Err(DesignError::invalid("model takes either q or the pair q0, q1, not both")),
        }
    }

    pub fn space(&self) -> Result<DesignSpace> {
        Ok(DesignSpace::new(self.params()?, self.cost()?, DesignGrid::new(self.model.max_size)?))
    }

    pub fn criteria(&self) -> Result<Vec<CriterionSpec>> {
        self.criteria
            .iter()
            .map(|c| CriterionSpec::from_kind(CriterionKind::parse(&c.kind)?, c.direction))
            .collect()
    }

    pub fn robust(&self) -> Result<RobustSpec> {
        let r = self.robust.ok_or_else(|| DesignError::invalid("problem has no [robust] section"))?;
        RobustSpec::new(r.rho)
    }

    pub fn expansion(&self) -> Result<ExpansionConfig> {
        let mut e = ExpansionConfig::default();
        if let Some(r) = &self.rounding {
            if let Some(radius) = r.radius {
                e.radius = radius;
            }
            if let Some(cap) = r.cap {
                e.cap = cap;
            }
        }
        e.validate()?;
        Ok(e)
    }

    pub fn rounding_target(&self) -> Result<RoundingTarget> {
        let r = self.rounding.as_ref().ok_or_else(|| DesignError::invalid("problem has no [rounding] section"))?;
        match (r.budget, r.raw_budget, r.n) {
            (Some(c), None, None) => Ok(RoundingTarget::Budget(c)),
            (None, Some(c0), None) => match (self.model.q0, self.model.q1) {
                (Some(q0), Some(q1)) => Ok(RoundingTarget::Budget(CostModel::standardize_budget(c0, q0, q1))),
                _ => Err(DesignError::invalid("rounding.raw_budget needs model.q0 and model.q1")),
            },
            (None, None, Some(n)) => Ok(RoundingTarget::SampleSize(n)),
            _ => Err(DesignError::invalid("rounding takes exactly one of budget, raw_budget or n")),
        }
    }

    /// The `[design]` section as a design on the problem's grid.
    pub fn inline_design(&self) -> Result<Option<ApproximateDesign>> {
        let Some(d) = &self.design else {
            return Ok(None);
        };
        if d.support.len() != d.weights.len() {
            return Err(DesignError::invalid(format!(
                "design.support has {} points but design.weights has {}",
                d.support.len(),
                d.weights.len()
            )));
        }
        let points: Vec<(usize, f64)> = d.support.iter().copied().zip(d.weights.iter().copied()).collect();
        ApproximateDesign::from_points(DesignGrid::new(self.model.max_size)?, &points).map(Some)
    }
}

/// Sets `path=value` in a TOML table. The value is read as a TOML value
/// when it parses as one and as a string otherwise; numeric path segments
/// index arrays.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| DesignError::invalid(format!("override '{assignment}' is not of the form key.path=value")))?;
    let value = parse_value(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(DesignError::invalid(format!("override '{assignment}' has an empty key")));
    }
    let mut slot = table
        .entry(keys[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for key in &keys[1..] {
        slot = match slot {
            toml::Value::Table(t) => t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| DesignError::invalid(format!("override '{assignment}': '{key}' is not an index")))?;
                let len = a.len();
                a.get_mut(i).ok_or_else(|| {
                    DesignError::invalid(format!("override '{assignment}': index {i} out of range ({len} entries)"))
                })?
            }
            _ => return Err(DesignError::invalid(format!("override '{assignment}': '{key}' is below a scalar"))),
        };
    }
    *slot = value;
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [model]
        p0 = 0.07
        p1 = 0.93
        p2 = 0.96
        q = 0.2
        max_size = 150

        [[criteria]]
        kind = "D"

        [rounding]
        budget = 100.0
    "#;

    #[test]
    fn parses_and_defaults() {
        let p = ProblemFile::parse(BASE, &[]).unwrap();
        assert_eq!(p.space().unwrap().len(), 150);
        assert_eq!(p.criteria().unwrap(), vec![CriterionSpec::d()]);
        assert_eq!(p.solver, SolverConfig::default());
        assert_eq!(p.expansion().unwrap(), ExpansionConfig::default());
        assert_eq!(p.rounding_target().unwrap(), RoundingTarget::Budget(100.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("max_size = 150", "max_size = 150\nmax_sise = 3");
        let err = ProblemFile::parse(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("max_sise"), "{err}");
        assert!(ProblemFile::parse(&format!("{BASE}\n[extra]\na = 1\n"), &[]).is_err());
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let err = ProblemFile::parse(BASE, &["model.p0=1.2".into()]).unwrap_err().to_string();
        assert!(err.contains("p0"), "{err}");
        assert!(ProblemFile::parse(BASE, &["criteria.0.kind=F".into()]).is_err());
        assert!(ProblemFile::parse(BASE, &["criteria.0.kind=c".into()]).is_err());
        assert!(ProblemFile::parse(BASE, &["rounding.radius=3".into()]).is_err());
        assert!(ProblemFile::parse(BASE, &["rounding.n=10".into()]).is_err());
        assert!(ProblemFile::parse(BASE, &["model.q0=1".into(), "model.q1=1".into()]).is_err());
    }

    #[test]
    fn overrides_reach_nested_and_indexed_fields() {
        let p = ProblemFile::parse(
            BASE,
            &["model.q=0.8".into(), "criteria.0.kind=E".into(), "solver.max_iters=10".into(), "robust.rho=0.01".into()],
        )
        .unwrap();
        assert_eq!(p.cost().unwrap().q(), 0.8);
        assert_eq!(p.criteria().unwrap(), vec![CriterionSpec::e()]);
        assert_eq!(p.solver.max_iters, 10);
        assert_eq!(p.robust().unwrap().rho(), 0.01);
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
        assert!(ProblemFile::parse(BASE, &["criteria.3.kind=A".into()]).is_err());
    }

    #[test]
    fn raw_costs_and_budget() {
        let text = BASE.replace("q = 0.2", "q0 = 4.0\nq1 = 1.0").replace("budget = 100.0", "raw_budget = 500.0");
        let p = ProblemFile::parse(&text, &[]).unwrap();
        assert!((p.cost().unwrap().q() - 0.2).abs() < 1e-15);
        assert_eq!(p.rounding_target().unwrap(), RoundingTarget::Budget(100.0));
    }

    #[test]
    fn inline_design() {
        let text = format!("{BASE}\n[design]\nsupport = [1, 10, 67]\nweights = [0.5, 0.25, 0.25]\n");
        let d = ProblemFile::parse(&text, &[]).unwrap().inline_design().unwrap().unwrap();
        assert_eq!(d.weight(10), 0.25);
        assert!(ProblemFile::parse(&text, &["design.weights=[0.5, 0.5]".into()]).is_err());
        assert!(ProblemFile::parse(&text, &["design.eta=[1.0, 2.0]".into()]).is_err());
    }
}
