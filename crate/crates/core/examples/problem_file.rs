//! Runs the `round` command on an in-memory problem file and prints the
//! result record, then re-verifies the record as `gtdesign verify` would.

use gtdesign::commands::{cmd_round, cmd_verify};
use gtdesign::ProblemFile;

const PROBLEM: &str = r#"
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
radius = 2
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ProblemFile::parse(PROBLEM, &["rounding.budget=500".to_string()])?;
    let record = cmd_round(&problem)?;
    println!("{}", record.to_json()?);
    let report = cmd_verify(&record)?;
    eprintln!("re-verified: stored {:?}, recomputed {:?}", report.stored, report.recomputed);
    Ok(())
}
