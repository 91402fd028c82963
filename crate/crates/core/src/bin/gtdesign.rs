use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gtdesign::commands::{self, CommandError, Exit};
use gtdesign::{reproduce, ProblemFile, ResultRecord, TableId};

/// Optimal designs for group testing experiments.
///
/// Exit codes: 0 certified, 1 input error, 2 not converged, 3 mismatch.
/// GTDESIGN_THREADS sets the worker thread count.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Print a run summary on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file (TOML).
    problem: PathBuf,
    /// Override a problem field, e.g. `--set model.q=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output path; defaults to the problem's output section, then stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal approximate design for one criterion.
    Oad(ProblemArgs),
    /// Maximin design over two or more criteria.
    Maximin(ProblemArgs),
    /// Exact design for a budget or sample size.
    Round(ProblemArgs),
    /// Robust E-optimal design.
    RobustE(ProblemArgs),
    /// Dispersion functions of a design as CSV.
    Dispersion {
        /// Problem file with a [design] section; optional with --record.
        problem: Option<PathBuf>,
        /// Take the design, and eta, from a result record.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check the certificate stored in a result record.
    Verify { record: PathBuf },
    /// Re-run a reference table: table1, table2, table3, table4 or robust-e.
    Reproduce { table: TableId },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::InputError.code() as u8 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(Exit::InputError.code() as u8);
    }
    let exit = match run(cli) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit
        }
    };
    ExitCode::from(exit.code() as u8)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("GTDESIGN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("GTDESIGN_THREADS must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<Exit, CommandError> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Oad(a) => solve(a, verbose, commands::cmd_oad),
        Command::Maximin(a) => solve(a, verbose, commands::cmd_maximin),
        Command::Round(a) => solve(a, verbose, commands::cmd_round),
        Command::RobustE(a) => solve(a, verbose, commands::cmd_robust_e),
        Command::Dispersion { problem, record, overrides, output } => {
            let problem = problem.map(|p| ProblemFile::load(&p, &overrides)).transpose()?;
            let record = record.map(|p| ResultRecord::load(&p)).transpose()?;
            let table = commands::cmd_dispersion(problem.as_ref(), record.as_ref())?;
            let target = output.or_else(|| {
                problem.as_ref().or(record.as_ref().map(|r| &r.problem)).and_then(|p| p.output.csv.clone())
            });
            match target {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|e| CommandError::input(format!("cannot write {}: {e}", path.display())))?;
                    table.write_csv(file)?;
                }
                None => table.write_csv(std::io::stdout().lock())?,
            }
            if verbose {
                eprintln!("{} rows, max aggregate {:.3e}", table.rows.len(), table.aggregate_max());
            }
            Ok(Exit::Certified)
        }
        Command::Verify { record } => {
            let record = ResultRecord::load(&record)?;
            let report = commands::cmd_verify(&record)?;
            println!("stored verdict: {:?}", report.stored);
            println!("recomputed verdict: {:?}", report.recomputed);
            for issue in &report.issues {
                println!("issue: {issue}");
            }
            Ok(report.exit())
        }
        Command::Reproduce { table } => {
            let report = reproduce::run(table)?;
            println!("{report}");
            Ok(if report.passed() { Exit::Certified } else { Exit::Mismatch })
        }
    }
}

fn solve(
    args: ProblemArgs,
    verbose: bool,
    command: fn(&ProblemFile) -> Result<ResultRecord, CommandError>,
) -> Result<Exit, CommandError> {
    let problem = ProblemFile::load(&args.problem, &args.overrides)?;
    let record = command(&problem)?;
    if verbose {
        eprintln!(
            "{:?}: {} iterations, {:.3} s, verdict {:?}",
            record.command, record.iterations, record.wall_time, record.certificate.verdict
        );
    }
    match args.output.or_else(|| problem.output.record.clone()) {
        Some(path) => record.save(&path)?,
        None => write_stdout(&record)?,
    }
    if record.exit() != Exit::Certified {
        eprintln!("certificate not satisfied; see the record's certificate section");
    }
    Ok(record.exit())
}

fn write_stdout(record: &ResultRecord) -> Result<(), CommandError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", record.to_json()?).map_err(|e| CommandError::input(format!("writing output: {e}")))
}
