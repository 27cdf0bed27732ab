use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eqprox::harness::{self, RunOutcome};
use eqprox::library::{instantiate, list_problems, load_problem, CatalogEntry, LambdaPolicy};
use eqprox::{Error, SolverConfig};

#[derive(Parser)]
#[command(name = "eqprox", version, about = "Proximal-gradient solver for equality-constrained l1-regularized problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve catalog problems and write a CSV report.
    Solve {
        /// Solver settings (flat `key = value` file); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated catalog names; all problems when omitted.
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        /// Additional problems in the text format (repeatable).
        #[arg(long = "problem-file")]
        problem_files: Vec<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for per-problem iteration traces.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Fixed slack weight instead of `||y*||_inf + 10`.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Print aggregate counts for a report.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// List the built-in problems.
    List,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            config,
            problems,
            problem_files,
            out,
            trace,
            jobs,
            lambda,
        } => run_solve(config.as_deref(), &problems, &problem_files, out.as_deref(), trace.as_deref(), jobs, lambda),
        Command::Summarize { input } => run_summarize(&input),
        Command::List => {
            for name in list_problems() {
                match instantiate(name) {
                    Ok(e) => println!("{name:<22} n={:<3} m={:<3} {}", e.n(), e.m(), e.description),
                    Err(err) => println!("{name:<22} {err}"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|err| {
        eprintln!("error: {err}");
        ExitCode::from(exit_code(&err))
    })
}

fn run_solve(
    config: Option<&Path>,
    problems: &[String],
    problem_files: &[PathBuf],
    out: Option<&Path>,
    trace: Option<&Path>,
    jobs: usize,
    lambda: Option<f64>,
) -> eqprox::Result<ExitCode> {
    let cfg = match config {
        Some(path) => harness::load_config(path).map_err(|e| match e {
            Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            other => other,
        })?,
        None => SolverConfig::default(),
    };
    let policy = match lambda {
        Some(v) => LambdaPolicy::Explicit(v),
        None => LambdaPolicy::DefaultOffset,
    };

    let mut entries: Vec<CatalogEntry> = Vec::new();
    if problems.is_empty() && problem_files.is_empty() {
        for name in list_problems() {
            entries.push(instantiate(name)?);
        }
    } else {
        for name in problems {
            entries.push(instantiate(name.trim())?);
        }
    }
    for path in problem_files {
        entries.push(load_problem(path)?);
    }

    let outcomes = harness::run_suite(&entries, &cfg, policy, jobs)?;
    let rows: Vec<_> = outcomes.iter().map(|o| o.row.clone()).collect();
    match out {
        Some(path) => harness::write_report(BufWriter::new(File::create(path)?), &rows)?,
        None => harness::write_report(io::stdout().lock(), &rows)?,
    }
    if let Some(dir) = trace {
        write_traces(dir, &outcomes)?;
    }

    let mut panicked = false;
    for o in &outcomes {
        if let Some(msg) = &o.error {
            eprintln!("{}: {msg}", o.row.problem);
            panicked |= msg.starts_with("panic:");
        }
    }
    Ok(if panicked { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn write_traces(dir: &Path, outcomes: &[RunOutcome]) -> eqprox::Result<()> {
    fs::create_dir_all(dir)?;
    for o in outcomes {
        if let Some(report) = &o.report {
            let file = File::create(dir.join(format!("{}.csv", o.row.problem)))?;
            harness::write_trace(BufWriter::new(file), &report.trace)?;
        }
    }
    Ok(())
}

fn run_summarize(input: &Path) -> eqprox::Result<ExitCode> {
    let rows = harness::read_report(File::open(input)?)?;
    let s = harness::summarize(&rows);
    print!("{}", s.table());
    println!("{}", s.record());
    Ok(ExitCode::SUCCESS)
}
