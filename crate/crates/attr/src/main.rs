//! Batch Banzhaf attribution for positive DNF lineage.
//!
//! Instances come from lineage text files or from a CSV database plus a
//! datalog-style query (one instance per output tuple). Results stream to
//! stdout as JSON or CSV; a runtime summary goes to stderr.

mod bench;
mod instances;
mod output;
mod run;

use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use banzhaf::adaban::{Epsilon, LeafPolicy};
use banzhaf::baselines::BRUTE_FORCE_VAR_CAP;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use instances::InputError;
use output::{print_summary, summarize, write_csv, write_json, write_trace, Output};
use run::{run_batch, Algo, RunOpts};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("writing {path}: {message}")]
    Write { path: PathBuf, message: String },
}

#[derive(Parser)]
#[command(
    name = "attr",
    version,
    about = "Banzhaf attribution over DNF lineage and CSV databases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact values via full d-tree compilation.
    Exact(RunArgs),
    /// Anytime intervals certified to a relative epsilon.
    Adaban(RunArgs),
    /// Certified (or epsilon-relaxed) top-k selection.
    Topk(RunArgs),
    /// Ranking of all variables, certified or to epsilon.
    Rank(RunArgs),
    /// Monte Carlo estimates.
    Mc(RunArgs),
    /// Brute-force enumeration; small universes only.
    Oracle(RunArgs),
    /// Print each instance's lineage and exit.
    Lineage(RunArgs),
    /// Compare algorithms over a directory of instances.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeafArg {
    Largest,
    Leftmost,
    RoundRobin,
}

impl From<LeafArg> for LeafPolicy {
    fn from(arg: LeafArg) -> LeafPolicy {
        match arg {
            LeafArg::Largest => LeafPolicy::Largest,
            LeafArg::Leftmost => LeafPolicy::Leftmost,
            LeafArg::RoundRobin => LeafPolicy::RoundRobin,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Lineage file (one instance per line) or directory of .dnf files.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["db", "query"])]
    lineage: Option<PathBuf>,
    /// Database directory containing schema.json and the relation CSVs.
    #[arg(long, value_name = "DIR", requires = "query")]
    db: Option<PathBuf>,
    /// Query file; one instance per output tuple.
    #[arg(long, value_name = "FILE", requires = "db")]
    query: Option<PathBuf>,
    /// Relative error bound as a decimal string, e.g. 0.1.
    #[arg(long)]
    epsilon: Option<String>,
    /// How many variables to select (topk).
    #[arg(long)]
    k: Option<usize>,
    /// Monte Carlo samples per variable.
    #[arg(long, value_name = "N")]
    samples_per_var: Option<u64>,
    /// RNG seed (ChaCha8); required for mc.
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse one sample stream per instance for all variables (mc).
    #[arg(long)]
    shared_samples: bool,
    /// Per-instance wall clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout_secs: f64,
    /// Cap on d-tree expansions per run.
    #[arg(long)]
    max_expansions: Option<u64>,
    /// Universe size cap for the oracle.
    #[arg(long, default_value_t = BRUTE_FORCE_VAR_CAP)]
    oracle_cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write per-step refinement rows to this CSV file.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the final d-trees, annotated with bound quads, to this file.
    #[arg(long, value_name = "FILE")]
    dump_dtree: Option<PathBuf>,
    /// Restrict the computation to one variable (display name).
    #[arg(long)]
    var: Option<String>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Which function leaf the refinement loop expands next.
    #[arg(long, value_enum, default_value_t = LeafArg::Largest)]
    leaf_policy: LeafArg,
}

pub(crate) fn parse_epsilon_text(text: &str) -> Result<Epsilon, CliError> {
    text.parse::<Epsilon>()
        .map_err(|e| CliError::Config(format!("--epsilon {text:?}: {e}")))
}

fn require_epsilon(args: &RunArgs, command: &str) -> Result<Epsilon, CliError> {
    let text = args
        .epsilon
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{command} requires --epsilon")))?;
    parse_epsilon_text(text)
}

pub(crate) fn parse_timeout(secs: f64) -> Result<Duration, CliError> {
    if !secs.is_finite() || secs <= 0.0 {
        return Err(CliError::Config(format!(
            "--timeout-secs must be a positive number, got {secs}"
        )));
    }
    Ok(Duration::from_secs_f64(secs))
}

fn algo_for(command: &Command) -> Result<Option<Algo>, CliError> {
    Ok(match command {
        Command::Exact(_) => Some(Algo::Exact),
        Command::Adaban(args) => Some(Algo::Adaban {
            eps: require_epsilon(args, "adaban")?,
        }),
        Command::Topk(args) => Some(Algo::TopK {
            k: args
                .k
                .ok_or_else(|| CliError::Config("topk requires --k".to_string()))?,
            eps: args
                .epsilon
                .as_deref()
                .map(parse_epsilon_text)
                .transpose()?,
        }),
        Command::Rank(args) => Some(Algo::Rank {
            eps: require_epsilon(args, "rank")?,
        }),
        Command::Mc(args) => Some(Algo::Mc {
            samples_per_var: args.samples_per_var.unwrap_or(10_000),
            seed: args
                .seed
                .ok_or_else(|| CliError::Config("mc requires --seed".to_string()))?,
            shared: args.shared_samples,
        }),
        Command::Oracle(_) => Some(Algo::Oracle),
        Command::Lineage(_) | Command::Bench(_) => None,
    })
}

fn print_lineage(args: &RunArgs) -> Result<ExitCode, CliError> {
    let instances = instances::load(&args.lineage, &args.db, &args.query)?;
    for inst in &instances {
        println!("{}\t{}", inst.label, inst.function.render(&inst.vars));
    }
    Ok(ExitCode::SUCCESS)
}

fn execute(algo: Algo, args: &RunArgs) -> Result<ExitCode, CliError> {
    let instances = instances::load(&args.lineage, &args.db, &args.query)?;
    let opts = RunOpts {
        algo,
        timeout: parse_timeout(args.timeout_secs)?,
        max_expansions: args.max_expansions,
        policy: args.leaf_policy.into(),
        var: args.var.clone(),
        oracle_cap: args.oracle_cap,
        want_trace: args.trace.is_some(),
        want_dump: args.dump_dtree.is_some(),
    };
    let runs = run_batch(&instances, &opts, args.workers).map_err(CliError::Config)?;

    if let Some(path) = &args.trace {
        let rows: Vec<_> = runs.iter().flat_map(|r| r.trace.iter().cloned()).collect();
        write_trace(path, &rows).map_err(|e| CliError::Write {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    if let Some(path) = &args.dump_dtree {
        let text: Vec<&str> = runs.iter().filter_map(|r| r.dump.as_deref()).collect();
        fs::write(path, text.join("\n")).map_err(|e| CliError::Write {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }

    let outs: Vec<_> = runs.into_iter().map(|r| r.out).collect();
    let summary = summarize(&outs);
    let all_failed = !outs.is_empty() && summary.succeeded == 0;
    let output = Output {
        instances: outs,
        summary,
    };
    let stdout = io::stdout().lock();
    match args.format {
        Format::Json => write_json(stdout, &output).map_err(|e| CliError::Config(e.to_string()))?,
        Format::Csv => write_csv(stdout, &output).map_err(|e| CliError::Config(e.to_string()))?,
    }
    print_summary(&output.summary);
    Ok(if all_failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn real_main() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Bench(_) => match cli.command {
            Command::Bench(args) => bench::run(args),
            _ => unreachable!(),
        },
        Command::Lineage(args) => print_lineage(args),
        command => {
            let algo = algo_for(command)?.expect("run subcommands carry an algorithm");
            let args = match command {
                Command::Exact(a)
                | Command::Adaban(a)
                | Command::Topk(a)
                | Command::Rank(a)
                | Command::Mc(a)
                | Command::Oracle(a) => a,
                Command::Lineage(_) | Command::Bench(_) => unreachable!(),
            };
            execute(algo, args)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("attr: {err}");
            ExitCode::from(1)
        }
    }
}
