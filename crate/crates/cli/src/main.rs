//! `lumberjack`: generate conflict instances, solve them, export WCSP files
//! and run benchmark campaigns.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lumberjack::bench::ScenarioKind;

use commands::{Exit, Failure};

#[derive(Parser, Debug)]
#[command(name = "lumberjack", version, about = "Multi-manoeuvre aircraft conflict resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a benchmark instance to a JSON file.
    Gen(GenArgs),
    /// Solve an instance with SBF, greedy or the exhaustive oracle.
    Solve(SolveArgs),
    /// Export an instance as a .wcsp file.
    ExportWcsp(ExportArgs),
    /// Solve an instance with an external WCSP solver.
    SolveExternal(ExternalArgs),
    /// Run a seeded campaign and append one CSV row per run.
    Bench(BenchArgs),
    /// Anytime loop over increasing discretisation settings.
    Iterate(IterateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scenario {
    Roundabout,
    Crossing,
}

impl From<Scenario> for ScenarioKind {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Roundabout => ScenarioKind::Roundabout,
            Scenario::Crossing => ScenarioKind::Crossing,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolveMethod {
    Sbf,
    Greedy,
    Oracle,
}

#[derive(Args, Debug)]
struct Discretisation {
    #[arg(long)]
    segments: usize,
    #[arg(long)]
    manoeuvres: usize,
    #[arg(long)]
    granularity: u8,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long)]
    aircraft: usize,
    #[arg(long)]
    seed: u64,
    /// Roundabout radius, NM.
    #[arg(long, conflicts_with_all = ["angle", "spacing"])]
    radius: Option<f64>,
    /// Crossing angle, degrees.
    #[arg(long)]
    angle: Option<f64>,
    /// In-trail spacing, NM.
    #[arg(long)]
    spacing: Option<f64>,
    #[command(flatten)]
    discretisation: Discretisation,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: SolveMethod,
    /// Seconds.
    #[arg(long)]
    timeout: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Set the upper bound from a greedy solution.
    #[arg(long)]
    ub_from_greedy: bool,
    /// Integer cost units per kg.
    #[arg(long, default_value_t = lumberjack::solver_aux::DEFAULT_SCALE)]
    scale: u64,
}

#[derive(Args, Debug)]
struct ExternalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    solver: PathBuf,
    #[arg(long)]
    timeout: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Aircraft count or inclusive range `A..B`.
    #[arg(long)]
    aircraft: String,
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    timeout: f64,
    /// Comma-separated list of sbf, greedy, oracle, external.
    #[arg(long)]
    methods: String,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 2)]
    manoeuvres: usize,
    #[arg(long, default_value_t = 2)]
    granularity: u8,
    /// Several settings as `p,m,g;p,m,g`, replacing the three flags above.
    #[arg(long)]
    settings: Option<String>,
    /// External solver binary.
    #[arg(long, default_value = "toulbar2")]
    solver: PathBuf,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct IterateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Seconds.
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value = lumberjack::bench::DEFAULT_SCHEDULE)]
    schedule: String,
}

fn run(cli: Cli) -> Result<Exit, Failure> {
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::ExportWcsp(a) => commands::export(a),
        Command::SolveExternal(a) => commands::solve_external(a),
        Command::Bench(a) => commands::bench(a),
        Command::Iterate(a) => commands::iterate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Input } else { Exit::Solved };
            let _ = e.print();
            return code.into();
        }
    };
    match run(cli) {
        Ok(exit) => exit.into(),
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code.into()
        }
    }
}
