use clap::{Args, Parser, Subcommand};
use fockmf_cli::drivers::{self, Command, RunOptions};
use fockmf_cli::emit::Format;
use fockmf_cli::scenario::{load_scenario, CliError};
use std::path::PathBuf;

/// Mean-field experiments on finite-dimensional bosonic Fock spaces.
#[derive(Parser)]
#[command(name = "fockmf", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quantum Heisenberg expectations against the push-forward measure.
    Converge(RunArgs),
    /// Classical Dyson-series partial sums and envelopes.
    Dyson(RunArgs),
    /// Seeded audit of the iterated-bracket norm bound.
    Bounds(RunArgs),
    /// Residual of the integral transport equation.
    Transport(RunArgs),
    /// Summarize a scenario and its cached results.
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV and summary files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Row output format: csv, or json for an additional rows file.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Slice length for long-time runs; must lie inside (0, T0).
    #[arg(long)]
    slice: Option<f64>,
    /// Worker threads for the row grid (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.cmd {
        Cmd::Converge(a) => (Some(Command::Converge), a),
        Cmd::Dyson(a) => (Some(Command::Dyson), a),
        Cmd::Bounds(a) => (Some(Command::Bounds), a),
        Cmd::Transport(a) => (Some(Command::Transport), a),
        Cmd::Report(a) => (None, a),
    };

    if args.jobs > 0 {
        // ignore failure when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global();
    }

    let format = match args.format.as_str() {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => {
            return Err(CliError::Validation(vec![format!(
                "--format must be csv or json, got {other:?}"
            )]))
        }
    };

    let cache_root = std::env::var_os("FOCKMF_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("cache"));

    let scenario = load_scenario(&args.scenario)?;
    let opts = RunOptions {
        out_dir: args.out.clone(),
        format,
        slice: args.slice,
        cache_root,
    };

    match cmd {
        Some(command) => {
            let outcome = drivers::execute(command, &scenario, &opts)?;
            println!(
                "{}: wrote {} (cache {})",
                command.name(),
                outcome.csv_path.display(),
                if outcome.cache_hit { "hit" } else { "miss" }
            );
            println!("summary: {}", outcome.summary_path.display());
        }
        None => {
            let path = drivers::report(&scenario, &opts)?;
            println!("report: {}", path.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(2);
    }
}
