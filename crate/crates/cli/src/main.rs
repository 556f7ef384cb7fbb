use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moran_cli::{emit_plot, run_with_threads, CliError, ExperimentConfig, Kind, PlotKind};

/// Simulation and verification harness for the two-type Moran model with
/// quenched resampling rates.
#[derive(Parser)]
#[command(name = "moran", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record paths and triangle terms on a time grid.
    Simulate(RunArgs),
    /// Martingale, heterozygosity slope, Lyapunov bound and term1 decay across N.
    CollapseStudy(RunArgs),
    /// Compare the law of S at a fixed time with the reference diffusion.
    CompareFw(RunArgs),
    /// Run replicas to absorption and estimate the fixation probability.
    Fixation(RunArgs),
    /// Evaluate the moment and tail conditions on the configured law.
    AssumptionCheck(RunArgs),
    /// Draw environments and report empirical diffusion constants.
    DiagnoseLaw(RunArgs),
    /// Estimate the initial growth rate of Var S.
    ProbeVariance(RunArgs),
    /// Render a CSV output as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "MORAN_THREADS")]
    threads: Option<usize>,
    /// Exit with status 1 if any acceptance check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Defaults to the CSV path with an `.svg` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(kind: Kind, args: RunArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        return Err(CliError::Config(format!(
            "config kind `{}` does not match subcommand `{}`",
            cfg.kind.tag(),
            kind.tag()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if args.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let summary = run_with_threads(&cfg, args.threads)?;
    for (name, passed, detail) in summary.checks() {
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
    println!(
        "summary written to {}",
        cfg.out.join("summary.txt").display()
    );
    match summary.failed() {
        n if n > 0 && args.check => Err(CliError::CheckFailed(n)),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run(Kind::Simulate, a),
        Command::CollapseStudy(a) => run(Kind::Collapse, a),
        Command::CompareFw(a) => run(Kind::CompareFw, a),
        Command::Fixation(a) => run(Kind::Fixation, a),
        Command::AssumptionCheck(a) => run(Kind::AssumptionCheck, a),
        Command::DiagnoseLaw(a) => run(Kind::DiagnoseLaw, a),
        Command::ProbeVariance(a) => run(Kind::ProbeVariance, a),
        Command::Plot(a) => {
            let out = a.out.unwrap_or_else(|| a.csv.with_extension("svg"));
            emit_plot(&a.csv, a.kind, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
