//! `halfline` command line: verification suites, plain runs, and their
//! CSV/JSON artifacts.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
//! 3 numerical abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use halfline_core::harness::config::ExperimentConfig;
use halfline_core::harness::io::OutputWriter;
use halfline_core::harness::report::Report;
use halfline_core::harness::suites::{self, SuiteError};

#[derive(Parser)]
#[command(
    name = "halfline",
    version,
    about = "Correlated reflected diffusions with elastic killing on the half-line: \
             particle simulation, SPDE solver, and statistical verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSVs and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel identity residuals (boundary identity, derivative switching,
    /// correction bound, contraction, Chapman-Kolmogorov).
    VerifyKernels(CommonArgs),
    /// Evolution-equation residuals, martingale z-tests, and J^N decay.
    Convergence(CommonArgs),
    /// Regularity-class statistics: boundary decay, tails, concentration,
    /// pair-probability ceiling.
    ClassLambda(CommonArgs),
    /// Particle system vs SPDE solver under one shared noise path.
    Compare(CommonArgs),
    /// Elastic-rate ladder between the reflecting and absorbing limits.
    KappaLimits(CommonArgs),
    /// Weak-boundary mass-loss identity along a bandwidth ladder.
    MassLoss(CommonArgs),
    /// Plain particle run with snapshot/histogram/loss exports.
    Simulate(CommonArgs),
    /// Plain SPDE solve with density and mass exports.
    Solve(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::VerifyKernels(a)
            | Command::Convergence(a)
            | Command::ClassLambda(a)
            | Command::Compare(a)
            | Command::KappaLimits(a)
            | Command::MassLoss(a)
            | Command::Simulate(a)
            | Command::Solve(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::VerifyKernels(_) => "verify-kernels",
            Command::Convergence(_) => "convergence",
            Command::ClassLambda(_) => "class-lambda",
            Command::Compare(_) => "compare",
            Command::KappaLimits(_) => "kappa-limits",
            Command::MassLoss(_) => "mass-loss",
            Command::Simulate(_) => "simulate",
            Command::Solve(_) => "solve",
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, SuiteError> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    Ok(cfg)
}

fn dispatch(
    cmd: &Command,
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    match cmd {
        Command::VerifyKernels(_) => suites::verify_kernels::run(config, seed, out),
        Command::Convergence(_) => suites::convergence::run(config, seed, out),
        Command::ClassLambda(_) => suites::class_lambda::run(config, seed, out),
        Command::Compare(_) => suites::compare::run(config, seed, out),
        Command::KappaLimits(_) => suites::kappa_limits::run(config, seed, out),
        Command::MassLoss(_) => suites::mass_loss::run(config, seed, out),
        Command::Simulate(_) => suites::runs::simulate(config, seed, out),
        Command::Solve(_) => suites::runs::solve(config, seed, out),
    }
}

fn run() -> Result<bool, SuiteError> {
    let cli = Cli::parse();
    let args = cli.command.common();
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .expect("thread pool built once");
    }
    let config = load_config(args)?;
    let seed = args.seed.unwrap_or(config.seed);
    let mut out = OutputWriter::new(args.out.as_deref())?;

    let report = dispatch(&cli.command, &config, seed, &mut out)?;
    for (stem, header, rows) in &report.tables {
        out.write_csv(stem, header, rows)?;
    }
    out.write_plot_script()?;
    out.finish_manifest(
        cli.command.name(),
        seed,
        &config.to_toml(),
        serde_json::json!({ "all_pass": report.all_pass() }),
    )?;
    print!("{report}");
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
