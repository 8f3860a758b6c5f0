//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on
//! configuration, domain, cost-refusal, or I/O errors.

use clap::{Args, Parser, Subcommand};
use dpre_core::experiments::{
    run_beta4_scan, run_continuum_constant, run_good_bond_surface, run_percolation_survival,
    run_verification_suite, ExperimentConfig, RunOutput,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dpre",
    version,
    about = "Directed-polymer simulation and verification lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-energy scaling scan over a β grid (CSV: beta,N,F_N mean,stderr,F_N/beta^4)
    Beta4Scan(RunArgs),
    /// Good-bond density surface (CSV: beta,T,eps,density,stderr)
    GoodBonds(RunArgs),
    /// Oriented percolation survival (CSV: field,param,horizon,trials,survival,ci_low,ci_high)
    Percolation(RunArgs),
    /// Continuum-constant estimates (CSV: n,T,law,samples,mean,stderr)
    ContinuumConstant(RunArgs),
    /// Exact-identity verification suite (JSON report; exit 1 on any failure)
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; omitted fields take documented defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime pick (overrides the config)
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(args: &RunArgs) -> dpre_core::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn dispatch(command: &Command) -> dpre_core::Result<RunOutput> {
    let (args, runner): (
        &RunArgs,
        fn(&ExperimentConfig) -> dpre_core::Result<RunOutput>,
    ) = match command {
        Command::Beta4Scan(a) => (a, run_beta4_scan),
        Command::GoodBonds(a) => (a, run_good_bond_surface),
        Command::Percolation(a) => (a, run_percolation_survival),
        Command::ContinuumConstant(a) => (a, run_continuum_constant),
        Command::Verify(a) => (a, run_verification_suite),
    };
    let cfg = load_config(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| dpre_core::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| runner(&cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(out) => {
            for file in &out.files {
                println!("wrote {}", file.display());
            }
            println!("wrote {}", out.manifest_path.display());
            if out.failures > 0 {
                eprintln!("{} verification check(s) failed", out.failures);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
