use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radial_homog::config::{parse_config, Emit, ExperimentConfig};
use radial_homog::runner;
use radial_homog::{Error, ExampleId, Result};

/// Star-graph diffusion experiments.
#[derive(Parser)]
#[command(name = "radhomog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nodal values of the last stage solution.
    Solve(Common),
    /// Errors of group averages against a reference.
    Table(Common),
    /// Windowed Cauchy diagnostics.
    Cauchy(Common),
    /// Nodal values of the upscaled solution.
    Upscaled(Common),
    /// Equidistribution of ℓ mod 2π.
    Weyl(Common),
    /// Center and edge identity residuals.
    Identity(Common),
    /// Empirical order estimates.
    Rate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Elements per edge.
    #[arg(long)]
    mesh: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Example used when no config file is given.
    #[arg(long, default_value = "ex1")]
    example: ExampleId,
}

fn load(emit: Emit, args: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            parse_config(&text)?
        }
        None => ExperimentConfig::new(args.example),
    };
    cfg.emit = emit;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mesh) = args.mesh {
        cfg.mesh = mesh;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<PathBuf> {
    let (emit, args) = match &cli.command {
        Command::Solve(a) => (Emit::Solution, a),
        Command::Table(a) => (Emit::Table, a),
        Command::Cauchy(a) => (Emit::Cauchy, a),
        Command::Upscaled(a) => (Emit::Upscaled, a),
        Command::Weyl(a) => (Emit::Weyl, a),
        Command::Identity(a) => (Emit::Identity, a),
        Command::Rate(a) => (Emit::Rate, a),
    };
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let cfg = load(emit, args)?;
    runner::run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
