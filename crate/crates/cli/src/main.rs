use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use sparse_rl::agent::build_mask;
use sparse_rl::fsutil::write_atomic;
use sparse_rl::harness::{
    l1_trainer, report, run_experiment, run_job, sweep_l1_beta, sweep_step_sizes, worker_count,
    ExperimentConfig,
};
use sparse_rl::mask::{gen_l1, gen_predictive, load_mask, save_mask, L1Config};
use sparse_rl::predictive::PanConfig;
use sparse_rl::{EnvKind, Mask, MaskSource};

#[derive(Parser)]
#[command(
    name = "sparse-rl",
    version,
    about = "Sparse hidden-layer DQN experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a hidden-layer mask and write it in SPMASK1 format.
    GenMask(GenMaskArgs),
    /// Inspect mask files.
    Mask {
        #[command(subcommand)]
        action: MaskAction,
    },
    /// Run every trial of an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Step-size sweep, or the L1 coefficient sweep with `--l1`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        l1: bool,
    },
    /// Summarise aggregate curves under a results directory.
    Report { dir: PathBuf },
}

#[derive(Subcommand)]
enum MaskAction {
    /// Print dimensions, sparsity and per-column statistics.
    Stats { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKind {
    Random,
    Spatial,
    Predictive,
    L1,
}

#[derive(clap::Args)]
struct GenMaskArgs {
    kind: MaskKind,
    #[arg(long)]
    env: EnvKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interaction steps for predictive and L1 masks.
    #[arg(long)]
    steps: Option<u64>,
    /// L1 penalty coefficient; defaults to the environment's tuned value.
    #[arg(long)]
    beta: Option<f64>,
}

/// Neighborhood listing written next to a predictive mask.
fn neighborhood_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".hoods");
    PathBuf::from(name)
}

fn gen_mask(args: &GenMaskArgs) -> Result<Mask> {
    if args.beta.is_some() && !matches!(args.kind, MaskKind::L1) {
        bail!("--beta only applies to l1 masks");
    }
    if args.steps.is_some() && matches!(args.kind, MaskKind::Random | MaskKind::Spatial) {
        bail!("--steps only applies to predictive and l1 masks");
    }
    let mask = match args.kind {
        MaskKind::Random => build_mask(args.env, &MaskSource::Random, args.seed)?,
        MaskKind::Spatial => build_mask(args.env, &MaskSource::Spatial, args.seed)?,
        MaskKind::Predictive => {
            let config = PanConfig {
                steps: args.steps.unwrap_or(PanConfig::default().steps),
                ..PanConfig::default()
            };
            let mut env = args.env.make(args.seed);
            let (mask, hoods) =
                gen_predictive(&mut env, &config, args.env.grouping_repeat(), args.seed)?;
            let path = neighborhood_path(&args.out);
            write_atomic(&path, hoods.to_text().as_bytes())?;
            info!("neighborhoods written to {}", path.display());
            mask
        }
        MaskKind::L1 => {
            let mut config = L1Config::new(args.env, args.steps.unwrap_or(5_000_000), args.seed);
            if let Some(beta) = args.beta {
                config.beta = beta;
            }
            let out = gen_l1(args.env, &config)?;
            info!(
                "L1 run finished: mean |phi| {:.3e}, {:.4} of weights dropped",
                out.mean_abs_phi, out.sparsity
            );
            out.mask
        }
    };
    save_mask(&mask, &args.out)?;
    Ok(mask)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMask(args) => {
            let mask = gen_mask(&args)?;
            println!("wrote {}", args.out.display());
            println!("{}", mask.stats());
        }
        Command::Mask {
            action: MaskAction::Stats { file },
        } => {
            let mask = load_mask(&file)?;
            println!("{}", mask.stats());
        }
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&cfg)?;
            println!("fingerprint {}", outcome.fingerprint);
            for path in &outcome.files {
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep { config, l1 } => {
            let cfg = ExperimentConfig::load(&config)?;
            let workers = worker_count()?;
            if l1 {
                let trainer = l1_trainer(&cfg);
                let (sweep, path) = sweep_l1_beta(&cfg, &trainer, workers)?;
                print!("{}", sweep.to_csv());
                match sweep.selected() {
                    Some(beta) => println!("selected beta {beta}"),
                    None => println!("no beta selected"),
                }
                println!("wrote {}", path.display());
            } else {
                let (sweep, path) = sweep_step_sizes(&cfg, &run_job, workers)?;
                print!("{}", sweep.to_csv());
                println!("wrote {}", path.display());
            }
        }
        Command::Report { dir } => {
            let r = report(&dir).with_context(|| format!("reporting on {}", dir.display()))?;
            println!("fingerprint {}", r.fingerprint);
            for row in &r.summary {
                println!(
                    "{} {} {}: final {:.4} last {:.4} ± {:.4}",
                    row.env,
                    row.architecture,
                    row.mode,
                    row.final_mean,
                    row.last_mean,
                    row.last_stderr
                );
            }
            for path in &r.files {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
