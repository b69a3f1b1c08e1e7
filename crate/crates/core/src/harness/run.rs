use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::aggregate::AggregateCurve;
use super::config::{ArchSettings, Architecture, ExperimentConfig, HiddenMode};
use crate::agent::{build_mask, run_trial_with_mask, AgentConfig, TrialResult};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::mask::Mask;
use crate::rng::trial_seed;

/// Environment variable bounding the number of concurrent trials.
pub const WORKERS_VAR: &str = "SPARSE_RL_WORKERS";

/// Worker count from [`WORKERS_VAR`], defaulting to the available cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "{WORKERS_VAR} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` on a pool of `workers` threads.
pub fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Everything one trial needs.
#[derive(Clone, Debug)]
pub struct TrialJob {
    pub env: EnvKind,
    pub arch: ArchSettings,
    pub mode: HiddenMode,
    pub trial: usize,
    pub seed: u64,
    pub agent: AgentConfig,
    /// Pre-loaded mask for file-backed architectures.
    pub mask: Option<Arc<Mask>>,
    pub fingerprint: String,
}

/// Executes a trial. The default is [`run_job`]; tests substitute stubs.
pub trait TrialRunner: Sync {
    fn run(&self, job: &TrialJob) -> Result<TrialResult>;
}

impl<F> TrialRunner for F
where
    F: Fn(&TrialJob) -> Result<TrialResult> + Sync,
{
    fn run(&self, job: &TrialJob) -> Result<TrialResult> {
        self(job)
    }
}

/// Trains the agent described by `job`.
pub fn run_job(job: &TrialJob) -> Result<TrialResult> {
    let mask = match &job.mask {
        Some(m) => m.clone(),
        None => Arc::new(build_mask(job.env, &job.arch.mask_source(), job.seed)?),
    };
    run_trial_with_mask(job.env, mask, &job.agent, job.seed, job.fingerprint.clone())
}

/// Loads and shape-checks every mask file the config refers to.
pub fn preload_masks(cfg: &ExperimentConfig) -> Result<BTreeMap<Architecture, Arc<Mask>>> {
    let mut out = BTreeMap::new();
    for a in &cfg.architectures {
        if a.mask.is_some() {
            let mask = build_mask(cfg.env, &a.mask_source(), 0)?;
            out.insert(a.architecture, Arc::new(mask));
        }
    }
    Ok(out)
}

pub(crate) fn env_dir(out: &Path, env: EnvKind) -> PathBuf {
    out.join(env.name())
}

pub(crate) fn curve_name(arch: Architecture, mode: HiddenMode) -> String {
    format!("{arch}_{mode}")
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub fingerprint: String,
    pub curves: Vec<(Architecture, HiddenMode, AggregateCurve)>,
    pub trials: Vec<(Architecture, HiddenMode, Vec<TrialResult>)>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn curve(&self, arch: Architecture, mode: HiddenMode) -> Option<&AggregateCurve> {
        self.curves
            .iter()
            .find(|(a, m, _)| *a == arch && *m == mode)
            .map(|(_, _, c)| c)
    }
}

/// Builds the job list: architectures in config order, then modes, then
/// trial indices.
pub fn plan_jobs(
    cfg: &ExperimentConfig,
    fingerprint: &str,
    masks: &BTreeMap<Architecture, Arc<Mask>>,
) -> Vec<TrialJob> {
    let mut jobs = Vec::new();
    for arch in &cfg.architectures {
        for &mode in &cfg.modes {
            for trial in 0..cfg.trials {
                jobs.push(TrialJob {
                    env: cfg.env,
                    arch: arch.clone(),
                    mode,
                    trial,
                    seed: trial_seed(cfg.master_seed, trial as u64),
                    agent: cfg.agent_config(mode, arch.step_size(mode)),
                    mask: masks.get(&arch.architecture).cloned(),
                    fingerprint: fingerprint.to_string(),
                });
            }
        }
    }
    jobs
}

/// Runs every trial of `cfg` with the default trainer and writes per-trial
/// and aggregate CSV files under `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(cfg, &run_job, worker_count()?)
}

/// [`run_experiment`] with an explicit trial runner and worker count.
/// Output bytes do not depend on the worker count.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    runner: &dyn TrialRunner,
    workers: usize,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint()?;
    let masks = preload_masks(cfg)?;
    let jobs = plan_jobs(cfg, &fingerprint, &masks);
    let dir = env_dir(&cfg.output_dir, cfg.env);
    info!(
        "experiment {fingerprint}: {} trials on {} worker(s), writing to {}",
        jobs.len(),
        workers,
        dir.display()
    );

    let results: Vec<TrialResult> = with_pool(workers, || {
        jobs.par_iter()
            .map(|job| {
                let result = runner.run(job)?;
                let path = dir
                    .join(curve_name(job.arch.architecture, job.mode))
                    .join(format!("trial_{:03}.csv", job.trial));
                write_atomic(&path, result.to_csv().as_bytes())?;
                info!(
                    "{} {} trial {} done, final return {:?}",
                    job.arch.architecture,
                    job.mode,
                    job.trial,
                    result.final_return()
                );
                Ok(result)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut files = Vec::new();
    let mut curves = Vec::new();
    let mut trials = Vec::new();
    let mut rest = results.as_slice();
    write_atomic(
        dir.join("config.txt"),
        format!("fingerprint={fingerprint}\n{}", cfg.canonical()?).as_bytes(),
    )?;
    for arch in &cfg.architectures {
        for &mode in &cfg.modes {
            let (group, tail) = rest.split_at(cfg.trials);
            rest = tail;
            let curve = AggregateCurve::from_trials(group)?;
            let path = dir.join(format!("{}.csv", curve_name(arch.architecture, mode)));
            write_atomic(&path, curve.to_csv().as_bytes())?;
            files.push(path);
            curves.push((arch.architecture, mode, curve));
            trials.push((arch.architecture, mode, group.to_vec()));
        }
    }
    Ok(ExperimentOutcome {
        fingerprint,
        curves,
        trials,
        files,
    })
}
