use std::path::PathBuf;

use log::info;
use rayon::prelude::*;

use super::aggregate::{mean_stderr, AggregateCurve};
use super::config::{Architecture, ExperimentConfig, HiddenMode};
use super::run::{env_dir, plan_jobs, preload_masks, with_pool, TrialJob, TrialRunner};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::mask::{gen_l1, L1Config};
use crate::rng::trial_seed;

/// Sparsity the L1 coefficient is tuned toward.
pub const TARGET_SPARSITY: f64 = 0.91;

/// Index of the best score; ties go to the smallest key. `NaN` scores never
/// win unless all are `NaN`.
pub fn select_best(points: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(key, score)) in points.iter().enumerate() {
        let score = if score.is_nan() {
            f64::NEG_INFINITY
        } else {
            score
        };
        best = match best {
            None => Some(i),
            Some(b) => {
                let bs = if points[b].1.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    points[b].1
                };
                if score > bs || (score == bs && key < points[b].0) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepSizeRow {
    pub architecture: Architecture,
    pub mode: HiddenMode,
    pub step_size: f64,
    /// Final-window mean return; `NaN` if no trial finished an episode.
    pub final_return: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepSizeSweep {
    pub rows: Vec<StepSizeRow>,
}

impl StepSizeSweep {
    pub fn best(&self, arch: Architecture, mode: HiddenMode) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.architecture == arch && r.mode == mode && r.selected)
            .map(|r| r.step_size)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("architecture,mode,step_size,final_return,selected\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{},{}\n",
                r.architecture, r.mode, r.step_size, r.final_return, r.selected
            ));
        }
        out
    }
}

/// For every architecture and mode in `cfg`, runs `cfg.sweep.trials` trials
/// per grid step size and keeps the one with the highest final return.
/// Writes `sweep_step_sizes.csv` next to the experiment output.
pub fn sweep_step_sizes(
    cfg: &ExperimentConfig,
    runner: &dyn TrialRunner,
    workers: usize,
) -> Result<(StepSizeSweep, PathBuf)> {
    let grid = &cfg.sweep.step_sizes;
    if grid.is_empty() {
        return Err(Error::Config("step-size grid is empty".into()));
    }
    let fingerprint = cfg.fingerprint()?;
    let masks = preload_masks(cfg)?;
    let mut reduced = cfg.clone();
    reduced.trials = cfg.sweep.trials;
    let base_jobs = plan_jobs(&reduced, &fingerprint, &masks);
    let jobs: Vec<(f64, TrialJob)> = grid
        .iter()
        .flat_map(|&alpha| {
            base_jobs.iter().map(move |j| {
                let mut j = j.clone();
                j.agent.step_size = alpha;
                (alpha, j)
            })
        })
        .collect();
    info!("step-size sweep: {} runs", jobs.len());
    let results = with_pool(workers, || {
        jobs.par_iter()
            .map(|(_, j)| runner.run(j))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows = Vec::new();
    for arch in &cfg.architectures {
        for &mode in &cfg.modes {
            let mut points = Vec::new();
            for &alpha in grid {
                let group: Vec<_> = jobs
                    .iter()
                    .zip(&results)
                    .filter(|((a, j), _)| {
                        *a == alpha && j.arch.architecture == arch.architecture && j.mode == mode
                    })
                    .map(|(_, r)| r.clone())
                    .collect();
                let score = AggregateCurve::from_trials(&group)?
                    .final_performance()
                    .unwrap_or(f64::NAN);
                points.push((alpha, score));
            }
            let best = select_best(&points);
            for (i, (alpha, score)) in points.into_iter().enumerate() {
                rows.push(StepSizeRow {
                    architecture: arch.architecture,
                    mode,
                    step_size: alpha,
                    final_return: score,
                    selected: Some(i) == best,
                });
            }
        }
    }
    let sweep = StepSizeSweep { rows };
    let path = env_dir(&cfg.output_dir, cfg.env).join("sweep_step_sizes.csv");
    write_atomic(&path, tag_rows(&sweep.to_csv(), &fingerprint).as_bytes())?;
    Ok((sweep, path))
}

/// Outcome of one L1 training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Measure {
    pub sparsity: f64,
    pub mean_abs_phi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct L1Row {
    pub beta: f64,
    pub mean_abs_phi: f64,
    pub sparsity: f64,
    pub sparsity_stderr: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct L1Sweep {
    pub rows: Vec<L1Row>,
}

impl L1Sweep {
    pub fn selected(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.selected).map(|r| r.beta)
    }

    /// True when sparsity never decreases as beta grows.
    pub fn is_monotone(&self) -> bool {
        let mut rows: Vec<&L1Row> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        rows.windows(2).all(|w| w[1].sparsity >= w[0].sparsity)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,mean_abs_phi,sparsity,sparsity_stderr,selected\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{},{},{},{}\n",
                r.beta, r.mean_abs_phi, r.sparsity, r.sparsity_stderr, r.selected
            ));
        }
        out
    }
}

/// Picks the row whose sparsity is nearest [`TARGET_SPARSITY`]; ties go to
/// the smaller coefficient.
pub fn select_nearest_target(rows: &[L1Row]) -> Option<usize> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.beta, -(r.sparsity - TARGET_SPARSITY).abs()))
        .collect();
    select_best(&points)
}

/// Appends a `config_hash` column to a CSV table.
fn tag_rows(csv: &str, fingerprint: &str) -> String {
    let mut lines = csv.lines();
    let mut out = String::new();
    if let Some(header) = lines.next() {
        out.push_str(&format!("{header},config_hash\n"));
    }
    for line in lines {
        out.push_str(&format!("{line},{fingerprint}\n"));
    }
    out
}

/// Builds the L1 sweep table from per-trial measurements, one inner vector
/// per grid point.
pub fn l1_table(grid: &[f64], measures: &[Vec<L1Measure>]) -> L1Sweep {
    let mut rows: Vec<L1Row> = grid
        .iter()
        .zip(measures)
        .map(|(&beta, ms)| {
            let (sparsity, sparsity_stderr) =
                mean_stderr(&ms.iter().map(|m| m.sparsity).collect::<Vec<_>>());
            let (mean_abs_phi, _) =
                mean_stderr(&ms.iter().map(|m| m.mean_abs_phi).collect::<Vec<_>>());
            L1Row {
                beta,
                mean_abs_phi,
                sparsity,
                sparsity_stderr,
                selected: false,
            }
        })
        .collect();
    if let Some(i) = select_nearest_target(&rows) {
        rows[i].selected = true;
    }
    L1Sweep { rows }
}

/// Trains dense L1-regularised agents for every coefficient in
/// `cfg.sweep.l1_betas` and tabulates the resulting sparsity. `train` maps
/// `(beta, seed)` to one measurement; [`l1_trainer`] is the real one.
pub fn sweep_l1_beta(
    cfg: &ExperimentConfig,
    train: &(dyn Fn(f64, u64) -> Result<L1Measure> + Sync),
    workers: usize,
) -> Result<(L1Sweep, PathBuf)> {
    let grid = &cfg.sweep.l1_betas;
    if grid.is_empty() {
        return Err(Error::Config("L1 coefficient grid is empty".into()));
    }
    let jobs: Vec<(usize, f64, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(g, &beta)| {
            (0..cfg.sweep.l1_trials).map(move |t| (g, beta, trial_seed(cfg.master_seed, t as u64)))
        })
        .collect();
    info!("L1 sweep: {} runs", jobs.len());
    let results = with_pool(workers, || {
        jobs.par_iter()
            .map(|&(_, beta, seed)| train(beta, seed))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut measures = vec![Vec::new(); grid.len()];
    for ((g, _, _), m) in jobs.iter().zip(results) {
        measures[*g].push(m);
    }
    let sweep = l1_table(grid, &measures);
    let path = env_dir(&cfg.output_dir, cfg.env).join("sweep_l1.csv");
    write_atomic(
        &path,
        tag_rows(&sweep.to_csv(), &cfg.fingerprint()?).as_bytes(),
    )?;
    Ok((sweep, path))
}

/// Real trainer for [`sweep_l1_beta`]: dense network, learned hidden layer,
/// the dense learned step size, `cfg.sweep.l1_steps` steps.
pub fn l1_trainer(cfg: &ExperimentConfig) -> impl Fn(f64, u64) -> Result<L1Measure> + Sync + '_ {
    move |beta, seed| {
        let step = cfg
            .arch(Architecture::Dense)
            .map(|a| a.learned_step_size)
            .unwrap_or_else(|| Architecture::Dense.default_step_size(cfg.env, HiddenMode::Learned));
        let mut agent = cfg.agent_config(HiddenMode::Learned, step);
        agent.total_steps = cfg.sweep.l1_steps;
        let out = gen_l1(cfg.env, &L1Config { beta, agent, seed })?;
        Ok(L1Measure {
            sparsity: out.sparsity,
            mean_abs_phi: out.mean_abs_phi,
        })
    }
}
