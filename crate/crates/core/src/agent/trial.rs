use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{AgentConfig, DqnAgent};
use crate::env::{EnvKind, Environment};
use crate::error::{Error, Result};
use crate::mask::{gen_random, gen_spatial, load_mask, Mask};
use crate::nn::QNetwork;
use crate::rng::{stream, stream_rng};

/// Positions per grouping for the structured masks.
pub(crate) const NEIGHBORS: usize = 9;
pub(crate) const KERNEL: usize = 3;

/// Where the hidden-layer mask of a trial comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MaskSource {
    Dense,
    /// Drawn from the trial seed.
    Random,
    Spatial,
    Predictive(PathBuf),
    L1(PathBuf),
}

impl MaskSource {
    pub fn architecture(&self) -> &'static str {
        match self {
            MaskSource::Dense => "dense",
            MaskSource::Random => "random",
            MaskSource::Spatial => "spatial",
            MaskSource::Predictive(_) => "predictive",
            MaskSource::L1(_) => "l1",
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            MaskSource::Predictive(p) | MaskSource::L1(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for MaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.path() {
            Some(p) => write!(f, "{}:{}", self.architecture(), p.display()),
            None => f.write_str(self.architecture()),
        }
    }
}

impl FromStr for MaskSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, path) = match s.split_once(':') {
            Some((k, p)) => (k, Some(PathBuf::from(p))),
            None => (s, None),
        };
        match (kind, path) {
            ("dense", None) => Ok(MaskSource::Dense),
            ("random", None) => Ok(MaskSource::Random),
            ("spatial", None) => Ok(MaskSource::Spatial),
            ("predictive", Some(p)) => Ok(MaskSource::Predictive(p)),
            ("l1", Some(p)) => Ok(MaskSource::L1(p)),
            ("predictive" | "l1", None) => Err(Error::InvalidArgument(format!(
                "mask source `{s}` needs a file path, as in `{s}:path/to/mask`"
            ))),
            _ => Err(Error::InvalidArgument(format!("unknown mask source `{s}`"))),
        }
    }
}

/// Builds or loads the mask for `kind` and checks its shape.
pub fn build_mask(kind: EnvKind, source: &MaskSource, seed: u64) -> Result<Mask> {
    let spec = kind.spec();
    let d = spec.flat_len();
    let n = kind.hidden_units();
    let repeat = kind.grouping_repeat();
    let mask = match source {
        MaskSource::Dense => Mask::ones(d, n),
        MaskSource::Random => gen_random(d, d, spec.channels, NEIGHBORS, repeat, seed)?,
        MaskSource::Spatial => gen_spatial(spec.height, spec.width, spec.channels, KERNEL, repeat)?,
        MaskSource::Predictive(p) | MaskSource::L1(p) => load_mask(p)?,
    };
    if mask.rows() != d {
        return Err(Error::dim("mask rows", d, mask.rows()));
    }
    if mask.cols() != n {
        return Err(Error::dim("mask columns", n, mask.cols()));
    }
    Ok(mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSample {
    pub step: u64,
    pub episodes: u64,
    /// Mean undiscounted return of the trailing window; `NaN` before the
    /// first episode ends.
    pub mean_return: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

/// A seeded learning curve.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub samples: Vec<CurveSample>,
    pub config_hash: String,
}

pub const TRIAL_HEADER: &str = "step,episodes,mean_return_100,epsilon,alpha,config_hash";

impl TrialResult {
    pub fn final_return(&self) -> Option<f64> {
        self.samples.last().map(|s| s.mean_return)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRIAL_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.step, s.episodes, s.mean_return, s.epsilon, s.alpha, self.config_hash
            ));
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRIAL_HEADER => {}
            _ => {
                return Err(Error::parse(
                    origin,
                    1,
                    format!("expected header `{TRIAL_HEADER}`"),
                ))
            }
        }
        let mut samples = Vec::new();
        let mut hash: Option<String> = None;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::parse(origin, lineno, "expected 6 fields"));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::parse(origin, lineno, format!("bad number `{s}`")))
            };
            let int = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::parse(origin, lineno, format!("bad integer `{s}`")))
            };
            match &hash {
                None => hash = Some(f[5].to_string()),
                Some(h) if h != f[5] => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        "config hash changes within the file",
                    ))
                }
                _ => {}
            }
            samples.push(CurveSample {
                step: int(f[0])?,
                episodes: int(f[1])?,
                mean_return: num(f[2])?,
                epsilon: num(f[3])?,
                alpha: num(f[4])?,
            });
        }
        Ok(Self {
            samples,
            config_hash: hash.unwrap_or_default(),
        })
    }
}

/// Short hex digest identifying one trial configuration, independent of the
/// seed.
pub fn trial_fingerprint(
    kind: EnvKind,
    source: &MaskSource,
    mask: &Mask,
    config: &AgentConfig,
) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "env={kind}\narchitecture={}\n",
        source.architecture()
    ));
    h.update(format!(
        "mask={}x{}x{}\n",
        mask.rows(),
        mask.cols(),
        mask.repeat()
    ));
    if !matches!(source, MaskSource::Random) {
        h.update(mask.bits());
    }
    h.update(config.canonical());
    hex::encode(&h.finalize()[..8])
}

/// Runs one trial end to end. Fully determined by `(kind, source, config,
/// seed)` and the contents of any mask file.
pub fn run_trial(
    kind: EnvKind,
    source: &MaskSource,
    config: &AgentConfig,
    seed: u64,
) -> Result<TrialResult> {
    let mask = build_mask(kind, source, seed)?;
    let hash = trial_fingerprint(kind, source, &mask, config);
    run_trial_with_mask(kind, Arc::new(mask), config, seed, hash)
}

/// Runs one trial with an already-built mask, tagging the result with `hash`.
pub fn run_trial_with_mask(
    kind: EnvKind,
    mask: Arc<Mask>,
    config: &AgentConfig,
    seed: u64,
    hash: String,
) -> Result<TrialResult> {
    config.validate()?;
    let spec = kind.spec();
    let net = QNetwork::<f32>::init(
        spec.flat_len(),
        kind.hidden_units(),
        spec.num_actions,
        mask,
        seed,
        config.hidden_frozen,
    )?;
    let mut env = kind.make(seed);
    let mut agent = DqnAgent::new(net, config.clone(), seed)?;
    let mut samples = Vec::with_capacity((config.total_steps / config.sample_period) as usize);
    for _ in 0..config.total_steps {
        agent.train_step(&mut env)?;
        if agent.steps() % config.sample_period == 0 {
            samples.push(CurveSample {
                step: agent.steps(),
                episodes: agent.episodes(),
                mean_return: agent.windowed_return(),
                epsilon: config.epsilon,
                alpha: config.step_size,
            });
        }
    }
    Ok(TrialResult {
        samples,
        config_hash: hash,
    })
}

/// Returns of `episodes` uniformly random episodes, drawing from the same
/// streams a fully exploring trial with this seed would use.
pub fn random_policy_returns(kind: EnvKind, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    let mut env = kind.make(seed);
    let mut rng = stream_rng(seed, stream::ACTIONS);
    let actions = kind.spec().num_actions;
    let mut returns = Vec::with_capacity(episodes);
    env.reset();
    let mut total = 0.0;
    while returns.len() < episodes {
        let _explore: f64 = rng.gen();
        let out = env.step(rng.gen_range(0..actions))?;
        total += out.reward;
        if out.terminal {
            returns.push(std::mem::take(&mut total));
            env.reset();
        }
    }
    Ok(returns)
}
