use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::agent::{AgentConfig, MaskSource};
use crate::env::EnvKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Dense,
    Random,
    Spatial,
    Predictive,
    L1,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Dense,
        Architecture::Random,
        Architecture::Spatial,
        Architecture::Predictive,
        Architecture::L1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Dense => "dense",
            Architecture::Random => "random",
            Architecture::Spatial => "spatial",
            Architecture::Predictive => "predictive",
            Architecture::L1 => "l1",
        }
    }

    pub fn needs_mask_file(self) -> bool {
        matches!(self, Architecture::Predictive | Architecture::L1)
    }

    /// Step size used when the config gives none.
    pub fn default_step_size(self, env: EnvKind, mode: HiddenMode) -> f64 {
        match (env, mode) {
            (EnvKind::Breakout, HiddenMode::Frozen) => 0.1,
            (EnvKind::Breakout, HiddenMode::Learned) => 1e-4,
            (EnvKind::SpaceInvaders, HiddenMode::Frozen) => 1e-4,
            (EnvKind::SpaceInvaders, HiddenMode::Learned) => match self {
                Architecture::Spatial | Architecture::L1 => 1e-5,
                _ => 1e-4,
            },
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown architecture `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HiddenMode {
    Frozen,
    Learned,
}

impl HiddenMode {
    pub fn name(self) -> &'static str {
        match self {
            HiddenMode::Frozen => "frozen",
            HiddenMode::Learned => "learned",
        }
    }
}

impl fmt::Display for HiddenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HiddenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen" => Ok(HiddenMode::Frozen),
            "learned" => Ok(HiddenMode::Learned),
            _ => Err(Error::Config(format!(
                "unknown hidden mode `{s}` (frozen or learned)"
            ))),
        }
    }
}

/// Per-architecture settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchSettings {
    pub architecture: Architecture,
    pub mask: Option<PathBuf>,
    pub frozen_step_size: f64,
    pub learned_step_size: f64,
}

impl ArchSettings {
    pub fn step_size(&self, mode: HiddenMode) -> f64 {
        match mode {
            HiddenMode::Frozen => self.frozen_step_size,
            HiddenMode::Learned => self.learned_step_size,
        }
    }

    pub fn mask_source(&self) -> MaskSource {
        match (self.architecture, &self.mask) {
            (Architecture::Dense, _) => MaskSource::Dense,
            (Architecture::Random, _) => MaskSource::Random,
            (Architecture::Spatial, _) => MaskSource::Spatial,
            (Architecture::Predictive, Some(p)) => MaskSource::Predictive(p.clone()),
            (Architecture::L1, Some(p)) => MaskSource::L1(p.clone()),
            (a, None) => unreachable!("{a} without a mask path is rejected at load time"),
        }
    }
}

/// Settings of the step-size and L1-coefficient sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub step_sizes: Vec<f64>,
    pub trials: usize,
    pub l1_betas: Vec<f64>,
    pub l1_trials: usize,
    pub l1_steps: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            step_sizes: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            trials: 5,
            l1_betas: vec![1e-6, 1e-5, 2.5e-5, 1e-4],
            l1_trials: 3,
            l1_steps: 50_000,
        }
    }
}

/// A fully resolved experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub architectures: Vec<ArchSettings>,
    pub modes: Vec<HiddenMode>,
    pub trials: usize,
    pub total_steps: u64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Shared DQN settings; step size, frozen flag and run length are filled
    /// in per run.
    pub agent: AgentConfig,
    pub sweep: SweepSettings,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawArch {
    mask: Option<PathBuf>,
    frozen_step_size: Option<f64>,
    learned_step_size: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    gamma: Option<f64>,
    epsilon: Option<f64>,
    buffer_capacity: Option<usize>,
    batch_size: Option<usize>,
    sync_period: Option<u64>,
    learning_start: Option<u64>,
    sample_period: Option<u64>,
    window: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    step_sizes: Option<Vec<f64>>,
    trials: Option<usize>,
    l1_betas: Option<Vec<f64>>,
    l1_trials: Option<usize>,
    l1_steps: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    env: String,
    architectures: Option<Vec<String>>,
    modes: Option<Vec<String>>,
    trials: Option<usize>,
    total_steps: Option<u64>,
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    agent: RawAgent,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    dense: RawArch,
    #[serde(default)]
    random: RawArch,
    #[serde(default)]
    spatial: RawArch,
    #[serde(default)]
    predictive: RawArch,
    #[serde(default)]
    l1: RawArch,
}

impl ExperimentConfig {
    /// Reads a config file. Relative mask and output paths are taken relative
    /// to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let env: EnvKind = raw
            .env
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))?;
        let architectures: Vec<Architecture> = match raw.architectures {
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            None => Architecture::ALL.to_vec(),
        };
        if architectures.is_empty() {
            return Err(Error::Config("architecture list is empty".into()));
        }
        let mut modes: Vec<HiddenMode> = match raw.modes {
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            None => vec![HiddenMode::Frozen, HiddenMode::Learned],
        };
        modes.sort();
        modes.dedup();
        if modes.is_empty() {
            return Err(Error::Config("mode list is empty".into()));
        }
        let mut sections = BTreeMap::from([
            (Architecture::Dense, raw.dense),
            (Architecture::Random, raw.random),
            (Architecture::Spatial, raw.spatial),
            (Architecture::Predictive, raw.predictive),
            (Architecture::L1, raw.l1),
        ]);
        let mut archs = Vec::new();
        for a in architectures {
            if archs.iter().any(|s: &ArchSettings| s.architecture == a) {
                return Err(Error::Config(format!("architecture `{a}` listed twice")));
            }
            let sec = sections.remove(&a).unwrap_or_default();
            let mask = match (a.needs_mask_file(), sec.mask) {
                (true, Some(p)) => Some(base.join(p)),
                (true, None) => {
                    return Err(Error::Config(format!(
                        "architecture `{a}` needs `mask = \"<file>\"` in its [{a}] section"
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::Config(format!(
                        "architecture `{a}` takes no mask file"
                    )))
                }
                (false, None) => None,
            };
            archs.push(ArchSettings {
                architecture: a,
                mask,
                frozen_step_size: sec
                    .frozen_step_size
                    .unwrap_or_else(|| a.default_step_size(env, HiddenMode::Frozen)),
                learned_step_size: sec
                    .learned_step_size
                    .unwrap_or_else(|| a.default_step_size(env, HiddenMode::Learned)),
            });
        }

        let d = AgentConfig::default();
        let ra = raw.agent;
        let agent = AgentConfig {
            gamma: ra.gamma.unwrap_or(d.gamma),
            epsilon: ra.epsilon.unwrap_or(d.epsilon),
            buffer_capacity: ra.buffer_capacity.unwrap_or(d.buffer_capacity),
            batch_size: ra.batch_size.unwrap_or(d.batch_size),
            sync_period: ra.sync_period.unwrap_or(d.sync_period),
            learning_start: ra.learning_start.unwrap_or(d.learning_start),
            sample_period: ra.sample_period.unwrap_or(d.sample_period),
            window: ra.window.unwrap_or(d.window),
            ..d
        };
        let ds = SweepSettings::default();
        let rs = raw.sweep;
        let sweep = SweepSettings {
            step_sizes: rs.step_sizes.unwrap_or(ds.step_sizes),
            trials: rs.trials.unwrap_or(ds.trials),
            l1_betas: rs.l1_betas.unwrap_or(ds.l1_betas),
            l1_trials: rs.l1_trials.unwrap_or(ds.l1_trials),
            l1_steps: rs.l1_steps.unwrap_or(ds.l1_steps),
        };
        let cfg = Self {
            env,
            architectures: archs,
            modes,
            trials: raw.trials.unwrap_or(30),
            total_steps: raw.total_steps.unwrap_or(5_000_000),
            master_seed: raw.master_seed.unwrap_or(0),
            output_dir: base.join(raw.output_dir.unwrap_or_else(|| PathBuf::from("results"))),
            agent,
            sweep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.trials == 0 || self.sweep.l1_trials == 0 {
            return Err(Error::Config(
                "sweep trial counts must be at least 1".into(),
            ));
        }
        if self.sweep.step_sizes.is_empty() || self.sweep.l1_betas.is_empty() {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        for a in &self.architectures {
            for m in &self.modes {
                let step = a.step_size(*m);
                if !(step >= 0.0 && step.is_finite()) {
                    return Err(Error::Config(format!(
                        "{} {m} step size {step} is invalid",
                        a.architecture
                    )));
                }
            }
        }
        self.agent_config(HiddenMode::Frozen, 0.0).validate()
    }

    pub fn arch(&self, a: Architecture) -> Option<&ArchSettings> {
        self.architectures.iter().find(|s| s.architecture == a)
    }

    /// Agent settings for one run.
    pub fn agent_config(&self, mode: HiddenMode, step_size: f64) -> AgentConfig {
        AgentConfig {
            step_size,
            hidden_frozen: mode == HiddenMode::Frozen,
            total_steps: self.total_steps,
            ..self.agent.clone()
        }
    }

    /// Sorted `key=value` lines describing everything that affects results.
    /// Mask files enter through a digest of their contents, so moving a file
    /// does not change the fingerprint but editing it does.
    pub fn canonical(&self) -> Result<String> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        kv.insert("env".into(), self.env.to_string());
        kv.insert("trials".into(), self.trials.to_string());
        kv.insert("total_steps".into(), self.total_steps.to_string());
        kv.insert("master_seed".into(), self.master_seed.to_string());
        kv.insert(
            "modes".into(),
            self.modes
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert(
            "architectures".into(),
            self.architectures
                .iter()
                .map(|a| a.architecture.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        for line in self.agent.canonical().lines() {
            if let Some((k, v)) = line.split_once('=') {
                if !matches!(k, "step_size" | "hidden_frozen" | "total_steps" | "l1_beta") {
                    kv.insert(format!("agent.{k}"), v.to_string());
                }
            }
        }
        for a in &self.architectures {
            let name = a.architecture.name();
            kv.insert(
                format!("{name}.frozen_step_size"),
                format!("{:e}", a.frozen_step_size),
            );
            kv.insert(
                format!("{name}.learned_step_size"),
                format!("{:e}", a.learned_step_size),
            );
            if let Some(p) = &a.mask {
                if !p.exists() {
                    return Err(Error::MissingFile(p.clone()));
                }
                let digest = Sha256::digest(fs::read(p)?);
                kv.insert(format!("{name}.mask_sha256"), hex::encode(digest));
            }
        }
        Ok(kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect())
    }

    /// Short stable digest of [`canonical`](Self::canonical).
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(hex::encode(&digest[..8]))
    }
}
