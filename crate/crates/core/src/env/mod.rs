//! Grid games with binary multi-channel observations.
//!
//! Observations are `H×W×C` binary grids flattened channel-major:
//! `flat = c·H·W + row·W + col`.

pub mod breakout;
pub mod copy_chain;
pub mod space_invaders;
pub mod trajectory;

use std::fmt;
use std::str::FromStr;

pub use breakout::Breakout;
pub use copy_chain::CopyChain;
pub use space_invaders::SpaceInvaders;

use crate::error::{Error, Result};

/// `(H, W, C, num_actions)` of an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ObservationSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub num_actions: usize,
}

impl ObservationSpec {
    pub fn flat_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn flat_index(&self, channel: usize, row: usize, col: usize) -> usize {
        channel * self.height * self.width + row * self.width + col
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    spec: ObservationSpec,
    bits: Vec<u8>,
}

impl Observation {
    pub fn zeros(spec: ObservationSpec) -> Self {
        Self {
            spec,
            bits: vec![0; spec.flat_len()],
        }
    }

    pub fn spec(&self) -> ObservationSpec {
        self.spec
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> bool {
        self.bits[self.spec.flat_index(channel, row, col)] != 0
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize) {
        let i = self.spec.flat_index(channel, row, col);
        self.bits[i] = 1;
    }

    /// Flat binary vector.
    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    /// Number of active pixels in one channel.
    pub fn channel_count(&self, channel: usize) -> usize {
        let plane = self.spec.positions();
        self.bits[channel * plane..(channel + 1) * plane]
            .iter()
            .filter(|&&b| b != 0)
            .count()
    }

    pub fn channel_plane(&self, channel: usize) -> &[u8] {
        let plane = self.spec.positions();
        &self.bits[channel * plane..(channel + 1) * plane]
    }

    pub fn to_sparse(&self) -> SparseObs {
        SparseObs::from_dense(&self.bits)
    }

    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b != 0 { '1' } else { '0' })
            .collect()
    }
}

/// Sorted indices of the active entries of a binary observation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseObs(Vec<u32>);

impl SparseObs {
    pub fn from_dense(bits: &[u8]) -> Self {
        SparseObs(
            bits.iter()
                .enumerate()
                .filter(|(_, &b)| b != 0)
                .map(|(i, _)| i as u32)
                .collect(),
        )
    }

    /// Builds from indices; they are sorted and deduplicated.
    pub fn from_indices(mut idx: Vec<u32>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        SparseObs(idx)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_dense(&self, len: usize) -> Vec<u8> {
        let mut v = vec![0u8; len];
        for &i in &self.0 {
            v[i as usize] = 1;
        }
        v
    }

    /// Largest index + 1, or 0 when empty.
    pub fn extent(&self) -> usize {
        self.0.last().map_or(0, |&i| i as usize + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> ObservationSpec;

    /// Reseeds the environment's random stream. Deterministic games ignore it.
    fn seed(&mut self, seed: u64);

    /// Starts a new episode, continuing the current random stream.
    fn reset(&mut self) -> Observation;

    /// Advances one tick. Fails if the episode already terminated.
    fn step(&mut self, action: usize) -> Result<StepOutcome>;

    fn reset_seeded(&mut self, seed: u64) -> Observation {
        self.seed(seed);
        self.reset()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> ObservationSpec {
        (**self).spec()
    }
    fn seed(&mut self, seed: u64) {
        (**self).seed(seed)
    }
    fn reset(&mut self) -> Observation {
        (**self).reset()
    }
    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        (**self).step(action)
    }
}

pub(crate) fn check_action(action: usize, num_actions: usize) -> Result<()> {
    if action >= num_actions {
        return Err(Error::InvalidArgument(format!(
            "action {action} out of range for {num_actions} actions"
        )));
    }
    Ok(())
}

/// The two games used in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    Breakout,
    SpaceInvaders,
}

impl EnvKind {
    pub const ALL: [EnvKind; 2] = [EnvKind::Breakout, EnvKind::SpaceInvaders];

    pub fn make(self, seed: u64) -> Box<dyn Environment> {
        match self {
            EnvKind::Breakout => Box::new(Breakout::new(seed)),
            EnvKind::SpaceInvaders => Box::new(SpaceInvaders::new()),
        }
    }

    pub fn spec(self) -> ObservationSpec {
        match self {
            EnvKind::Breakout => breakout::SPEC,
            EnvKind::SpaceInvaders => space_invaders::SPEC,
        }
    }

    /// How many hidden units share each input grouping.
    pub fn grouping_repeat(self) -> usize {
        match self {
            EnvKind::Breakout => 4,
            EnvKind::SpaceInvaders => 3,
        }
    }

    /// Hidden-layer width: one grouping per input, each repeated.
    pub fn hidden_units(self) -> usize {
        self.spec().flat_len() * self.grouping_repeat()
    }

    /// Default L1 coefficient used to generate the L1-Reg mask.
    pub fn default_l1_beta(self) -> f64 {
        match self {
            EnvKind::Breakout => 2.5e-5,
            EnvKind::SpaceInvaders => 2e-5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Breakout => "breakout",
            EnvKind::SpaceInvaders => "space_invaders",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "breakout" => Ok(EnvKind::Breakout),
            "space_invaders" | "spaceinvaders" => Ok(EnvKind::SpaceInvaders),
            other => Err(Error::InvalidArgument(format!(
                "unknown environment '{other}'"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_match_layer_sizes() {
        let b = EnvKind::Breakout.spec();
        assert_eq!(
            (b.height, b.width, b.channels, b.num_actions),
            (10, 10, 4, 3)
        );
        assert_eq!(b.flat_len(), 400);
        assert_eq!(EnvKind::Breakout.hidden_units(), 1600);

        let s = EnvKind::SpaceInvaders.spec();
        assert_eq!(
            (s.height, s.width, s.channels, s.num_actions),
            (10, 10, 6, 4)
        );
        assert_eq!(s.flat_len(), 600);
        assert_eq!(EnvKind::SpaceInvaders.hidden_units(), 1800);
    }

    #[test]
    fn env_names_parse() {
        assert_eq!("breakout".parse::<EnvKind>().unwrap(), EnvKind::Breakout);
        assert_eq!(
            "space-invaders".parse::<EnvKind>().unwrap(),
            EnvKind::SpaceInvaders
        );
        assert!("pong".parse::<EnvKind>().is_err());
    }

    #[test]
    fn sparse_obs_round_trip() {
        let dense = vec![0, 1, 1, 0, 0, 1];
        let s = SparseObs::from_dense(&dense);
        assert_eq!(s.indices(), &[1, 2, 5]);
        assert_eq!(s.to_dense(6), dense);
        assert_eq!(s.extent(), 6);
    }
}
