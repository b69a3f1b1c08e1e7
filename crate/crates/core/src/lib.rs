//! Fixed sparse hidden-layer topologies for deep Q-learning.
//!
//! The crate is organised around the two phases of an experiment:
//!
//! * mask generation ([`mask`], [`predictive`]) builds a binary connectivity
//!   matrix for the hidden layer, either by hand (spatial receptive fields),
//!   at random, from online nexting predictions, or by thresholding an
//!   L1-regularised dense network;
//! * DQN training ([`agent`], [`nn`]) imposes that mask on a single-hidden-layer
//!   Q-network and learns on one of the grid games in [`env`].
//!
//! [`harness`] ties both together into multi-trial experiments, sweeps and
//! reports.

pub mod agent;
pub mod env;
pub mod error;
pub mod fsutil;
pub mod harness;
pub mod mask;
pub mod nn;
pub mod predictive;
pub mod real;
pub mod rng;

pub use agent::{AgentConfig, DqnAgent, MaskSource, ReplayBuffer, TrialResult};
pub use env::{EnvKind, Environment, Observation, SparseObs};
pub use error::{Error, Result};
pub use mask::{Mask, NeighborhoodSet};
pub use nn::{AdamConfig, AdamState, Gradients, NetworkOptimizer, QNetwork, Transition};
pub use real::Real;
