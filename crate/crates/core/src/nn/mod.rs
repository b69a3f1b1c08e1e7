//! Single-hidden-layer Q-network with a fixed binary mask on the hidden
//! weights, its DQN and L1-regularised losses, and Adam.

mod adam;
mod loss;
mod network;

pub use adam::{AdamConfig, AdamState, NetworkOptimizer};
pub use loss::{
    add_l1_penalty, dqn_loss_and_grads, dqn_loss_into, frozen_loss_into, l1_loss_and_grads,
    HiddenSample, LossWorkspace,
};
pub use network::{ForwardCache, Gradients, QNetwork};

use crate::env::SparseObs;

/// One step of experience. Observations are binary and stored by their active
/// indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: SparseObs,
    pub action: usize,
    pub reward: f64,
    pub next_obs: SparseObs,
    pub terminal: bool,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
