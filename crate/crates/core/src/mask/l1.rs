use std::sync::Arc;

use super::Mask;
use crate::agent::{AgentConfig, DqnAgent};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::nn::QNetwork;
use crate::real::Real;

/// Keeps the entries of a row-major `rows×cols` weight matrix whose magnitude
/// is at least the mean magnitude. Returns the mask (repeat 1), the mean
/// magnitude and the fraction of entries dropped.
pub fn l1_threshold<T: Real>(phi: &[T], rows: usize, cols: usize) -> Result<(Mask, f64, f64)> {
    if rows * cols != phi.len() || phi.is_empty() {
        return Err(Error::dim("weight count", rows * cols, phi.len()));
    }
    let mean = phi.iter().map(|p| p.as_f64().abs()).sum::<f64>() / phi.len() as f64;
    let mut mask = Mask::zeros(rows, cols, 1);
    let mut dropped = 0usize;
    for (idx, p) in phi.iter().enumerate() {
        if p.as_f64().abs() >= mean {
            mask.set(idx / cols, idx % cols, true);
        } else {
            dropped += 1;
        }
    }
    Ok((mask, mean, dropped as f64 / phi.len() as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct L1Config {
    pub beta: f64,
    /// DQN settings for the dense training run. `total_steps` sets the run
    /// length; the hidden layer is always learned.
    pub agent: AgentConfig,
    pub seed: u64,
}

impl L1Config {
    pub fn new(kind: EnvKind, steps: u64, seed: u64) -> Self {
        Self {
            beta: kind.default_l1_beta(),
            agent: AgentConfig {
                total_steps: steps,
                ..AgentConfig::default()
            },
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct L1Outcome {
    pub mask: Mask,
    /// Fraction of hidden weights below the mean magnitude.
    pub sparsity: f64,
    pub mean_abs_phi: f64,
}

/// Trains a dense Q-network with an L1 penalty on its hidden weights and
/// prunes every weight smaller in magnitude than the average.
pub fn gen_l1(kind: EnvKind, config: &L1Config) -> Result<L1Outcome> {
    let spec = kind.spec();
    let (d, n) = (spec.flat_len(), kind.hidden_units());
    let agent_cfg = AgentConfig {
        l1_beta: config.beta,
        hidden_frozen: false,
        ..config.agent.clone()
    };
    let net = QNetwork::<f32>::init(
        d,
        n,
        spec.num_actions,
        Arc::new(Mask::ones(d, n)),
        config.seed,
        false,
    )?;
    let mut env = kind.make(config.seed);
    let mut agent = DqnAgent::new(net, agent_cfg, config.seed)?;
    for _ in 0..config.agent.total_steps {
        agent.train_step(&mut env)?;
    }
    let net = agent.into_network();
    let (mask, mean_abs_phi, sparsity) = l1_threshold(net.phi(), d, n)?;
    Ok(L1Outcome {
        mask,
        sparsity,
        mean_abs_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_weights_keep_everything() {
        let (mask, mean, sparsity) = l1_threshold(&[0.3f64; 6], 2, 3).unwrap();
        assert!(mask.is_all_ones());
        assert_eq!(sparsity, 0.0);
        assert!((mean - 0.3).abs() < 1e-15);
    }

    #[test]
    fn half_small_half_large() {
        let phi = [1.0f64, -3.0, 3.0, -1.0];
        let (mask, mean, sparsity) = l1_threshold(&phi, 2, 2).unwrap();
        assert_eq!(mean, 2.0);
        assert_eq!(sparsity, 0.5);
        assert_eq!(mask.bits(), &[0, 1, 1, 0]);
        assert_eq!(mask.repeat(), 1);
    }

    #[test]
    fn shape_mismatch() {
        assert!(l1_threshold(&[1.0f64; 5], 2, 3).is_err());
    }

    #[test]
    fn short_training_run() {
        let mut cfg = L1Config::new(EnvKind::Breakout, 60, 2);
        cfg.agent.learning_start = 10;
        cfg.agent.batch_size = 4;
        let out = gen_l1(EnvKind::Breakout, &cfg).unwrap();
        assert_eq!((out.mask.rows(), out.mask.cols()), (400, 1600));
        assert!(out.sparsity > 0.0 && out.sparsity < 1.0);
        assert!((out.mask.sparsity() - out.sparsity).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn keeps_exactly_entries_at_or_above_mean(
            phi in proptest::collection::vec(-5.0f64..5.0, 12)
        ) {
            let (mask, mean, _) = l1_threshold(&phi, 3, 4).unwrap();
            for (i, p) in phi.iter().enumerate() {
                prop_assert_eq!(mask.get(i / 4, i % 4), p.abs() >= mean);
            }
        }
    }
}
