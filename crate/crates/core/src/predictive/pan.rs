use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{select_neighborhoods, GvfBank, PanValueNet};
use crate::env::{Environment, ObservationSpec, SparseObs};
use crate::error::{Error, Result};
use crate::mask::NeighborhoodSet;
use crate::rng::{stream, stream_rng};

/// Settings of the nexting phase. Defaults are the values used for both games.
#[derive(Clone, Debug, PartialEq)]
pub struct PanConfig {
    pub steps: u64,
    pub k: usize,
    pub gvf_step_size: f64,
    pub gvf_discount: f64,
    pub n_pre: usize,
    pub update_period: u64,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for PanConfig {
    fn default() -> Self {
        Self {
            steps: 5_000_000,
            k: 9,
            gvf_step_size: 3e-6,
            gvf_discount: 0.99,
            n_pre: 16,
            update_period: 1000,
            alpha: 5e-6,
            gamma: 0.99,
            epsilon: 0.1,
        }
    }
}

impl PanConfig {
    fn validate(&self, spec: ObservationSpec) -> Result<()> {
        if self.k == 0 || self.k > spec.positions() {
            return Err(Error::InvalidArgument(format!(
                "k = {} must be in 1..={}",
                self.k,
                spec.positions()
            )));
        }
        if self.update_period == 0 || self.n_pre == 0 {
            return Err(Error::InvalidArgument(
                "update period and pre-activations per neighborhood must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(
                "epsilon or gamma out of range".into(),
            ));
        }
        Ok(())
    }
}

/// Step-by-step driver of the nexting phase.
pub struct PanRunner<'a, E: Environment + ?Sized> {
    env: &'a mut E,
    config: PanConfig,
    spec: ObservationSpec,
    bank: GvfBank,
    hoods: NeighborhoodSet,
    net: PanValueNet,
    action_rng: ChaCha8Rng,
    feature_rng: ChaCha8Rng,
    obs: SparseObs,
    features: Vec<f64>,
    steps_done: u64,
    last_changed: Vec<usize>,
}

impl<'a, E: Environment + ?Sized> PanRunner<'a, E> {
    pub fn new(env: &'a mut E, config: PanConfig, seed: u64) -> Result<Self> {
        let spec = env.spec();
        config.validate(spec)?;
        let bank = GvfBank::new(spec.flat_len(), config.gvf_step_size, config.gvf_discount);
        let hoods = select_neighborhoods(&bank, config.k, spec)?;
        let mut feature_rng = stream_rng(seed, stream::PAN_FEATURES);
        let net = PanValueNet::new(&hoods, config.n_pre, spec.num_actions, &mut feature_rng);
        let obs = env.reset_seeded(seed).to_sparse();
        let features = net.features(&obs);
        Ok(Self {
            env,
            config,
            spec,
            bank,
            hoods,
            net,
            action_rng: stream_rng(seed, stream::ACTIONS),
            feature_rng,
            obs,
            features,
            steps_done: 0,
            last_changed: Vec::new(),
        })
    }

    pub fn bank(&self) -> &GvfBank {
        &self.bank
    }

    pub fn neighborhoods(&self) -> &NeighborhoodSet {
        &self.hoods
    }

    pub fn value_net(&self) -> &PanValueNet {
        &self.net
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    /// Targets whose neighborhood changed at the most recent step.
    pub fn last_changed(&self) -> &[usize] {
        &self.last_changed
    }

    fn select_action(&mut self) -> usize {
        if self.action_rng.gen::<f64>() < self.config.epsilon {
            self.action_rng.gen_range(0..self.spec.num_actions)
        } else {
            self.net.greedy_action(&self.features)
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let action = self.select_action();
        let out = self.env.step(action)?;
        let next = out.obs.to_sparse();
        self.bank.update_sparse(&self.obs, &next);

        let next_features = self.net.features(&next);
        let bootstrap = (!out.terminal).then_some(next_features.as_slice());
        self.net.qv0_update(
            &self.features,
            action,
            out.reward,
            bootstrap,
            self.config.alpha,
            self.config.gamma,
        );

        if out.terminal {
            self.obs = self.env.reset().to_sparse();
            self.features = self.net.features(&self.obs);
        } else {
            self.obs = next;
            self.features = next_features;
        }
        self.steps_done += 1;

        self.last_changed.clear();
        if self.steps_done.is_multiple_of(self.config.update_period) {
            let fresh = select_neighborhoods(&self.bank, self.config.k, self.spec)?;
            for target in 0..fresh.num_targets() {
                if fresh.positions(target) != self.hoods.positions(target) {
                    self.last_changed.push(target);
                    self.hoods
                        .set_positions(target, fresh.positions(target).to_vec());
                    self.net.rebuild_group(
                        target,
                        self.hoods.expand(target),
                        &mut self.feature_rng,
                    );
                }
            }
            if !self.last_changed.is_empty() {
                self.features = self.net.features(&self.obs);
            }
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<NeighborhoodSet> {
        while self.steps_done < self.config.steps {
            self.step()?;
        }
        Ok(self.hoods)
    }
}

/// Runs the nexting phase for `config.steps` steps and returns the final
/// neighborhoods.
pub fn pan_run<E: Environment + ?Sized>(
    env: &mut E,
    config: &PanConfig,
    seed: u64,
) -> Result<NeighborhoodSet> {
    PanRunner::new(env, config.clone(), seed)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Breakout, CopyChain, EnvKind};

    fn quick(steps: u64) -> PanConfig {
        PanConfig {
            steps,
            ..PanConfig::default()
        }
    }

    #[test]
    fn zero_steps_gives_tie_break_neighborhoods() {
        let mut env = Breakout::new(0);
        let hoods = pan_run(&mut env, &quick(0), 3).unwrap();
        assert_eq!(
            hoods,
            NeighborhoodSet::first_positions(EnvKind::Breakout.spec(), 9).unwrap()
        );
    }

    #[test]
    fn long_period_never_updates() {
        let mut env = CopyChain::new(3, 3, 1);
        let cfg = PanConfig {
            steps: 500,
            update_period: 1000,
            gvf_step_size: 0.01,
            k: 4,
            ..PanConfig::default()
        };
        let hoods = pan_run(&mut env, &cfg, 3).unwrap();
        let spec = CopyChain::new(3, 3, 1).spec();
        assert_eq!(hoods, NeighborhoodSet::first_positions(spec, 4).unwrap());
    }

    #[test]
    fn changes_only_on_period_boundaries() {
        let mut env = CopyChain::new(3, 3, 2);
        let cfg = PanConfig {
            steps: 400,
            update_period: 50,
            gvf_step_size: 0.01,
            k: 3,
            ..PanConfig::default()
        };
        let mut runner = PanRunner::new(&mut env, cfg, 1).unwrap();
        let mut changed_at = Vec::new();
        for _ in 0..400 {
            runner.step().unwrap();
            if !runner.last_changed().is_empty() {
                changed_at.push(runner.steps_done());
            }
        }
        assert!(!changed_at.is_empty());
        assert!(changed_at.iter().all(|s| s % 50 == 0));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = PanConfig {
            steps: 3000,
            gvf_step_size: 1e-3,
            ..PanConfig::default()
        };
        let a = pan_run(&mut Breakout::new(4), &cfg, 4).unwrap();
        let b = pan_run(&mut Breakout::new(9), &cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let mut env = CopyChain::new(2, 2, 1);
        let cfg = PanConfig {
            k: 5,
            ..PanConfig::default()
        };
        assert!(PanRunner::new(&mut env, cfg, 0).is_err());
    }
}
