//! Phase-two learner: epsilon-greedy DQN over a masked Q-network.

mod replay;
mod trial;

pub use replay::ReplayBuffer;
pub use trial::{
    build_mask, random_policy_returns, run_trial, run_trial_with_mask, CurveSample, MaskSource,
    TrialResult,
};

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Environment, SparseObs};
use crate::error::{Error, Result};
use crate::nn::{
    add_l1_penalty, argmax, dqn_loss_into, frozen_loss_into, AdamConfig, ForwardCache, Gradients,
    HiddenSample, LossWorkspace, NetworkOptimizer, QNetwork, Transition,
};
use crate::real::Real;
use crate::rng::{stream, stream_rng};

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub step_size: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub sync_period: u64,
    pub learning_start: u64,
    pub hidden_frozen: bool,
    pub total_steps: u64,
    /// Steps between learning-curve samples.
    pub sample_period: u64,
    /// Number of trailing episodes averaged in each sample.
    pub window: usize,
    /// L1 coefficient on the hidden weights; zero for plain DQN.
    pub l1_beta: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon: 0.1,
            step_size: 1e-4,
            buffer_capacity: 100_000,
            batch_size: 32,
            sync_period: 1000,
            learning_start: 5000,
            hidden_frozen: false,
            total_steps: 5_000_000,
            sample_period: 10_000,
            window: 100,
            l1_beta: 0.0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad("step size must be a non-negative number");
        }
        if !(0.0..1.0).contains(&self.l1_beta) {
            return bad("l1 beta must lie in [0, 1)");
        }
        if self.buffer_capacity == 0
            || self.batch_size == 0
            || self.sync_period == 0
            || self.sample_period == 0
            || self.window == 0
        {
            return bad("buffer capacity, batch size, sync period, sample period and window must be positive");
        }
        Ok(())
    }

    /// Stable `key=value` lines in sorted key order.
    pub fn canonical(&self) -> String {
        let mut kv = [
            ("batch_size", self.batch_size.to_string()),
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("epsilon", format!("{:e}", self.epsilon)),
            ("gamma", format!("{:e}", self.gamma)),
            ("hidden_frozen", self.hidden_frozen.to_string()),
            ("l1_beta", format!("{:e}", self.l1_beta)),
            ("learning_start", self.learning_start.to_string()),
            ("sample_period", self.sample_period.to_string()),
            ("step_size", format!("{:e}", self.step_size)),
            ("sync_period", self.sync_period.to_string()),
            ("total_steps", self.total_steps.to_string()),
            ("window", self.window.to_string()),
        ];
        kv.sort();
        kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Epsilon-greedy choice. One uniform draw decides exploration; an exploring
/// step then draws the action uniformly. Greedy ties go to the lowest index.
pub fn select_action<T: Real, R: Rng + ?Sized>(
    net: &QNetwork<T>,
    obs: &SparseObs,
    epsilon: f64,
    rng: &mut R,
    cache: &mut ForwardCache<T>,
) -> usize {
    epsilon_greedy(epsilon, net.actions(), rng, || {
        net.forward_sparse(obs, cache);
        argmax(&cache.q)
    })
}

fn epsilon_greedy<R: Rng + ?Sized>(
    epsilon: f64,
    actions: usize,
    rng: &mut R,
    greedy: impl FnOnce() -> usize,
) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..actions)
    } else {
        greedy()
    }
}

/// Hidden activations of every stored observation, kept while the hidden
/// layer is frozen so each observation passes through it only once.
struct HiddenCache<T> {
    width: usize,
    /// Row `s` belongs to the observation of the transition in replay slot `s`.
    store: Vec<T>,
    current: Vec<T>,
    next: Vec<T>,
}

impl<T: Real> HiddenCache<T> {
    fn new(width: usize) -> Self {
        Self {
            width,
            store: Vec::new(),
            current: vec![T::zero(); width],
            next: vec![T::zero(); width],
        }
    }

    fn row(&self, slot: usize) -> &[T] {
        &self.store[slot * self.width..(slot + 1) * self.width]
    }

    fn put_current(&mut self, slot: usize) {
        let end = (slot + 1) * self.width;
        if self.store.len() < end {
            self.store.resize(end, T::zero());
        }
        self.store[slot * self.width..end].copy_from_slice(&self.current);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub reward: f64,
    pub terminal: bool,
    /// Training loss, when a gradient step was taken.
    pub loss: Option<f64>,
    /// Undiscounted return of the episode that just ended.
    pub episode_return: Option<f64>,
}

/// Online network, target network, replay and optimiser state of one trial.
pub struct DqnAgent<T: Real = f32> {
    config: AgentConfig,
    net: QNetwork<T>,
    target: QNetwork<T>,
    optimizer: NetworkOptimizer<T>,
    buffer: ReplayBuffer,
    grads: Gradients<T>,
    ws: LossWorkspace<T>,
    cache: ForwardCache<T>,
    action_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    obs: Option<SparseObs>,
    hidden_cache: Option<HiddenCache<T>>,
    slots: Vec<usize>,
    steps: u64,
    episodes: u64,
    episode_return: f64,
    recent: VecDeque<f64>,
}

impl<T: Real> DqnAgent<T> {
    /// Takes ownership of an initialised network. The target starts as an
    /// exact copy; the hidden-frozen flag of the network must agree with the
    /// config.
    pub fn new(net: QNetwork<T>, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if net.hidden_frozen() != config.hidden_frozen {
            return Err(Error::Config(
                "network hidden_frozen flag disagrees with the agent config".into(),
            ));
        }
        let optimizer = NetworkOptimizer::new(&net, AdamConfig::with_step_size(config.step_size));
        Ok(Self {
            target: net.clone(),
            grads: Gradients::zeros_like(&net),
            ws: LossWorkspace::new(&net),
            cache: ForwardCache::new(net.hidden(), net.actions()),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            action_rng: stream_rng(seed, stream::ACTIONS),
            replay_rng: stream_rng(seed, stream::REPLAY),
            obs: None,
            hidden_cache: config.hidden_frozen.then(|| HiddenCache::new(net.hidden())),
            slots: Vec::with_capacity(config.batch_size),
            steps: 0,
            episodes: 0,
            episode_return: 0.0,
            recent: VecDeque::with_capacity(config.window),
            optimizer,
            net,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn network(&self) -> &QNetwork<T> {
        &self.net
    }

    pub fn target_network(&self) -> &QNetwork<T> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Mean return over the trailing window of finished episodes, `NaN`
    /// before any episode has finished.
    pub fn windowed_return(&self) -> f64 {
        if self.recent.is_empty() {
            f64::NAN
        } else {
            self.recent.iter().sum::<f64>() / self.recent.len() as f64
        }
    }

    pub fn into_network(self) -> QNetwork<T> {
        self.net
    }

    /// Turns the frozen-layer activation cache on or off. It is on by default
    /// for frozen hidden layers and never changes results, only speed. Must be
    /// called before the first step.
    pub fn set_hidden_cache(&mut self, on: bool) -> Result<()> {
        if self.steps > 0 || self.obs.is_some() {
            return Err(Error::InvalidArgument(
                "the activation cache can only be toggled before training".into(),
            ));
        }
        if on && !self.net.hidden_frozen() {
            return Err(Error::InvalidArgument(
                "the activation cache needs a frozen hidden layer".into(),
            ));
        }
        self.hidden_cache = on.then(|| HiddenCache::new(self.net.hidden()));
        Ok(())
    }

    fn begin(&mut self, obs: SparseObs) {
        if let Some(c) = &mut self.hidden_cache {
            self.net.hidden_layer(&obs, &mut self.cache);
            c.current.copy_from_slice(&self.cache.hidden);
        }
        self.obs = Some(obs);
    }

    fn choose(&mut self, obs: &SparseObs) -> usize {
        let (net, cache) = (&self.net, &mut self.cache);
        match &self.hidden_cache {
            Some(c) => epsilon_greedy(
                self.config.epsilon,
                net.actions(),
                &mut self.action_rng,
                || {
                    net.output_layer(&c.current, &mut cache.q);
                    argmax(&cache.q)
                },
            ),
            None => select_action(net, obs, self.config.epsilon, &mut self.action_rng, cache),
        }
    }

    /// One interaction step followed, once learning has started, by one
    /// gradient step on a replayed minibatch.
    pub fn train_step<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<StepReport> {
        if self.obs.is_none() {
            let first = env.reset().to_sparse();
            self.begin(first);
        }
        let obs = self.obs.take().expect("observation set above");
        let action = self.choose(&obs);
        let out = env.step(action)?;
        let next_obs = out.obs.to_sparse();
        self.episode_return += out.reward;
        let slot = self.buffer.push(Transition {
            obs,
            action,
            reward: out.reward,
            next_obs: next_obs.clone(),
            terminal: out.terminal,
        });
        if let Some(c) = &mut self.hidden_cache {
            c.put_current(slot);
            if !out.terminal {
                self.net.hidden_layer(&next_obs, &mut self.cache);
                c.next.copy_from_slice(&self.cache.hidden);
            }
        }
        self.steps += 1;

        let loss = if self.steps >= self.config.learning_start {
            Some(self.learn()?)
        } else {
            None
        };
        if self.steps.is_multiple_of(self.config.sync_period) {
            self.target.copy_params_from(&self.net);
        }

        let episode_return = if out.terminal {
            let ret = std::mem::take(&mut self.episode_return);
            self.episodes += 1;
            if self.recent.len() == self.config.window {
                self.recent.pop_front();
            }
            self.recent.push_back(ret);
            let first = env.reset().to_sparse();
            self.begin(first);
            Some(ret)
        } else {
            if let Some(c) = &mut self.hidden_cache {
                std::mem::swap(&mut c.current, &mut c.next);
            }
            self.obs = Some(next_obs);
            None
        };
        Ok(StepReport {
            reward: out.reward,
            terminal: out.terminal,
            loss,
            episode_return,
        })
    }

    fn learn(&mut self) -> Result<f64> {
        let gamma = T::from_f64(self.config.gamma);
        let mut loss = match &self.hidden_cache {
            Some(c) => {
                self.buffer.sample_slots(
                    self.config.batch_size,
                    &mut self.replay_rng,
                    &mut self.slots,
                );
                let newest = self.buffer.newest_slot();
                let batch: Vec<HiddenSample<'_, T>> = self
                    .slots
                    .iter()
                    .map(|&s| {
                        let tr = self.buffer.get(s).expect("sampled slot is filled");
                        let next_hidden = if tr.terminal {
                            None
                        } else if Some(s) == newest {
                            Some(&c.next[..])
                        } else {
                            let succ = self
                                .buffer
                                .successor_slot(s)
                                .expect("older slot has a successor");
                            debug_assert_eq!(
                                self.buffer.get(succ).map(|t| &t.obs),
                                Some(&tr.next_obs)
                            );
                            Some(c.row(succ))
                        };
                        HiddenSample {
                            hidden: c.row(s),
                            action: tr.action,
                            reward: tr.reward,
                            next_hidden,
                        }
                    })
                    .collect();
                frozen_loss_into(
                    &self.net,
                    &self.target,
                    &batch,
                    gamma,
                    &mut self.grads,
                    &mut self.ws,
                )?
            }
            None => {
                let mut batch = Vec::with_capacity(self.config.batch_size);
                self.buffer
                    .sample(self.config.batch_size, &mut self.replay_rng, &mut batch);
                dqn_loss_into(
                    &self.net,
                    &self.target,
                    &batch,
                    gamma,
                    &mut self.grads,
                    &mut self.ws,
                )?
            }
        };
        if self.config.l1_beta > 0.0 {
            loss += add_l1_penalty(&self.net, T::from_f64(self.config.l1_beta), &mut self.grads);
        }
        self.optimizer.step(&mut self.net, &self.grads)?;
        Ok(loss.as_f64())
    }
}
