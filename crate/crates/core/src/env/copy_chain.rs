use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, Environment, Observation, ObservationSpec, StepOutcome};
use crate::error::Result;
use crate::rng::{stream, stream_rng};

/// Synthetic single-channel shift register.
///
/// Input `i + 1` at time `t + 1` copies input `i` at time `t`; input 0 draws a
/// fresh fair coin from the seeded stream. Actions are ignored, the reward
/// is the incoming bit and the episode never ends. Used to check that the
/// nexting learner recovers a known dependence structure.
#[derive(Clone, Debug)]
pub struct CopyChain {
    spec: ObservationSpec,
    rng: ChaCha8Rng,
    state: Vec<u8>,
}

impl CopyChain {
    pub fn new(height: usize, width: usize, seed: u64) -> Self {
        let spec = ObservationSpec {
            height,
            width,
            channels: 1,
            num_actions: 2,
        };
        let mut env = Self {
            spec,
            rng: stream_rng(seed, stream::ENVIRONMENT),
            state: vec![0; height * width],
        };
        env.reset();
        env
    }

    fn observe(&self) -> Observation {
        let mut obs = Observation::zeros(self.spec);
        for (i, &b) in self.state.iter().enumerate() {
            if b != 0 {
                obs.set(0, i / self.spec.width, i % self.spec.width);
            }
        }
        obs
    }
}

impl Environment for CopyChain {
    fn spec(&self) -> ObservationSpec {
        self.spec
    }

    fn seed(&mut self, seed: u64) {
        self.rng = stream_rng(seed, stream::ENVIRONMENT);
    }

    fn reset(&mut self) -> Observation {
        for b in &mut self.state {
            *b = self.rng.gen_bool(0.5) as u8;
        }
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        check_action(action, self.spec.num_actions)?;
        self.state.rotate_right(1);
        self.state[0] = self.rng.gen_bool(0.5) as u8;
        Ok(StepOutcome {
            obs: self.observe(),
            reward: self.state[0] as f64,
            terminal: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts_by_one() {
        let mut env = CopyChain::new(2, 3, 5);
        let before = env.reset();
        let after = env.step(0).unwrap().obs;
        assert_eq!(&after.as_slice()[1..], &before.as_slice()[..5]);
    }
}
