use rand::Rng;

use crate::env::SparseObs;
use crate::mask::NeighborhoodSet;
use crate::nn::argmax;

/// Random ReLU features of one neighborhood.
#[derive(Clone, Debug, PartialEq)]
struct FeatureGroup {
    inputs: Vec<u32>,
    /// `inputs.len() × n_pre`, input-major.
    weights: Vec<f64>,
}

impl FeatureGroup {
    fn random<R: Rng + ?Sized>(inputs: Vec<u32>, n_pre: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.len() as f64).sqrt();
        let weights = (0..inputs.len() * n_pre)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Self { inputs, weights }
    }
}

/// Linear V and Q heads over `n_pre` fixed random ReLU features per
/// neighborhood (pre-activation bias 0). Learned online with QV(0).
#[derive(Clone, Debug, PartialEq)]
pub struct PanValueNet {
    n_pre: usize,
    actions: usize,
    input_dim: usize,
    groups: Vec<FeatureGroup>,
    v: Vec<f64>,
    /// `features × actions`.
    q: Vec<f64>,
}

impl PanValueNet {
    pub fn new<R: Rng + ?Sized>(
        hoods: &NeighborhoodSet,
        n_pre: usize,
        actions: usize,
        rng: &mut R,
    ) -> Self {
        let groups: Vec<FeatureGroup> = (0..hoods.num_targets())
            .map(|g| FeatureGroup::random(hoods.expand(g), n_pre, rng))
            .collect();
        let features = groups.len() * n_pre;
        Self {
            n_pre,
            actions,
            input_dim: hoods.input_dim(),
            groups,
            v: vec![0.0; features],
            q: vec![0.0; features * actions],
        }
    }

    pub fn num_features(&self) -> usize {
        self.v.len()
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn v_weights(&self) -> &[f64] {
        &self.v
    }

    pub fn q_weights(&self) -> &[f64] {
        &self.q
    }

    pub fn group_inputs(&self, group: usize) -> &[u32] {
        &self.groups[group].inputs
    }

    /// Pre-activation weights of `group`, input-major.
    pub fn group_weights(&self, group: usize) -> &[f64] {
        &self.groups[group].weights
    }

    /// Replaces `group`'s random features and zeroes their V/Q weights.
    pub fn rebuild_group<R: Rng + ?Sized>(&mut self, group: usize, inputs: Vec<u32>, rng: &mut R) {
        self.groups[group] = FeatureGroup::random(inputs, self.n_pre, rng);
        let range = group * self.n_pre..(group + 1) * self.n_pre;
        self.v[range.clone()].fill(0.0);
        self.q[range.start * self.actions..range.end * self.actions].fill(0.0);
    }

    pub fn features(&self, obs: &SparseObs) -> Vec<f64> {
        let mut out = vec![0.0; self.num_features()];
        self.features_into(obs, &mut out);
        out
    }

    pub fn features_into(&self, obs: &SparseObs, out: &mut [f64]) {
        let mut on = vec![false; self.input_dim];
        for &i in obs.indices() {
            on[i as usize] = true;
        }
        let n = self.n_pre;
        for (g, group) in self.groups.iter().enumerate() {
            let pre = &mut out[g * n..(g + 1) * n];
            pre.fill(0.0);
            for (pos, &inp) in group.inputs.iter().enumerate() {
                if on[inp as usize] {
                    for (p, &w) in pre.iter_mut().zip(&group.weights[pos * n..(pos + 1) * n]) {
                        *p += w;
                    }
                }
            }
            for p in pre.iter_mut() {
                *p = p.max(0.0);
            }
        }
    }

    pub fn value(&self, features: &[f64]) -> f64 {
        features
            .iter()
            .zip(&self.v)
            .filter(|(&f, _)| f != 0.0)
            .map(|(&f, &w)| f * w)
            .sum()
    }

    pub fn action_values(&self, features: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.actions];
        for (j, &f) in features.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            for (qa, &w) in q
                .iter_mut()
                .zip(&self.q[j * self.actions..(j + 1) * self.actions])
            {
                *qa += f * w;
            }
        }
        q
    }

    pub fn greedy_action(&self, features: &[f64]) -> usize {
        argmax(&self.action_values(features))
    }

    /// QV(0) on precomputed features. `next` is `None` for a terminal step.
    ///
    /// `δ_V = r + γ·V(s') − V(s)`, `v += α·δ_V·φ(s)`;
    /// `q_a += α·(r + γ·V(s') − Q(s, a))·φ(s)`, with `V(s')` taken before the
    /// V update and dropped on terminal steps.
    pub fn qv0_update(
        &mut self,
        features: &[f64],
        action: usize,
        reward: f64,
        next: Option<&[f64]>,
        alpha: f64,
        gamma: f64,
    ) {
        let target = reward + next.map_or(0.0, |f| gamma * self.value(f));
        let delta_v = target - self.value(features);
        let delta_q = target - self.action_values(features)[action];
        let a_n = self.actions;
        for (j, &f) in features.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            self.v[j] += alpha * delta_v * f;
            self.q[j * a_n + action] += alpha * delta_q * f;
        }
    }

    /// QV(0) on a raw transition.
    pub fn qv0_update_transition(&mut self, tr: &crate::nn::Transition, alpha: f64, gamma: f64) {
        let f = self.features(&tr.obs);
        let next = (!tr.terminal).then(|| self.features(&tr.next_obs));
        self.qv0_update(&f, tr.action, tr.reward, next.as_deref(), alpha, gamma);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ObservationSpec;
    use crate::rng::stream_rng;

    fn small() -> PanValueNet {
        let spec = ObservationSpec {
            height: 3,
            width: 3,
            channels: 2,
            num_actions: 3,
        };
        let hoods = NeighborhoodSet::first_positions(spec, 4).unwrap();
        PanValueNet::new(&hoods, 16, 3, &mut stream_rng(1, 0))
    }

    #[test]
    fn shapes() {
        let net = small();
        assert_eq!(net.num_features(), 18 * 16);
        assert_eq!(net.group_inputs(3), &[0, 1, 2, 3, 9, 10, 11, 12]);
        assert_eq!(net.q_weights().len(), 18 * 16 * 3);
    }

    #[test]
    fn zero_reward_from_zero_weights_is_a_no_op() {
        let mut net = small();
        let before = net.clone();
        let f = net.features(&SparseObs::from_indices(vec![0, 4, 12]));
        net.qv0_update(&f, 1, 0.0, Some(&f), 0.1, 0.99);
        assert_eq!(net, before);
    }

    #[test]
    fn single_feature_step() {
        let mut net = small();
        let mut f = vec![0.0; net.num_features()];
        f[5] = 1.0;
        net.qv0_update(&f, 2, 1.0, Some(&vec![0.0; f.len()]), 0.25, 0.0);
        assert_eq!(net.v_weights()[5], 0.25);
        assert_eq!(net.q_weights()[5 * 3 + 2], 0.25);
        assert_eq!(net.v_weights().iter().filter(|&&w| w != 0.0).count(), 1);
        assert_eq!(net.q_weights().iter().filter(|&&w| w != 0.0).count(), 1);
    }

    #[test]
    fn features_ignore_inputs_outside_neighborhood() {
        let net = small();
        // group 0 covers positions 0..4 of both channels; input 8 is not in it
        let a = net.features(&SparseObs::from_indices(vec![0, 1]));
        let b = net.features(&SparseObs::from_indices(vec![0, 1, 8]));
        assert_eq!(a[..16], b[..16]);
        assert!(a.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn rebuild_zeroes_group_weights() {
        let mut net = small();
        let f = net.features(&SparseObs::from_indices(vec![0, 1, 4, 9]));
        net.qv0_update(&f, 0, 1.0, None, 0.5, 0.9);
        assert!(net.v_weights()[..16].iter().any(|&w| w != 0.0));
        let kept = net.v_weights()[16..32].to_vec();
        net.rebuild_group(0, vec![2, 5, 8, 11], &mut stream_rng(2, 0));
        assert!(net.v_weights()[..16].iter().all(|&w| w == 0.0));
        assert!(net.q_weights()[..48].iter().all(|&w| w == 0.0));
        assert_eq!(&net.v_weights()[16..32], &kept[..]);
        assert_eq!(net.group_inputs(0), &[2, 5, 8, 11]);
    }
}
