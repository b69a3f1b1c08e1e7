use crate::env::{ObservationSpec, SparseObs};
use crate::error::{Error, Result};
use crate::mask::NeighborhoodSet;

/// One linear TD(0) predictor per input: row `i` of the weight matrix
/// predicts `Σ_k γ̄^k · x_{t+1+k}[i]` from the current observation.
#[derive(Clone, Debug, PartialEq)]
pub struct GvfBank {
    inputs: usize,
    weights: Vec<f64>,
    step_size: f64,
    discount: f64,
}

impl GvfBank {
    pub fn new(inputs: usize, step_size: f64, discount: f64) -> Self {
        Self {
            inputs,
            weights: vec![0.0; inputs * inputs],
            step_size,
            discount,
        }
    }

    pub fn from_weights(
        inputs: usize,
        weights: Vec<f64>,
        step_size: f64,
        discount: f64,
    ) -> Result<Self> {
        if weights.len() != inputs * inputs {
            return Err(Error::dim("gvf weights", inputs * inputs, weights.len()));
        }
        Ok(Self {
            inputs,
            weights,
            step_size,
            discount,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, target: usize) -> &[f64] {
        &self.weights[target * self.inputs..(target + 1) * self.inputs]
    }

    pub fn weight(&self, target: usize, input: usize) -> f64 {
        self.weights[target * self.inputs + input]
    }

    pub fn predict(&self, target: usize, obs: &SparseObs) -> f64 {
        let row = self.row(target);
        obs.indices().iter().map(|&j| row[j as usize]).sum()
    }

    /// TD(0) update of every predictor on binary observations given as flat
    /// vectors.
    pub fn update(&mut self, obs_t: &[u8], obs_next: &[u8]) -> Result<()> {
        if obs_t.len() != self.inputs {
            return Err(Error::dim("gvf observation", self.inputs, obs_t.len()));
        }
        if obs_next.len() != self.inputs {
            return Err(Error::dim(
                "gvf next observation",
                self.inputs,
                obs_next.len(),
            ));
        }
        self.update_sparse(
            &SparseObs::from_dense(obs_t),
            &SparseObs::from_dense(obs_next),
        );
        Ok(())
    }

    /// For every target `i`: `δ = x'[i] + γ̄·U_i·x' − U_i·x`, `U_i += ᾱ·δ·x`.
    pub fn update_sparse(&mut self, obs_t: &SparseObs, obs_next: &SparseObs) {
        if obs_t.is_empty() {
            return;
        }
        let d = self.inputs;
        let mut next_bits = vec![false; d];
        for &j in obs_next.indices() {
            next_bits[j as usize] = true;
        }
        for (i, &cumulant_on) in next_bits.iter().enumerate() {
            let row = &mut self.weights[i * d..(i + 1) * d];
            let now: f64 = obs_t.indices().iter().map(|&j| row[j as usize]).sum();
            let next: f64 = obs_next.indices().iter().map(|&j| row[j as usize]).sum();
            let cumulant = if cumulant_on { 1.0 } else { 0.0 };
            let delta = cumulant + self.discount * next - now;
            let step = self.step_size * delta;
            for &j in obs_t.indices() {
                row[j as usize] += step;
            }
        }
    }
}

/// Resolution of the relative score grid used for ranking.
const SCORE_GRID: f64 = (1u64 << 40) as f64;

/// Channel-summed weight magnitude of every spatial position for `target`,
/// as a fraction of the largest one and rounded to a fixed grid. Rescaling
/// the bank perturbs each sum by a few ulps; the rounding absorbs that, so
/// exact ties stay tied and the ranking depends only on the weights' ratios.
fn position_scores(bank: &GvfBank, target: usize, spec: ObservationSpec) -> Vec<u64> {
    let plane = spec.positions();
    let row = bank.row(target);
    let sums: Vec<f64> = (0..plane)
        .map(|p| (0..spec.channels).map(|c| row[c * plane + p].abs()).sum())
        .collect();
    let top = sums.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 || !top.is_finite() {
        return vec![0; plane];
    }
    sums.iter()
        .map(|s| (s / top * SCORE_GRID).round() as u64)
        .collect()
}

/// For each target, the `k` positions with the largest relevance score;
/// ties go to the lower position index.
pub fn select_neighborhoods(
    bank: &GvfBank,
    k: usize,
    spec: ObservationSpec,
) -> Result<NeighborhoodSet> {
    let plane = spec.positions();
    if k == 0 || k > plane {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={plane}"
        )));
    }
    if bank.inputs() != spec.flat_len() {
        return Err(Error::dim(
            "gvf bank inputs",
            spec.flat_len(),
            bank.inputs(),
        ));
    }
    let targets = (0..bank.inputs())
        .map(|i| {
            let scores = position_scores(bank, i, spec);
            let mut order: Vec<u32> = (0..plane as u32).collect();
            let cmp =
                |a: &u32, b: &u32| scores[*b as usize].cmp(&scores[*a as usize]).then(a.cmp(b));
            if k < plane {
                order.select_nth_unstable_by(k - 1, cmp);
            }
            let mut top = order[..k].to_vec();
            top.sort_unstable();
            top
        })
        .collect();
    NeighborhoodSet::new(spec.height, spec.width, spec.channels, k, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(h: usize, w: usize, c: usize) -> ObservationSpec {
        ObservationSpec {
            height: h,
            width: w,
            channels: c,
            num_actions: 2,
        }
    }

    #[test]
    fn zero_observation_leaves_weights() {
        let mut bank = GvfBank::new(4, 0.1, 0.9);
        bank.update(&[0, 0, 0, 0], &[1, 1, 0, 1]).unwrap();
        assert!(bank.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn single_step_from_zero() {
        // obs ≡ e_j: one update moves U_{i,j} by ᾱ·e_j[i].
        let mut bank = GvfBank::new(3, 0.01, 0.99);
        let e1 = [0, 1, 0];
        bank.update(&e1, &e1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if j == 1 && i == 1 { 0.01 } else { 0.0 };
                assert_eq!(bank.weight(i, j), expect);
            }
        }
        assert!(bank.update(&[0, 1], &e1).is_err());
    }

    #[test]
    fn constant_input_converges_to_fixed_point() {
        // U_i·e_j → e_j[i] / (1 − γ̄)
        let mut bank = GvfBank::new(2, 0.05, 0.5);
        let e0 = [1, 0];
        for _ in 0..2000 {
            bank.update(&e0, &e0).unwrap();
        }
        assert!((bank.weight(0, 0) - 2.0).abs() < 1e-9);
        assert!(bank.weight(1, 0).abs() < 1e-12);
    }

    #[test]
    fn zero_bank_selects_first_positions() {
        let s = spec(4, 4, 2);
        let bank = GvfBank::new(32, 0.1, 0.9);
        let hoods = select_neighborhoods(&bank, 9, s).unwrap();
        for i in 0..32 {
            assert_eq!(hoods.positions(i), &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        }
    }

    #[test]
    fn dominant_entry_is_selected() {
        let s = spec(4, 4, 2);
        let mut w = vec![0.0; 32 * 32];
        // target 5 depends strongly on channel 1 at position 13
        w[5 * 32 + 16 + 13] = 10.0;
        let bank = GvfBank::from_weights(32, w, 0.1, 0.9).unwrap();
        let hoods = select_neighborhoods(&bank, 9, s).unwrap();
        assert!(hoods.positions(5).contains(&13));
        assert!(!hoods.positions(4).contains(&13));
    }

    #[test]
    fn rejects_bad_k() {
        let s = spec(2, 2, 1);
        let bank = GvfBank::new(4, 0.1, 0.9);
        assert!(select_neighborhoods(&bank, 5, s).is_err());
        assert!(select_neighborhoods(&bank, 0, s).is_err());
        assert_eq!(
            select_neighborhoods(&bank, 4, s).unwrap().positions(0),
            &[0, 1, 2, 3]
        );
    }
}
