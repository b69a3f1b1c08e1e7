use super::network::{Gradients, QNetwork};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_step_size(step_size: f64) -> Self {
        Self {
            step_size,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    config: AdamConfig,
    first_moment: Vec<T>,
    second_moment: Vec<T>,
    step_count: u64,
}

/// Per-step constants after bias correction.
struct StepConsts<T> {
    lr: T,
    inv_bc2: T,
    beta1: T,
    one_minus_beta1: T,
    beta2: T,
    one_minus_beta2: T,
    eps: T,
    tiny: T,
}

/// Moments smaller than this in magnitude are stored as zero. Decaying
/// moments would otherwise drift into subnormal range, where arithmetic is
/// orders of magnitude slower on common CPUs.
pub const MOMENT_FLOOR: f64 = 1e-30;

#[inline(always)]
fn flush<T: Real>(x: T, tiny: T) -> T {
    if x.abs() < tiny {
        T::zero()
    } else {
        x
    }
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[T] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[T] {
        &self.second_moment
    }

    fn advance(&mut self) -> StepConsts<T> {
        self.step_count += 1;
        let c = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        StepConsts {
            lr: T::from_f64(c.step_size / bc1),
            inv_bc2: T::from_f64(1.0 / bc2),
            beta1: T::from_f64(c.beta1),
            one_minus_beta1: T::from_f64(1.0 - c.beta1),
            beta2: T::from_f64(c.beta2),
            one_minus_beta2: T::from_f64(1.0 - c.beta2),
            eps: T::from_f64(c.epsilon),
            tiny: T::from_f64(MOMENT_FLOOR),
        }
    }

    #[inline(always)]
    fn update_one(k: &StepConsts<T>, p: &mut T, g: T, m: &mut T, v: &mut T) {
        *m = flush(k.beta1 * *m + k.one_minus_beta1 * g, k.tiny);
        *v = flush(k.beta2 * *v + k.one_minus_beta2 * g * g, k.tiny);
        *p -= k.lr * *m / ((*v * k.inv_bc2).sqrt() + k.eps);
    }

    /// Bias-corrected Adam update of every entry.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.first_moment.len() {
            return Err(Error::dim(
                "adam parameters",
                self.first_moment.len(),
                params.len(),
            ));
        }
        if grads.len() != params.len() {
            return Err(Error::dim("adam gradients", params.len(), grads.len()));
        }
        let k = self.advance();
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            Self::update_one(&k, p, g, m, v);
        }
        Ok(())
    }

    /// Updates only the listed entries. Equivalent to [`step`](Self::step)
    /// when every other gradient is always zero and those moments never
    /// left zero.
    pub fn step_indexed(&mut self, params: &mut [T], grads: &[T], indices: &[u32]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::dim(
                "adam parameters",
                self.first_moment.len(),
                params.len(),
            ));
        }
        let k = self.advance();
        for &i in indices {
            let i = i as usize;
            Self::update_one(
                &k,
                &mut params[i],
                grads[i],
                &mut self.first_moment[i],
                &mut self.second_moment[i],
            );
        }
        Ok(())
    }
}

/// Adam over all trainable tensors of a [`QNetwork`].
#[derive(Clone, Debug)]
pub struct NetworkOptimizer<T> {
    phi: AdamState<T>,
    hidden_bias: AdamState<T>,
    w_out: AdamState<T>,
    out_bias: AdamState<T>,
}

impl<T: Real> NetworkOptimizer<T> {
    pub fn new(net: &QNetwork<T>, config: AdamConfig) -> Self {
        Self {
            phi: AdamState::new(net.phi().len(), config),
            hidden_bias: AdamState::new(net.hidden(), config),
            w_out: AdamState::new(net.w_out().len(), config),
            out_bias: AdamState::new(net.actions(), config),
        }
    }

    pub fn phi_state(&self) -> &AdamState<T> {
        &self.phi
    }

    /// One Adam step on every non-frozen tensor. Sparse masks are updated
    /// only at their active entries, so masked-off weights stay exactly zero.
    pub fn step(&mut self, net: &mut QNetwork<T>, grads: &Gradients<T>) -> Result<()> {
        let frozen = net.hidden_frozen();
        let dense = net.is_dense();
        let parts = net.params_mut();
        if !frozen {
            if dense {
                self.phi.step(parts.phi, &grads.phi)?;
            } else {
                self.phi
                    .step_indexed(parts.phi, &grads.phi, parts.active_flat)?;
            }
            self.hidden_bias
                .step(parts.hidden_bias, &grads.hidden_bias)?;
        }
        self.w_out.step(parts.w_out, &grads.w_out)?;
        self.out_bias.step(parts.out_bias, &grads.out_bias)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::Mask;

    #[test]
    fn zero_grads_leave_params() {
        let mut s = AdamState::<f64>::new(3, AdamConfig::with_step_size(0.1));
        let mut p = vec![1.0, -2.0, 3.0];
        s.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_closed_form() {
        // m̂ = g, v̂ = g², so the first step is −α·g/(|g| + ε).
        let mut s = AdamState::<f64>::new(1, AdamConfig::with_step_size(0.1));
        let mut p = vec![0.0];
        s.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-12);
        assert!((p[0] + 0.1).abs() < 1e-6);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::<f64>::new(2, AdamConfig::default());
        assert!(s.step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(s.step(&mut [0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn indexed_matches_full_on_sparse_grads() {
        let cfg = AdamConfig::with_step_size(0.01);
        let mut full = AdamState::<f64>::new(6, cfg);
        let mut part = AdamState::<f64>::new(6, cfg);
        let mut a = vec![0.5, 0.0, -0.25, 0.0, 1.0, 0.0];
        let mut b = a.clone();
        let idx = [0u32, 2, 4];
        for t in 0..5 {
            let g: Vec<f64> = (0..6)
                .map(|i| {
                    if i % 2 == 0 {
                        (t as f64 + 1.0) * (i as f64 - 2.5)
                    } else {
                        0.0
                    }
                })
                .collect();
            full.step(&mut a, &g).unwrap();
            part.step_indexed(&mut b, &g, &idx).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn masked_entry_stays_zero_with_injected_grad() {
        let mut mask = Mask::ones(2, 3);
        mask.set(1, 2, false);
        let mut net = QNetwork::<f64>::init(2, 3, 2, mask.into(), 1, false).unwrap();
        let mut opt = NetworkOptimizer::new(&net, AdamConfig::with_step_size(0.1));
        let mut g = Gradients::zeros_like(&net);
        g.phi.fill(1.0);
        opt.step(&mut net, &g).unwrap();
        assert_eq!(net.phi_at(1, 2), 0.0);
        assert!(net.phi_at(0, 0) != 0.0);
    }

    #[test]
    fn frozen_hidden_untouched() {
        let mut net = QNetwork::<f64>::init(2, 3, 2, Mask::ones(2, 3).into(), 1, true).unwrap();
        let before = (
            net.phi().to_vec(),
            net.hidden_bias().to_vec(),
            net.w_out().to_vec(),
        );
        let mut opt = NetworkOptimizer::new(&net, AdamConfig::with_step_size(0.1));
        let mut g = Gradients::zeros_like(&net);
        g.phi.fill(1.0);
        g.hidden_bias.fill(1.0);
        g.w_out.fill(1.0);
        opt.step(&mut net, &g).unwrap();
        assert_eq!(net.phi(), &before.0[..]);
        assert_eq!(net.hidden_bias(), &before.1[..]);
        assert_ne!(net.w_out(), &before.2[..]);
    }
}
