use std::sync::Arc;

use rand::Rng;

use crate::env::SparseObs;
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::real::Real;
use crate::rng::{stream, stream_rng};

/// Per-row column lists of a mask, in compressed-row form.
#[derive(Debug)]
struct Support {
    dense: bool,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    /// `row·n + col` of every active entry, in row order.
    active_flat: Vec<u32>,
}

impl Support {
    fn new(mask: &Mask) -> Self {
        let n = mask.cols();
        let mut row_ptr = Vec::with_capacity(mask.rows() + 1);
        let mut cols = Vec::new();
        let mut active_flat = Vec::new();
        row_ptr.push(0);
        for i in 0..mask.rows() {
            for j in mask.row_support(i) {
                cols.push(j);
                active_flat.push((i * n) as u32 + j);
            }
            row_ptr.push(cols.len() as u32);
        }
        Self {
            dense: mask.is_all_ones(),
            row_ptr,
            cols,
            active_flat,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize]
    }
}

/// Q-network `q(o) = W_outᵀ ReLU((M ⊙ Φ)ᵀ o + b_h) + b_out`.
///
/// `phi` is stored input-major (`d×n`), `w_out` action-major (`|A|×n`, row
/// `a` is the output weight vector `w_a`).
/// Entries of `phi` where the mask is 0 are kept at exactly zero.
#[derive(Clone, Debug)]
pub struct QNetwork<T: Real> {
    inputs: usize,
    hidden: usize,
    actions: usize,
    phi: Vec<T>,
    mask: Arc<Mask>,
    support: Arc<Support>,
    hidden_bias: Vec<T>,
    w_out: Vec<T>,
    out_bias: Vec<T>,
    hidden_frozen: bool,
}

/// `dst += src`, written in fixed-width chunks so the compiler vectorises it.
#[inline]
fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    debug_assert_eq!(dst.len(), src.len());
    let mut d = dst.chunks_exact_mut(8);
    let mut s = src.chunks_exact(8);
    for (dc, sc) in (&mut d).zip(&mut s) {
        for k in 0..8 {
            dc[k] += sc[k];
        }
    }
    for (a, &b) in d.into_remainder().iter_mut().zip(s.remainder()) {
        *a += b;
    }
}

/// Dot product with eight independent partial sums, combined in a fixed
/// order so results do not depend on how the loop is compiled.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ac = a.chunks_exact(8);
    let bc = b.chunks_exact(8);
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ar.iter().zip(br) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Mutable views of the trainable tensors plus the mask's active entries.
pub(crate) struct ParamsMut<'a, T> {
    pub phi: &'a mut [T],
    pub hidden_bias: &'a mut [T],
    pub w_out: &'a mut [T],
    pub out_bias: &'a mut [T],
    pub active_flat: &'a [u32],
}

/// Activations of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub pre: Vec<T>,
    pub hidden: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    pub fn new(hidden: usize, actions: usize) -> Self {
        Self {
            pre: vec![T::zero(); hidden],
            hidden: vec![T::zero(); hidden],
            q: vec![T::zero(); actions],
        }
    }
}

/// Parameter-shaped gradient buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub phi: Vec<T>,
    pub hidden_bias: Vec<T>,
    pub w_out: Vec<T>,
    pub out_bias: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &QNetwork<T>) -> Self {
        Self {
            phi: vec![T::zero(); net.phi.len()],
            hidden_bias: vec![T::zero(); net.hidden],
            w_out: vec![T::zero(); net.w_out.len()],
            out_bias: vec![T::zero(); net.actions],
        }
    }

    pub fn clear(&mut self) {
        for v in [
            &mut self.phi,
            &mut self.hidden_bias,
            &mut self.w_out,
            &mut self.out_bias,
        ] {
            v.fill(T::zero());
        }
    }

    /// All components in the order phi, hidden bias, output weights, output bias.
    pub fn flatten(&self) -> Vec<T> {
        let mut v = self.phi.clone();
        v.extend_from_slice(&self.hidden_bias);
        v.extend_from_slice(&self.w_out);
        v.extend_from_slice(&self.out_bias);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|g| g.is_zero())
    }
}

fn check_shape(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::dim(what, expected, actual));
    }
    Ok(())
}

impl<T: Real> QNetwork<T> {
    /// Uniform fan-in initialisation: `phi ~ U[−1/√d, 1/√d]`,
    /// `w_out ~ U[−1/√n, 1/√n]`, biases zero. Every `phi` entry is drawn before
    /// masking, so networks with the same seed share weights across masks.
    pub fn init(
        inputs: usize,
        hidden: usize,
        actions: usize,
        mask: Arc<Mask>,
        seed: u64,
        hidden_frozen: bool,
    ) -> Result<Self> {
        if inputs == 0 || hidden == 0 || actions == 0 {
            return Err(Error::InvalidArgument(
                "network dimensions must be positive".into(),
            ));
        }
        check_shape("mask rows", inputs, mask.rows())?;
        check_shape("mask columns", hidden, mask.cols())?;
        let mut rng = stream_rng(seed, stream::NETWORK_INIT);
        let b_in = 1.0 / (inputs as f64).sqrt();
        let b_hid = 1.0 / (hidden as f64).sqrt();
        let phi = (0..inputs * hidden)
            .map(|_| T::from_f64(rng.gen_range(-b_in..=b_in)))
            .collect();
        let w_out = (0..hidden * actions)
            .map(|_| T::from_f64(rng.gen_range(-b_hid..=b_hid)))
            .collect();
        let support = Arc::new(Support::new(&mask));
        let mut net = Self {
            inputs,
            hidden,
            actions,
            phi,
            mask,
            support,
            hidden_bias: vec![T::zero(); hidden],
            w_out,
            out_bias: vec![T::zero(); actions],
            hidden_frozen,
        };
        net.apply_mask();
        Ok(net)
    }

    /// Builds a network from explicit parameters; `phi` is masked on entry.
    pub fn from_parts(
        phi: Vec<T>,
        mask: Mask,
        hidden_bias: Vec<T>,
        w_out: Vec<T>,
        out_bias: Vec<T>,
        hidden_frozen: bool,
    ) -> Result<Self> {
        let (inputs, hidden) = (mask.rows(), mask.cols());
        let actions = out_bias.len();
        if inputs == 0 || hidden == 0 || actions == 0 {
            return Err(Error::InvalidArgument(
                "network dimensions must be positive".into(),
            ));
        }
        check_shape("phi length", inputs * hidden, phi.len())?;
        check_shape("hidden bias length", hidden, hidden_bias.len())?;
        check_shape("output weight length", hidden * actions, w_out.len())?;
        let support = Arc::new(Support::new(&mask));
        let mut net = Self {
            inputs,
            hidden,
            actions,
            phi,
            mask: Arc::new(mask),
            support,
            hidden_bias,
            w_out,
            out_bias,
            hidden_frozen,
        };
        net.apply_mask();
        Ok(net)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn hidden_frozen(&self) -> bool {
        self.hidden_frozen
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn hidden_bias(&self) -> &[T] {
        &self.hidden_bias
    }

    pub fn w_out(&self) -> &[T] {
        &self.w_out
    }

    pub fn out_bias(&self) -> &[T] {
        &self.out_bias
    }

    pub fn phi_at(&self, input: usize, unit: usize) -> T {
        self.phi[input * self.hidden + unit]
    }

    pub(crate) fn is_dense(&self) -> bool {
        self.support.dense
    }

    pub(crate) fn params_mut(&mut self) -> ParamsMut<'_, T> {
        ParamsMut {
            phi: &mut self.phi,
            hidden_bias: &mut self.hidden_bias,
            w_out: &mut self.w_out,
            out_bias: &mut self.out_bias,
            active_flat: &self.support.active_flat,
        }
    }

    /// Zeroes the parts of `grads` that a backward pass on this network can
    /// write to. Frozen hidden layers leave their gradients untouched, and
    /// sparse masks only ever write to active entries.
    pub(crate) fn clear_grads(&self, grads: &mut Gradients<T>) {
        grads.w_out.fill(T::zero());
        grads.out_bias.fill(T::zero());
        if self.hidden_frozen {
            return;
        }
        grads.hidden_bias.fill(T::zero());
        if self.support.dense {
            grads.phi.fill(T::zero());
        } else {
            for &k in &self.support.active_flat {
                grads.phi[k as usize] = T::zero();
            }
        }
    }

    /// Zeroes every hidden weight the mask switches off.
    pub fn apply_mask(&mut self) {
        if self.support.dense {
            return;
        }
        for (p, &b) in self.phi.iter_mut().zip(self.mask.bits()) {
            if b == 0 {
                *p = T::zero();
            }
        }
    }

    /// Flattened parameters: phi, hidden bias, output weights, output bias.
    pub fn parameters(&self) -> Vec<T> {
        let mut v = self.phi.clone();
        v.extend_from_slice(&self.hidden_bias);
        v.extend_from_slice(&self.w_out);
        v.extend_from_slice(&self.out_bias);
        v
    }

    /// Inverse of [`parameters`](Self::parameters); re-applies the mask.
    pub fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        let sizes = [
            self.phi.len(),
            self.hidden_bias.len(),
            self.w_out.len(),
            self.out_bias.len(),
        ];
        check_shape("parameter vector", sizes.iter().sum(), params.len())?;
        let mut rest = params;
        for (dst, n) in [
            &mut self.phi,
            &mut self.hidden_bias,
            &mut self.w_out,
            &mut self.out_bias,
        ]
        .into_iter()
        .zip(sizes)
        {
            let (head, tail) = rest.split_at(n);
            dst.copy_from_slice(head);
            rest = tail;
        }
        self.apply_mask();
        Ok(())
    }

    /// Copies all parameters from a network of identical shape and mask.
    pub fn copy_params_from(&mut self, other: &QNetwork<T>) {
        debug_assert!(Arc::ptr_eq(&self.mask, &other.mask) || *self.mask == *other.mask);
        self.phi.copy_from_slice(&other.phi);
        self.hidden_bias.copy_from_slice(&other.hidden_bias);
        self.w_out.copy_from_slice(&other.w_out);
        self.out_bias.copy_from_slice(&other.out_bias);
    }

    /// Action values for a binary observation given as a flat vector.
    pub fn forward(&self, obs: &[u8]) -> Result<Vec<T>> {
        check_shape("observation length", self.inputs, obs.len())?;
        if obs.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("observation must be binary".into()));
        }
        let mut cache = ForwardCache::new(self.hidden, self.actions);
        self.forward_sparse(&SparseObs::from_dense(obs), &mut cache);
        Ok(cache.q)
    }

    /// Forward pass over the active inputs, filling `cache`.
    ///
    /// Panics if an index is out of range; callers validate observations
    /// once at the environment boundary.
    pub fn forward_sparse(&self, obs: &SparseObs, cache: &mut ForwardCache<T>) {
        self.hidden_layer(obs, cache);
        self.output_layer(&cache.hidden, &mut cache.q);
    }

    /// Fills `cache.pre` and `cache.hidden` only; `cache.q` is left as is.
    pub fn hidden_layer(&self, obs: &SparseObs, cache: &mut ForwardCache<T>) {
        let n = self.hidden;
        let pre = &mut cache.pre;
        pre.copy_from_slice(&self.hidden_bias);
        for &i in obs.indices() {
            let i = i as usize;
            let row = &self.phi[i * n..(i + 1) * n];
            if self.support.dense {
                add_into(pre, row);
            } else {
                for &j in self.support.row(i) {
                    pre[j as usize] += row[j as usize];
                }
            }
        }
        for (h, &p) in cache.hidden.iter_mut().zip(pre.iter()) {
            *h = p.max(T::zero());
        }
    }

    /// Action values from hidden activations.
    pub fn output_layer(&self, hidden: &[T], q: &mut [T]) {
        let n = self.hidden;
        for (a, qa) in q.iter_mut().enumerate() {
            *qa = self.out_bias[a] + dot(hidden, &self.w_out[a * n..(a + 1) * n]);
        }
    }

    /// Output-layer part of the backward pass.
    pub(crate) fn backward_output(
        &self,
        action: usize,
        dq: T,
        hidden: &[T],
        grads: &mut Gradients<T>,
    ) {
        let n = self.hidden;
        grads.out_bias[action] += dq;
        for (g, &h) in grads.w_out[action * n..(action + 1) * n]
            .iter_mut()
            .zip(hidden)
        {
            *g += dq * h;
        }
    }

    /// Accumulates `dq · ∂q[action]/∂θ` for one sample whose forward pass is
    /// in `cache`. Hidden-layer terms are skipped when the layer is frozen.
    pub(crate) fn backward_sample(
        &self,
        obs: &SparseObs,
        action: usize,
        dq: T,
        cache: &ForwardCache<T>,
        dh: &mut [T],
        grads: &mut Gradients<T>,
    ) {
        let n = self.hidden;
        self.backward_output(action, dq, &cache.hidden, grads);
        if self.hidden_frozen {
            return;
        }
        let w_row = &self.w_out[action * n..(action + 1) * n];
        for ((d, &p), &w) in dh.iter_mut().zip(&cache.pre).zip(w_row) {
            *d = if p > T::zero() { dq * w } else { T::zero() };
        }
        for (g, &d) in grads.hidden_bias.iter_mut().zip(dh.iter()) {
            *g += d;
        }
        for &i in obs.indices() {
            let i = i as usize;
            let row = &mut grads.phi[i * n..(i + 1) * n];
            if self.support.dense {
                add_into(row, dh);
            } else {
                for &j in self.support.row(i) {
                    row[j as usize] += dh[j as usize];
                }
            }
        }
    }
}
