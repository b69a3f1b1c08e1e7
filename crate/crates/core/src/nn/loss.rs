use std::borrow::Borrow;

use super::network::{ForwardCache, Gradients, QNetwork};
use super::Transition;
use crate::error::{Error, Result};
use crate::real::Real;

/// Reusable scratch space for loss evaluation.
#[derive(Clone, Debug)]
pub struct LossWorkspace<T> {
    online: ForwardCache<T>,
    target: ForwardCache<T>,
    dh: Vec<T>,
}

impl<T: Real> LossWorkspace<T> {
    pub fn new(net: &QNetwork<T>) -> Self {
        Self {
            online: ForwardCache::new(net.hidden(), net.actions()),
            target: ForwardCache::new(net.hidden(), net.actions()),
            dh: vec![T::zero(); net.hidden()],
        }
    }
}

fn check_pair<T: Real>(net: &QNetwork<T>, target: &QNetwork<T>) -> Result<()> {
    if net.inputs() != target.inputs()
        || net.hidden() != target.hidden()
        || net.actions() != target.actions()
    {
        return Err(Error::InvalidArgument(
            "online and target networks differ in shape".into(),
        ));
    }
    Ok(())
}

/// Mean squared TD error over `batch`, with gradients accumulated into
/// `grads` (which is cleared first).
///
/// The bootstrap target `r + γ·max_a' q̄(o', a')` (just `r` on terminal
/// transitions) comes from `target` and is held constant.
pub fn dqn_loss_into<T: Real, B: Borrow<Transition>>(
    net: &QNetwork<T>,
    target: &QNetwork<T>,
    batch: &[B],
    gamma: T,
    grads: &mut Gradients<T>,
    ws: &mut LossWorkspace<T>,
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_pair(net, target)?;
    net.clear_grads(grads);
    let scale = T::from_f64(2.0 / batch.len() as f64);
    let mut loss = T::zero();
    for tr in batch {
        let tr = tr.borrow();
        if tr.action >= net.actions() {
            return Err(Error::dim("action index", net.actions(), tr.action));
        }
        let reward = T::from_f64(tr.reward);
        let y = if tr.terminal {
            reward
        } else {
            target.forward_sparse(&tr.next_obs, &mut ws.target);
            let best = ws.target.q.iter().copied().fold(T::neg_infinity(), T::max);
            reward + gamma * best
        };
        net.forward_sparse(&tr.obs, &mut ws.online);
        let diff = ws.online.q[tr.action] - y;
        loss += diff * diff;
        net.backward_sample(
            &tr.obs,
            tr.action,
            scale * diff,
            &ws.online,
            &mut ws.dh,
            grads,
        );
    }
    Ok(loss / T::from_f64(batch.len() as f64))
}

/// A replayed transition whose hidden activations were computed once, for
/// use with a frozen hidden layer. `next_hidden` is `None` on terminal
/// transitions.
#[derive(Clone, Copy, Debug)]
pub struct HiddenSample<'a, T> {
    pub hidden: &'a [T],
    pub action: usize,
    pub reward: f64,
    pub next_hidden: Option<&'a [T]>,
}

/// Same loss and gradients as [`dqn_loss_into`] for a frozen hidden layer,
/// computed from cached activations. `net` and `target` must share their
/// hidden layer, which always holds when it is frozen.
pub fn frozen_loss_into<T: Real>(
    net: &QNetwork<T>,
    target: &QNetwork<T>,
    batch: &[HiddenSample<'_, T>],
    gamma: T,
    grads: &mut Gradients<T>,
    ws: &mut LossWorkspace<T>,
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !net.hidden_frozen() {
        return Err(Error::InvalidArgument(
            "cached activations require a frozen hidden layer".into(),
        ));
    }
    check_pair(net, target)?;
    net.clear_grads(grads);
    let scale = T::from_f64(2.0 / batch.len() as f64);
    let mut loss = T::zero();
    for s in batch {
        if s.action >= net.actions() {
            return Err(Error::dim("action index", net.actions(), s.action));
        }
        let reward = T::from_f64(s.reward);
        let y = match s.next_hidden {
            None => reward,
            Some(h) => {
                target.output_layer(h, &mut ws.target.q);
                let best = ws.target.q.iter().copied().fold(T::neg_infinity(), T::max);
                reward + gamma * best
            }
        };
        net.output_layer(s.hidden, &mut ws.online.q);
        let diff = ws.online.q[s.action] - y;
        loss += diff * diff;
        net.backward_output(s.action, scale * diff, s.hidden, grads);
    }
    Ok(loss / T::from_f64(batch.len() as f64))
}

/// Adds `β·‖Φ‖₁` to the loss and `β·sign(φ)` (with `sign(0) = 0`) to the
/// hidden-weight gradient. Returns the penalty.
pub fn add_l1_penalty<T: Real>(net: &QNetwork<T>, beta: T, grads: &mut Gradients<T>) -> T {
    let zero = T::zero();
    let phi = net.phi();
    let mut acc = [zero; 8];
    let chunks = phi.chunks_exact(8);
    let mut tail = zero;
    for &p in chunks.remainder() {
        tail += p.abs();
    }
    for c in chunks {
        for k in 0..8 {
            acc[k] += c[k].abs();
        }
    }
    let norm =
        ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
    if !net.hidden_frozen() && beta != zero {
        for (g, &p) in grads.phi.iter_mut().zip(phi) {
            let up = if p > zero { beta } else { zero };
            let down = if p < zero { beta } else { zero };
            *g += up - down;
        }
    }
    beta * norm
}

pub fn dqn_loss_and_grads<T: Real>(
    net: &QNetwork<T>,
    target: &QNetwork<T>,
    batch: &[Transition],
    gamma: T,
) -> Result<(T, Gradients<T>)> {
    let mut grads = Gradients::zeros_like(net);
    let mut ws = LossWorkspace::new(net);
    let loss = dqn_loss_into(net, target, batch, gamma, &mut grads, &mut ws)?;
    Ok((loss, grads))
}

/// DQN loss plus an L1 penalty on the hidden weights only.
pub fn l1_loss_and_grads<T: Real>(
    net: &QNetwork<T>,
    target: &QNetwork<T>,
    batch: &[Transition],
    gamma: T,
    beta: T,
) -> Result<(T, Gradients<T>)> {
    if !(beta >= T::zero() && beta < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "beta {beta} outside [0, 1)"
        )));
    }
    let (loss, mut grads) = dqn_loss_and_grads(net, target, batch, gamma)?;
    let penalty = add_l1_penalty(net, beta, &mut grads);
    Ok((loss + penalty, grads))
}
