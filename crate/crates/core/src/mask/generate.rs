use rand::seq::index;

use super::{Mask, NeighborhoodSet};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::predictive::{pan_run, PanConfig};
use crate::rng::{stream, stream_rng};

/// One grouping per input, each a uniform sample of `k·channels` distinct
/// input indices, repeated `repeat` times.
pub fn gen_random(
    d: usize,
    n_distinct: usize,
    channels: usize,
    k: usize,
    repeat: usize,
    seed: u64,
) -> Result<Mask> {
    let per_col = k * channels;
    if per_col > d {
        return Err(Error::InvalidArgument(format!(
            "k·C = {per_col} exceeds input dimension {d}"
        )));
    }
    let mut rng = stream_rng(seed, stream::MASK);
    let groupings: Vec<Vec<u32>> = (0..n_distinct)
        .map(|_| {
            let mut g: Vec<u32> = index::sample(&mut rng, d, per_col)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            g.sort_unstable();
            g
        })
        .collect();
    Mask::from_groupings(d, &groupings, repeat)
}

/// Top-left corner of the `kernel×kernel` window around `(row, col)`, shifted
/// inward at the borders so the window always fits.
pub fn spatial_window(
    row: usize,
    col: usize,
    height: usize,
    width: usize,
    kernel: usize,
) -> (usize, usize) {
    let half = kernel / 2;
    let r0 = row.saturating_sub(half).min(height - kernel);
    let c0 = col.saturating_sub(half).min(width - kernel);
    (r0, c0)
}

/// Receptive-field mask: the grouping of input `i` holds every channel of the
/// `kernel×kernel` window around `i`'s position.
pub fn gen_spatial(
    height: usize,
    width: usize,
    channels: usize,
    kernel: usize,
    repeat: usize,
) -> Result<Mask> {
    if kernel.is_multiple_of(2) || kernel > height || kernel > width {
        return Err(Error::InvalidArgument(format!(
            "kernel {kernel} must be odd and fit a {height}×{width} grid"
        )));
    }
    let plane = height * width;
    let d = plane * channels;
    let groupings: Vec<Vec<u32>> = (0..d)
        .map(|i| {
            let p = i % plane;
            let (r0, c0) = spatial_window(p / width, p % width, height, width, kernel);
            let mut g = Vec::with_capacity(kernel * kernel * channels);
            for c in 0..channels {
                for r in r0..r0 + kernel {
                    for col in c0..c0 + kernel {
                        g.push((c * plane + r * width + col) as u32);
                    }
                }
            }
            g
        })
        .collect();
    Mask::from_groupings(d, &groupings, repeat)
}

/// Runs the nexting phase on `env` and turns its final neighborhoods into a
/// mask with `repeat` copies of each grouping.
pub fn gen_predictive<E: Environment + ?Sized>(
    env: &mut E,
    config: &PanConfig,
    repeat: usize,
    seed: u64,
) -> Result<(Mask, NeighborhoodSet)> {
    let hoods = pan_run(env, config, seed)?;
    let mask = hoods.to_mask(repeat)?;
    Ok((mask, hoods))
}
