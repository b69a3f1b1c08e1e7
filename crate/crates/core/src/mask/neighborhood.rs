use std::fmt::Write as _;

use super::Mask;
use crate::env::ObservationSpec;
use crate::error::{Error, Result};

/// For every target input, the `k` spatial positions feeding its feature.
///
/// Positions are `row·W + col` and are kept sorted ascending. Each position
/// expands to all `C` channels, giving `k·C` input indices per target.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NeighborhoodSet {
    height: usize,
    width: usize,
    channels: usize,
    k: usize,
    targets: Vec<Vec<u32>>,
}

impl NeighborhoodSet {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        k: usize,
        targets: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let plane = height * width;
        if k == 0 || k > plane {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must be in 1..={plane}"
            )));
        }
        if targets.len() != plane * channels {
            return Err(Error::dim(
                "neighborhood targets",
                plane * channels,
                targets.len(),
            ));
        }
        let mut targets = targets;
        for (i, t) in targets.iter_mut().enumerate() {
            t.sort_unstable();
            t.dedup();
            if t.len() != k || t.iter().any(|&p| p as usize >= plane) {
                return Err(Error::InvalidArgument(format!(
                    "target {i} needs {k} distinct positions below {plane}"
                )));
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            k,
            targets,
        })
    }

    /// Every target gets the first `k` positions.
    pub fn first_positions(spec: ObservationSpec, k: usize) -> Result<Self> {
        let targets = vec![(0..k as u32).collect(); spec.flat_len()];
        Self::new(spec.height, spec.width, spec.channels, k, targets)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn positions(&self, target: usize) -> &[u32] {
        &self.targets[target]
    }

    pub fn targets(&self) -> &[Vec<u32>] {
        &self.targets
    }

    pub fn input_dim(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub(crate) fn set_positions(&mut self, target: usize, positions: Vec<u32>) {
        debug_assert_eq!(positions.len(), self.k);
        self.targets[target] = positions;
    }

    /// Input indices of `target`'s grouping, sorted.
    pub fn expand(&self, target: usize) -> Vec<u32> {
        let plane = (self.height * self.width) as u32;
        let mut out = Vec::with_capacity(self.k * self.channels);
        for c in 0..self.channels as u32 {
            out.extend(self.targets[target].iter().map(|&p| c * plane + p));
        }
        out
    }

    pub fn to_mask(&self, repeat: usize) -> Result<Mask> {
        let groupings: Vec<Vec<u32>> = (0..self.targets.len()).map(|i| self.expand(i)).collect();
        Mask::from_groupings(self.input_dim(), &groupings, repeat)
    }

    /// One line per target: `i: p1 p2 ... pk`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.targets.iter().enumerate() {
            let _ = write!(s, "{i}:");
            for p in t {
                let _ = write!(s, " {p}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, spec: ObservationSpec, origin: &str) -> Result<Self> {
        let mut targets = Vec::new();
        let mut k = None;
        for (n, line) in text.lines().enumerate() {
            let err = |msg: String| Error::parse(origin, n + 1, msg);
            let (idx, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected 'i: p1 ... pk'".into()))?;
            if idx.trim().parse::<usize>().ok() != Some(targets.len()) {
                return Err(err(format!("expected target {}", targets.len())));
            }
            let positions = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| err(format!("bad position '{t}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if *k.get_or_insert(positions.len()) != positions.len() {
                return Err(err(
                    "all targets must list the same number of positions".into()
                ));
            }
            targets.push(positions);
        }
        Self::new(
            spec.height,
            spec.width,
            spec.channels,
            k.unwrap_or(0),
            targets,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;

    #[test]
    fn first_positions_mask_has_full_capacity() {
        let spec = EnvKind::Breakout.spec();
        let hoods = NeighborhoodSet::first_positions(spec, 9).unwrap();
        let mask = hoods.to_mask(4).unwrap();
        mask.check_structured(36).unwrap();
        assert_eq!(mask.sparsity(), 0.91);
        assert_eq!(hoods.expand(7)[..3], [0, 1, 2]);
        assert_eq!(hoods.expand(7)[9], 100);
    }

    #[test]
    fn text_round_trip() {
        let spec = EnvKind::SpaceInvaders.spec();
        let mut hoods = NeighborhoodSet::first_positions(spec, 9).unwrap();
        hoods.set_positions(3, vec![5, 17, 23, 40, 41, 42, 77, 88, 99]);
        let text = hoods.to_text();
        assert!(text.starts_with("0: 0 1 2 3 4 5 6 7 8\n"));
        assert_eq!(NeighborhoodSet::parse(&text, spec, "t").unwrap(), hoods);
    }

    #[test]
    fn rejects_bad_sets() {
        let spec = ObservationSpec {
            height: 2,
            width: 2,
            channels: 1,
            num_actions: 2,
        };
        assert!(NeighborhoodSet::new(2, 2, 1, 2, vec![vec![0, 0]; 4]).is_err());
        assert!(NeighborhoodSet::new(2, 2, 1, 2, vec![vec![0, 4]; 4]).is_err());
        assert!(NeighborhoodSet::parse("0: 0 1\n2: 0 1\n", spec, "t").is_err());
    }
}
