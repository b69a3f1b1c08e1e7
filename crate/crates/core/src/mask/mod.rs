//! Binary hidden-layer connectivity masks.
//!
//! A mask is a `d×n` matrix: row `i` is input `i`, column `j` is hidden unit
//! `j`. Structured masks are built from one grouping (input subset) per input
//! index, each grouping copied into `repeat` adjacent columns.

mod generate;
mod io;
mod l1;
mod neighborhood;

use std::fmt;

pub use generate::{gen_predictive, gen_random, gen_spatial, spatial_window};
pub use io::{load_mask, parse_mask, save_mask, write_mask_string};
pub use l1::{gen_l1, l1_threshold, L1Config, L1Outcome};
pub use neighborhood::NeighborhoodSet;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    rows: usize,
    cols: usize,
    repeat: usize,
    bits: Vec<u8>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mask")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("repeat", &self.repeat)
            .field("ones", &self.count_ones())
            .finish()
    }
}

impl Mask {
    pub fn zeros(rows: usize, cols: usize, repeat: usize) -> Self {
        Self {
            rows,
            cols,
            repeat,
            bits: vec![0; rows * cols],
        }
    }

    /// Fully connected mask.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            repeat: 1,
            bits: vec![1; rows * cols],
        }
    }

    /// Builds a mask with one grouping per distinct column, each copied into
    /// `repeat` adjacent columns. Groupings list input (row) indices.
    pub fn from_groupings(rows: usize, groupings: &[Vec<u32>], repeat: usize) -> Result<Self> {
        if repeat == 0 {
            return Err(Error::InvalidArgument("repeat must be positive".into()));
        }
        let cols = groupings.len() * repeat;
        let mut mask = Self::zeros(rows, cols, repeat);
        for (g, grouping) in groupings.iter().enumerate() {
            for &i in grouping {
                let i = i as usize;
                if i >= rows {
                    return Err(Error::dim("grouping input index", rows, i));
                }
                for r in 0..repeat {
                    mask.bits[i * cols + g * repeat + r] = 1;
                }
            }
        }
        Ok(mask)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn repeat(&self) -> usize {
        self.repeat
    }

    /// Row-major bits.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.bits[row * self.cols + col] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_all_ones(&self) -> bool {
        self.bits.iter().all(|&b| b != 0)
    }

    /// Fraction of zero entries.
    pub fn sparsity(&self) -> f64 {
        let total = self.bits.len();
        (total - self.count_ones()) as f64 / total as f64
    }

    /// Sorted row indices set in column `col`.
    pub fn column(&self, col: usize) -> Vec<u32> {
        (0..self.rows)
            .filter(|&i| self.get(i, col))
            .map(|i| i as u32)
            .collect()
    }

    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            for (j, &b) in self.bits[i * self.cols..(i + 1) * self.cols]
                .iter()
                .enumerate()
            {
                if b != 0 {
                    cols[j].push(i as u32);
                }
            }
        }
        cols
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for row in self.bits.chunks_exact(self.cols) {
            for (s, &b) in sums.iter_mut().zip(row) {
                *s += b as usize;
            }
        }
        sums
    }

    /// Sorted column indices set in row `row`.
    pub fn row_support(&self, row: usize) -> Vec<u32> {
        self.bits[row * self.cols..(row + 1) * self.cols]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(j, _)| j as u32)
            .collect()
    }

    /// True when columns come in runs of `repeat` identical copies.
    pub fn repeats_are_consistent(&self) -> bool {
        if self.repeat == 0 || !self.cols.is_multiple_of(self.repeat) {
            return false;
        }
        self.bits.chunks_exact(self.cols).all(|row| {
            row.chunks_exact(self.repeat)
                .all(|run| run.iter().all(|&b| b == run[0]))
        })
    }

    /// Checks the capacity controls of a structured mask: `n = d·repeat`,
    /// exactly `per_column` ones per column and consistent repeat runs.
    pub fn check_structured(&self, per_column: usize) -> Result<()> {
        if self.cols != self.rows * self.repeat {
            return Err(Error::dim(
                "structured mask columns",
                self.rows * self.repeat,
                self.cols,
            ));
        }
        if let Some((j, &s)) = self
            .column_sums()
            .iter()
            .enumerate()
            .find(|(_, &s)| s != per_column)
        {
            return Err(Error::InvalidArgument(format!(
                "column {j} has {s} ones, expected {per_column}"
            )));
        }
        if !self.repeats_are_consistent() {
            return Err(Error::InvalidArgument(format!(
                "columns are not grouped in runs of {}",
                self.repeat
            )));
        }
        Ok(())
    }

    pub fn stats(&self) -> MaskStats {
        let sums = self.column_sums();
        let min = sums.iter().copied().min().unwrap_or(0);
        let max = sums.iter().copied().max().unwrap_or(0);
        let mean = sums.iter().sum::<usize>() as f64 / sums.len().max(1) as f64;
        MaskStats {
            rows: self.rows,
            cols: self.cols,
            repeat: self.repeat,
            sparsity: self.sparsity(),
            column_min: min,
            column_mean: mean,
            column_max: max,
            repeat_consistent: self.repeats_are_consistent(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskStats {
    pub rows: usize,
    pub cols: usize,
    pub repeat: usize,
    pub sparsity: f64,
    pub column_min: usize,
    pub column_mean: f64,
    pub column_max: usize,
    pub repeat_consistent: bool,
}

impl fmt::Display for MaskStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d          {}", self.rows)?;
        writeln!(f, "n          {}", self.cols)?;
        writeln!(f, "sparsity   {:.6}", self.sparsity)?;
        writeln!(
            f,
            "ones/col   min {} mean {:.3} max {}",
            self.column_min, self.column_mean, self.column_max
        )?;
        write!(
            f,
            "repeat     {} ({})",
            self.repeat,
            if self.repeat_consistent {
                "consistent"
            } else {
                "INCONSISTENT"
            }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_basics() {
        assert_eq!(Mask::ones(2, 2).sparsity(), 0.0);
        assert_eq!(Mask::zeros(2, 2, 1).sparsity(), 1.0);
    }

    #[test]
    fn groupings_replicate() {
        let m = Mask::from_groupings(3, &[vec![0, 2], vec![1], vec![0]], 2).unwrap();
        assert_eq!(m.cols(), 6);
        assert_eq!(m.column(0), vec![0, 2]);
        assert_eq!(m.column(1), vec![0, 2]);
        assert_eq!(m.column(2), vec![1]);
        assert_eq!(m.column(5), vec![0]);
        assert!(m.repeats_are_consistent());
        assert_eq!(m.columns()[3], vec![1]);
        assert_eq!(m.row_support(0), vec![0, 1, 4, 5]);
        assert!(Mask::from_groupings(3, &[vec![3]], 1).is_err());
    }

    #[test]
    fn check_structured_flags_broken_runs() {
        let mut m = Mask::from_groupings(2, &[vec![0], vec![1]], 2).unwrap();
        assert!(m.check_structured(1).is_ok());
        m.set(0, 1, false);
        m.set(1, 1, true);
        assert!(m.check_structured(1).is_err());
        assert!(!m.repeats_are_consistent());
    }
}
