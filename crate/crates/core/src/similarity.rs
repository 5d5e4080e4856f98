//! Alignment-free similarity between embedded positions.
//!
//! Two positions that share their last `L` symbols sit in the same sub-cell of
//! side `2^-L` of the forward map, so the number of leading binary digits
//! their coordinates share, over all dimensions at once, is exactly the length
//! of their common preceding context. The same holds for the backward map and
//! the following context. Adding both and removing the shared anchor symbol
//! gives the length of the common segment through the two positions.
//!
//! Binary64 coordinates carry about 52 symbols of context, so the per-direction
//! length is capped (default [`DEFAULT_CAP`]).

use std::io::{self, Write};

use rayon::prelude::*;

use crate::encoder::UsmMap;
use crate::error::{Result, UsmError};

pub const DEFAULT_CAP: u32 = 52;

/// Number of leading folds on which `u1` and `u2` agree in every dimension,
/// at most `cap`.
///
/// Fold `x` compares `round(u * 2^x)` per dimension (round half away from
/// zero); counting starts at `x = 0` and stops at the first disagreement.
/// Identical vectors return `cap`.
pub fn sn_direction(u1: &[f64], u2: &[f64], cap: u32) -> u32 {
    debug_assert_eq!(u1.len(), u2.len());
    let mut x = 0;
    let mut scale = 1.0f64;
    while x < cap
        && scale.is_finite()
        && u1
            .iter()
            .zip(u2)
            .all(|(a, b)| (a * scale).round() == (b * scale).round())
    {
        x += 1;
        scale *= 2.0;
    }
    x
}

/// Length of the common segment through two positions, from their forward
/// and backward coordinates. Mismatched anchor symbols give 0.
pub fn sn(u1f: &[f64], u1b: &[f64], u2f: &[f64], u2b: &[f64], cap: u32) -> u32 {
    (sn_direction(u1f, u2f, cap) + sn_direction(u1b, u2b, cap)).saturating_sub(1)
}

/// `max_j |u1_j - u2_j|`
pub fn chebyshev_distance(u1: &[f64], u2: &[f64]) -> f64 {
    u1.iter()
        .zip(u2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `-log2` of the Chebyshev distance; `cap` for identical vectors.
pub fn chebyshev_bound(u1: &[f64], u2: &[f64], cap: u32) -> f64 {
    let d = chebyshev_distance(u1, u2);
    if d == 0.0 {
        f64::from(cap)
    } else {
        -d.log2()
    }
}

/// Forward bound plus backward bound minus the shared anchor.
pub fn bound_bidirectional(u1f: &[f64], u1b: &[f64], u2f: &[f64], u2b: &[f64], cap: u32) -> f64 {
    chebyshev_bound(u1f, u2f, cap) + chebyshev_bound(u1b, u2b, cap) - 1.0
}

/// Cross-tabulation of [`sn`] between every position of two maps, with the
/// per-row and global Sum/Max reductions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnTable {
    rows: usize,
    cols: usize,
    values: Vec<u32>,
    row_sum: Vec<u64>,
    row_max: Vec<u32>,
    total_sum: u64,
    global_max: u32,
}

impl SnTable {
    fn from_values(rows: usize, cols: usize, values: Vec<u32>) -> Self {
        let (row_sum, row_max): (Vec<u64>, Vec<u32>) = if cols == 0 {
            (vec![0; rows], vec![0; rows])
        } else {
            values
                .chunks_exact(cols)
                .map(|r| {
                    (
                        r.iter().map(|&v| u64::from(v)).sum::<u64>(),
                        r.iter().copied().max().unwrap_or(0),
                    )
                })
                .unzip()
        };
        let total_sum = row_sum.iter().sum();
        let global_max = row_max.iter().copied().max().unwrap_or(0);
        Self {
            rows,
            cols,
            values,
            row_sum,
            row_max,
            total_sum,
            global_max,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sum(&self) -> &[u64] {
        &self.row_sum
    }

    pub fn row_max(&self) -> &[u32] {
        &self.row_max
    }

    pub fn total_sum(&self) -> u64 {
        self.total_sum
    }

    pub fn global_max(&self) -> u32 {
        self.global_max
    }

    pub fn transpose(&self) -> SnTable {
        let mut values = vec![0; self.values.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                values[j * self.rows + i] = self.get(i, j);
            }
        }
        SnTable::from_values(self.cols, self.rows, values)
    }

    /// Writes the table as CSV: a header of column symbols, one row per row
    /// symbol followed by its `sum` and `max`, and a final `total` row whose
    /// last two fields are the grand sum and the global max.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        row_labels: &[char],
        col_labels: &[char],
    ) -> io::Result<()> {
        write!(w, "symbol")?;
        for c in col_labels {
            write!(w, ",{c}")?;
        }
        writeln!(w, ",sum,max")?;
        for (i, label) in row_labels.iter().enumerate().take(self.rows) {
            write!(w, "{label}")?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{}", self.row_sum[i], self.row_max[i])?;
        }
        write!(w, "total")?;
        for _ in 0..self.cols {
            write!(w, ",")?;
        }
        writeln!(w, ",{},{}", self.total_sum, self.global_max)
    }
}

/// Computes [`sn`] for every pair of positions of `a` (rows) and `b` (columns).
pub fn crosstab(a: &UsmMap, b: &UsmMap, cap: u32) -> Result<SnTable> {
    crosstab_chunked(a, b, cap, 16)
}

/// [`crosstab`] with an explicit number of rows per parallel task. The result
/// does not depend on `rows_per_task`.
pub fn crosstab_chunked(a: &UsmMap, b: &UsmMap, cap: u32, rows_per_task: usize) -> Result<SnTable> {
    if a.alphabet() != b.alphabet() {
        return Err(UsmError::AlphabetMismatch);
    }
    let (rows, cols) = (a.len(), b.len());
    let mut values = vec![0u32; rows * cols];
    if cols > 0 {
        values
            .par_chunks_mut(rows_per_task.max(1) * cols)
            .enumerate()
            .for_each(|(block, chunk)| {
                let first = block * rows_per_task.max(1);
                for (r, out) in chunk.chunks_exact_mut(cols).enumerate() {
                    let i = first + r;
                    let (af, ab) = (a.forward_at(i), a.backward_at(i));
                    for (j, v) in out.iter_mut().enumerate() {
                        *v = sn(af, ab, b.forward_at(j), b.backward_at(j), cap);
                    }
                }
            });
    }
    Ok(SnTable::from_values(rows, cols, values))
}
