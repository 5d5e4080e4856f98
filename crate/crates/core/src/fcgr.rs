//! Frequency-domain projection of a map (FCGR).
//!
//! Binning coordinates on a grid with `2^k` cells per dimension counts the
//! k-mers ending (forward) or starting (backward) at each position. Cells are
//! half-open `[c / 2^k, (c + 1) / 2^k)` with coordinate `1.0` clamped into the
//! last cell. Cells are linearized with dimension 1 most significant.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::encoder::{Direction, UsmMap};
use crate::error::{Result, UsmError};

pub const DEFAULT_CELL_CAP: u64 = 1 << 30;

const DEFAULT_SHARD_LEN: usize = 1 << 15;
// Per-worker count arrays above this size cost more than they save.
const MAX_SHARDED_CELLS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityGrid {
    k: u32,
    h: usize,
    counts: Vec<u64>,
    total: u64,
    direction: Direction,
}

impl DensityGrid {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.h
    }

    /// Cells per dimension, `2^k`.
    pub fn side(&self) -> usize {
        1 << self.k
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Linear index of the cell with per-dimension indices `cell`.
    pub fn linear_index(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &c| (acc << self.k) | c)
    }

    pub fn count_at(&self, cell: &[usize]) -> u64 {
        self.counts[self.linear_index(cell)]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "cell_index,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }

    /// Writes a binary 8-bit PGM (P5). Dimension 1 runs left to right and
    /// dimension 2 bottom to top, so image row 0 is the top y band.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        if self.h != 2 {
            return Err(UsmError::NotPlanar(self.h));
        }
        let side = self.side();
        let max = self.max_count();
        let mut pixels = Vec::with_capacity(side * side);
        for row in 0..side {
            let y = side - 1 - row;
            for x in 0..side {
                let c = self.counts[(x << self.k) | y];
                let px = if max == 0 {
                    0
                } else {
                    // round(255 * c / max), halves up
                    ((510 * c as u128 + max as u128) / (2 * max as u128)) as u8
                };
                pixels.push(px);
            }
        }
        let io = |e: io::Error| UsmError::Io(e.to_string());
        write!(w, "P5\n{side} {side}\n255\n").map_err(io)?;
        w.write_all(&pixels).map_err(io)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    Pgm,
}

impl FromStr for GridFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "pgm" => Ok(Self::Pgm),
            other => Err(format!("unknown grid format {other:?}")),
        }
    }
}

impl fmt::Display for GridFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Pgm => "pgm",
        })
    }
}

pub fn export_grid(grid: &DensityGrid, format: GridFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        GridFormat::Csv => grid
            .write_csv(&mut out)
            .expect("writing to a Vec cannot fail"),
        GridFormat::Pgm => grid.write_pgm(&mut out)?,
    }
    Ok(out)
}

/// Grid binning with tunable limits.
#[derive(Debug, Clone, Copy)]
pub struct Binner {
    pub k: u32,
    /// Largest grid, in cells, that may be allocated.
    pub cell_cap: u64,
    /// Positions per worker shard.
    pub shard_len: usize,
}

impl Binner {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            cell_cap: DEFAULT_CELL_CAP,
            shard_len: DEFAULT_SHARD_LEN,
        }
    }

    pub fn bin(&self, map: &UsmMap, direction: Direction) -> Result<DensityGrid> {
        let k = self.k;
        if k == 0 {
            return Err(UsmError::InvalidResolution);
        }
        let h = map.dim();
        let exponent = (k as usize).saturating_mul(h);
        if exponent >= 63 || (1u64 << exponent) > self.cell_cap {
            return Err(UsmError::GridTooLarge {
                exponent,
                cap: self.cell_cap,
            });
        }
        let cells = 1usize << exponent;
        let coords = map.matrix(direction);
        let shard = self.shard_len.max(1) * h;

        let counts = if cells <= MAX_SHARDED_CELLS && coords.len() > shard {
            coords
                .par_chunks(shard)
                .fold(
                    || vec![0u64; cells],
                    |mut acc, chunk| {
                        count_into(&mut acc, chunk, h, k);
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; cells],
                    |mut a, b| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        } else {
            let mut acc = vec![0u64; cells];
            count_into(&mut acc, coords, h, k);
            acc
        };

        Ok(DensityGrid {
            k,
            h,
            counts,
            total: map.len() as u64,
            direction,
        })
    }
}

/// Bins `map` at resolution `k` with the default cell cap.
pub fn bin(map: &UsmMap, direction: Direction, k: u32) -> Result<DensityGrid> {
    Binner::new(k).bin(map, direction)
}

#[inline]
fn cell_of(u: f64, k: u32) -> usize {
    let side = 1usize << k;
    ((u * side as f64) as usize).min(side - 1)
}

fn count_into(acc: &mut [u64], coords: &[f64], h: usize, k: u32) {
    for row in coords.chunks_exact(h) {
        let idx = row.iter().fold(0usize, |a, &u| (a << k) | cell_of(u, k));
        acc[idx] += 1;
    }
}

/// Counts positions within Chebyshev distance strictly less than
/// `2^-k_real` of `query`. Integer `k_real` approximates a grid cell centred on
/// `query`; fractional values give intermediate scales.
pub fn density_at(map: &UsmMap, direction: Direction, query: &[f64], k_real: f64) -> Result<usize> {
    if !(k_real > 0.0 && k_real.is_finite()) {
        return Err(UsmError::InvalidFractionalResolution(k_real));
    }
    let h = map.dim();
    if query.len() != h {
        return Err(UsmError::DimensionMismatch {
            got: query.len(),
            expected: h,
        });
    }
    if let Some(&v) = query.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(UsmError::OutOfUnitRange {
            what: "query",
            value: v,
        });
    }
    let radius = (-k_real).exp2();
    Ok(map
        .matrix(direction)
        .par_chunks(h)
        .filter(|row| row.iter().zip(query).all(|(u, q)| (u - q).abs() < radius))
        .count())
}
