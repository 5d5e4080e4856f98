//! Symbol alphabets and their hypercube corner assignment.
//!
//! An alphabet of `m` symbols lives on the corners of the unit hypercube of
//! dimension `h = max(1, ceil(log2 m))`. Symbols are sorted, and the symbol
//! with sorted index `i` sits on the corner whose coordinates are the `h`-bit
//! big-endian binary expansion of `i` (dimension 1 carries the most
//! significant bit). For DNA this gives `A:[0,0] C:[0,1] G:[1,0] T:[1,1]`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Result, UsmError};

const NO_SYMBOL: u32 = u32::MAX;

#[derive(Clone)]
pub struct Alphabet {
    symbols: Vec<char>,
    h: usize,
    ascii: [u32; 128],
    other: HashMap<char, u32>,
    // m * h corner coordinates as 0.0 / 1.0, row-major by symbol index
    corners: Vec<f64>,
}

impl Alphabet {
    /// Builds an alphabet from an explicit list of distinct symbols.
    ///
    /// The list is sorted before corners are assigned, so input order does not
    /// matter.
    pub fn from_symbols<I: IntoIterator<Item = char>>(symbols: I) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in symbols {
            if !seen.insert(s) {
                return Err(UsmError::DuplicateSymbol(s));
            }
        }
        Self::from_sorted(seen.into_iter().collect())
    }

    /// Infers the alphabet as the sorted set of unique symbols of `sequence`.
    pub fn infer<I: IntoIterator<Item = char>>(sequence: I) -> Result<Self> {
        let set: BTreeSet<char> = sequence.into_iter().collect();
        Self::from_sorted(set.into_iter().collect())
    }

    fn from_sorted(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(UsmError::EmptyAlphabet);
        }
        let m = symbols.len();
        let h = dimension_for(m);
        let mut ascii = [NO_SYMBOL; 128];
        let mut other = HashMap::new();
        let mut corners = Vec::with_capacity(m * h);
        for (i, &s) in symbols.iter().enumerate() {
            if s.is_ascii() {
                ascii[s as usize] = i as u32;
            } else {
                other.insert(s, i as u32);
            }
            corners.extend((0..h).map(|j| ((i >> (h - 1 - j)) & 1) as f64));
        }
        Ok(Self {
            symbols,
            h,
            ascii,
            other,
            corners,
        })
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    /// Number of symbols, `m`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Hypercube dimension, `h`.
    pub fn dim(&self) -> usize {
        self.h
    }

    pub fn contains(&self, s: char) -> bool {
        self.index_of(s).is_some()
    }

    /// Sorted index of `s`, if it belongs to the alphabet.
    #[inline]
    pub fn index_of(&self, s: char) -> Option<usize> {
        let idx = if s.is_ascii() {
            self.ascii[s as usize]
        } else {
            *self.other.get(&s)?
        };
        (idx != NO_SYMBOL).then_some(idx as usize)
    }

    /// The corner `E(s)` as a bit vector of length `h`.
    pub fn corner_of(&self, s: char) -> Result<Vec<u8>> {
        let i = self.index_of(s).ok_or(UsmError::UnknownSymbol {
            symbol: s,
            position: None,
        })?;
        Ok(self.corner(i).iter().map(|&c| c as u8).collect())
    }

    /// Inverse of [`Alphabet::corner_of`].
    pub fn symbol_of_corner(&self, bits: &[u8]) -> Result<char> {
        if bits.len() != self.h {
            return Err(UsmError::CornerLength {
                got: bits.len(),
                expected: self.h,
            });
        }
        let index = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
        self.symbols
            .get(index)
            .copied()
            .ok_or(UsmError::UnusedCorner { index })
    }

    /// Corner coordinates of the symbol with sorted index `i`.
    #[inline]
    pub(crate) fn corner(&self, i: usize) -> &[f64] {
        &self.corners[i * self.h..(i + 1) * self.h]
    }

    /// Maps a sequence to sorted symbol indices; the error names the first
    /// offending symbol and its 1-based position.
    pub fn indices(&self, sequence: &[char]) -> Result<Vec<u32>> {
        sequence
            .iter()
            .enumerate()
            .map(|(p, &s)| {
                self.index_of(s)
                    .map(|i| i as u32)
                    .ok_or(UsmError::UnknownSymbol {
                        symbol: s,
                        position: Some(p + 1),
                    })
            })
            .collect()
    }
}

/// `max(1, ceil(log2 m))`.
pub fn dimension_for(m: usize) -> usize {
    if m <= 2 {
        1
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Alphabet {}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Alphabet")
            .field("symbols", &self.symbols.iter().collect::<String>())
            .field("h", &self.h)
            .finish()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
