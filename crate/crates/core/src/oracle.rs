//! Symbol-level ground truth for common-segment lengths.
//!
//! Deliberately naive: it walks the two sequences symbol by symbol around an
//! anchored pair of positions. Sequence ends are handled according to a
//! [`Boundary`], which must match the seeding used to encode the coordinates
//! being checked.

use crate::error::{Result, UsmError};

/// How a sequence continues past its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// The sequence stops at its ends.
    Linear,
    /// Wraps around: `... s_{n-1} s_n | s_1 ... s_n | s_1 s_2 ...`.
    Circular,
    /// Reflects with the end symbol repeated: `... s_2 s_1 | s_1 ... s_n | s_n s_{n-1} ...`.
    Mirror,
}

impl Boundary {
    /// Symbol at (possibly out of range) 0-based index `k`.
    fn at(self, seq: &[char], k: isize) -> Option<char> {
        let n = seq.len() as isize;
        match self {
            Boundary::Linear => (0..n).contains(&k).then(|| seq[k as usize]),
            Boundary::Circular => Some(seq[k.rem_euclid(n) as usize]),
            Boundary::Mirror => {
                let r = k.rem_euclid(2 * n);
                Some(seq[if r < n { r } else { 2 * n - 1 - r } as usize])
            }
        }
    }
}

/// Common-segment lengths around an anchored pair.
///
/// `back_len` counts matching symbols scanning towards the sequence start
/// (the context held by forward coordinates), `fwd_len` scanning towards the
/// end. Both include the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub back_len: usize,
    pub fwd_len: usize,
    pub total: usize,
}

/// Match lengths around 0-based positions `i` of `a` and `j` of `b`, with
/// circular wrap per sequence. Scans stop after `min(|a|, |b|)` comparisons.
pub fn match_length(
    a: &[char],
    i: usize,
    b: &[char],
    j: usize,
    circular_a: bool,
    circular_b: bool,
) -> Result<MatchResult> {
    let boundary = |c| {
        if c {
            Boundary::Circular
        } else {
            Boundary::Linear
        }
    };
    let limit = a.len().min(b.len());
    match_length_with(
        a,
        i,
        boundary(circular_a),
        b,
        j,
        boundary(circular_b),
        limit,
    )
}

/// General form of [`match_length`]: any boundary per sequence and an
/// explicit per-direction comparison limit.
pub fn match_length_with(
    a: &[char],
    i: usize,
    boundary_a: Boundary,
    b: &[char],
    j: usize,
    boundary_b: Boundary,
    limit: usize,
) -> Result<MatchResult> {
    if i >= a.len() {
        return Err(UsmError::PositionOutOfRange {
            position: i,
            len: a.len(),
        });
    }
    if j >= b.len() {
        return Err(UsmError::PositionOutOfRange {
            position: j,
            len: b.len(),
        });
    }
    if a[i] != b[j] {
        return Ok(MatchResult {
            back_len: 0,
            fwd_len: 0,
            total: 0,
        });
    }
    let scan = |step: isize| {
        let mut len = 0;
        while len < limit {
            let off = step * len as isize;
            let x = boundary_a.at(a, i as isize + off);
            let y = boundary_b.at(b, j as isize + off);
            match (x, y) {
                (Some(x), Some(y)) if x == y => len += 1,
                _ => break,
            }
        }
        len
    };
    let back_len = scan(-1);
    let fwd_len = scan(1);
    Ok(MatchResult {
        back_len,
        fwd_len,
        total: back_len + fwd_len - 1,
    })
}
