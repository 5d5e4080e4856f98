//! Forward and backward iterated maps over a sequence.
//!
//! Each step moves the current coordinate half way towards the corner of the
//! symbol being consumed: `u_i = (u_{i-1} + E(s_i)) / 2`. The forward map
//! consumes `s_1..s_n`; the backward map consumes `s_n..s_1` and is stored
//! indexed by position, so `backward[i]` encodes the context `s_i, s_{i+1}, ...`.
//!
//! Three seeding strategies are supported:
//!
//! * [`SeedMode::Midpoint`]: one pass per direction from `1/2`.
//! * [`SeedMode::Circular`]: each direction is re-run seeded with its own
//!   final coordinate until successive passes agree, which encodes the
//!   sequence as if it were circular.
//! * [`SeedMode::Bidirectional`]: sweeps alternate, each seeded with the final
//!   coordinate of the sweep in the other direction, which extends the
//!   sequence by reflection at both ends (`... s_2 s_1 | s_1 s_2 ... s_n | s_n s_{n-1} ...`).
//!
//! All coordinates are dyadic rationals, so `(prev + E) / 2` is exact in
//! binary64 as long as `prev` has at most 52 fractional bits. Past that the
//! step rounds toward zero, which keeps every stored coordinate equal to the
//! truncated binary expansion of its context: the leading 53 bits per
//! dimension are always the exact corner bits of the last 53 symbols, with no
//! carry from rounding. Decoding and the similarity metric rely on this.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Result, UsmError};

/// Binary64 mantissa width; deeper context is not representable.
pub const DEFAULT_PRECISION_HORIZON: usize = 52;
pub const DEFAULT_MAX_PASSES: usize = 128;
/// 2^-52
pub const DEFAULT_EPSILON: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedMode {
    Midpoint,
    Circular,
    Bidirectional,
}

impl SeedMode {
    pub const ALL: [SeedMode; 3] = [Self::Midpoint, Self::Circular, Self::Bidirectional];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Midpoint => "midpoint",
            Self::Circular => "circular",
            Self::Bidirectional => "bidirectional",
        }
    }
}

impl fmt::Display for SeedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "circular" => Ok(Self::Circular),
            "bidirectional" => Ok(Self::Bidirectional),
            other => Err(format!("unknown seed mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::Backward => "backward",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Self::Forward),
            "backward" => Ok(Self::Backward),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub seed_mode: SeedMode,
    /// Convergence tolerance on the max-norm change between successive passes
    /// in the same direction.
    pub epsilon: f64,
    /// Pass cap per direction.
    pub max_passes: usize,
    /// Longest context, in symbols, that a coordinate can be trusted to hold.
    pub precision_horizon: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            seed_mode: SeedMode::Bidirectional,
            epsilon: DEFAULT_EPSILON,
            max_passes: DEFAULT_MAX_PASSES,
            precision_horizon: DEFAULT_PRECISION_HORIZON,
        }
    }
}

impl EncoderConfig {
    pub fn new(seed_mode: SeedMode) -> Self {
        Self {
            seed_mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(UsmError::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.max_passes == 0 {
            return Err(UsmError::InvalidConfig(
                "max_passes must be at least 1".into(),
            ));
        }
        if self.precision_horizon == 0 {
            return Err(UsmError::InvalidConfig(
                "precision_horizon must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Forward and backward coordinates of every position of a sequence.
///
/// Matrices are stored position-major: the coordinate of position `i`
/// (0-based) occupies `[i * h, (i + 1) * h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsmMap {
    sequence: Vec<char>,
    alphabet: Alphabet,
    forward: Vec<f64>,
    backward: Vec<f64>,
    seed_mode: SeedMode,
    passes_used: usize,
    converged: bool,
    last_delta: Option<f64>,
}

impl UsmMap {
    pub fn sequence(&self) -> &[char] {
        &self.sequence
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.alphabet.dim()
    }

    pub fn seed_mode(&self) -> SeedMode {
        self.seed_mode
    }

    /// Passes run per direction (the larger of the two for circular seeding).
    pub fn passes_used(&self) -> usize {
        self.passes_used
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Max-norm change between the last two same-direction passes, over both
    /// directions. `None` when only a single pass per direction was run.
    pub fn last_delta(&self) -> Option<f64> {
        self.last_delta
    }

    pub fn forward(&self) -> &[f64] {
        &self.forward
    }

    pub fn backward(&self) -> &[f64] {
        &self.backward
    }

    pub fn matrix(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// Forward coordinate of 0-based position `i`.
    pub fn forward_at(&self, i: usize) -> &[f64] {
        let h = self.dim();
        &self.forward[i * h..(i + 1) * h]
    }

    /// Backward coordinate of 0-based position `i`.
    pub fn backward_at(&self, i: usize) -> &[f64] {
        let h = self.dim();
        &self.backward[i * h..(i + 1) * h]
    }

    pub fn coord(&self, direction: Direction, i: usize) -> &[f64] {
        match direction {
            Direction::Forward => self.forward_at(i),
            Direction::Backward => self.backward_at(i),
        }
    }

    /// Values of dimension `j` (0-based) along the sequence.
    pub fn column(&self, direction: Direction, j: usize) -> Vec<f64> {
        self.matrix(direction)
            .iter()
            .skip(j)
            .step_by(self.dim())
            .copied()
            .collect()
    }

    /// Decodes the context stored at position `i`: for the forward map this
    /// yields `s_i, s_{i-1}, ...`, for the backward map `s_i, s_{i+1}, ...`.
    pub fn decode_at(
        &self,
        direction: Direction,
        i: usize,
        depth: usize,
        precision_horizon: usize,
    ) -> Result<Vec<char>> {
        if i >= self.len() {
            return Err(UsmError::PositionOutOfRange {
                position: i,
                len: self.len(),
            });
        }
        decode(
            self.coord(direction, i),
            depth,
            &self.alphabet,
            precision_horizon,
        )
    }
}

/// Runs one pass of the map over `seq` from `seed`.
///
/// Row `i` of the result is the coordinate after consuming the `i`-th symbol in
/// the chosen direction; with `reversed` the rows stay indexed by sequence
/// position, so row 0 is the last coordinate computed.
pub fn encode_pass(
    seq: &[char],
    alphabet: &Alphabet,
    seed: &[f64],
    reversed: bool,
) -> Result<Vec<f64>> {
    check_seed(seed, alphabet.dim())?;
    let idx = alphabet.indices(seq)?;
    let mut out = vec![0.0; idx.len() * alphabet.dim()];
    if reversed {
        backward_pass(&idx, alphabet, seed, &mut out);
    } else {
        forward_pass(&idx, alphabet, seed, &mut out);
    }
    Ok(out)
}

fn check_seed(seed: &[f64], h: usize) -> Result<()> {
    if seed.len() != h {
        return Err(UsmError::DimensionMismatch {
            got: seed.len(),
            expected: h,
        });
    }
    if let Some(&v) = seed.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(UsmError::OutOfUnitRange {
            what: "seed",
            value: v,
        });
    }
    Ok(())
}

/// `(prev + e) / 2` rounded toward zero.
#[inline]
pub(crate) fn step(prev: f64, e: f64) -> f64 {
    let sum = prev + e;
    // `sum - e` is exact for sums in [1, 2]; a larger value means the sum was rounded up
    let sum = if sum - e > prev { sum.next_down() } else { sum };
    sum / 2.0
}

fn forward_pass(idx: &[u32], alphabet: &Alphabet, seed: &[f64], out: &mut [f64]) {
    let h = alphabet.dim();
    let mut prev = seed;
    for (row, &s) in out.chunks_exact_mut(h).zip(idx) {
        for ((u, &p), &e) in row.iter_mut().zip(prev).zip(alphabet.corner(s as usize)) {
            *u = step(p, e);
        }
        prev = row;
    }
}

fn backward_pass(idx: &[u32], alphabet: &Alphabet, seed: &[f64], out: &mut [f64]) {
    let h = alphabet.dim();
    let mut prev = seed;
    for (row, &s) in out.chunks_exact_mut(h).zip(idx).rev() {
        for ((u, &p), &e) in row.iter_mut().zip(prev).zip(alphabet.corner(s as usize)) {
            *u = step(p, e);
        }
        prev = row;
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn last_row(m: &[f64], h: usize) -> Vec<f64> {
    m[m.len() - h..].to_vec()
}

fn first_row(m: &[f64], h: usize) -> Vec<f64> {
    m[..h].to_vec()
}

struct Converged {
    matrix: Vec<f64>,
    passes: usize,
    converged: bool,
    delta: Option<f64>,
}

/// Repeats a single-direction pass, wrapping its final coordinate back into
/// its seed, until two successive passes agree within `epsilon`.
fn circular(idx: &[u32], alphabet: &Alphabet, reversed: bool, config: &EncoderConfig) -> Converged {
    let h = alphabet.dim();
    let n = idx.len();
    let run = |seed: &[f64], out: &mut [f64]| {
        if reversed {
            backward_pass(idx, alphabet, seed, out)
        } else {
            forward_pass(idx, alphabet, seed, out)
        }
    };
    // Bootstrap from the corner of the symbol that precedes the head in
    // circular order; a single-symbol sequence then sits on its corner at once.
    let wrap = if reversed { idx[0] } else { idx[n - 1] };
    let mut prev = vec![0.0; n * h];
    run(alphabet.corner(wrap as usize), &mut prev);
    let mut cur = vec![0.0; n * h];
    let mut passes = 1;
    let mut delta = None;
    let mut converged = false;
    while passes < config.max_passes {
        let seed = if reversed {
            first_row(&prev, h)
        } else {
            last_row(&prev, h)
        };
        run(&seed, &mut cur);
        passes += 1;
        let d = max_abs_diff(&cur, &prev);
        delta = Some(d);
        std::mem::swap(&mut prev, &mut cur);
        if d <= config.epsilon {
            converged = true;
            break;
        }
    }
    Converged {
        matrix: prev,
        passes,
        converged,
        delta,
    }
}

/// Encodes `seq` under `config`.
///
/// Non-convergence within `max_passes` is not an error: the returned map has
/// `converged() == false` and a warning is logged.
pub fn encode(seq: &[char], alphabet: &Alphabet, config: &EncoderConfig) -> Result<UsmMap> {
    config.validate()?;
    if seq.is_empty() {
        return Err(UsmError::EmptySequence);
    }
    let idx = alphabet.indices(seq)?;
    let h = alphabet.dim();
    let n = idx.len();

    let (forward, backward, passes_used, converged, last_delta) = match config.seed_mode {
        SeedMode::Midpoint => {
            let seed = vec![0.5; h];
            let mut fwd = vec![0.0; n * h];
            let mut bwd = vec![0.0; n * h];
            rayon::join(
                || forward_pass(&idx, alphabet, &seed, &mut fwd),
                || backward_pass(&idx, alphabet, &seed, &mut bwd),
            );
            (fwd, bwd, 1, true, None)
        }
        SeedMode::Circular => {
            let (f, b) = rayon::join(
                || circular(&idx, alphabet, false, config),
                || circular(&idx, alphabet, true, config),
            );
            let delta = match (f.delta, b.delta) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            };
            (
                f.matrix,
                b.matrix,
                f.passes.max(b.passes),
                f.converged && b.converged,
                delta,
            )
        }
        SeedMode::Bidirectional => {
            let mut fwd = vec![0.0; n * h];
            let mut bwd = vec![0.0; n * h];
            // Reflection puts s_1 before s_1, so its corner starts the first sweep.
            forward_pass(&idx, alphabet, alphabet.corner(idx[0] as usize), &mut fwd);
            backward_pass(&idx, alphabet, &last_row(&fwd, h), &mut bwd);
            let mut next_fwd = vec![0.0; n * h];
            let mut next_bwd = vec![0.0; n * h];
            let mut passes = 1;
            let mut delta = None;
            let mut converged = false;
            while passes < config.max_passes {
                forward_pass(&idx, alphabet, &first_row(&bwd, h), &mut next_fwd);
                backward_pass(&idx, alphabet, &last_row(&next_fwd, h), &mut next_bwd);
                passes += 1;
                let d = max_abs_diff(&next_fwd, &fwd).max(max_abs_diff(&next_bwd, &bwd));
                delta = Some(d);
                std::mem::swap(&mut fwd, &mut next_fwd);
                std::mem::swap(&mut bwd, &mut next_bwd);
                if d <= config.epsilon {
                    converged = true;
                    break;
                }
            }
            (fwd, bwd, passes, converged, delta)
        }
    };

    if !converged {
        log::warn!(
            "{} seeding did not converge within {} passes (last delta {:?})",
            config.seed_mode,
            config.max_passes,
            last_delta
        );
    }

    Ok(UsmMap {
        sequence: seq.to_vec(),
        alphabet: alphabet.clone(),
        forward,
        backward,
        seed_mode: config.seed_mode,
        passes_used,
        converged,
        last_delta,
    })
}

/// Unfolds `coords` into the `depth` most recently encoded symbols, most
/// recent first.
///
/// Each step reads one bit per dimension (`1` when the coordinate is at least
/// `1/2`), emits the symbol on that corner, then unfolds `u <- 2u - bit`.
pub fn decode(
    coords: &[f64],
    depth: usize,
    alphabet: &Alphabet,
    precision_horizon: usize,
) -> Result<Vec<char>> {
    let h = alphabet.dim();
    if coords.len() != h {
        return Err(UsmError::DimensionMismatch {
            got: coords.len(),
            expected: h,
        });
    }
    if let Some(&v) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(UsmError::OutOfUnitRange {
            what: "coordinate",
            value: v,
        });
    }
    if depth == 0 || depth > precision_horizon {
        return Err(UsmError::DepthOutOfRange {
            depth,
            horizon: precision_horizon,
        });
    }
    let mut u = coords.to_vec();
    let mut bits = vec![0u8; h];
    let mut out = Vec::with_capacity(depth);
    for step in 1..=depth {
        for (b, x) in bits.iter_mut().zip(u.iter_mut()) {
            *b = u8::from(*x >= 0.5);
            *x = 2.0 * *x - f64::from(*b);
        }
        let s = alphabet
            .symbol_of_corner(&bits)
            .map_err(|_| UsmError::NotGeneratedByAlphabet { step })?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn dna() -> Alphabet {
        Alphabet::from_symbols("ACGT".chars()).unwrap()
    }

    // Coordinates of GATTACA under classic midpoint seeding, per dimension.
    const FWD_X: [f64; 7] = [
        0.75, 0.375, 0.6875, 0.84375, 0.421875, 0.2109375, 0.10546875,
    ];
    const FWD_Y: [f64; 7] = [
        0.25, 0.125, 0.5625, 0.78125, 0.390625, 0.6953125, 0.34765625,
    ];
    const BWD_X: [f64; 7] = [
        0.69140625, 0.3828125, 0.765625, 0.53125, 0.0625, 0.125, 0.25,
    ];
    const BWD_Y: [f64; 7] = [
        0.20703125, 0.4140625, 0.828125, 0.65625, 0.3125, 0.625, 0.25,
    ];

    #[test]
    fn gattaca_single_passes_are_bit_exact() {
        let abc = dna();
        let seq = chars("GATTACA");
        let fwd = encode_pass(&seq, &abc, &[0.5, 0.5], false).unwrap();
        let bwd = encode_pass(&seq, &abc, &[0.5, 0.5], true).unwrap();
        for i in 0..7 {
            assert_eq!(fwd[2 * i].to_bits(), FWD_X[i].to_bits());
            assert_eq!(fwd[2 * i + 1].to_bits(), FWD_Y[i].to_bits());
            assert_eq!(bwd[2 * i].to_bits(), BWD_X[i].to_bits());
            assert_eq!(bwd[2 * i + 1].to_bits(), BWD_Y[i].to_bits());
        }
    }

    #[test]
    fn midpoint_encode_matches_single_passes() {
        let map = encode(
            &chars("GATTACA"),
            &dna(),
            &EncoderConfig::new(SeedMode::Midpoint),
        )
        .unwrap();
        assert_eq!(map.column(Direction::Forward, 0), FWD_X);
        assert_eq!(map.column(Direction::Forward, 1), FWD_Y);
        assert_eq!(map.column(Direction::Backward, 0), BWD_X);
        assert_eq!(map.column(Direction::Backward, 1), BWD_Y);
        assert!(map.converged());
        assert_eq!(map.passes_used(), 1);
        assert_eq!(map.last_delta(), None);
    }

    #[test]
    fn corner_is_a_fixed_point() {
        let out = encode_pass(&chars("AA"), &dna(), &[0.0, 0.0], false).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn repeated_symbol_lands_on_its_corner() {
        for mode in [SeedMode::Circular, SeedMode::Bidirectional] {
            let map = encode(&chars("AAAAAAAA"), &dna(), &EncoderConfig::new(mode)).unwrap();
            assert!(map.forward().iter().all(|&u| u == 0.0), "{mode}");
            assert!(map.backward().iter().all(|&u| u == 0.0), "{mode}");
            let map = encode(&chars("TTT"), &dna(), &EncoderConfig::new(mode)).unwrap();
            assert!(map.forward().iter().all(|&u| u == 1.0), "{mode}");
            assert!(map.backward().iter().all(|&u| u == 1.0), "{mode}");
        }
    }

    #[test]
    fn gattaca_circular_converges_quickly() {
        let map = encode(
            &chars("GATTACA"),
            &dna(),
            &EncoderConfig::new(SeedMode::Circular),
        )
        .unwrap();
        assert!(map.converged());
        assert!(map.passes_used() <= 10, "{}", map.passes_used());
        assert!(map.last_delta().unwrap() <= DEFAULT_EPSILON);
    }

    #[test]
    fn pass_cap_is_soft() {
        let config = EncoderConfig {
            max_passes: 1,
            ..EncoderConfig::new(SeedMode::Circular)
        };
        let map = encode(&chars("GATTACA"), &dna(), &config).unwrap();
        assert!(!map.converged());
        assert_eq!(map.passes_used(), 1);
        assert_eq!(map.len(), 7);
    }

    #[test]
    fn decode_inverts_both_directions() {
        let abc = dna();
        let map = encode(
            &chars("GATTACA"),
            &abc,
            &EncoderConfig::new(SeedMode::Midpoint),
        )
        .unwrap();
        assert_eq!(map.forward_at(6), &[0.10546875, 0.34765625]);
        assert_eq!(
            decode(map.forward_at(6), 7, &abc, 52).unwrap(),
            chars("ACATTAG")
        );
        assert_eq!(map.backward_at(0), &[0.69140625, 0.20703125]);
        assert_eq!(
            decode(map.backward_at(0), 7, &abc, 52).unwrap(),
            chars("GATTACA")
        );
        assert_eq!(decode(&[1.0, 1.0], 3, &abc, 52).unwrap(), chars("TTT"));
    }

    #[test]
    fn decode_errors() {
        let abc = dna();
        assert_eq!(
            decode(&[0.5, 0.5], 53, &abc, 52),
            Err(UsmError::DepthOutOfRange {
                depth: 53,
                horizon: 52
            })
        );
        assert!(matches!(
            decode(&[0.5, 0.5], 0, &abc, 52),
            Err(UsmError::DepthOutOfRange { .. })
        ));
        assert!(matches!(
            decode(&[1.5, 0.5], 1, &abc, 52),
            Err(UsmError::OutOfUnitRange { .. })
        ));
        // Three symbols leave corner [1,1] unassigned.
        let abc3 = Alphabet::from_symbols("ACG".chars()).unwrap();
        assert_eq!(
            decode(&[0.25, 0.75], 2, &abc3, 52),
            Err(UsmError::NotGeneratedByAlphabet { step: 2 })
        );
    }

    #[test]
    fn encode_errors() {
        let abc = dna();
        assert_eq!(
            encode(&[], &abc, &EncoderConfig::default()),
            Err(UsmError::EmptySequence)
        );
        assert_eq!(
            encode(&chars("ACNT"), &abc, &EncoderConfig::default()),
            Err(UsmError::UnknownSymbol {
                symbol: 'N',
                position: Some(3)
            })
        );
        let bad = EncoderConfig {
            epsilon: -1.0,
            ..EncoderConfig::default()
        };
        assert!(matches!(
            encode(&chars("AC"), &abc, &bad),
            Err(UsmError::InvalidConfig(_))
        ));
        assert!(matches!(
            encode_pass(&chars("AC"), &abc, &[0.5], false),
            Err(UsmError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            encode_pass(&chars("AC"), &abc, &[0.5, 2.0], false),
            Err(UsmError::OutOfUnitRange { .. })
        ));
    }

    #[test]
    fn seed_mode_round_trips_through_text() {
        for mode in SeedMode::ALL {
            assert_eq!(mode.as_str().parse::<SeedMode>().unwrap(), mode);
        }
        assert!("middle".parse::<SeedMode>().is_err());
        assert_eq!(
            "backward".parse::<Direction>().unwrap(),
            Direction::Backward
        );
    }
}
