use thiserror::Error;

pub type Result<T> = std::result::Result<T, UsmError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UsmError {
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(char),
    #[error("unknown symbol {symbol:?}{}", position.map(|p| format!(" at position {p}")).unwrap_or_default())]
    UnknownSymbol {
        symbol: char,
        position: Option<usize>,
    },
    #[error("corner bit vector has length {got}, expected {expected}")]
    CornerLength { got: usize, expected: usize },
    #[error("unused corner {index}: no symbol is assigned to it")]
    UnusedCorner { index: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("seed has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("{what} = {value} is outside [0, 1]")]
    OutOfUnitRange { what: &'static str, value: f64 },
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
    #[error("coordinate not generated by this alphabet at step {step}")]
    NotGeneratedByAlphabet { step: usize },
    #[error("decode depth {depth} must be in 1..={horizon}")]
    DepthOutOfRange { depth: usize, horizon: usize },
    #[error("grid too large: 2^{exponent} cells exceeds the cap of {cap}")]
    GridTooLarge { exponent: usize, cap: u64 },
    #[error("resolution k must be at least 1")]
    InvalidResolution,
    #[error("fractional resolution must be a positive finite number, got {0}")]
    InvalidFractionalResolution(f64),
    #[error("pgm export needs a planar grid (h = 2), got h = {0}")]
    NotPlanar(usize),
    #[error("maps were encoded with different alphabets")]
    AlphabetMismatch,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("position {position} is outside 1..={len}")]
    PositionOutOfRange { position: usize, len: usize },
}
