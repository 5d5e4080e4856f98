//! Universal Sequence Maps.
//!
//! A sequence over any finite alphabet is embedded in the unit hypercube by
//! two iterated maps, one running forward and one backward. The coordinates
//! are a bijective encoding of each position's context, so they can be
//! decoded back to symbols, binned into k-mer frequency tables at any
//! resolution, and compared with an exact alignment-free similarity metric.
//!
//! ```
//! use usm::{encode, Alphabet, EncoderConfig, SeedMode};
//!
//! let seq: Vec<char> = "GATTACA".chars().collect();
//! let abc = Alphabet::infer(seq.iter().copied()).unwrap();
//! let map = encode(&seq, &abc, &EncoderConfig::new(SeedMode::Midpoint)).unwrap();
//! assert_eq!(map.forward_at(0), &[0.75, 0.25]);
//! ```

pub mod alphabet;
pub mod encoder;
pub mod error;
pub mod fcgr;
pub mod oracle;
pub mod similarity;

pub use alphabet::Alphabet;
pub use encoder::{decode, encode, encode_pass, Direction, EncoderConfig, SeedMode, UsmMap};
pub use error::{Result, UsmError};
pub use fcgr::{bin, density_at, export_grid, Binner, DensityGrid, GridFormat};
pub use similarity::{crosstab, sn, sn_direction, SnTable};
