//! Sparse-spreading multiple access code design.
//!
//! Signature matrices map `K` QPSK users onto `N` shared resources. The
//! crate computes their minimum distance and distance spectrum, searches for
//! labelings that maximize the minimum distance, and simulates ML and
//! message-passing detection over AWGN.

pub mod constellation;
pub mod design;
pub mod detect;
pub mod distance;
pub mod error;
pub mod graph;
pub mod presets;
pub mod signature;
pub mod sim;

pub use constellation::{DiffSymbol, Symbol};
pub use distance::{DistanceEnumerator, DminResult};
pub use error::{Error, Result};
pub use graph::{EdgeSubset, FactorGraph};
pub use signature::{PhaseEntry, SignatureMatrix};
