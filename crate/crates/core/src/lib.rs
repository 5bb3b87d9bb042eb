//! A numerical laboratory for diagonal synthesis on the dyadic matrix tower.
//!
//! The crate models a trace-normalized operator framework at finite matrix
//! levels `2^k` and provides:
//!
//! - the coherent interleaving embedding between levels, diagonal
//!   compression, normalized trace and factor 2-norms ([`tower`]);
//! - exact arithmetic in `Q(sqrt 2)` to verify the closed-form rotation
//!   distance identities and the contraction constant with zero rounding
//!   ([`exact`]);
//! - the block rotations `W_m` with an `O(N^2)` conjugation kernel
//!   ([`walsh`]);
//! - the rotation flow up the tower, its contraction diagnostics, the
//!   closed-form diagonal predictor and the piecewise-linear limit profile
//!   ([`flow`]);
//! - constructive synthesis of projections with prescribed diagonal, by
//!   rotation chains or circulant conjugation ([`synth`]);
//! - a chain explorer measuring whether prescribed-diagonal projection
//!   chains contract between levels ([`strategy`]).

pub mod dense;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod flow;
pub mod io;
pub mod scalar;
pub mod seeds;
pub mod strategy;
pub mod synth;
pub mod tower;
pub mod walsh;

pub use dense::{GeneralMatrix, RealMatrix};
pub use error::{Error, Result};
pub use exact::{QuadExt, QuadExtComplex};
pub use flow::{lambda, IterationTrace, SeedSpec};
pub use scalar::{RealScalar, Scalar};
pub use tower::{CDiagonal, CMatrix, DiagonalVector, Level, MatrixAtLevel, ToleranceConfig};
pub use walsh::WalshIndex;
