//! Deterministic seed matrices for experiments: the standard named seeds and
//! seeded random generators (general, self-adjoint, projection via spectral
//! rounding at 1/2, and real diagonals in [0, 1]).

use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::spectral_round_half;
use crate::error::{Error, Result};
use crate::tower::{CMatrix, Level};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in [-1, 1].
pub fn random_matrix<R: Rng>(level: Level, rng: &mut R) -> CMatrix {
    let n = level.dim();
    let mut m = CMatrix::zeros(level);
    for i in 1..=n {
        for j in 1..=n {
            let re = 2.0 * rng.gen::<f64>() - 1.0;
            let im = 2.0 * rng.gen::<f64>() - 1.0;
            m.set(i, j, Complex64::new(re, im));
        }
    }
    m
}

/// Symmetrized random matrix `(A + A*) / 2`.
pub fn random_selfadjoint<R: Rng>(level: Level, rng: &mut R) -> CMatrix {
    random_matrix(level, rng).hermitian_part()
}

/// Random projection: spectral rounding of a random self-adjoint matrix
/// at eigenvalue threshold 1/2.
pub fn random_projection<R: Rng>(level: Level, rng: &mut R) -> CMatrix {
    spectral_round_half(&random_selfadjoint(level, rng))
}

/// Random diagonal matrix with entries uniform in [0, 1].
pub fn random_real_diagonal<R: Rng>(level: Level, rng: &mut R) -> CMatrix {
    let values: Vec<Complex64> = (0..level.dim())
        .map(|_| Complex64::new(rng.gen::<f64>(), 0.0))
        .collect();
    CMatrix::from_diagonal(level, &values).expect("lengths agree")
}

/// The standard named seeds accepted by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedSeed {
    /// `diag(0, 1)` at level 1.
    Diag01,
    Identity,
    RandSa,
    RandProj,
}

impl FromStr for NamedSeed {
    type Err = Error;

    fn from_str(s: &str) -> Result<NamedSeed> {
        match s {
            "diag01" => Ok(NamedSeed::Diag01),
            "identity" => Ok(NamedSeed::Identity),
            "rand-sa" => Ok(NamedSeed::RandSa),
            "rand-proj" => Ok(NamedSeed::RandProj),
            _ => Err(Error::ArgumentOutOfRange {
                what: "seed must be diag01, identity, rand-sa, rand-proj, or a matrix file",
            }),
        }
    }
}

impl NamedSeed {
    pub fn build(&self, k: u32, rng_seed: u64) -> Result<CMatrix> {
        let level = Level::new(k)?;
        match self {
            NamedSeed::Diag01 => {
                if k != 1 {
                    return Err(Error::ArgumentOutOfRange {
                        what: "diag01 lives at level 1",
                    });
                }
                CMatrix::from_diagonal(level, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            }
            NamedSeed::Identity => Ok(CMatrix::identity(level)),
            NamedSeed::RandSa => Ok(random_selfadjoint(level, &mut rng_from_seed(rng_seed))),
            NamedSeed::RandProj => Ok(random_projection(level, &mut rng_from_seed(rng_seed))),
        }
    }
}
