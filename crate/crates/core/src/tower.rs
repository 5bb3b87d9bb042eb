//! The dyadic matrix tower: levels `k` with side `2^k`, the interleaving
//! unital embedding between consecutive levels, diagonal compression, the
//! normalized trace and the two squared 2-norms.
//!
//! All index rules below are 1-based, matching the conventions used in the
//! rest of the crate; storage is 0-based row-major internally.

use std::sync::atomic::{AtomicU32, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};

/// Default cap on the tower height: level 11 means side 2048, about 67 MB per
/// dense complex matrix, which keeps full experiment sweeps laptop-sized.
pub const DEFAULT_MAX_LEVEL: u32 = 11;

static MAX_LEVEL: AtomicU32 = AtomicU32::new(DEFAULT_MAX_LEVEL);

/// The currently configured level cap.
pub fn max_level() -> u32 {
    MAX_LEVEL.load(Ordering::Relaxed)
}

/// Overrides the level cap process-wide (the CLI wires this to the
/// `CARPENTER_MAX_LEVEL` environment variable).
pub fn set_max_level(max: u32) {
    MAX_LEVEL.store(max, Ordering::Relaxed);
}

/// A dyadic level `k`; matrices at this level have side `N = 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level {
    k: u32,
}

impl Level {
    pub fn new(k: u32) -> Result<Level> {
        let max = max_level();
        if k > max {
            return Err(Error::LevelOverflow { k, max });
        }
        Ok(Level { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Side length `N = 2^k`.
    pub fn dim(&self) -> usize {
        1usize << self.k
    }

    pub fn up(&self) -> Result<Level> {
        Level::new(self.k + 1)
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.k)
    }
}

/// Comparison tolerances used by classification and verification routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Equality tolerance for scalar/diagonal comparisons.
    pub eq_tol: f64,
    /// Tolerance for the self-adjoint / idempotence / positivity checks.
    pub proj_tol: f64,
    /// Additive slack allowed on contraction-ratio bounds.
    pub ratio_slack: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eq_tol: 1e-10,
            proj_tol: 1e-8,
            ratio_slack: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eq_tol > 0.0 && self.proj_tol > 0.0 && self.ratio_slack > 0.0 {
            Ok(())
        } else {
            Err(Error::ArgumentOutOfRange {
                what: "tolerances must be strictly positive",
            })
        }
    }
}

/// Structural flags reported by [`MatrixAtLevel::classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureFlags {
    pub selfadjoint: bool,
    pub positive: bool,
    pub projection: bool,
}

/// A dense square matrix attached to a dyadic level.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAtLevel<S: Scalar> {
    level: Level,
    data: Vec<S>,
}

/// The floating realization used by all numeric experiments.
pub type CMatrix = MatrixAtLevel<Complex64>;

impl<S: Scalar> MatrixAtLevel<S> {
    pub fn zeros(level: Level) -> Self {
        let n = level.dim();
        MatrixAtLevel {
            level,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(level: Level) -> Self {
        let mut m = Self::zeros(level);
        let n = level.dim();
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(level: Level, rows: Vec<Vec<S>>) -> Result<Self> {
        let n = level.dim();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(MatrixAtLevel { level, data })
    }

    /// Builds a diagonal matrix from 1-based diagonal values.
    pub fn from_diagonal(level: Level, values: &[S]) -> Result<Self> {
        let n = level.dim();
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.len(),
            });
        }
        let mut m = Self::zeros(level);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = v.clone();
        }
        Ok(m)
    }

    /// The canonical matrix unit `e_{ij}` (1-based indices).
    pub fn matrix_unit(level: Level, i: usize, j: usize) -> Result<Self> {
        let n = level.dim();
        if i < 1 || i > n {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: i,
                limit: n,
            });
        }
        if j < 1 || j > n {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: j,
                limit: n,
            });
        }
        let mut m = Self::zeros(level);
        m.data[(i - 1) * n + (j - 1)] = S::one();
        Ok(m)
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.level.dim()
    }

    /// 1-based entry access.
    pub fn get(&self, i: usize, j: usize) -> &S {
        let n = self.dim();
        assert!(
            i >= 1 && i <= n && j >= 1 && j <= n,
            "1-based index ({i},{j}) out of range"
        );
        &self.data[(i - 1) * n + (j - 1)]
    }

    /// 1-based entry assignment.
    pub fn set(&mut self, i: usize, j: usize, value: S) {
        let n = self.dim();
        assert!(
            i >= 1 && i <= n && j >= 1 && j <= n,
            "1-based index ({i},{j}) out of range"
        );
        self.data[(i - 1) * n + (j - 1)] = value;
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        let n = self.dim();
        assert!(i >= 1 && i <= n);
        &self.data[(i - 1) * n..i * n]
    }

    /// The interleaving unital embedding one level up: each entry `A(i,j)`
    /// becomes the pair of entries `(2i-1, 2j-1)` and `(2i, 2j)`; mixed-parity
    /// positions are zero.
    pub fn embed(&self) -> Result<Self> {
        let up = self.level.up()?;
        let n = self.dim();
        let m = up.dim();
        let mut out = vec![S::zero(); m * m];
        for i in 0..n {
            for j in 0..n {
                let v = &self.data[i * n + j];
                if v.is_zero() {
                    continue;
                }
                out[(2 * i) * m + 2 * j] = v.clone();
                out[(2 * i + 1) * m + 2 * j + 1] = v.clone();
            }
        }
        Ok(MatrixAtLevel {
            level: up,
            data: out,
        })
    }

    /// Diagonal compression `E_D`: keeps the diagonal, kills the rest.
    pub fn diag_compress(&self) -> DiagonalVector<S> {
        let n = self.dim();
        let values = (0..n).map(|i| self.data[i * n + i].clone()).collect();
        DiagonalVector {
            level: self.level,
            values,
        }
    }

    /// The normalized trace `(1/N) * sum of diagonal entries`.
    pub fn normalized_trace(&self) -> S {
        let n = self.dim();
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + self.data[i * n + i].clone();
        }
        acc.div_pow2(self.level.k())
    }

    /// Squared Frobenius norm and squared factor 2-norm `2^-k * fro_sq`.
    pub fn norms(&self) -> (S::Real, S::Real) {
        let mut fro = S::Real::zero();
        for v in &self.data {
            fro = fro + v.abs_sq();
        }
        let factor = fro.div_pow2(self.level.k());
        (fro, factor)
    }

    pub fn fro_sq(&self) -> S::Real {
        self.norms().0
    }

    pub fn factor_sq(&self) -> S::Real {
        self.norms().1
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j].conj();
            }
        }
        MatrixAtLevel {
            level: self.level,
            data: out,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(MatrixAtLevel {
            level: self.level,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Ok(MatrixAtLevel {
            level: self.level,
            data,
        })
    }

    pub fn scale(&self, s: &S) -> Self {
        let data = self.data.iter().map(|a| a.clone() * s.clone()).collect();
        MatrixAtLevel {
            level: self.level,
            data,
        }
    }

    /// Dense product; fine for oracles and small levels, the rotation kernel
    /// never calls it.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let n = self.dim();
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l].clone();
                if a.is_zero() {
                    continue;
                }
                let brow = &other.data[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o = o.clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(MatrixAtLevel {
            level: self.level,
            data: out,
        })
    }

    fn check_level(&self, other: &Self) -> Result<()> {
        if self.level == other.level {
            Ok(())
        } else {
            Err(Error::LevelMismatch {
                expected: self.level.k(),
                got: other.level.k(),
            })
        }
    }
}

impl CMatrix {
    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        let adj = self.adjoint();
        let n = self.dim();
        let mut out = self.clone();
        for i in 0..n * n {
            out.data[i] = (self.data[i] + adj.data[i]) * Complex64::new(0.5, 0.0);
        }
        out
    }

    /// Structural classification: self-adjointness by `fro(A - A*)`,
    /// idempotence by `fro(A^2 - A)`, positivity by the smallest eigenvalue of
    /// the Hermitian part. Non-self-adjoint inputs are reported not positive
    /// without an eigen-solve.
    pub fn classify(&self, cfg: &ToleranceConfig) -> StructureFlags {
        let sa_defect = self
            .sub(&self.adjoint())
            .expect("same level")
            .fro_sq()
            .sqrt();
        let selfadjoint = sa_defect <= cfg.proj_tol;
        let projection = selfadjoint && {
            let sq = self.mul(self).expect("same level");
            sq.sub(self).expect("same level").fro_sq().sqrt() <= cfg.proj_tol
        };
        let positive = selfadjoint && {
            let h = self.hermitian_part();
            let eigs = crate::eigen::hermitian_eigenvalues(&h);
            eigs.into_iter().fold(f64::INFINITY, f64::min) >= -cfg.proj_tol
        };
        StructureFlags {
            selfadjoint,
            positive,
            projection,
        }
    }

    /// Squared Frobenius idempotence defect `fro(A^2 - A)^2`, row-parallel.
    pub fn idempotence_defect_fro(&self) -> f64 {
        use rayon::prelude::*;
        let n = self.dim();
        let data = &self.data;
        let row_sums: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for l in 0..n {
                    let a = data[i * n + l];
                    if a.re == 0.0 && a.im == 0.0 {
                        continue;
                    }
                    let brow = &data[l * n..(l + 1) * n];
                    for (o, b) in acc.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
                let mut s = 0.0;
                for (j, o) in acc.iter().enumerate() {
                    let d = *o - data[i * n + j];
                    s += d.re * d.re + d.im * d.im;
                }
                s
            })
            .collect();
        row_sums.iter().sum::<f64>().sqrt()
    }
}

/// A masa element at a level: the image of the diagonal compression.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalVector<S: Scalar> {
    level: Level,
    values: Vec<S>,
}

pub type CDiagonal = DiagonalVector<Complex64>;

impl<S: Scalar> DiagonalVector<S> {
    pub fn new(level: Level, values: Vec<S>) -> Result<Self> {
        if values.len() != level.dim() {
            return Err(Error::DimensionMismatch {
                expected: level.dim(),
                got: values.len(),
            });
        }
        Ok(DiagonalVector { level, values })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based access.
    pub fn get(&self, i: usize) -> &S {
        assert!(
            i >= 1 && i <= self.values.len(),
            "1-based index {i} out of range"
        );
        &self.values[i - 1]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn as_matrix(&self) -> MatrixAtLevel<S> {
        MatrixAtLevel::from_diagonal(self.level, &self.values).expect("lengths agree")
    }

    /// Embeds the diagonal one level up by doubling every entry across an
    /// odd/even index pair.
    pub fn embed(&self) -> Result<Self> {
        let up = self.level.up()?;
        let mut values = Vec::with_capacity(2 * self.values.len());
        for v in &self.values {
            values.push(v.clone());
            values.push(v.clone());
        }
        Ok(DiagonalVector { level: up, values })
    }

    pub fn normalized_trace(&self) -> S {
        let mut acc = S::zero();
        for v in &self.values {
            acc = acc + v.clone();
        }
        acc.div_pow2(self.level.k())
    }
}

/// The discrete positive operator with diagonal `i/2^k`, `i = 1..2^k`.
pub fn x_discrete(level: Level) -> CDiagonal {
    let n = level.dim();
    let scale = 0.5f64.powi(level.k() as i32);
    let values = (1..=n)
        .map(|i| Complex64::new(i as f64 * scale, 0.0))
        .collect();
    DiagonalVector { level, values }
}
