//! Plain dense square matrices of arbitrary side, used by the projection
//! synthesis routines (which are not tied to power-of-two sides) and by the
//! symmetric eigenvalue solver. 1-based accessors, like everything else.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tower::{CMatrix, Level};

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n: usize) -> Self {
        RealMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i - 1) * self.n + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i - 1) * self.n + (j - 1)] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n + i]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn fro_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(RealMatrix { n, data: out })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(RealMatrix { n: self.n, data })
    }

    /// Frobenius norm of `A - A^T`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.data[i * n + j] - self.data[j * n + i];
                s += 2.0 * d * d;
            }
        }
        s.sqrt()
    }

    /// Frobenius norm of `A^2 - A`.
    pub fn idempotence_defect(&self) -> f64 {
        let sq = self.mul(self).expect("same size");
        sq.sub(self).expect("same size").fro_sq().sqrt()
    }

    pub fn to_general(&self) -> GeneralMatrix {
        let data = self.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        GeneralMatrix { n: self.n, data }
    }

    /// Reinterprets a power-of-two-sided matrix as a tower matrix.
    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        self.to_general().to_cmatrix()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl GeneralMatrix {
    pub fn zeros(n: usize) -> Self {
        GeneralMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i - 1) * self.n + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[(i - 1) * self.n + (j - 1)] = v;
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.data[i * self.n + i]).collect()
    }

    pub fn normalized_trace(&self) -> Complex64 {
        let sum: Complex64 = (0..self.n).map(|i| self.data[i * self.n + i]).sum();
        sum / self.n as f64
    }

    pub fn fro_sq(&self) -> f64 {
        self.data.iter().map(|v| v.re * v.re + v.im * v.im).sum()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(GeneralMatrix { n, data: out })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GeneralMatrix { n: self.n, data })
    }

    pub fn selfadjoint_defect(&self) -> f64 {
        self.sub(&self.adjoint())
            .expect("same size")
            .fro_sq()
            .sqrt()
    }

    pub fn idempotence_defect(&self) -> f64 {
        let sq = self.mul(self).expect("same size");
        sq.sub(self).expect("same size").fro_sq().sqrt()
    }

    /// Converts to a tower matrix when the side is a power of two.
    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        if !self.n.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: self.n.next_power_of_two(),
                got: self.n,
            });
        }
        let level = Level::new(self.n.trailing_zeros())?;
        let mut out = CMatrix::zeros(level);
        for i in 1..=self.n {
            for j in 1..=self.n {
                out.set(i, j, self.get(i, j));
            }
        }
        Ok(out)
    }

    pub fn from_cmatrix(m: &CMatrix) -> Self {
        let n = m.dim();
        let mut out = Self::zeros(n);
        for i in 1..=n {
            for j in 1..=n {
                out.set(i, j, *m.get(i, j));
            }
        }
        out
    }
}
