//! Symmetric eigenvalue machinery: a cyclic Jacobi sweep for real symmetric
//! matrices, with a Hermitian front-end via the standard real 2N x 2N
//! embedding `[[X, -Y], [Y, X]]`.

use num_complex::Complex64;

use crate::dense::RealMatrix;
use crate::tower::CMatrix;

const SWEEP_LIMIT: usize = 40;
const OFF_TOL: f64 = 1e-28;

/// Eigenvalues and (column) eigenvectors of a real symmetric matrix by cyclic
/// Jacobi rotations. The input is consumed as a working copy.
pub fn symmetric_eigen(matrix: &RealMatrix) -> (Vec<f64>, RealMatrix) {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let mut v = RealMatrix::identity(n);

    for _ in 0..SWEEP_LIMIT {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let x = a.get(p + 1, q + 1);
                off += x * x;
            }
        }
        let scale = a.fro_sq().max(1e-300);
        if off <= OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p + 1, q + 1);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p + 1, p + 1);
                let aqq = a.get(q + 1, q + 1);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }

    let eigs = (0..n).map(|i| a.get(i + 1, i + 1)).collect();
    (eigs, v)
}

/// Applies the two-sided Jacobi rotation `G^T A G` in place.
fn rotate(a: &mut RealMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.dim();
    for j in 0..n {
        let ajp = a.get(j + 1, p + 1);
        let ajq = a.get(j + 1, q + 1);
        a.set(j + 1, p + 1, c * ajp - s * ajq);
        a.set(j + 1, q + 1, s * ajp + c * ajq);
    }
    for j in 0..n {
        let apj = a.get(p + 1, j + 1);
        let aqj = a.get(q + 1, j + 1);
        a.set(p + 1, j + 1, c * apj - s * aqj);
        a.set(q + 1, j + 1, s * apj + c * aqj);
    }
}

fn rotate_columns(v: &mut RealMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = v.dim();
    for j in 0..n {
        let vjp = v.get(j + 1, p + 1);
        let vjq = v.get(j + 1, q + 1);
        v.set(j + 1, p + 1, c * vjp - s * vjq);
        v.set(j + 1, q + 1, s * vjp + c * vjq);
    }
}

/// Real 2N x 2N embedding of a complex Hermitian matrix `H = X + iY`.
fn real_embedding(h: &CMatrix) -> RealMatrix {
    let n = h.dim();
    let mut m = RealMatrix::zeros(2 * n);
    for i in 1..=n {
        for j in 1..=n {
            let z = *h.get(i, j);
            m.set(i, j, z.re);
            m.set(n + i, n + j, z.re);
            m.set(i, n + j, -z.im);
            m.set(n + i, j, z.im);
        }
    }
    m
}

/// Eigenvalues of a complex Hermitian matrix (each appears twice in the real
/// embedding; one copy of each pair is returned).
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.dim();
    let (mut eigs, _) = symmetric_eigen(&real_embedding(h));
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs.into_iter().step_by(2).take(n).collect()
}

/// Spectral rounding of a Hermitian matrix: the spectral projection onto the
/// eigenspaces with eigenvalue >= 1/2.
pub fn spectral_round_half(h: &CMatrix) -> CMatrix {
    let n = h.dim();
    let (eigs, v) = symmetric_eigen(&real_embedding(h));
    // P_real = sum of w w^T over selected eigenvectors; it is itself the real
    // embedding of the complex spectral projection.
    let m = 2 * n;
    let mut p_real = RealMatrix::zeros(m);
    for (idx, lambda) in eigs.iter().enumerate() {
        if *lambda < 0.5 {
            continue;
        }
        for i in 0..m {
            let wi = v.get(i + 1, idx + 1);
            if wi == 0.0 {
                continue;
            }
            for j in 0..m {
                let wj = v.get(j + 1, idx + 1);
                p_real.set(i + 1, j + 1, p_real.get(i + 1, j + 1) + wi * wj);
            }
        }
    }
    let mut p = CMatrix::zeros(h.level());
    for i in 1..=n {
        for j in 1..=n {
            // Average the two redundant copies of each block for symmetry.
            let re = 0.5 * (p_real.get(i, j) + p_real.get(n + i, n + j));
            let im = 0.5 * (p_real.get(n + i, j) - p_real.get(i, n + j));
            p.set(i, j, Complex64::new(re, im));
        }
    }
    // Exact Hermitian symmetrization of the reconstruction.
    let adj = p.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let sym = p.add(&adj).expect("same level").scale(&half);
    sym
}
