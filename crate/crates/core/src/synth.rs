//! Constructive synthesis of projections with a prescribed diagonal.
//!
//! Two routes are provided. The rotation chain starts from a diagonal 0/1
//! projection and fixes one diagonal entry at a time with plane rotations
//! (at most `N - 1` of them), reaching any feasible real target. The
//! circulant route conjugates a coordinate projection by the discrete Fourier
//! matrix, giving a projection whose diagonal is exactly constant `m/N`; it
//! is also the finite model of a subalgebra on which the diagonal compression
//! collapses to the scalar trace.

use num_complex::Complex64;

use crate::dense::{GeneralMatrix, RealMatrix};
use crate::error::{Error, Result};
use crate::tower::ToleranceConfig;

/// Entrywise tolerance for matching a synthesized diagonal to its target.
pub const DIAG_MATCH_TOL: f64 = 1e-9;

/// Default tolerance for trace integrality of a target.
pub const FEAS_TOL: f64 = 1e-9;

/// A prescribed projection diagonal: values in `[0, 1]` with integral sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTarget {
    d: Vec<f64>,
    m: usize,
}

impl DiagonalTarget {
    pub fn new(d: Vec<f64>) -> Result<DiagonalTarget> {
        if d.is_empty() {
            return Err(Error::InfeasibleTarget {
                message: "empty target".into(),
            });
        }
        if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InfeasibleTarget {
                message: format!("entry {bad} outside [0, 1]"),
            });
        }
        let sum: f64 = d.iter().sum();
        let m = sum.round();
        if (sum - m).abs() > FEAS_TOL {
            return Err(Error::InfeasibleTarget {
                message: format!(
                    "trace {sum} is not integral (nearest projection trace {m}, gap {:e})",
                    (sum - m).abs()
                ),
            });
        }
        Ok(DiagonalTarget { d, m: m as usize })
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// The projection trace (number of eigenvalues equal to one).
    pub fn rank(&self) -> usize {
        self.m
    }
}

/// Feasibility of a raw diagonal: each entry in `[0, 1]` and integral sum.
/// In `[0,1]^N` this is exactly majorization by `(1^m, 0^{N-m})`.
pub fn majorization_feasible(d: &[f64]) -> bool {
    DiagonalTarget::new(d.to_vec()).is_ok()
}

/// Result of the rotation-chain synthesis.
#[derive(Debug, Clone)]
pub struct HornSynthesis {
    pub matrix: RealMatrix,
    pub rotations: usize,
}

/// Builds a real symmetric projection with diagonal `target`.
///
/// Work happens in the frame of positions sorted by descending target (ties
/// by index), starting from the diagonal projection whose ones sit at the
/// largest targets. Each rotation realizes one T-transform of the current
/// diagonal values: take the last sorted slot whose value still exceeds its
/// target and the first later slot whose value falls short; their values
/// bracket both targets, so a plane rotation of that pair sets one of the two
/// diagonal entries exactly to its target (whichever side exhausts first) and
/// hands the partner the trace-exact leftover. The side that was set retires,
/// so cross terms between still-active positions stay zero and every rotation
/// is a pure two-value mix; majorization of the remaining targets by the
/// remaining values is preserved at every step, which guarantees a bracketing
/// pair until everything is fixed, after at most `N - 1` rotations. The
/// constructed off-diagonal entry is given the nonnegative sign whenever
/// there is a choice.
pub fn horn_projection(target: &DiagonalTarget, cfg: &ToleranceConfig) -> Result<HornSynthesis> {
    let n = target.len();
    let d = target.values();

    // Positions sorted by descending target value, ties by ascending index.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite").then(a.cmp(&b)));

    // Targets and current values in the sorted frame.
    let x: Vec<f64> = order.iter().map(|&pos| d[pos]).collect();
    let mut y: Vec<f64> = (0..n)
        .map(|i| if i < target.rank() { 1.0 } else { 0.0 })
        .collect();

    let mut p = RealMatrix::zeros(n);
    for &pos in order.iter().take(target.rank()) {
        p.set(pos + 1, pos + 1, 1.0);
    }

    let mut rotations = 0usize;
    loop {
        let Some(j) = (0..n).rev().find(|&i| y[i] - x[i] > BRACKET_EPS) else {
            break;
        };
        let Some(k) = ((j + 1)..n).find(|&i| x[i] - y[i] > BRACKET_EPS) else {
            break;
        };
        // y[j] > x[j] >= x[k] > y[k]: the pair brackets both targets.
        let (set_slot, keep_slot, t) = if y[j] - x[j] <= x[k] - y[k] {
            (j, k, x[j])
        } else {
            (k, j, x[k])
        };
        let a_set = y[set_slot];
        let a_keep = y[keep_slot];

        // Mix so the retiring slot lands exactly on t: c^2 a_set + s^2 a_keep = t.
        let c2 = ((t - a_keep) / (a_set - a_keep)).clamp(0.0, 1.0);
        let c = c2.sqrt();
        let mut s = (1.0 - c2).clamp(0.0, 1.0).sqrt();
        // New cross entry is c*s*(a_keep - a_set); flip s to make it nonnegative.
        if s * (a_keep - a_set) < 0.0 {
            s = -s;
        }
        apply_symmetric_rotation(&mut p, order[set_slot], order[keep_slot], c, s, t);
        y[set_slot] = t;
        y[keep_slot] = a_set + a_keep - t;
        rotations += 1;
        if rotations > n.saturating_sub(1) {
            return Err(Error::SynthesisFailure {
                message: format!("rotation budget exceeded: {rotations} > {}", n - 1),
            });
        }
    }

    let matrix = p;
    let sym = matrix.symmetry_defect();
    let idem = matrix.idempotence_defect();
    let diag = matrix.diagonal();
    let diag_err = diag
        .iter()
        .zip(d)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let trace_err = (matrix.trace() - target.rank() as f64).abs();
    if sym > 1e-12 || idem > cfg.proj_tol || diag_err > DIAG_MATCH_TOL || trace_err > FEAS_TOL {
        return Err(Error::SynthesisFailure {
            message: format!(
                "post-check failed: symmetry {sym:e}, idempotence {idem:e}, diag {diag_err:e}, trace {trace_err:e}"
            ),
        });
    }
    Ok(HornSynthesis { matrix, rotations })
}

/// Slack for bracketing comparisons against values that carry rotation
/// round-off.
const BRACKET_EPS: f64 = 1e-12;

/// Two-sided plane rotation `G^T P G` on rows/columns `i`, `j` (0-based),
/// written to preserve symmetry exactly. The rotation is the one that sends
/// the `(i, i)` diagonal entry to `target`, which is assigned outright; the
/// partner receives the trace-exact leftover. Cross terms between the two
/// rotated positions are zero when this is called (both are still active),
/// so the new cross entry is just `c s (p_jj - p_ii)`.
fn apply_symmetric_rotation(p: &mut RealMatrix, i: usize, j: usize, c: f64, s: f64, target: f64) {
    let n = p.dim();
    let pii = p.get(i + 1, i + 1);
    let pjj = p.get(j + 1, j + 1);
    let pij = p.get(i + 1, j + 1);
    for r in 0..n {
        if r == i || r == j {
            continue;
        }
        let pri = p.get(r + 1, i + 1);
        let prj = p.get(r + 1, j + 1);
        let ni = c * pri + s * prj;
        let nj = -s * pri + c * prj;
        p.set(r + 1, i + 1, ni);
        p.set(i + 1, r + 1, ni);
        p.set(r + 1, j + 1, nj);
        p.set(j + 1, r + 1, nj);
    }
    let njj = pii + pjj - target;
    let nij = c * s * (pjj - pii) + (c * c - s * s) * pij;
    p.set(i + 1, i + 1, target);
    p.set(j + 1, j + 1, njj);
    p.set(i + 1, j + 1, nij);
    p.set(j + 1, i + 1, nij);
}

/// The circulant projection `F^* diag(1_S) F` with `S = {0, .., m-1}`:
/// a projection of trace `m` whose diagonal is exactly constant `m/N`.
pub fn circulant_projection(n: usize, m: usize) -> Result<GeneralMatrix> {
    if n == 0 || m > n {
        return Err(Error::IndexOutOfRange {
            what: "circulant rank",
            index: m,
            limit: n,
        });
    }
    // P[a][b] depends only on (a - b) mod N; build that profile first.
    let tau = 2.0 * std::f64::consts::PI / n as f64;
    let roots: Vec<Complex64> = (0..n)
        .map(|t| Complex64::new((tau * t as f64).cos(), (tau * t as f64).sin()))
        .collect();
    let mut profile = vec![Complex64::new(0.0, 0.0); n];
    for (diff, slot) in profile.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..m {
            acc += roots[(s * diff) % n];
        }
        *slot = acc / n as f64;
    }
    let mut p = GeneralMatrix::zeros(n);
    for a in 1..=n {
        for b in 1..=n {
            p.set(a, b, profile[(a + n - b) % n]);
        }
    }
    Ok(p)
}

/// Verifies that the diagonal compression restricted to the circulant
/// algebra is the scalar trace: the cyclic shift's powers have vanishing
/// diagonals except at the identity power.
pub fn orthogonality_check(n: usize) -> Result<bool> {
    if n < 2 {
        return Err(Error::ArgumentOutOfRange {
            what: "orthogonality check needs N >= 2",
        });
    }
    let mut shift = GeneralMatrix::zeros(n);
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        shift.set(i, j, Complex64::new(1.0, 0.0));
    }
    let mut power = GeneralMatrix::identity(n);
    for j in 0..n {
        let diag = power.diagonal();
        let ok = if j == 0 {
            diag.iter()
                .all(|v| (v - Complex64::new(1.0, 0.0)).norm() <= 1e-13)
        } else {
            diag.iter().all(|v| v.norm() <= 1e-13)
        };
        if !ok {
            return Ok(false);
        }
        power = power.mul(&shift)?;
    }
    Ok(true)
}

/// One block of a discrete target: a set of 1-based positions sharing the
/// constant diagonal value `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub indices: Vec<usize>,
    pub alpha: f64,
}

/// A discrete target as disjoint constant blocks inside `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub n: usize,
    pub blocks: Vec<Block>,
}

impl BlockSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n];
        for b in &self.blocks {
            if !(0.0..=1.0).contains(&b.alpha) {
                return Err(Error::InfeasibleTarget {
                    message: format!("block level {} outside [0, 1]", b.alpha),
                });
            }
            if b.indices.is_empty() {
                return Err(Error::InfeasibleTarget {
                    message: "empty block".into(),
                });
            }
            for &i in &b.indices {
                if i < 1 || i > self.n {
                    return Err(Error::IndexOutOfRange {
                        what: "block",
                        index: i,
                        limit: self.n,
                    });
                }
                if seen[i - 1] {
                    return Err(Error::InfeasibleTarget {
                        message: format!("position {i} appears in two blocks"),
                    });
                }
                seen[i - 1] = true;
            }
            let mass = b.alpha * b.indices.len() as f64;
            if (mass - mass.round()).abs() > FEAS_TOL {
                return Err(Error::InfeasibleTarget {
                    message: format!(
                        "block mass {mass} is not integral; the rotation-chain synthesis \
                         on the flattened target handles such diagonals"
                    ),
                });
            }
        }
        Ok(())
    }

    /// The target diagonal spelled out over `1..=N` (zero off the blocks).
    pub fn flatten(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for b in &self.blocks {
            for &i in &b.indices {
                d[i - 1] = b.alpha;
            }
        }
        d
    }
}

/// Assembles one circulant projection per block into an `N x N` projection
/// whose diagonal matches the discrete target everywhere to 1e-12.
pub fn discrete_carpenter(spec: &BlockSpec) -> Result<GeneralMatrix> {
    spec.validate()?;
    let mut p = GeneralMatrix::zeros(spec.n);
    for b in &spec.blocks {
        let size = b.indices.len();
        let rank = (b.alpha * size as f64).round() as usize;
        let q = circulant_projection(size, rank)?;
        for (bi, &gi) in b.indices.iter().enumerate() {
            for (bj, &gj) in b.indices.iter().enumerate() {
                p.set(gi, gj, q.get(bi + 1, bj + 1));
            }
        }
    }
    let target = spec.flatten();
    let worst = p
        .diagonal()
        .iter()
        .zip(&target)
        .map(|(v, t)| (v - Complex64::new(*t, 0.0)).norm())
        .fold(0.0f64, f64::max);
    if worst > 1e-12 {
        return Err(Error::SynthesisFailure {
            message: format!("assembled diagonal misses target by {worst:e}"),
        });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::symmetric_eigen;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn feasibility_examples() {
        assert!(majorization_feasible(&[0.5, 0.5]));
        assert!(majorization_feasible(&[0.9, 0.7, 0.3, 0.1]));
        assert!(!majorization_feasible(&[0.6, 0.6]));
        assert!(!majorization_feasible(&[1.2, 0.8]));
    }

    #[test]
    fn horn_half_half_is_the_rank_one_average() {
        let t = DiagonalTarget::new(vec![0.5, 0.5]).unwrap();
        let out = horn_projection(&t, &cfg()).unwrap();
        assert_eq!(out.rotations, 1);
        for i in 1..=2 {
            for j in 1..=2 {
                assert!((out.matrix.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn horn_zero_one_targets_need_no_rotation() {
        let t = DiagonalTarget::new(vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = horn_projection(&t, &cfg()).unwrap();
        assert_eq!(out.rotations, 0);
        assert_eq!(out.matrix.get(1, 1), 1.0);
        assert_eq!(out.matrix.get(4, 4), 1.0);
        assert_eq!(out.matrix.get(2, 2), 0.0);
        assert!(out.matrix.idempotence_defect() == 0.0);
    }

    #[test]
    fn horn_generic_target_passes_posts_and_spectrum() {
        let d = vec![0.9, 0.7, 0.3, 0.1];
        let t = DiagonalTarget::new(d.clone()).unwrap();
        let out = horn_projection(&t, &cfg()).unwrap();
        assert!(out.rotations <= 3);
        assert!(out.matrix.idempotence_defect() <= 1e-8);
        for (i, want) in d.iter().enumerate() {
            assert!((out.matrix.get(i + 1, i + 1) - want).abs() <= 1e-9);
        }
        // Eigenvalues sit at {0, 1}, with rank-many ones.
        let (eigs, _) = symmetric_eigen(&out.matrix);
        let ones = eigs.iter().filter(|e| (**e - 1.0).abs() < 1e-8).count();
        let zeros = eigs.iter().filter(|e| e.abs() < 1e-8).count();
        assert_eq!(ones, 2);
        assert_eq!(zeros, 2);
    }

    #[test]
    fn horn_rejects_infeasible() {
        assert!(DiagonalTarget::new(vec![0.6, 0.6]).is_err());
    }

    #[test]
    fn circulant_two_one_is_the_average_projection() {
        let p = circulant_projection(2, 1).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                assert!((p.get(i, j) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn circulant_diagonal_is_exactly_m_over_n() {
        for (n, m) in [(4, 2), (8, 3), (12, 5), (37, 17)] {
            let p = circulant_projection(n, m).unwrap();
            let want = m as f64 / n as f64;
            for v in p.diagonal() {
                assert!((v.re - want).abs() <= 1e-13 && v.im.abs() <= 1e-13);
            }
            assert!(p.idempotence_defect() <= 1e-12);
            assert!(p.selfadjoint_defect() <= 1e-12);
            assert!((p.normalized_trace().re - want).abs() <= 1e-13);
        }
    }

    #[test]
    fn orthogonality_holds_for_small_sizes() {
        for n in [2usize, 3, 8, 16] {
            assert!(orthogonality_check(n).unwrap(), "N = {n}");
        }
    }

    #[test]
    fn random_circulants_have_scalar_diagonal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        // A circulant is a polynomial in the cyclic shift.
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let mut c = GeneralMatrix::zeros(n);
        for i in 1..=n {
            for j in 1..=n {
                c.set(i, j, coeffs[(j + n - i) % n]);
            }
        }
        let tr = c.normalized_trace();
        for v in c.diagonal() {
            assert!((v - tr).norm() <= 1e-13);
        }
    }

    #[test]
    fn discrete_carpenter_assembles_blocks() {
        let spec = BlockSpec {
            n: 6,
            blocks: vec![
                Block {
                    indices: vec![1, 2],
                    alpha: 0.5,
                },
                Block {
                    indices: vec![3, 4, 5, 6],
                    alpha: 0.25,
                },
            ],
        };
        let p = discrete_carpenter(&spec).unwrap();
        let want = [0.5, 0.5, 0.25, 0.25, 0.25, 0.25];
        for (i, w) in want.iter().enumerate() {
            assert!((p.get(i + 1, i + 1).re - w).abs() <= 1e-13);
        }
        assert!((p.normalized_trace().re - 2.0 / 6.0).abs() <= 1e-13);
        assert!(p.idempotence_defect() <= 1e-12);
    }

    #[test]
    fn discrete_carpenter_degenerate_cases() {
        // A single full block is just the circulant projection.
        let spec = BlockSpec {
            n: 4,
            blocks: vec![Block {
                indices: vec![1, 2, 3, 4],
                alpha: 0.5,
            }],
        };
        let p = discrete_carpenter(&spec).unwrap();
        let q = circulant_projection(4, 2).unwrap();
        assert!(p.sub(&q).unwrap().fro_sq() < 1e-28);

        // 0/1 blocks give the diagonal projection.
        let spec = BlockSpec {
            n: 3,
            blocks: vec![
                Block {
                    indices: vec![1, 3],
                    alpha: 1.0,
                },
                Block {
                    indices: vec![2],
                    alpha: 0.0,
                },
            ],
        };
        let p = discrete_carpenter(&spec).unwrap();
        assert_eq!(p.get(1, 1), Complex64::new(1.0, 0.0));
        assert_eq!(p.get(2, 2), Complex64::new(0.0, 0.0));
        assert_eq!(p.get(3, 3), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn discrete_carpenter_rejects_fractional_block_mass() {
        let spec = BlockSpec {
            n: 3,
            blocks: vec![Block {
                indices: vec![1, 2, 3],
                alpha: 0.5,
            }],
        };
        assert!(matches!(
            discrete_carpenter(&spec),
            Err(Error::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn block_spec_rejects_overlap_and_bad_indices() {
        let overlap = BlockSpec {
            n: 4,
            blocks: vec![
                Block {
                    indices: vec![1, 2],
                    alpha: 0.5,
                },
                Block {
                    indices: vec![2, 3],
                    alpha: 0.5,
                },
            ],
        };
        assert!(matches!(
            overlap.validate(),
            Err(Error::InfeasibleTarget { .. })
        ));

        let out_of_range = BlockSpec {
            n: 2,
            blocks: vec![Block {
                indices: vec![3],
                alpha: 1.0,
            }],
        };
        assert!(matches!(
            out_of_range.validate(),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn circulant_rejects_rank_above_dimension() {
        assert!(matches!(
            circulant_projection(4, 5),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(circulant_projection(0, 0).is_err());
    }

    #[test]
    fn horn_stress_many_random_targets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..400 {
            let n = *[2usize, 3, 5, 8, 16, 33].iter().nth(trial % 6).unwrap();
            let mut d: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            // Force integral trace by adjusting the last entries.
            let sum: f64 = d.iter().sum();
            let m = sum.round().clamp(0.0, n as f64);
            let mut excess = sum - m;
            for v in d.iter_mut() {
                let adj = excess.clamp(*v - 1.0, *v);
                *v -= adj;
                excess -= adj;
                if excess.abs() < 1e-15 {
                    break;
                }
            }
            let t = match DiagonalTarget::new(d) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let out = horn_projection(&t, &cfg()).expect("synthesis succeeds");
            assert!(
                out.rotations <= n - 1,
                "trial {trial}: {} rotations",
                out.rotations
            );
        }
    }
}
