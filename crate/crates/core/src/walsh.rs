//! The rotation unitaries `W_m` and their efficient application.
//!
//! `W_1` is the 4x4 unitary that mixes the middle two coordinates by a
//! 45-degree rotation; `W_m` is the direct sum of `2^{m-1}` copies of `W_1`
//! and acts at level `m+1`. Conjugation by `W_m` therefore decomposes over
//! the 4x4 blocks of its argument, giving an `O(N^2)` kernel: per block, a
//! butterfly on the middle row pair followed by one on the middle column
//! pair. No dense triple product anywhere.

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};
use crate::tower::{max_level as max_level_now, Level, MatrixAtLevel};

/// Index `m >= 1` of a rotation `W_m`, acting at matrix level `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalshIndex {
    m: u32,
}

impl WalshIndex {
    pub fn new(m: u32) -> Result<WalshIndex> {
        if m < 1 {
            return Err(Error::ArgumentOutOfRange {
                what: "Walsh index m must be >= 1",
            });
        }
        // W_m lives at level m+1; constructing that level enforces the cap.
        let level = m.checked_add(1).ok_or(Error::LevelOverflow {
            k: m,
            max: max_level_now(),
        })?;
        Level::new(level)?;
        Ok(WalshIndex { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// The level `m + 1` at which `W_m` acts.
    pub fn acting_level(&self) -> Level {
        Level::new(self.m + 1).expect("validated at construction")
    }
}

/// The 4x4 rotation
/// `W_1 = (1 0 0 0; 0 c -c 0; 0 c c 0; 0 0 0 1)` with `c = 1/sqrt2`.
pub fn w1<S: Scalar>() -> MatrixAtLevel<S> {
    let level = Level::new(2).expect("level 2 is always admissible");
    let c = S::inv_sqrt2();
    let mut w = MatrixAtLevel::zeros(level);
    w.set(1, 1, S::one());
    w.set(2, 2, c.clone());
    w.set(2, 3, -c.clone());
    w.set(3, 2, c.clone());
    w.set(3, 3, c);
    w.set(4, 4, S::one());
    w
}

/// The dense `W_m`: block-diagonal with `2^{m-1}` copies of `W_1`.
pub fn w<S: Scalar>(index: WalshIndex) -> MatrixAtLevel<S> {
    let level = index.acting_level();
    let block: MatrixAtLevel<S> = w1();
    let mut out = MatrixAtLevel::zeros(level);
    let copies = 1usize << (index.m() - 1);
    for b in 0..copies {
        let off = 4 * b;
        for i in 1..=4 {
            for j in 1..=4 {
                let v = block.get(i, j).clone();
                if !v.is_zero() {
                    out.set(off + i, off + j, v);
                }
            }
        }
    }
    out
}

/// Blockwise conjugation `W_m * X * W_m^*` for `X` at level `m + 1`.
///
/// Per 4x4 block: corners are untouched; the middle row pair of the edge
/// columns and the middle column pair of the edge rows get the one-sided
/// butterfly `(a, b) -> (c (a - b), c (a + b))`; the middle 2x2 combines both
/// sides, where `c^2` is written as an exact halving so that diagonal blocks
/// mix by exact averages (the identity is fixed bit-for-bit). Each block's
/// arithmetic is fixed, so results do not depend on traversal order.
pub fn conjugate_by_w<S: Scalar>(
    x: &MatrixAtLevel<S>,
    index: WalshIndex,
) -> Result<MatrixAtLevel<S>> {
    let mut out = x.clone();
    conjugate_by_w_in_place(&mut out, index)?;
    Ok(out)
}

/// In-place form of [`conjugate_by_w`]; returns the squared Frobenius norm of
/// the change, accumulated over the modified entries as they are rewritten
/// (untouched entries contribute nothing).
pub fn conjugate_by_w_in_place<S: Scalar>(
    x: &mut MatrixAtLevel<S>,
    index: WalshIndex,
) -> Result<S::Real> {
    let level = index.acting_level();
    if x.level() != level {
        return Err(Error::LevelMismatch {
            expected: level.k(),
            got: x.level().k(),
        });
    }
    let n = x.dim();
    let c = S::inv_sqrt2();
    let data = x.raw_mut();
    let at = |r: usize, col: usize| r * n + col;
    let mut change = <S::Real as RealScalar>::zero();

    for g in (0..n).step_by(4) {
        for h in (0..n).step_by(4) {
            let m22 = data[at(g + 1, h + 1)].clone();
            let m23 = data[at(g + 1, h + 2)].clone();
            let m32 = data[at(g + 2, h + 1)].clone();
            let m33 = data[at(g + 2, h + 2)].clone();

            // Middle column pair of the edge rows (row butterfly untouched).
            for r in [g, g + 3] {
                let a = data[at(r, h + 1)].clone();
                let b = data[at(r, h + 2)].clone();
                let na = c.clone() * (a.clone() - b.clone());
                let nb = c.clone() * (a.clone() + b.clone());
                change = change + (na.clone() - a).abs_sq() + (nb.clone() - b).abs_sq();
                data[at(r, h + 1)] = na;
                data[at(r, h + 2)] = nb;
            }
            // Middle row pair of the edge columns (column butterfly untouched).
            for col in [h, h + 3] {
                let a = data[at(g + 1, col)].clone();
                let b = data[at(g + 2, col)].clone();
                let na = c.clone() * (a.clone() - b.clone());
                let nb = c.clone() * (a.clone() + b.clone());
                change = change + (na.clone() - a).abs_sq() + (nb.clone() - b).abs_sq();
                data[at(g + 1, col)] = na;
                data[at(g + 2, col)] = nb;
            }
            // Middle 2x2: both butterflies, with c^2 folded to an exact half.
            let y22 = (m22.clone() - m32.clone() - m23.clone() + m33.clone()).div_pow2(1);
            let y23 = (m22.clone() - m32.clone() + m23.clone() - m33.clone()).div_pow2(1);
            let y32 = (m22.clone() + m32.clone() - m23.clone() - m33.clone()).div_pow2(1);
            let y33 = (m22.clone() + m32.clone() + m23.clone() + m33.clone()).div_pow2(1);
            change = change
                + (y22.clone() - m22).abs_sq()
                + (y23.clone() - m23).abs_sq()
                + (y32.clone() - m32).abs_sq()
                + (y33.clone() - m33).abs_sq();
            data[at(g + 1, h + 1)] = y22;
            data[at(g + 1, h + 2)] = y23;
            data[at(g + 2, h + 1)] = y32;
            data[at(g + 2, h + 2)] = y33;
        }
    }

    Ok(change)
}

/// The diagonal mixing rule induced by conjugation: in every 4-entry group
/// the outer positions stay put and the middle two are both replaced by
/// their mean.
pub fn diag_after_w<S: Scalar>(
    d: &crate::tower::DiagonalVector<S>,
) -> Result<crate::tower::DiagonalVector<S>> {
    if d.level().k() < 2 {
        return Err(Error::ArgumentOutOfRange {
            what: "diag_after_w needs level >= 2",
        });
    }
    let mut values = d.values().to_vec();
    for g in (0..values.len()).step_by(4) {
        let mean = (values[g + 1].clone() + values[g + 2].clone()).div_pow2(1);
        values[g + 1] = mean.clone();
        values[g + 2] = mean;
    }
    crate::tower::DiagonalVector::new(d.level(), values)
}
