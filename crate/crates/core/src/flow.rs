//! The rotation flow up the tower: one step embeds a matrix and conjugates by
//! the rotation at the new level. Successive step distances contract in the
//! factor 2-norm by `lambda = 5/4 - sqrt(2)/2` per step, the diagonal flow has
//! a closed form built from dyadic interpolants, and the limit diagonal is a
//! piecewise-linear resampling of the seed diagonal.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tower::{CDiagonal, CMatrix, DiagonalVector, Level, ToleranceConfig};
use crate::walsh::WalshIndex;

/// The contraction constant `5/4 - sqrt(2)/2`.
pub fn lambda() -> f64 {
    1.25 - 0.5 * std::f64::consts::SQRT_2
}

/// A seed for the flow; the real diagonal is cached when every diagonal entry
/// has a vanishing imaginary part, enabling the diagonal diagnostics.
#[derive(Debug, Clone)]
pub struct SeedSpec {
    matrix: CMatrix,
    real_diag: Option<Vec<f64>>,
}

impl SeedSpec {
    pub fn new(matrix: CMatrix) -> Result<SeedSpec> {
        if matrix.level().k() < 1 {
            return Err(Error::ArgumentOutOfRange {
                what: "seed level must be >= 1",
            });
        }
        let diag = matrix.diag_compress();
        let real_diag = if diag.values().iter().all(|v| v.im == 0.0) {
            Some(diag.values().iter().map(|v| v.re).collect())
        } else {
            None
        };
        Ok(SeedSpec { matrix, real_diag })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn level(&self) -> Level {
        self.matrix.level()
    }

    pub fn real_diagonal(&self) -> Option<&[f64]> {
        self.real_diag.as_deref()
    }
}

/// One step of the flow: `A` at level `L` goes to the conjugated embedding at
/// level `L + 1`. The seed counts as iterate 1, so the first step yields
/// iterate 2.
pub fn step(a: &CMatrix) -> Result<CMatrix> {
    let m = WalshIndex::new(a.level().k())?;
    let mut next = a.embed()?;
    crate::walsh::conjugate_by_w_in_place(&mut next, m)?;
    Ok(next)
}

/// Per-step record of the flow.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub n: u32,
    pub level: u32,
    pub delta: f64,
    pub ratio: Option<f64>,
    pub diag_sup_err: Option<f64>,
}

/// The full flow record: step distances `delta_n` (squared factor norms of
/// consecutive-iterate gaps), their ratios, and diagonal deviations.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub k: u32,
    pub lambda: f64,
    pub steps: Vec<TraceStep>,
    pub truncated: bool,
}

impl IterationTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Lossy spreadsheet mirror; undefined fields are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,level,delta,ratio,diag_sup_err\n");
        for s in &self.steps {
            let ratio = s.ratio.map(|r| r.to_string()).unwrap_or_default();
            let dev = s.diag_sup_err.map(|d| d.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.n, s.level, s.delta, ratio, dev
            ));
        }
        out
    }

    /// Largest defined ratio, if any.
    pub fn max_ratio(&self) -> Option<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.ratio)
            .fold(None, |acc, r| {
                Some(match acc {
                    None => r,
                    Some(a) => a.max(r),
                })
            })
    }
}

/// Runs the flow from `seed` until the step distance drops below `stop_tol`
/// or the level cap is reached (the trace is then flagged truncated).
pub fn run(seed: &SeedSpec, max_level: u32, stop_tol: f64) -> Result<(IterationTrace, CMatrix)> {
    let k = seed.level().k();
    if k >= max_level {
        return Err(Error::ArgumentOutOfRange {
            what: "seed level must be below max_level",
        });
    }
    // The cap must itself be admissible.
    Level::new(max_level)?;

    let mut current = seed.matrix().clone();
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut truncated = true;
    let mut n = 1u32;

    while current.level().k() < max_level {
        let m = WalshIndex::new(current.level().k())?;
        let mut next = current.embed()?;
        // The conjugation reports the squared change as it rewrites entries,
        // which is exactly fro^2(next - embedded).
        let change = crate::walsh::conjugate_by_w_in_place(&mut next, m)?;
        n += 1;
        let delta = change * 0.5f64.powi(next.level().k() as i32);
        let diag_sup_err = match seed.real_diagonal() {
            Some(d) => Some(diag_deviation(&next, d, k, n)?.sup_err),
            None => None,
        };
        steps.push(TraceStep {
            n,
            level: next.level().k(),
            delta,
            ratio: None,
            diag_sup_err,
        });
        current = next;
        if delta < stop_tol {
            truncated = false;
            break;
        }
    }

    for i in 0..steps.len().saturating_sub(1) {
        if steps[i].delta > 0.0 {
            steps[i].ratio = Some(steps[i + 1].delta / steps[i].delta);
        }
    }

    Ok((
        IterationTrace {
            k,
            lambda: lambda(),
            steps,
            truncated,
        },
        current,
    ))
}

fn check_diag_len(d: &[f64]) -> Result<u32> {
    let len = d.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: len.next_power_of_two().max(2),
            got: len,
        });
    }
    Ok(len.trailing_zeros())
}

/// The dyadic interpolant `gamma_{l,h}^n = d_{2l-1} + (h / 2^{n-1}) (d_{2l} - d_{2l-1})`.
pub fn gamma(d: &[f64], l: usize, h: usize, n: u32) -> Result<f64> {
    let k = check_diag_len(d)?;
    if n < 1 {
        return Err(Error::ArgumentOutOfRange {
            what: "gamma needs n >= 1",
        });
    }
    let l_max = 1usize << (k - 1);
    if l < 1 || l > l_max {
        return Err(Error::IndexOutOfRange {
            what: "gamma pair",
            index: l,
            limit: l_max,
        });
    }
    let h_max = 1usize << (n - 1);
    if h > h_max {
        return Err(Error::IndexOutOfRange {
            what: "gamma offset",
            index: h,
            limit: h_max,
        });
    }
    let lo = d[2 * l - 2];
    let hi = d[2 * l - 1];
    Ok(lo + (h as f64 / h_max as f64) * (hi - lo))
}

/// Closed form for the diagonal of the `n`-th iterate of a seed with real
/// diagonal `d`: position `2^n (l-1) + 2h - 1` carries `gamma_{l,h-1}^n` and
/// position `2^n (l-1) + 2h` carries `gamma_{l,h}^n`.
pub fn predicted_diagonal(d: &[f64], k: u32, n: u32) -> Result<CDiagonal> {
    let kd = check_diag_len(d)?;
    if kd != k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            got: d.len(),
        });
    }
    if n < 1 {
        return Err(Error::ArgumentOutOfRange {
            what: "predicted_diagonal needs n >= 1",
        });
    }
    let level = Level::new(k + n - 1)?;
    let mut values = vec![Complex64::new(0.0, 0.0); level.dim()];
    let l_max = 1usize << (k - 1);
    let h_max = 1usize << (n - 1);
    for l in 1..=l_max {
        for h in 1..=h_max {
            let base = (1usize << n) * (l - 1);
            values[base + 2 * h - 2] = Complex64::new(gamma(d, l, h - 1, n)?, 0.0);
            values[base + 2 * h - 1] = Complex64::new(gamma(d, l, h, n)?, 0.0);
        }
    }
    DiagonalVector::new(level, values)
}

/// The piecewise-linear limit diagonal profile: on the dyadic interval
/// `[(j-1)/2^{k-1}, j/2^{k-1})` it interpolates from `d_{2j-1}` to `d_{2j}`,
/// and `f(1) = d_{2^k}`.
pub fn f_eval(t: f64, d: &[f64], k: u32) -> Result<f64> {
    let kd = check_diag_len(d)?;
    if kd != k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            got: d.len(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ArgumentOutOfRange {
            what: "f_eval needs t in [0, 1]",
        });
    }
    if t == 1.0 {
        return Ok(d[d.len() - 1]);
    }
    let pieces = 1usize << (k - 1);
    let j = (t * pieces as f64).floor() as usize + 1;
    Ok(piece_value(t, d, k, j))
}

/// `f` restricted to piece `j`, valid on the closed dyadic interval.
fn piece_value(t: f64, d: &[f64], k: u32, j: usize) -> f64 {
    let pieces = (1usize << (k - 1)) as f64;
    let lo = d[2 * j - 2];
    let hi = d[2 * j - 1];
    lo + pieces * (t - (j - 1) as f64 / pieces) * (hi - lo)
}

/// Structure of the gap between an iterate's diagonal and the limit profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagDeviation {
    /// Entrywise maximum deviation from the profile samples.
    pub sup_err: f64,
    /// Even sample positions match the profile to 1e-12.
    pub even_exact: bool,
    /// Every odd position deviates by exactly `-(d_{2l} - d_{2l-1}) / 2^n` to 1e-12.
    pub odd_structured: bool,
}

const STRUCT_TOL: f64 = 1e-12;

/// Compares the diagonal of the `n`-th iterate against the profile sampled at
/// `i / 2^{k+n-1}`. Samples are evaluated on the piece their dyadic block
/// belongs to, so block-boundary samples use the left piece's closed right
/// endpoint — the convention under which even positions match exactly.
pub fn diag_deviation(a_n: &CMatrix, d: &[f64], k: u32, n: u32) -> Result<DiagDeviation> {
    let kd = check_diag_len(d)?;
    if kd != k || n < 1 || a_n.level().k() != k + n - 1 {
        return Err(Error::DimensionMismatch {
            expected: 1usize << (k + n.max(1) - 1),
            got: a_n.dim(),
        });
    }
    let diag = a_n.diag_compress();
    let l_max = 1usize << (k - 1);
    let h_max = 1usize << (n - 1);
    let pow = (1u64 << n) as f64;
    let mut sup_err = 0.0f64;
    let mut even_exact = true;
    let mut odd_structured = true;
    for l in 1..=l_max {
        let gap = d[2 * l - 1] - d[2 * l - 2];
        for h in 1..=h_max {
            let base = (1usize << n) * (l - 1);
            let even_pos = base + 2 * h;
            let odd_pos = even_pos - 1;

            let f_even = gamma(d, l, h, n)?;
            let f_odd = gamma(d, l, h - 1, n)? + gap / pow;

            let diag_even = diag.get(even_pos).re;
            let diag_odd = diag.get(odd_pos).re;

            let dev_even = diag_even - f_even;
            let dev_odd = diag_odd - f_odd;

            sup_err = sup_err.max(dev_even.abs()).max(dev_odd.abs());
            if dev_even.abs() > STRUCT_TOL {
                even_exact = false;
            }
            if (dev_odd + gap / pow).abs() > STRUCT_TOL {
                odd_structured = false;
            }
        }
    }
    Ok(DiagDeviation {
        sup_err,
        even_exact,
        odd_structured,
    })
}

/// Lockstep distance record: the squared factor-norm gap between two flows at
/// every level, which the flow preserves exactly.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceSeries {
    /// The reference value `2^-k * fro^2(B - A)`.
    pub reference: f64,
    /// `factor_sq(B(n) - A(n))` for `n = 1, 2, ...`.
    pub series: Vec<f64>,
    pub constant: bool,
}

/// Iterates two seeds of equal level in lockstep up to `target_level` and
/// checks that their squared factor-norm distance stays at its seed value.
pub fn verify_distance_scaling(
    a: &CMatrix,
    b: &CMatrix,
    target_level: u32,
    cfg: &ToleranceConfig,
) -> Result<DistanceSeries> {
    if a.level() != b.level() {
        return Err(Error::LevelMismatch {
            expected: a.level().k(),
            got: b.level().k(),
        });
    }
    Level::new(target_level)?;
    let reference = b.sub(a)?.factor_sq();
    let mut series = vec![reference];
    let mut xa = a.clone();
    let mut xb = b.clone();
    while xa.level().k() < target_level {
        xa = step(&xa)?;
        xb = step(&xb)?;
        series.push(xb.sub(&xa)?.factor_sq());
    }
    let constant = series.iter().all(|s| {
        if reference == 0.0 {
            *s == 0.0
        } else {
            (s - reference).abs() <= cfg.eq_tol * reference
        }
    });
    Ok(DistanceSeries {
        reference,
        series,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::CMatrix;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag01() -> CMatrix {
        let l = Level::new(1).unwrap();
        CMatrix::from_diagonal(l, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn step_of_diag01_has_the_mixed_diagonal() {
        let a2 = step(&diag01()).unwrap();
        let want = [0.0, 0.5, 0.5, 1.0];
        for (i, w) in want.iter().enumerate() {
            assert!((a2.get(i + 1, i + 1).re - w).abs() < 1e-15);
        }
    }

    #[test]
    fn step_fixes_identity() {
        let l = Level::new(2).unwrap();
        let id = CMatrix::identity(l);
        let next = step(&id).unwrap();
        let idup = CMatrix::identity(next.level());
        assert!(next.sub(&idup).unwrap().fro_sq() < 1e-30);
    }

    #[test]
    fn two_steps_of_diag01_match_the_predicted_diagonal() {
        let a3 = step(&step(&diag01()).unwrap()).unwrap();
        let want = [0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0];
        for (i, w) in want.iter().enumerate() {
            assert!((a3.get(i + 1, i + 1).re - w).abs() < 1e-15);
        }
        let predicted = predicted_diagonal(&[0.0, 1.0], 1, 3).unwrap();
        for (i, w) in want.iter().enumerate() {
            assert!((predicted.get(i + 1).re - w).abs() < 1e-15);
        }
    }

    #[test]
    fn run_on_diag01_reproduces_the_exact_first_deltas() {
        let seed = SeedSpec::new(diag01()).unwrap();
        let (trace, _) = run(&seed, 6, 1e-300).unwrap();
        // delta_2 = 1/4 and delta_3 = (5/2 - sqrt2)/8, from the exact identities.
        let delta2 = trace.steps[0].delta;
        let delta3 = trace.steps[1].delta;
        assert!((delta2 - 0.25).abs() < 1e-15);
        let want3 = (2.5 - std::f64::consts::SQRT_2) / 8.0;
        assert!((delta3 - want3).abs() < 1e-15);
        let ratio = trace.steps[0].ratio.unwrap();
        assert!((ratio - lambda()).abs() < 1e-12);
        assert!(trace.truncated);
    }

    #[test]
    fn run_on_identity_stops_immediately() {
        let l = Level::new(1).unwrap();
        let seed = SeedSpec::new(CMatrix::identity(l)).unwrap();
        let (trace, _) = run(&seed, 8, 1e-12).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].n, 2);
        assert_eq!(trace.steps[0].delta, 0.0);
        assert!(trace.steps[0].ratio.is_none());
        assert!(!trace.truncated);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(&[0.0, 1.0], 1, 2, 3).unwrap(), 0.5);
        assert!((gamma(&[0.2, 0.6], 1, 1, 2).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            gamma(&[0.0, 1.0], 2, 0, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            gamma(&[0.0, 1.0], 1, 3, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn gamma_recursion_relations() {
        let d = [0.13, 0.87, 0.4, 0.95];
        for l in 1..=2usize {
            for n in 1..=5u32 {
                for h in 1..=(1usize << (n - 1)) {
                    let g = gamma(&d, l, h, n).unwrap();
                    assert!((g - gamma(&d, l, 2 * h, n + 1).unwrap()).abs() < 1e-14);
                    let mid = 0.5 * (gamma(&d, l, h - 1, n).unwrap() + g);
                    assert!((mid - gamma(&d, l, 2 * h - 1, n + 1).unwrap()).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn predicted_diagonal_spec_examples() {
        let p = predicted_diagonal(&[0.2, 0.6, 1.0, 0.4], 2, 2).unwrap();
        let want = [0.2, 0.4, 0.4, 0.6, 1.0, 0.7, 0.7, 0.4];
        for (i, w) in want.iter().enumerate() {
            assert!((p.get(i + 1).re - w).abs() < 1e-15);
        }

        // n = 1 returns the diagonal itself.
        let d = [0.3, 0.8, 0.1, 0.9];
        let p = predicted_diagonal(&d, 2, 1).unwrap();
        for (i, w) in d.iter().enumerate() {
            assert_eq!(p.get(i + 1).re, *w);
        }
    }

    #[test]
    fn f_eval_examples() {
        assert!((f_eval(0.3, &[0.0, 1.0], 1).unwrap() - 0.3).abs() < 1e-15);
        let d = [0.2, 0.6, 1.0, 0.4];
        assert!((f_eval(0.25, &d, 2).unwrap() - 0.4).abs() < 1e-15);
        assert!((f_eval(0.75, &d, 2).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(f_eval(1.0, &d, 2).unwrap(), 0.4);
        assert!(f_eval(-0.1, &d, 2).is_err());
        assert!(f_eval(1.1, &d, 2).is_err());
    }

    #[test]
    fn f_matches_gamma_at_interior_even_samples() {
        let d = [0.11, 0.72, 0.95, 0.31];
        let k = 2u32;
        for n in 1..=6u32 {
            for l in 1..=2usize {
                for h in 1..=(1usize << (n - 1)) {
                    let pos = (1usize << n) * (l - 1) + 2 * h;
                    let t = pos as f64 / (1u64 << (k + n - 1)) as f64;
                    let g = gamma(&d, l, h, n).unwrap();
                    if t < l as f64 / 2.0 || t == 1.0 {
                        // Interior of the piece (or the global endpoint):
                        // the public evaluator agrees with the interpolant.
                        assert!((f_eval(t, &d, k).unwrap() - g).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn diag_deviation_on_diag01_has_the_exact_odd_shift() {
        let seed = diag01();
        let a3 = step(&step(&seed).unwrap()).unwrap();
        let dev = diag_deviation(&a3, &[0.0, 1.0], 1, 3).unwrap();
        assert!(dev.even_exact);
        assert!(dev.odd_structured);
        assert!((dev.sup_err - 0.125).abs() < 1e-15);
    }

    #[test]
    fn diag_deviation_vanishes_for_constant_diagonals() {
        let l = Level::new(2).unwrap();
        let seed = CMatrix::from_diagonal(l, &[c(0.5, 0.0); 4]).unwrap();
        let a2 = step(&seed).unwrap();
        let dev = diag_deviation(&a2, &[0.5; 4], 2, 2).unwrap();
        assert_eq!(dev.sup_err, 0.0);
    }

    #[test]
    fn distance_scaling_diag01_vs_zero() {
        let cfg = ToleranceConfig::default();
        let zero = CMatrix::zeros(Level::new(1).unwrap());
        let out = verify_distance_scaling(&diag01(), &zero, 8, &cfg).unwrap();
        assert!(out.constant);
        assert!((out.reference - 0.5).abs() < 1e-15);
        assert_eq!(out.series.len(), 8);
    }

    #[test]
    fn distance_scaling_of_equal_seeds_is_identically_zero() {
        let cfg = ToleranceConfig::default();
        let a = diag01();
        let out = verify_distance_scaling(&a, &a.clone(), 6, &cfg).unwrap();
        assert!(out.constant);
        assert!(out.series.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn run_rejects_a_seed_at_or_above_the_cap() {
        let seed = SeedSpec::new(diag01()).unwrap();
        assert!(matches!(
            run(&seed, 1, 1e-12),
            Err(Error::ArgumentOutOfRange { .. })
        ));
    }

    #[test]
    fn predicted_diagonal_respects_the_level_cap() {
        let overflow = predicted_diagonal(&[0.0, 1.0], 1, crate::tower::max_level() + 1);
        assert!(matches!(overflow, Err(Error::LevelOverflow { .. })));
    }

    #[test]
    fn diag_deviation_rejects_mismatched_dimensions() {
        let a2 = step(&diag01()).unwrap();
        assert!(matches!(
            diag_deviation(&a2, &[0.0, 1.0], 1, 3),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            diag_deviation(&a2, &[0.0, 0.3, 0.6, 1.0], 2, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lockstep_comparison_rejects_mismatched_levels() {
        let cfg = ToleranceConfig::default();
        let a = diag01();
        let b = CMatrix::identity(Level::new(2).unwrap());
        assert!(matches!(
            verify_distance_scaling(&a, &b, 6, &cfg),
            Err(Error::LevelMismatch { .. })
        ));
    }

    #[test]
    fn trace_serializes_deterministically() {
        let seed = SeedSpec::new(diag01()).unwrap();
        let (t1, _) = run(&seed, 6, 1e-12).unwrap();
        let (t2, _) = run(&seed, 6, 1e-12).unwrap();
        assert_eq!(t1.to_json(), t2.to_json());
        // The correctly rounded double of 5/4 - sqrt(2)/2.
        assert!(t1.to_json().contains("\"lambda\": 0.5428932188134524"));
        assert!(t1
            .to_csv()
            .starts_with("n,level,delta,ratio,diag_sup_err\n"));
    }
}
