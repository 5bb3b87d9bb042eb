//! Coherent-chain exploration: dyadic discretization of a target profile,
//! per-level projection synthesis, an optional diagonal-phase alignment
//! heuristic, and the step-distance ratio report. The instrument measures
//! whether a chain's successive embedding distances contract; it decides
//! nothing.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::step;
use crate::synth::{horn_projection, DiagonalTarget, DIAG_MATCH_TOL};
use crate::tower::{CMatrix, Level, ToleranceConfig};

/// A target profile on `[0, 1]` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction {
    Linear,
    Square,
    Const(f64),
    /// Unit jump at `t0`: zero before, one from `t0` on.
    Step(f64),
    /// Piecewise-constant on a uniform grid of `2^K` samples.
    Samples(Vec<f64>),
}

impl GFunction {
    pub fn parse(spec: &str) -> Result<GFunction> {
        match spec {
            "linear" => return Ok(GFunction::Linear),
            "square" => return Ok(GFunction::Square),
            _ => {}
        }
        if let Some(v) = spec.strip_prefix("const:") {
            let v: f64 = v.parse().map_err(|_| Error::ArgumentOutOfRange {
                what: "const:<v> needs a number",
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ArgumentOutOfRange {
                    what: "const level must be in [0, 1]",
                });
            }
            return Ok(GFunction::Const(v));
        }
        if let Some(v) = spec.strip_prefix("step:") {
            let v: f64 = v.parse().map_err(|_| Error::ArgumentOutOfRange {
                what: "step:<t0> needs a number",
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ArgumentOutOfRange {
                    what: "step point must be in [0, 1]",
                });
            }
            return Ok(GFunction::Step(v));
        }
        Err(Error::ArgumentOutOfRange {
            what: "g must be linear, square, const:<v>, step:<t0>, or a sample file",
        })
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<GFunction> {
        if samples.is_empty() || !samples.len().is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: samples.len().next_power_of_two().max(1),
                got: samples.len(),
            });
        }
        if samples
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::ArgumentOutOfRange {
                what: "samples must lie in [0, 1]",
            });
        }
        Ok(GFunction::Samples(samples))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GFunction::Linear => t,
            GFunction::Square => t * t,
            GFunction::Const(v) => *v,
            GFunction::Step(t0) => {
                if t >= *t0 {
                    1.0
                } else {
                    0.0
                }
            }
            GFunction::Samples(s) => {
                let idx = ((t * s.len() as f64).floor() as usize).min(s.len() - 1);
                s[idx]
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            GFunction::Linear => "linear".into(),
            GFunction::Square => "square".into(),
            GFunction::Const(v) => format!("const:{v}"),
            GFunction::Step(t0) => format!("step:{t0}"),
            GFunction::Samples(s) => format!("samples[{}]", s.len()),
        }
    }
}

/// A dyadic discretization of a profile: one value per cell, entries in
/// `[0, 1]`, integral total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicStep {
    level: Level,
    values: Vec<f64>,
}

impl DyadicStep {
    pub fn new(level: Level, values: Vec<f64>) -> Result<DyadicStep> {
        if values.len() != level.dim() {
            return Err(Error::DimensionMismatch {
                expected: level.dim(),
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.is_finite() || *v < -1e-12 || *v > 1.0 + 1e-12)
        {
            return Err(Error::ArgumentOutOfRange {
                what: "dyadic values must lie in [0, 1]",
            });
        }
        let mass: f64 = values.iter().sum();
        if (mass - mass.round()).abs() > 1e-9 {
            return Err(Error::InfeasibleTarget {
                message: format!("dyadic mass {mass} is not integral"),
            });
        }
        Ok(DyadicStep { level, values })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

const QUADRATURE_POINTS: usize = 16;

/// Cell averages of `g` over the dyadic partition at level `k` (16-point
/// midpoint rule per cell, exact for cell-aligned piecewise-linear
/// profiles), followed by a uniform mass correction to the nearest integer,
/// with clamping to `[0, 1]` and proportional redistribution of any clamped
/// excess.
pub fn discretize(g: &GFunction, k: u32) -> Result<DyadicStep> {
    let level = Level::new(k)?;
    let n = level.dim();
    let h = 1.0 / n as f64;
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let left = i as f64 * h;
            let mut acc = 0.0;
            for j in 0..QUADRATURE_POINTS {
                let t = left + (j as f64 + 0.5) * h / QUADRATURE_POINTS as f64;
                acc += g.eval(t);
            }
            acc / QUADRATURE_POINTS as f64
        })
        .collect();

    let raw_mass: f64 = values.iter().sum();
    let target = raw_mass.round().clamp(0.0, n as f64);
    let delta = (target - raw_mass) / n as f64;
    for v in values.iter_mut() {
        *v = (*v + delta).clamp(0.0, 1.0);
    }

    // Clamping may have moved the mass again; push the residual onto the
    // entries that still have headroom, proportionally.
    for _ in 0..64 {
        let mass: f64 = values.iter().sum();
        let excess = target - mass;
        if excess.abs() <= 1e-13 {
            let step = DyadicStep { level, values };
            debug_assert!((step.mass() - target).abs() <= 1e-12);
            return Ok(step);
        }
        let headroom: f64 = values
            .iter()
            .map(|v| if excess > 0.0 { 1.0 - v } else { *v })
            .sum();
        if headroom <= 0.0 {
            break;
        }
        for v in values.iter_mut() {
            let room = if excess > 0.0 { 1.0 - *v } else { *v };
            *v = (*v + excess * room / headroom).clamp(0.0, 1.0);
        }
    }
    Err(Error::InfeasibleTarget {
        message: format!("mass correction did not converge at level {k}"),
    })
}

/// Chain-building heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Independent synthesis per level.
    Fresh,
    /// Post-align each level to the embedding of the previous one by a
    /// diagonal unitary conjugation (which cannot move the diagonal).
    PhaseAlign,
}

impl Heuristic {
    pub fn parse(s: &str) -> Result<Heuristic> {
        match s {
            "fresh" => Ok(Heuristic::Fresh),
            "phase-align" | "phase_align" => Ok(Heuristic::PhaseAlign),
            _ => Err(Error::ArgumentOutOfRange {
                what: "heuristic must be fresh or phase-align",
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Fresh => "fresh",
            Heuristic::PhaseAlign => "phase-align",
        }
    }
}

/// One link of a projection chain.
#[derive(Debug, Clone)]
pub struct ChainLink {
    pub matrix: CMatrix,
    pub target: DyadicStep,
}

/// A sequence of projections at consecutive levels with prescribed dyadic
/// diagonals.
#[derive(Debug, Clone)]
pub struct ProjectionChain {
    links: Vec<ChainLink>,
}

impl ProjectionChain {
    pub fn new(links: Vec<ChainLink>) -> Result<ProjectionChain> {
        for pair in links.windows(2) {
            if pair[1].matrix.level().k() != pair[0].matrix.level().k() + 1 {
                return Err(Error::LevelMismatch {
                    expected: pair[0].matrix.level().k() + 1,
                    got: pair[1].matrix.level().k(),
                });
            }
        }
        Ok(ProjectionChain { links })
    }

    pub fn links(&self) -> &[ChainLink] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Verifies the projection post-checks of one chain element.
fn verify_link(matrix: &CMatrix, target: &DyadicStep, cfg: &ToleranceConfig) -> Result<()> {
    let sa = matrix.sub(&matrix.adjoint())?.fro_sq().sqrt();
    if sa > 1e-12 {
        return Err(Error::SynthesisFailure {
            message: format!("chain element not self-adjoint: defect {sa:e}"),
        });
    }
    let idem = matrix.mul(matrix)?.sub(matrix)?.fro_sq().sqrt();
    if idem > cfg.proj_tol {
        return Err(Error::SynthesisFailure {
            message: format!("chain element not idempotent: defect {idem:e}"),
        });
    }
    let worst = matrix
        .diag_compress()
        .values()
        .iter()
        .zip(target.values())
        .map(|(v, t)| (v - Complex64::new(*t, 0.0)).norm())
        .fold(0.0f64, f64::max);
    if worst > DIAG_MATCH_TOL {
        return Err(Error::SynthesisFailure {
            message: format!("chain diagonal misses target by {worst:e}"),
        });
    }
    Ok(())
}

/// Builds the chain `A_k`, `k = k_min..=k_max`, by per-level synthesis from
/// the discretized profile, optionally phase-aligning each level to the
/// embedding of the previous one.
pub fn synthesize_chain(
    g: &GFunction,
    k_min: u32,
    k_max: u32,
    heuristic: Heuristic,
    cfg: &ToleranceConfig,
) -> Result<ProjectionChain> {
    if k_min < 1 || k_min > k_max {
        return Err(Error::ArgumentOutOfRange {
            what: "need 1 <= k_min <= k_max",
        });
    }
    let mut links: Vec<ChainLink> = Vec::new();
    for k in k_min..=k_max {
        let target = discretize(g, k)?;
        let horn = horn_projection(&DiagonalTarget::new(target.values().to_vec())?, cfg)?;
        let mut matrix = horn.matrix.to_cmatrix()?;
        if heuristic == Heuristic::PhaseAlign {
            if let Some(prev) = links.last() {
                let reference = prev.matrix.embed()?;
                matrix = phase_align(&matrix, &reference)?;
            }
        }
        verify_link(&matrix, &target, cfg)?;
        links.push(ChainLink { matrix, target });
    }
    ProjectionChain::new(links)
}

const ALIGN_SWEEP_LIMIT: usize = 50;
const ALIGN_IMPROVEMENT_TOL: f64 = 1e-10;

/// Conjugates `a` by a diagonal unitary chosen by greedy coordinate descent
/// on the phases to reduce `fro^2(. - t)`. The diagonal of `a` is untouched
/// (diagonal entries are never rescaled), and the objective never increases:
/// each coordinate update is an exact one-dimensional minimizer, and the
/// original matrix is returned if rounding ever produced a worse objective.
pub fn phase_align(a: &CMatrix, t: &CMatrix) -> Result<CMatrix> {
    if a.level() != t.level() {
        return Err(Error::LevelMismatch {
            expected: t.level().k(),
            got: a.level().k(),
        });
    }
    let n = a.dim();
    let mut m = a.clone();
    let objective = |x: &CMatrix| -> f64 { x.sub(t).expect("same level").fro_sq() };
    let initial = objective(&m);
    let mut current = initial;

    for _ in 0..ALIGN_SWEEP_LIMIT {
        for i in 1..=n {
            // Optimal incremental phase u for coordinate i maximizes
            // Re(u * (w + conj(z))) with w, z the row/column overlaps with t.
            let mut w = Complex64::new(0.0, 0.0);
            let mut z = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                if j == i {
                    continue;
                }
                w += m.get(i, j) * t.get(i, j).conj();
                z += m.get(j, i) * t.get(j, i).conj();
            }
            let c = w + z.conj();
            let norm = c.norm();
            if norm <= 1e-300 {
                continue;
            }
            let u = c.conj() / norm;
            for j in 1..=n {
                if j == i {
                    continue;
                }
                m.set(i, j, u * *m.get(i, j));
                m.set(j, i, m.get(j, i) * u.conj());
            }
        }
        let next = objective(&m);
        if current - next < ALIGN_IMPROVEMENT_TOL {
            current = next;
            break;
        }
        current = next;
    }

    if current > initial {
        return Ok(a.clone());
    }
    Ok(m)
}

/// One row of a ratio report.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub k: u32,
    pub mass: f64,
    pub fro_dist_to_embed_prev: Option<f64>,
    pub r_k: Option<f64>,
}

/// The chain's step-distance ratios plus a tail estimate of their limsup.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub g: String,
    pub heuristic: String,
    pub k_min: u32,
    pub k_max: u32,
    pub rows: Vec<RatioRow>,
    /// Maximum over the last half of the defined ratios; an estimate only,
    /// with no convergence claim.
    pub limsup_estimate: Option<f64>,
}

impl RatioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mass,fro_dist_to_embed_prev,r_k\n");
        for row in &self.rows {
            let dist = row
                .fro_dist_to_embed_prev
                .map(|d| d.to_string())
                .unwrap_or_default();
            let ratio = row.r_k.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", row.k, row.mass, dist, ratio));
        }
        out
    }
}

/// Computes the per-level embedding distances and the halved squared-distance
/// ratios `r_k`; ratios where the denominator vanishes are undefined. The
/// limsup estimate is the maximum over the last half of the defined ratios.
pub fn ratio_report(
    chain: &ProjectionChain,
    g_name: &str,
    heuristic_name: &str,
) -> Result<RatioReport> {
    let links = chain.links();
    if links.len() < 3 {
        return Err(Error::ChainTooShort { len: links.len() });
    }
    let mut dist = vec![None::<f64>; links.len()];
    for i in 1..links.len() {
        let gap = links[i].matrix.sub(&links[i - 1].matrix.embed()?)?;
        dist[i] = Some(gap.fro_sq().sqrt());
    }
    let mut rows: Vec<RatioRow> = Vec::new();
    for (i, link) in links.iter().enumerate() {
        let r_k = match (dist[i], dist.get(i + 1).copied().flatten()) {
            (Some(den), Some(num)) if den > 0.0 => Some(0.5 * num * num / (den * den)),
            _ => None,
        };
        rows.push(RatioRow {
            k: link.matrix.level().k(),
            mass: link.target.mass(),
            fro_dist_to_embed_prev: dist[i],
            r_k,
        });
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.r_k).collect();
    let limsup_estimate = if defined.is_empty() {
        None
    } else {
        let tail = defined.len().div_ceil(2);
        defined[defined.len() - tail..]
            .iter()
            .copied()
            .fold(None, |acc: Option<f64>, r| {
                Some(acc.map_or(r, |a| a.max(r)))
            })
    };
    Ok(RatioReport {
        g: g_name.to_string(),
        heuristic: heuristic_name.to_string(),
        k_min: links.first().map(|l| l.matrix.level().k()).unwrap_or(0),
        k_max: links.last().map(|l| l.matrix.level().k()).unwrap_or(0),
        rows,
        limsup_estimate,
    })
}

/// Reinterprets the rotation flow from a projection seed as a chain (the
/// canonical example whose ratios satisfy the contraction bound).
pub fn chain_from_iteration(seed: &CMatrix, k_max: u32) -> Result<ProjectionChain> {
    let mut links = Vec::new();
    let mut current = seed.clone();
    loop {
        let diag: Vec<f64> = current
            .diag_compress()
            .values()
            .iter()
            .map(|v| v.re)
            .collect();
        let target = DyadicStep::new(current.level(), diag)?;
        links.push(ChainLink {
            matrix: current.clone(),
            target,
        });
        if current.level().k() >= k_max {
            break;
        }
        current = step(&current)?;
    }
    ProjectionChain::new(links)
}
