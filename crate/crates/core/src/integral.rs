//! Operator versions of the truncated power integrals, spectral truncation
//! and convergence traces over refining schedules.
//!
//! `z̃_m^M(h)` and `z_m^M(h)` omit the `[0,m)` and `(M,∞)` parts of the
//! integral, so they stay below `h^α` in the Loewner order; the omitted mass
//! is reported through [`operator_tail_bound`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operator::{Block, Density, Hermitian, Operator};
use crate::quadrature::{tail_bounds, truncated_integral, QuadratureScheme, Representation};
use crate::spectral::{loewner_leq, power_of, spectral_decompose, SpectralDecomposition, DEFAULT_CLUSTER_TOL};

/// Slack allowed when checking monotone traces.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Tolerance of the Loewner bound `z ≤ h^α` recorded at each stage.
pub const ORDER_TOL: f64 = 1e-10;

/// How the operator integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorPath {
    /// Scalar integral on every eigenvalue cluster.
    #[default]
    Spectral,
    /// Weighted sum of resolvent matrices over the quadrature nodes.
    ResolventSum,
}

fn check_exponent(exponent: f64) -> Result<()> {
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(LabError::InvalidAlpha(exponent));
    }
    Ok(())
}

fn integral_on(
    h: &Density,
    exponent: f64,
    kind: Representation,
    scheme: &QuadratureScheme,
    path: OperatorPath,
) -> Result<Hermitian> {
    check_exponent(exponent)?;
    scheme.validate()?;
    match path {
        OperatorPath::Spectral => {
            let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
            spec.apply_on_support(|t| truncated_integral(t, exponent, kind, scheme))
        }
        OperatorPath::ResolventSum => resolvent_sum(h, exponent, kind, scheme),
    }
}

fn resolvent_sum(h: &Density, exponent: f64, kind: Representation, scheme: &QuadratureScheme) -> Result<Hermitian> {
    let c = (exponent * PI).sin() / PI;
    let nodes = scheme.nodes();
    let mut blocks = Vec::with_capacity(h.blocks().len());
    for b in h.blocks() {
        let n = b.nrows();
        let numerator = match kind {
            Representation::Concave => b.clone(),
            Representation::Convex => b * b,
        };
        let mut acc = Block::zeros(n, n);
        for &(s, w) in &nodes {
            let shifted = b + Block::identity(n, n) * crate::eigen::C64::new(s, 0.0);
            let inv = shifted
                .try_inverse()
                .ok_or_else(|| LabError::NumericalFailure(format!("singular resolvent at s = {s:e}")))?;
            acc += (&numerator * inv) * crate::eigen::C64::new(c * w * s.powf(exponent - 1.0), 0.0);
        }
        blocks.push(acc);
    }
    Ok(Hermitian::mirrored(Operator::from_blocks(h.algebra_arc().clone(), blocks)?))
}

/// `z̃_m^M(h) = (sin απ/π) ∫_m^M s^{α−1} h(s1+h)^{-1} ds` for `α ∈ (0,1)`.
pub fn z_tilde(h: &Density, alpha: f64, scheme: &QuadratureScheme) -> Result<Hermitian> {
    integral_on(h, alpha, Representation::Concave, scheme, OperatorPath::Spectral)
}

pub fn z_tilde_with(h: &Density, alpha: f64, scheme: &QuadratureScheme, path: OperatorPath) -> Result<Hermitian> {
    integral_on(h, alpha, Representation::Concave, scheme, path)
}

/// `z_m^M(h) = (sin βπ/π) ∫_m^M s^{β−1} h²(s1+h)^{-1} ds`, approximating
/// `h^{1+β}` for `β ∈ (0,1)`.
pub fn z_convex(h: &Density, beta: f64, scheme: &QuadratureScheme) -> Result<Hermitian> {
    integral_on(h, beta, Representation::Convex, scheme, OperatorPath::Spectral)
}

pub fn z_convex_with(h: &Density, beta: f64, scheme: &QuadratureScheme, path: OperatorPath) -> Result<Hermitian> {
    integral_on(h, beta, Representation::Convex, scheme, path)
}

/// `τ` of the omitted tails, summed over eigenvalue clusters.
pub fn operator_tail_bound(
    spec: &SpectralDecomposition,
    exponent: f64,
    kind: Representation,
    scheme: &QuadratureScheme,
) -> Result<f64> {
    spec.trace_on_support(|t| {
        let (lo, hi) = tail_bounds(t, exponent, kind, scheme);
        lo + hi
    })
}

/// `h_n`: the spectral part of `h` on `[0, n]`.
pub fn truncate(h: &Density, n: f64) -> Result<Hermitian> {
    if !(n > 0.0) {
        return Err(LabError::InvalidParameter(format!("truncation level {n} must be positive")));
    }
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    if spec.eigenvalues()[0] <= n {
        return Ok(h.hermitian().clone());
    }
    spec.apply(|t| if t > n { 0.0 } else { t })
}

/// A refining sequence of stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Growing integration ranges.
    Cutoffs { schemes: Vec<QuadratureScheme> },
    /// Growing truncation levels at a fixed scheme.
    Truncation { levels: Vec<f64>, scheme: QuadratureScheme },
}

impl Schedule {
    /// `(1e-2,1e2), (1e-4,1e4), (1e-6,1e6), (1e-8,1e8)`.
    pub fn default_cutoffs() -> Self {
        let schemes = [2, 4, 6, 8]
            .iter()
            .map(|&e| QuadratureScheme::new(10f64.powi(-e), 10f64.powi(e)).expect("valid cutoffs"))
            .collect();
        Schedule::Cutoffs { schemes }
    }

    pub fn len(&self) -> usize {
        match self {
            Schedule::Cutoffs { schemes } => schemes.len(),
            Schedule::Truncation { levels, .. } => levels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(LabError::InvalidSchedule("empty schedule".into()));
        }
        match self {
            Schedule::Cutoffs { schemes } => {
                for s in schemes {
                    s.validate()?;
                }
                for (i, w) in schemes.windows(2).enumerate() {
                    if !w[0].is_refined_by(&w[1]) || w[0] == w[1] {
                        return Err(LabError::InvalidSchedule(format!(
                            "stage {} [{:e}, {:e}] does not refine [{:e}, {:e}]",
                            i + 1,
                            w[1].lower,
                            w[1].upper,
                            w[0].lower,
                            w[0].upper
                        )));
                    }
                }
            }
            Schedule::Truncation { levels, scheme } => {
                scheme.validate()?;
                if levels.iter().any(|&n| !(n > 0.0)) {
                    return Err(LabError::InvalidSchedule("truncation levels must be positive".into()));
                }
                if let Some(i) = levels.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(LabError::InvalidSchedule(format!(
                        "truncation level {} is not above {}",
                        levels[i + 1],
                        levels[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStage {
    pub lower: f64,
    pub upper: f64,
    /// Truncation level, for truncation schedules.
    pub level: Option<f64>,
    /// `τ(z)` at this stage.
    pub trace_value: f64,
    /// `‖z − target‖₁`.
    pub l1_gap: f64,
    /// `τ` of the omitted tails (zero for truncation schedules).
    pub tail_bound: f64,
    /// `z ≤ target` in the Loewner order.
    pub loewner_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub alpha: f64,
    pub representation: Representation,
    pub stages: Vec<ConvergenceStage>,
    /// Traces nondecreasing and gaps nonincreasing, up to [`MONOTONE_SLACK`].
    pub monotone_flag: bool,
    pub loewner_ok: bool,
}

impl ConvergenceTrace {
    pub fn final_gap(&self) -> f64 {
        self.stages.last().map(|s| s.l1_gap).unwrap_or(f64::NAN)
    }

    pub fn traces(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.trace_value).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.l1_gap).collect()
    }
}

/// `values` nondecreasing and `gaps` nonincreasing up to the slack.
pub fn monotone(values: &[f64], gaps: &[f64]) -> bool {
    let up = values
        .windows(2)
        .all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[0].abs().max(1.0));
    let down = gaps
        .windows(2)
        .all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].abs().max(1.0));
    up && down
}

fn split_alpha(alpha: f64) -> Result<(f64, Representation)> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok((alpha, Representation::Concave))
    } else if alpha > 1.0 && alpha < 2.0 {
        Ok((alpha - 1.0, Representation::Convex))
    } else {
        Err(LabError::InvalidAlpha(alpha))
    }
}

/// Runs `schedule` for `α ∈ (0,1)` (`z̃` against `h^α`) or `α ∈ (1,2)`
/// (`z` with `β = α − 1` against `h^α`).
///
/// Truncation schedules compare `z(h_n)` with `z(h)` at the fixed scheme.
pub fn convergence_diagnostic(h: &Density, alpha: f64, schedule: &Schedule) -> Result<ConvergenceTrace> {
    let (exponent, kind) = split_alpha(alpha)?;
    schedule.validate()?;
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;

    let stages: Vec<ConvergenceStage> = match schedule {
        Schedule::Cutoffs { schemes } => {
            let target = power_of(&spec, alpha)?;
            schemes
                .par_iter()
                .map(|scheme| {
                    let z = spec.apply_on_support(|t| truncated_integral(t, exponent, kind, scheme))?;
                    Ok(ConvergenceStage {
                        lower: scheme.lower,
                        upper: scheme.upper,
                        level: None,
                        trace_value: z.trace_re(),
                        l1_gap: target.sub(&z).l1_norm(),
                        tail_bound: operator_tail_bound(&spec, exponent, kind, scheme)?,
                        loewner_ok: loewner_leq(&z, &target, ORDER_TOL)?.holds,
                    })
                })
                .collect::<Result<_>>()?
        }
        Schedule::Truncation { levels, scheme } => {
            let full = spec.apply_on_support(|t| truncated_integral(t, exponent, kind, scheme))?;
            levels
                .par_iter()
                .map(|&n| {
                    let hn = truncate(h, n)?;
                    let z = spectral_decompose(&hn, DEFAULT_CLUSTER_TOL)?
                        .apply_on_support(|t| truncated_integral(t, exponent, kind, scheme))?;
                    Ok(ConvergenceStage {
                        lower: scheme.lower,
                        upper: scheme.upper,
                        level: Some(n),
                        trace_value: z.trace_re(),
                        l1_gap: full.sub(&z).l1_norm(),
                        tail_bound: 0.0,
                        loewner_ok: loewner_leq(&z, &full, ORDER_TOL)?.holds,
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let values: Vec<f64> = stages.iter().map(|s| s.trace_value).collect();
    let gaps: Vec<f64> = stages.iter().map(|s| s.l1_gap).collect();
    Ok(ConvergenceTrace {
        alpha,
        representation: kind,
        monotone_flag: monotone(&values, &gaps),
        loewner_ok: stages.iter().all(|s| s.loewner_ok),
        stages,
    })
}
