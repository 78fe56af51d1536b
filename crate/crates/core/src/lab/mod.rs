//! Executable checks of the Jensen-type inequalities, operator monotonicity
//! and the entropy-preservation statements.

mod preservation;

pub use preservation::{
    alpha_ge_2_reduction_check, jordan_isomorphism_test, preservation_test, preservation_test_with,
    relative_entropy_invariance_test, JordanVerdict, PreservationReport, PreservationVerdict, ReductionVerdict,
    RelativeEntropyVerdict, RESOLVENT_GRID,
};

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{LabError, Result};
use crate::integral::{monotone, ConvergenceStage, ConvergenceTrace};
use crate::operator::{Density, Hermitian};
use crate::quadrature::Representation;
use crate::spectral::{apply_function, loewner_leq, power, OrderVerdict};

pub const ENTROPY_TOL: f64 = 1e-10;
pub const STRUCTURAL_TOL: f64 = 1e-7;
pub const ORDER_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-9;

/// Tolerances used by the checks; embedded in every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Equality of entropies.
    pub entropy: f64,
    /// Multiplicativity and operator-equality defects.
    pub structural: f64,
    /// Loewner comparisons.
    pub order: f64,
    /// Algebraic identities and chain equalities.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            entropy: ENTROPY_TOL,
            structural: STRUCTURAL_TOL,
            order: ORDER_TOL,
            identity: IDENTITY_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Needs {
    pub positive: bool,
    pub unital: bool,
    pub trace_preserving: bool,
    pub jordan: bool,
}

pub(crate) fn require(phi: &Channel, needs: Needs) -> Result<()> {
    let p = phi.properties();
    let mut missing = Vec::new();
    if needs.positive && !p.positive {
        missing.push("positive");
    }
    if needs.unital && !p.unital {
        missing.push("unital");
    }
    if needs.trace_preserving && !p.trace_preserving {
        missing.push("trace-preserving");
    }
    if needs.jordan && !p.jordan_multiplicative {
        missing.push("Jordan-multiplicative");
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(LabError::PreconditionViolated(format!(
            "channel {} is not {}",
            phi.label(),
            missing.join(", ")
        )))
    }
}

const POSITIVE_UNITAL: Needs = Needs {
    positive: true,
    unital: true,
    trace_preserving: false,
    jordan: false,
};

const POSITIVE_UNITAL_TP: Needs = Needs {
    positive: true,
    unital: true,
    trace_preserving: true,
    jordan: false,
};

/// `Φ(h)` as a density.
pub fn image(phi: &Channel, h: &Hermitian) -> Result<Density> {
    Density::new(phi.apply_hermitian(h)?)
}

/// `Φ(h^α) ≤ Φ(h)^α` for `α ∈ (0,1)`.
pub fn jensen_concave_check(phi: &Channel, h: &Density, alpha: f64, tol: f64) -> Result<OrderVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    require(phi, POSITIVE_UNITAL)?;
    let lhs = phi.apply_hermitian(&power(h, alpha)?)?;
    let rhs = power(&image(phi, h)?, alpha)?;
    loewner_leq(&lhs, &rhs, tol)
}

/// `Φ(h)^α ≤ Φ(h^α)` for `α ∈ (1,2]`.
pub fn jensen_convex_check(phi: &Channel, h: &Density, alpha: f64, tol: f64) -> Result<OrderVerdict> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    require(phi, POSITIVE_UNITAL)?;
    let lhs = power(&image(phi, h)?, alpha)?;
    let rhs = phi.apply_hermitian(&power(h, alpha)?)?;
    loewner_leq(&lhs, &rhs, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventVerdict {
    pub s: f64,
    /// `Φ(h(s1+h)^{-1}) ≤ Φ(h)(s1+Φ(h))^{-1}`.
    pub product_form: OrderVerdict,
    /// `(s1+Φ(h))^{-1} ≤ Φ((s1+h)^{-1})`.
    pub inverse_form: OrderVerdict,
    /// `‖[Φ(h²(s1+h)^{-1}) − Φ(h)²(s1+Φ(h))^{-1}] − s²[Φ((s1+h)^{-1}) − (s1+Φ(h))^{-1}]‖_∞`.
    pub identity_defect: f64,
    pub identity_holds: bool,
}

impl ResolventVerdict {
    pub fn holds(&self) -> bool {
        self.product_form.holds && self.inverse_form.holds && self.identity_holds
    }
}

/// Both forms of the resolvent inequality and the algebraic identity tying
/// the `t²/(s+t)` kernel to the resolvent.
pub fn resolvent_jensen_check(phi: &Channel, h: &Density, s: f64, tol: f64) -> Result<ResolventVerdict> {
    if !(s > 0.0) {
        return Err(LabError::InvalidParameter(format!("resolvent shift {s} must be positive")));
    }
    require(phi, POSITIVE_UNITAL)?;
    let ph = image(phi, h)?;
    let ratio = |x: &Hermitian| apply_function(x, |t| t / (s + t));
    let inverse = |x: &Hermitian| apply_function(x, |t| 1.0 / (s + t));
    let square_ratio = |x: &Hermitian| apply_function(x, |t| t * t / (s + t));

    let product_form = loewner_leq(&phi.apply_hermitian(&ratio(h)?)?, &ratio(&ph)?, tol)?;
    let phi_inv = phi.apply_hermitian(&inverse(h)?)?;
    let inv_ph = inverse(&ph)?;
    let inverse_form = loewner_leq(&inv_ph, &phi_inv, tol)?;

    let left = phi.apply_hermitian(&square_ratio(h)?)?.sub(&square_ratio(&ph)?);
    let right = phi_inv.sub(&inv_ph).scale(s * s);
    let identity_defect = left.sub(&right).norm_inf();
    Ok(ResolventVerdict {
        s,
        product_form,
        inverse_form,
        identity_defect,
        identity_holds: identity_defect <= IDENTITY_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub alpha: f64,
    /// `τ(Φ(h^α)) − τ(Φ(h)^α)`.
    pub gap: f64,
    /// `|τ(Φ(h^α)) − τ(h^α)|`.
    pub trace_preservation_defect: f64,
    pub holds: bool,
}

/// `τ(Φ(h)^α) ≤ τ(Φ(h^α))` for `α > 1`.
pub fn trace_jensen_check(phi: &Channel, h: &Density, alpha: f64, tol: f64) -> Result<TraceVerdict> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(LabError::InvalidAlpha(alpha));
    }
    require(phi, POSITIVE_UNITAL_TP)?;
    let h_alpha = power(h, alpha)?;
    let lhs = phi.apply_hermitian(&h_alpha)?.trace_re();
    let rhs = power(&image(phi, h)?, alpha)?.trace_re();
    let gap = lhs - rhs;
    let scale = lhs.abs().max(1.0);
    let trace_preservation_defect = (lhs - h_alpha.trace_re()).abs();
    Ok(TraceVerdict {
        alpha,
        gap,
        trace_preservation_defect,
        holds: gap >= -tol * scale && trace_preservation_defect <= IDENTITY_TOL * scale,
    })
}

/// `u₁^p ≤ u₂^p` for any exponent `p > 0`, without checking that `p` is in
/// the operator-monotone range.
pub fn loewner_power_order(u1: &Density, u2: &Density, exponent: f64, tol: f64) -> Result<OrderVerdict> {
    loewner_leq(&power(u1, exponent)?, &power(u2, exponent)?, tol)
}

/// `u₁ ≤ u₂ ⟹ u₁^α ≤ u₂^α` for `α ∈ (0,1)`.
pub fn monotonicity_check(u1: &Density, u2: &Density, alpha: f64, tol: f64) -> Result<OrderVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    let pre = loewner_leq(u1, u2, tol)?;
    if !pre.holds {
        return Err(LabError::PreconditionViolated(format!(
            "inputs are not ordered (smallest eigenvalue of u2 - u1 is {:e})",
            pre.min_eigenvalue
        )));
    }
    loewner_power_order(u1, u2, alpha, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub trace: ConvergenceTrace,
    pub final_gap: f64,
    /// Last gap within the requested tolerance.
    pub converged: bool,
}

/// `‖x_n^α − x^α‖₁` along an increasing sequence `x_n ↗ x`.
pub fn l1_power_continuity_check(xs: &[Density], x: &Density, alpha: f64, tol: f64) -> Result<ContinuityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    if xs.is_empty() {
        return Err(LabError::PreconditionViolated("empty sequence".into()));
    }
    for (i, w) in xs.windows(2).enumerate() {
        if !loewner_leq(&w[0], &w[1], ORDER_TOL)?.holds {
            return Err(LabError::PreconditionViolated(format!("sequence is not increasing at {}", i + 1)));
        }
    }
    if !loewner_leq(xs.last().expect("non-empty"), x, ORDER_TOL)?.holds {
        return Err(LabError::PreconditionViolated("sequence is not below its limit".into()));
    }
    let target = power(x, alpha)?;
    let mut stages = Vec::with_capacity(xs.len());
    for (i, xn) in xs.iter().enumerate() {
        let p = power(xn, alpha)?;
        stages.push(ConvergenceStage {
            lower: f64::NAN,
            upper: f64::NAN,
            level: Some((i + 1) as f64),
            trace_value: p.trace_re(),
            l1_gap: target.sub(&p).l1_norm(),
            tail_bound: 0.0,
            loewner_ok: loewner_leq(&p, &target, ORDER_TOL)?.holds,
        });
    }
    let values: Vec<f64> = stages.iter().map(|s| s.trace_value).collect();
    let gaps: Vec<f64> = stages.iter().map(|s| s.l1_gap).collect();
    let final_gap = *gaps.last().expect("non-empty");
    Ok(ContinuityReport {
        trace: ConvergenceTrace {
            alpha,
            representation: Representation::Concave,
            monotone_flag: monotone(&values, &gaps),
            loewner_ok: stages.iter().all(|s| s.loewner_ok),
            stages,
        },
        final_gap,
        converged: final_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::channel::{build_channel, Builtin};
    use crate::integral::truncate;
    use std::sync::Arc;

    fn m2() -> Arc<BlockAlgebra> {
        Arc::new(BlockAlgebra::full(2).unwrap())
    }

    fn fixture() -> Density {
        Density::from_real(m2(), &[&[0.7, 0.2, 0.2, 0.3]]).unwrap()
    }

    fn diagonal_pinching(alg: &Arc<BlockAlgebra>) -> Channel {
        build_channel(alg.clone(), Builtin::DiagonalConditionalExpectation).unwrap()
    }

    #[test]
    fn identity_gives_equalities() {
        let id = Channel::identity(m2());
        let h = fixture();
        assert!(jensen_concave_check(&id, &h, 0.5, ORDER_TOL).unwrap().min_eigenvalue.abs() < 1e-14);
        assert!(jensen_convex_check(&id, &h, 2.0, ORDER_TOL).unwrap().min_eigenvalue.abs() < 1e-14);
        let t = trace_jensen_check(&id, &h, 3.0, ORDER_TOL).unwrap();
        assert!(t.holds && t.gap.abs() < 1e-14);
        let r = resolvent_jensen_check(&id, &h, 1.0, ORDER_TOL).unwrap();
        assert!(r.holds());
        assert!(r.product_form.min_eigenvalue.abs() < 1e-14 && r.inverse_form.min_eigenvalue.abs() < 1e-14);
    }

    #[test]
    fn pinching_fixture_gaps() {
        let h = fixture();
        let phi = diagonal_pinching(h.algebra_arc());
        let v = jensen_concave_check(&phi, &h, 0.5, ORDER_TOL).unwrap();
        assert!(v.holds && v.min_eigenvalue > 1e-3);

        // Φ(h²) − Φ(h)² = diag(0.04, 0.04)
        let v = jensen_convex_check(&phi, &h, 2.0, ORDER_TOL).unwrap();
        assert!(v.holds && (v.min_eigenvalue - 0.04).abs() < 1e-12);

        let t = trace_jensen_check(&phi, &h, 3.0, ORDER_TOL).unwrap();
        assert!(t.holds);
        assert!((t.gap - (0.48999 - 0.370)).abs() < 1e-4);
        assert!((t.gap - 0.12).abs() < 1e-12);

        for s in [0.1, 1.0, 10.0] {
            let r = resolvent_jensen_check(&phi, &h, s, ORDER_TOL).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!(r.identity_defect <= 1e-12);
        }
    }

    #[test]
    fn operator_monotonicity_and_negative_control() {
        let alg = m2();
        let one = Density::new(Hermitian::identity(alg.clone())).unwrap();
        let u2 = Density::from_real(alg.clone(), &[&[2.0, 1.0, 1.0, 2.0]]).unwrap();
        let v = monotonicity_check(&one, &u2, 0.5, ORDER_TOL).unwrap();
        assert!(v.holds);
        let expected = (3f64.sqrt() - 1.0) / 2.0;
        // eigenvalues of ((√3−1)/2)·[[1,1],[1,1]] are 0 and √3 − 1
        assert!(v.min_eigenvalue.abs() < 1e-12);
        let diff = power(&u2, 0.5).unwrap().sub(&Hermitian::identity(alg.clone()));
        assert!((diff.block(0)[(0, 1)].re - expected).abs() < 1e-12);

        let a = Density::from_real(alg.clone(), &[&[1.0, 1.0, 1.0, 1.0]]).unwrap();
        let b = Density::from_real(alg.clone(), &[&[2.0, 1.0, 1.0, 1.0]]).unwrap();
        assert!(monotonicity_check(&a, &b, 0.5, ORDER_TOL).unwrap().holds);
        let v = loewner_power_order(&a, &b, 2.0, ORDER_TOL).unwrap();
        assert!(!v.holds);
        assert!(matches!(monotonicity_check(&a, &b, 2.0, ORDER_TOL), Err(LabError::InvalidAlpha(_))));
        assert!(matches!(
            monotonicity_check(&b, &a, 0.5, ORDER_TOL),
            Err(LabError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn preconditions_are_enforced() {
        let alg = m2();
        let h = fixture();
        // x ↦ 2x − τ(x)/2·1 is unital and trace preserving but not positive.
        let mut sup = nalgebra::DMatrix::<crate::eigen::C64>::identity(4, 4) * crate::eigen::C64::new(2.0, 0.0);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            sup[(i, j)] -= crate::eigen::C64::new(0.5, 0.0);
        }
        let phi = Channel::from_superoperator(alg, sup).unwrap();
        assert!(!phi.properties().positive);
        assert!(matches!(
            jensen_concave_check(&phi, &h, 0.5, ORDER_TOL),
            Err(LabError::PreconditionViolated(_))
        ));
        assert!(matches!(
            trace_jensen_check(&phi, &h, 3.0, ORDER_TOL),
            Err(LabError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn continuity_examples() {
        let x = Density::from_real(m2(), &[&[3.0, 0.5, 0.5, 0.4]]).unwrap();
        let seq: Vec<Density> = [0.1, 1.0, 2.0, 4.0]
            .iter()
            .map(|&n| Density::new(truncate(&x, n).unwrap()).unwrap_or_else(|_| x.scaled(0.01).unwrap()))
            .collect();
        let r = l1_power_continuity_check(&seq[1..], &x, 0.5, 1e-12).unwrap();
        assert!(r.converged && r.trace.monotone_flag && r.trace.loewner_ok);
        assert_eq!(r.final_gap, 0.0);

        let alpha = 0.5;
        let scaled: Vec<Density> = (2..8).map(|n| x.scaled(1.0 - 1.0 / n as f64).unwrap()).collect();
        let r = l1_power_continuity_check(&scaled, &x, alpha, 1e-12).unwrap();
        assert!(r.trace.monotone_flag && !r.converged);
        let tx = power(&x, alpha).unwrap().trace_re();
        for (k, s) in r.trace.stages.iter().enumerate() {
            let n = (k + 2) as f64;
            let expected = (1.0 - (1.0 - 1.0 / n).powf(alpha)) * tx;
            assert!((s.l1_gap - expected).abs() < 1e-12);
        }

        let constant = vec![x.clone(), x.clone()];
        let r = l1_power_continuity_check(&constant, &x, alpha, 1e-14).unwrap();
        assert!(r.converged && r.trace.gaps().iter().all(|&g| g == 0.0));

        let bad = vec![x.clone(), x.scaled(0.5).unwrap()];
        assert!(matches!(
            l1_power_continuity_check(&bad, &x, alpha, 1e-9),
            Err(LabError::PreconditionViolated(_))
        ));
    }
}
