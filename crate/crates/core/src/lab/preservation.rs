use serde::{Deserialize, Serialize};

use super::{image, require, Needs, Tolerances, POSITIVE_UNITAL_TP};
use crate::channel::classify::INJECTIVE_TOL;
use crate::channel::Channel;
use crate::entropy::{extended_real, relative_entropy, renyi_entropy, renyi_from_spectrum, support, EntropyValue};
use crate::error::{LabError, Result};
use crate::operator::{Density, Operator};
use crate::random::{random_density, seeded_rng, DensityOptions};
use crate::spectral::{apply_function, power, power_of, spectral_decompose, DEFAULT_CLUSTER_TOL};

/// Shifts at which the resolvent equality is confirmed.
pub const RESOLVENT_GRID: [f64; 3] = [0.1, 1.0, 10.0];

/// Support-inclusion tolerance for relative entropies.
const SUPPORT_TOL: f64 = 1e-7;

const CONSISTENCY_SEED: u64 = 0x6a0d_7e57;
const CONSISTENCY_SAMPLES: usize = 4;
const CONSISTENCY_ALPHAS: [f64; 3] = [0.5, 2.0, 3.0];
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreservationVerdict {
    PreservedAndIsomorphic,
    PreservedButInconclusive,
    NotPreserved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub alpha: f64,
    pub s_before: EntropyValue,
    pub s_after: EntropyValue,
    pub delta_s: f64,
    /// `|τ(Φ(h^α)) − τ(Φ(h)^α)|`.
    pub trace_equality_defect: f64,
    /// `‖Φ(h^α) − Φ(h)^α‖₁`.
    pub operator_equality_defect: f64,
    /// `max_{i,j} ‖Φ(e_i)Φ(e_j) − δ_ij Φ(e_i)‖_∞` over spectral projections of `h`.
    pub multiplicativity_defect: f64,
    /// `min_i ‖Φ(e_i)‖_∞`.
    pub min_projection_image: f64,
    pub clusters: usize,
    /// Relative gap between neighbouring eigenvalue clusters.
    #[serde(with = "extended_real")]
    pub cluster_gap: f64,
    /// `max_s ‖Φ(h(s1+h)^{-1}) − Φ(h)(s1+Φ(h))^{-1}‖_∞` over [`RESOLVENT_GRID`],
    /// evaluated once the structural defects are small.
    pub resolvent_defect: Option<f64>,
    pub verdict: PreservationVerdict,
    pub tolerances: Tolerances,
}

pub fn preservation_test(phi: &Channel, h: &Density, alpha: f64, tol: f64) -> Result<PreservationReport> {
    let tolerances = Tolerances {
        entropy: tol,
        ..Tolerances::default()
    };
    preservation_test_with(phi, h, alpha, &tolerances)
}

/// Entropy before and after `Φ`, and the structural defects on the algebra
/// generated by `h`.
pub fn preservation_test_with(
    phi: &Channel,
    h: &Density,
    alpha: f64,
    tolerances: &Tolerances,
) -> Result<PreservationReport> {
    require(phi, POSITIVE_UNITAL_TP)?;
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    let s_before = renyi_from_spectrum(&spec, alpha)?;
    let ph = image(phi, h)?;
    let s_after = renyi_entropy(&ph, alpha)?;
    let delta_s = (s_after.value - s_before.value).abs();

    let h_alpha = power_of(&spec, alpha)?;
    let phi_h_alpha = phi.apply_hermitian(&h_alpha)?;
    let ph_alpha = power(&ph, alpha)?;
    let trace_phi_h_alpha = phi_h_alpha.trace_re();
    let trace_equality_defect = (trace_phi_h_alpha - ph_alpha.trace_re()).abs();
    let operator_equality_defect = phi_h_alpha.sub(&ph_alpha).l1_norm();

    // Equal entropies and equal τ(h) force equal τ(·^α).
    if delta_s <= tolerances.entropy {
        let a = s_before.trace_h_alpha;
        let drift = (trace_phi_h_alpha - a).abs() + a * (s_after.trace_h / s_before.trace_h - 1.0).abs();
        let allowed = a * ((1.0 - alpha).abs() * delta_s).exp_m1() + drift + 1e-12 * a.max(1.0);
        if trace_equality_defect > allowed * (1.0 + 1e-6) {
            return Err(LabError::Inconsistent(format!(
                "entropy preserved to {delta_s:e} but trace defect {trace_equality_defect:e} exceeds {allowed:e}"
            )));
        }
    }

    let images: Vec<Operator> = spec
        .projections()
        .iter()
        .map(|p| phi.apply(p))
        .collect::<Result<_>>()?;
    let mut multiplicativity_defect: f64 = 0.0;
    for (i, a) in images.iter().enumerate() {
        for (j, b) in images.iter().enumerate() {
            let prod = a * b;
            let d = if i == j { (&prod - a).norm_inf() } else { prod.norm_inf() };
            multiplicativity_defect = multiplicativity_defect.max(d);
        }
    }
    let min_projection_image = images.iter().map(|x| x.norm_inf()).fold(f64::INFINITY, f64::min);

    let structural = tolerances.structural;
    let mut resolvent_defect = None;
    let verdict = if delta_s > tolerances.entropy {
        PreservationVerdict::NotPreserved
    } else if operator_equality_defect <= structural
        && multiplicativity_defect <= structural
        && min_projection_image > structural
    {
        let mut worst: f64 = 0.0;
        for s in RESOLVENT_GRID {
            let ratio = |t: f64| t.max(0.0) / (s + t.max(0.0));
            let lhs = phi.apply_hermitian(&spec.apply(ratio)?)?;
            let rhs = apply_function(&ph, ratio)?;
            worst = worst.max(lhs.sub(&rhs).norm_inf());
        }
        resolvent_defect = Some(worst);
        if worst <= structural {
            PreservationVerdict::PreservedAndIsomorphic
        } else {
            PreservationVerdict::PreservedButInconclusive
        }
    } else {
        PreservationVerdict::PreservedButInconclusive
    };

    Ok(PreservationReport {
        alpha,
        s_before,
        s_after,
        delta_s,
        trace_equality_defect,
        operator_equality_defect,
        multiplicativity_defect,
        min_projection_image,
        clusters: spec.len(),
        cluster_gap: spec.cluster_gap(),
        resolvent_defect,
        verdict,
        tolerances: *tolerances,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanVerdict {
    /// `max ‖Φ(x∘y) − Φ(x)∘Φ(y)‖_∞` over Hermitian basis pairs.
    pub defect: f64,
    pub min_singular_value: f64,
    pub injective: bool,
    pub isomorphism: bool,
    /// Preservation instances replayed to confirm a positive verdict.
    pub samples_checked: usize,
    /// Largest `|ΔS_α|` among those instances.
    pub max_sample_delta: f64,
}

/// Jordan `*`-isomorphism detection. A positive verdict is cross-checked
/// against entropy preservation on seeded densities.
pub fn jordan_isomorphism_test(phi: &Channel, tol: f64) -> Result<JordanVerdict> {
    require(
        phi,
        Needs {
            unital: true,
            trace_preserving: true,
            ..Needs::default()
        },
    )?;
    let props = phi.properties();
    let defect = props.jordan_defect;
    let injective = props.min_singular_value > INJECTIVE_TOL;
    let isomorphism = defect <= tol && injective;
    let mut samples_checked = 0;
    let mut max_sample_delta: f64 = 0.0;
    if isomorphism {
        if !props.positive {
            return Err(LabError::Inconsistent(
                "Jordan-multiplicative unital map classified as not positive".into(),
            ));
        }
        let mut rng = seeded_rng(CONSISTENCY_SEED);
        for _ in 0..CONSISTENCY_SAMPLES {
            let h = random_density(phi.algebra(), &DensityOptions::default(), &mut rng)?;
            for alpha in CONSISTENCY_ALPHAS {
                let report = preservation_test_with(phi, &h, alpha, &Tolerances::default())?;
                samples_checked += 1;
                max_sample_delta = max_sample_delta.max(report.delta_s);
            }
        }
        if max_sample_delta > CONSISTENCY_TOL {
            return Err(LabError::Inconsistent(format!(
                "Jordan isomorphism changed an entropy by {max_sample_delta:e}"
            )));
        }
    }
    Ok(JordanVerdict {
        defect,
        min_singular_value: props.min_singular_value,
        injective,
        isomorphism,
        samples_checked,
        max_sample_delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeEntropyVerdict {
    #[serde(with = "extended_real")]
    pub d_before: f64,
    #[serde(with = "extended_real")]
    pub d_after: f64,
    /// `|D(Φ(h)‖Φ(k)) − D(h‖k)|`, zero when both are infinite.
    #[serde(with = "extended_real")]
    pub difference: f64,
    /// `max(‖Φ(s(h)) − s(Φ(h))‖_∞, ‖Φ(s(k)) − s(Φ(k))‖_∞)`.
    pub support_transport_defect: f64,
    pub holds: bool,
}

/// `D(Φ(h)‖Φ(k)) = D(h‖k)` for Jordan-multiplicative trace-preserving `Φ`.
pub fn relative_entropy_invariance_test(
    phi: &Channel,
    h: &Density,
    k: &Density,
    tol: f64,
) -> Result<RelativeEntropyVerdict> {
    require(
        phi,
        Needs {
            trace_preserving: true,
            jordan: true,
            ..Needs::default()
        },
    )?;
    let ph = image(phi, h)?;
    let pk = image(phi, k)?;
    let d_before = relative_entropy(h, k, SUPPORT_TOL)?;
    let d_after = relative_entropy(&ph, &pk, SUPPORT_TOL)?;
    let difference = if d_before.is_infinite() && d_after.is_infinite() {
        0.0
    } else {
        (d_after - d_before).abs()
    };
    let transport = |x: &Density, px: &Density| -> Result<f64> {
        let moved = phi.apply_hermitian(&support(x)?)?;
        Ok(moved.sub(&support(px)?).norm_inf())
    };
    let support_transport_defect = transport(h, &ph)?.max(transport(k, &pk)?);
    Ok(RelativeEntropyVerdict {
        d_before,
        d_after,
        difference,
        support_transport_defect,
        holds: difference <= tol && support_transport_defect <= tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionVerdict {
    pub alpha: f64,
    pub gamma: f64,
    /// `τ(Φ(h^α))`.
    pub lhs: f64,
    /// `τ(f(Φ(h^γ)))` with `f(t) = t^{α/γ}`.
    pub middle: f64,
    /// `τ(Φ(h)^α)`.
    pub rhs: f64,
    pub chain_holds: bool,
    /// `lhs = rhs`, i.e. `S_α` is preserved.
    pub entropy_preserved: bool,
    /// `‖Φ(h^γ) − Φ(h)^γ‖_∞`, computed when the entropy is preserved.
    pub conclusion_defect: Option<f64>,
    pub conclusion_holds: Option<bool>,
}

impl ReductionVerdict {
    pub fn holds(&self) -> bool {
        self.chain_holds && self.conclusion_holds.unwrap_or(true)
    }
}

/// `τ(Φ(h^α)) ≥ τ(f(Φ(h^γ))) ≥ τ(Φ(h)^α)` for `α ≥ 2`, `γ ∈ (1,2]`.
pub fn alpha_ge_2_reduction_check(
    phi: &Channel,
    h: &Density,
    alpha: f64,
    gamma: f64,
    tol: f64,
) -> Result<ReductionVerdict> {
    if !(alpha >= 2.0) || !alpha.is_finite() {
        return Err(LabError::InvalidAlpha(alpha));
    }
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(LabError::InvalidParameter(format!("gamma {gamma} must lie in (1, 2]")));
    }
    require(phi, POSITIVE_UNITAL_TP)?;
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    let lhs = phi.apply_hermitian(&power_of(&spec, alpha)?)?.trace_re();
    let phi_h_gamma = phi.apply_hermitian(&power_of(&spec, gamma)?)?;
    let ratio = alpha / gamma;
    let middle = spectral_decompose(&phi_h_gamma, DEFAULT_CLUSTER_TOL)?.trace_on_support(|t| t.max(0.0).powf(ratio))?;
    let ph = image(phi, h)?;
    let rhs = power(&ph, alpha)?.trace_re();

    let scale = lhs.abs().max(1.0);
    let chain_holds = lhs - middle >= -tol * scale && middle - rhs >= -tol * scale;
    let entropy_preserved = (lhs - rhs).abs() <= tol * scale;
    let (conclusion_defect, conclusion_holds) = if entropy_preserved {
        let d = phi_h_gamma.sub(&power(&ph, gamma)?).norm_inf();
        let bound = tol * phi_h_gamma.spectral_norm()?.max(1.0);
        (Some(d), Some(d <= bound))
    } else {
        (None, None)
    };
    Ok(ReductionVerdict {
        alpha,
        gamma,
        lhs,
        middle,
        rhs,
        chain_holds,
        entropy_preserved,
        conclusion_defect,
        conclusion_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::channel::{build_channel, random_channel, Builtin, ChannelFamily};
    use crate::random::haar_unitary_operator;
    use std::sync::Arc;

    fn m2() -> Arc<BlockAlgebra> {
        Arc::new(BlockAlgebra::full(2).unwrap())
    }

    fn fixture() -> Density {
        Density::from_real(m2(), &[&[0.7, 0.2, 0.2, 0.3]]).unwrap()
    }

    fn densities(alg: &Arc<BlockAlgebra>, n: usize, seed: u64) -> Vec<Density> {
        let mut rng = seeded_rng(seed);
        (0..n)
            .map(|_| random_density(alg, &DensityOptions::default(), &mut rng).unwrap())
            .collect()
    }

    #[test]
    fn pinching_fixture_is_not_preserved() {
        let h = fixture();
        let phi = build_channel(m2(), Builtin::DiagonalConditionalExpectation).unwrap();
        let r = preservation_test(&phi, &h, 2.0, 1e-10).unwrap();
        assert_eq!(r.verdict, PreservationVerdict::NotPreserved);
        assert!((r.s_before.value - 0.41552).abs() < 1e-5);
        assert!((r.s_after.value - 0.54473).abs() < 1e-5);
        assert!((r.delta_s - 0.12921).abs() < 1e-5);
        assert!((r.delta_s - (0.66f64.ln() - 0.58f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn isomorphisms_preserve_everything() {
        let alg = Arc::new(BlockAlgebra::unweighted(vec![3]).unwrap());
        let mut rng = seeded_rng(12);
        let u = build_channel(
            alg.clone(),
            Builtin::UnitaryConjugation {
                unitary: haar_unitary_operator(&alg, &mut rng),
            },
        )
        .unwrap();
        let t = build_channel(alg.clone(), Builtin::Transpose { basis: None }).unwrap();
        for h in densities(&alg, 5, 3) {
            for alpha in [0.5, 2.0, 3.0] {
                for phi in [&u, &t] {
                    let r = preservation_test(phi, &h, alpha, 1e-10).unwrap();
                    assert_eq!(r.verdict, PreservationVerdict::PreservedAndIsomorphic, "{r:?}");
                    assert!(r.delta_s <= 1e-10 && r.multiplicativity_defect <= 1e-10);
                    assert!(r.operator_equality_defect <= 1e-10);
                    assert!(r.resolvent_defect.unwrap() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn jordan_detection() {
        let alg = m2();
        let t = build_channel(alg.clone(), Builtin::Transpose { basis: None }).unwrap();
        let v = jordan_isomorphism_test(&t, 1e-8).unwrap();
        assert!(v.isomorphism && v.defect <= 1e-12 && v.samples_checked == 12);

        let pinch = build_channel(alg.clone(), Builtin::DiagonalConditionalExpectation).unwrap();
        let v = jordan_isomorphism_test(&pinch, 1e-8).unwrap();
        assert!(!v.isomorphism && v.defect > 0.1);

        let mix = build_channel(
            alg.clone(),
            Builtin::Mixture {
                components: vec![(0.5, Channel::identity(alg.clone())), (0.5, t.clone())],
            },
        )
        .unwrap();
        let v = jordan_isomorphism_test(&mix, 1e-8).unwrap();
        assert!(!v.isomorphism && v.defect > 1e-3);
    }

    #[test]
    fn relative_entropy_is_invariant_under_isomorphisms() {
        let alg = Arc::new(BlockAlgebra::new(vec![2, 2], vec![1.0, 1.0]).unwrap());
        let t = build_channel(alg.clone(), Builtin::Transpose { basis: None }).unwrap();
        let u = random_channel(&alg, ChannelFamily::HaarUnitaryConjugation, 3).unwrap();
        let swap = build_channel(alg.clone(), Builtin::BlockPermutation { permutation: vec![1, 0] }).unwrap();
        let hs = densities(&alg, 10, 21);
        for pair in hs.chunks(2) {
            for (phi, tol) in [(&t, 1e-9), (&u, 1e-10), (&swap, 1e-10)] {
                let v = relative_entropy_invariance_test(phi, &pair[0], &pair[1], tol).unwrap();
                assert!(v.holds, "{v:?}");
                assert!(v.d_before.is_finite());
            }
        }

        let mut rng = seeded_rng(2);
        let opts = DensityOptions {
            zero_eigenvalues: 2,
            ..Default::default()
        };
        let k = random_density(&alg, &opts, &mut rng).unwrap();
        let h = &hs[0];
        let v = relative_entropy_invariance_test(&t, h, &k, 1e-9).unwrap();
        assert!(v.d_before.is_infinite() && v.d_after.is_infinite() && v.holds);

        let pinch = random_channel(&alg, ChannelFamily::RandomPinching, 1).unwrap();
        assert!(matches!(
            relative_entropy_invariance_test(&pinch, h, &k, 1e-9),
            Err(LabError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn reduction_chain() {
        let alg = m2();
        let id = Channel::identity(alg.clone());
        let h = fixture();
        let v = alpha_ge_2_reduction_check(&id, &h, 3.0, 1.5, 1e-9).unwrap();
        assert!(v.holds() && v.entropy_preserved);
        assert!((v.lhs - v.middle).abs() < 1e-14 && (v.middle - v.rhs).abs() < 1e-14);

        let u = random_channel(&alg, ChannelFamily::HaarUnitaryConjugation, 4).unwrap();
        let v = alpha_ge_2_reduction_check(&u, &h, 3.0, 1.5, 1e-9).unwrap();
        assert!(v.holds() && v.entropy_preserved && v.conclusion_holds == Some(true));

        let pinch = build_channel(alg.clone(), Builtin::DiagonalConditionalExpectation).unwrap();
        let v = alpha_ge_2_reduction_check(&pinch, &h, 3.0, 1.5, 1e-9).unwrap();
        assert!(v.chain_holds && !v.entropy_preserved && v.conclusion_defect.is_none());
        assert!(v.lhs - v.rhs > 0.1);
    }
}
