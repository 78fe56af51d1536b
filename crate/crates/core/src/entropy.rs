//! Rényi, trace-functional, Segal and relative entropies (natural log).

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operator::{Density, Hermitian, MIN_DENSITY_TRACE};
use crate::spectral::{spectral_decompose, SpectralDecomposition, DEFAULT_CLUSTER_TOL};

/// `α` closer than this to 1 is rejected.
pub const ALPHA_ONE_EXCLUSION: f64 = 1e-6;

/// Eigenvalues at most this fraction of `‖h‖_∞` are outside the support.
pub const SUPPORT_EIG_TOL: f64 = 1e-10;

/// Serialises non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    #[serde(with = "extended_real")]
    pub value: f64,
    pub alpha: f64,
    /// `τ(h)`.
    pub trace_h: f64,
    /// `τ(h^α)`.
    pub trace_h_alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() || (alpha - 1.0).abs() < ALPHA_ONE_EXCLUSION {
        return Err(LabError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// `S_α(h) = ln(τ(h^α)/τ(h)) / (1 − α)`.
pub fn renyi_entropy(h: &Density, alpha: f64) -> Result<EntropyValue> {
    check_alpha(alpha)?;
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    renyi_from_spectrum(&spec, alpha)
}

/// Same as [`renyi_entropy`] on an existing decomposition.
pub fn renyi_from_spectrum(spec: &SpectralDecomposition, alpha: f64) -> Result<EntropyValue> {
    check_alpha(alpha)?;
    let trace_h = spec.trace_of(|t| t)?;
    if trace_h <= MIN_DENSITY_TRACE {
        return Err(LabError::DegenerateDensity(trace_h));
    }
    let trace_h_alpha = spec.trace_on_support(|t| t.max(0.0).powf(alpha))?;
    if trace_h_alpha <= 0.0 {
        return Err(LabError::DegenerateDensity(trace_h_alpha));
    }
    Ok(EntropyValue {
        value: (trace_h_alpha / trace_h).ln() / (1.0 - alpha),
        alpha,
        trace_h,
        trace_h_alpha,
    })
}

/// `H_f(h) = τ(f(h))`.
pub fn entropy_functional(h: &Density, f: impl Fn(f64) -> f64) -> Result<f64> {
    spectral_decompose(h, DEFAULT_CLUSTER_TOL)?.trace_of(f)
}

/// `t ln t` with `0 ln 0 = 0`.
pub fn t_log_t(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// Segal entropy `τ(h ln h)`.
pub fn segal_entropy(h: &Density) -> Result<f64> {
    spectral_decompose(h, DEFAULT_CLUSTER_TOL)?.trace_on_support(t_log_t)
}

/// Support projection of a density: eigenvalues above `SUPPORT_EIG_TOL·‖h‖_∞`.
pub fn support(h: &Hermitian) -> Result<Hermitian> {
    crate::spectral::support_projection(h, SUPPORT_EIG_TOL)
}

/// `‖(1 − s(k)) s(h)‖_∞`, how far the support of `h` sticks out of that of `k`.
pub fn support_excess(h: &Density, k: &Density) -> Result<f64> {
    h.check_algebra(k)?;
    let sh = support(h)?;
    let sk = support(k)?;
    Ok((&*sh - &(&*sk * &*sh)).norm_inf())
}

/// `D(h‖k) = τ(h(ln h − ln k))`, or `+∞` when the support of `h` is not
/// under that of `k`. Logarithms are taken on the supports only.
pub fn relative_entropy(h: &Density, k: &Density, support_tol: f64) -> Result<f64> {
    if support_excess(h, k)? > support_tol {
        return Ok(f64::INFINITY);
    }
    let sh = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    let sk = spectral_decompose(k, DEFAULT_CLUSTER_TOL)?;
    let cut = SUPPORT_EIG_TOL * sk.norm();
    let log_k = sk.apply(|t| if t > cut { t.ln() } else { 0.0 })?;
    let h_log_h = sh.trace_on_support(t_log_t)?;
    let h_log_k = (h.as_operator() * log_k.as_operator()).trace().re;
    Ok(h_log_h - h_log_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::random::{haar_unitary_operator, random_density, seeded_rng, DensityOptions};
    use std::sync::Arc;

    fn m(n: usize) -> Arc<BlockAlgebra> {
        Arc::new(BlockAlgebra::full(n).unwrap())
    }

    #[test]
    fn maximally_mixed_gives_log_n() {
        let h = Density::maximally_mixed(m(4));
        for alpha in [0.3, 0.5, 2.0, 3.0] {
            let s = renyi_entropy(&h, alpha).unwrap();
            assert!((s.value - 4f64.ln()).abs() < 1e-12, "{alpha}");
        }
        assert!((renyi_entropy(&h, 0.5).unwrap().value - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        let p = Density::from_real(m(2), &[&[0.5, 0.5, 0.5, 0.5]]).unwrap();
        for alpha in [0.5, 2.0] {
            assert!(renyi_entropy(&p, alpha).unwrap().value.abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_fixture() {
        let h = Density::from_real(m(2), &[&[0.7, 0.2, 0.2, 0.3]]).unwrap();
        let s = renyi_entropy(&h, 2.0).unwrap();
        assert!((s.trace_h_alpha - 0.66).abs() < 1e-12);
        assert!((s.value - 0.41552).abs() < 1e-5);
        assert!((s.value + 0.66f64.ln()).abs() < 1e-12);
        let cubes = entropy_functional(&h, |t| t.powi(3)).unwrap();
        assert!((cubes - 0.48999).abs() < 1e-5);
    }

    #[test]
    fn alpha_validation() {
        let h = Density::maximally_mixed(m(2));
        for alpha in [1.0, 1.0 + 5e-7, 0.0, -0.5, f64::NAN] {
            assert!(matches!(renyi_entropy(&h, alpha), Err(LabError::InvalidAlpha(_))));
        }
        assert!(renyi_entropy(&h, 1.0 + 2e-6).is_ok());
    }

    #[test]
    fn functionals() {
        let h = Density::maximally_mixed(m(2));
        assert!((entropy_functional(&h, |t| t).unwrap() - 1.0).abs() < 1e-15);
        assert!((segal_entropy(&h).unwrap() + 2f64.ln()).abs() < 1e-12);
        let p = Density::from_real(m(2), &[&[1.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(segal_entropy(&p).unwrap(), 0.0);
    }

    #[test]
    fn relative_entropy_examples() {
        let p = Density::from_real(m(2), &[&[1.0, 0.0, 0.0, 0.0]]).unwrap();
        let k = Density::maximally_mixed(m(2));
        assert!((relative_entropy(&p, &k, 1e-7).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(relative_entropy(&k, &p, 1e-7).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&p, &p, 1e-7).unwrap().abs() < 1e-12);

        let alg = Arc::new(BlockAlgebra::new(vec![2, 1], vec![1.0, 2.5]).unwrap());
        let mut rng = seeded_rng(5);
        for _ in 0..20 {
            let h = random_density(&alg, &DensityOptions::default(), &mut rng).unwrap();
            assert!(relative_entropy(&h, &h, 1e-7).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn klein_inequality_at_equal_traces() {
        let alg = Arc::new(BlockAlgebra::new(vec![2, 2], vec![1.0, 0.5]).unwrap());
        let mut rng = seeded_rng(9);
        for _ in 0..30 {
            let h = random_density(&alg, &DensityOptions::default(), &mut rng).unwrap();
            let k = random_density(&alg, &DensityOptions::default(), &mut rng).unwrap();
            let k = k.scaled(h.trace_re() / k.trace_re()).unwrap();
            assert!(relative_entropy(&h, &k, 1e-7).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn scale_covariance_and_unitary_invariance() {
        let alg = Arc::new(BlockAlgebra::new(vec![3, 1], vec![1.0, 2.0]).unwrap());
        let mut rng = seeded_rng(1);
        for _ in 0..10 {
            let h = random_density(&alg, &DensityOptions::default(), &mut rng).unwrap();
            let u = haar_unitary_operator(&alg, &mut rng);
            let uh = Density::new(h.conjugate_by(&u)).unwrap();
            for alpha in [0.25, 0.5, 2.0, 3.0] {
                let s = renyi_entropy(&h, alpha).unwrap().value;
                for c in [0.1, 3.0, 40.0] {
                    let sc = renyi_entropy(&h.scaled(c).unwrap(), alpha).unwrap().value;
                    assert!((sc - (s - f64::ln(c))).abs() < 1e-10);
                }
                assert!((renyi_entropy(&uh, alpha).unwrap().value - s).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn infinite_value_round_trips_through_json() {
        let e = EntropyValue {
            value: f64::INFINITY,
            alpha: 2.0,
            trace_h: 1.0,
            trace_h_alpha: 0.5,
        };
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"inf\""));
        let back: EntropyValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value, f64::INFINITY);
    }
}
