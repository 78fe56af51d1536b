//! Clustered spectral decompositions and the functional calculus built on them.
//!
//! A Hermitian `h` is written as `Σ λ_i p_i` with strictly decreasing cluster
//! values `λ_i` and mutually orthogonal projections `p_i` summing to the unit.
//! The span of the `p_i` is the abelian algebra generated by `h`; eigenvalues
//! closer than the cluster tolerance are treated as one point of the spectrum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::hermitian_eigen;
use crate::error::{LabError, Result};
use crate::operator::{Block, Density, Hermitian, Operator};

/// Default relative clustering tolerance.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projections: Vec<Hermitian>,
    /// Weighted trace of each projection, `τ(p_i)`.
    multiplicities: Vec<f64>,
    cluster_tol: f64,
    scale: f64,
}

impl SpectralDecomposition {
    /// Cluster values, strictly decreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[Hermitian] {
        &self.projections
    }

    /// `τ(p_i)` for every cluster.
    pub fn trace_weights(&self) -> &[f64] {
        &self.multiplicities
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Absolute merge threshold `cluster_tol · max(1, ‖h‖_∞)`.
    pub fn absolute_tol(&self) -> f64 {
        self.cluster_tol * self.scale.max(1.0)
    }

    /// `‖h‖_∞` of the decomposed operator.
    pub fn norm(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Smallest distance between neighbouring cluster values, relative to
    /// `max(1, ‖h‖_∞)`. Infinite for a single cluster.
    pub fn cluster_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| (w[0] - w[1]) / self.scale.max(1.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether cluster `i` is numerically zero (part of the kernel).
    pub fn is_kernel(&self, i: usize) -> bool {
        self.eigenvalues[i].abs() <= self.absolute_tol()
    }

    /// `Σ f(λ_i) p_i`; a non-finite `f(λ_i)` is a domain error.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<Hermitian> {
        let algebra = self.projections[0].algebra_arc().clone();
        let mut acc = Operator::zeros(algebra);
        for (&lambda, p) in self.eigenvalues.iter().zip(&self.projections) {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(LabError::DomainError(lambda));
            }
            if v != 0.0 {
                acc = &acc + &p.scale(v);
            }
        }
        Ok(Hermitian::mirrored(acc))
    }

    /// `τ(f(h)) = Σ f(λ_i) τ(p_i)` without forming the operator.
    pub fn trace_of(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (&lambda, &w) in self.eigenvalues.iter().zip(&self.multiplicities) {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(LabError::DomainError(lambda));
            }
            sum += v * w;
        }
        Ok(sum)
    }

    /// Like [`apply`](Self::apply) but maps kernel clusters to zero without
    /// evaluating `f` there.
    pub fn apply_on_support(&self, f: impl Fn(f64) -> f64) -> Result<Hermitian> {
        self.apply(|t| if t.abs() <= self.absolute_tol() { 0.0 } else { f(t) })
    }

    pub fn trace_on_support(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.trace_of(|t| if t.abs() <= self.absolute_tol() { 0.0 } else { f(t) })
    }

    /// Residual `‖Σ λ_i p_i − h‖_∞`.
    pub fn reconstruction_error(&self, h: &Hermitian) -> Result<f64> {
        let rebuilt = self.apply(|t| t)?;
        Ok((&*rebuilt - &**h).norm_inf())
    }
}

/// Decomposes `h`, merging eigenvalues within `cluster_tol · max(1, ‖h‖_∞)`
/// of their neighbour (single linkage on the sorted spectrum).
pub fn spectral_decompose(h: &Hermitian, cluster_tol: f64) -> Result<SpectralDecomposition> {
    if !(cluster_tol >= 0.0) {
        return Err(LabError::InvalidParameter(format!("cluster_tol {cluster_tol}")));
    }
    let algebra = h.algebra_arc().clone();

    struct Eig {
        value: f64,
        block: usize,
        col: usize,
    }
    let mut eigs = Vec::new();
    let mut vectors: Vec<Block> = Vec::with_capacity(algebra.num_blocks());
    for (k, b) in h.blocks().iter().enumerate() {
        let e = hermitian_eigen(b)?;
        for (col, &value) in e.values.iter().enumerate() {
            eigs.push(Eig { value, block: k, col });
        }
        vectors.push(e.vectors);
    }
    eigs.sort_by(|a, b| b.value.total_cmp(&a.value));

    let scale = eigs.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
    let abs_tol = cluster_tol * scale.max(1.0);

    let mut groups: Vec<Vec<&Eig>> = Vec::new();
    for e in &eigs {
        match groups.last_mut() {
            Some(g) if g.last().unwrap().value - e.value <= abs_tol => g.push(e),
            _ => groups.push(vec![e]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projections = Vec::with_capacity(groups.len());
    let mut multiplicities = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|e| e.value).sum::<f64>() / g.len() as f64;
        let mut blocks: Vec<Block> = algebra.dims().iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut tau = 0.0;
        for e in &g {
            let v = vectors[e.block].column(e.col);
            blocks[e.block] += v * v.adjoint();
            tau += algebra.weights()[e.block];
        }
        eigenvalues.push(mean);
        projections.push(Hermitian::mirrored(Operator::from_blocks(algebra.clone(), blocks)?));
        multiplicities.push(tau);
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        projections,
        multiplicities,
        cluster_tol,
        scale,
    })
}

/// `f(h)` via the default clustering.
pub fn apply_function(h: &Hermitian, f: impl Fn(f64) -> f64) -> Result<Hermitian> {
    spectral_decompose(h, DEFAULT_CLUSTER_TOL)?.apply(f)
}

/// `t ↦ t^α` on the support, `0^α = 0`.
pub fn power_of(spec: &SpectralDecomposition, alpha: f64) -> Result<Hermitian> {
    if !(alpha > 0.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    spec.apply_on_support(|t| t.max(0.0).powf(alpha))
}

/// `h^α` for a density, with `0^α = 0` on the kernel.
pub fn power(h: &Density, alpha: f64) -> Result<Hermitian> {
    if !(alpha > 0.0) {
        return Err(LabError::InvalidAlpha(alpha));
    }
    power_of(&spectral_decompose(h, DEFAULT_CLUSTER_TOL)?, alpha)
}

/// `h(s·1 + h)^{-1}` through `t ↦ t/(s+t)`.
pub fn resolvent_product(h: &Density, s: f64) -> Result<Hermitian> {
    if !(s > 0.0) {
        return Err(LabError::InvalidParameter(format!("resolvent shift {s} must be positive")));
    }
    apply_function(h, |t| {
        let t = t.max(0.0);
        t / (s + t)
    })
}

/// Outcome of a Loewner comparison `a ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of `b − a`.
    pub min_eigenvalue: f64,
    /// Relative tolerance requested by the caller.
    pub tol: f64,
    /// Absolute threshold actually applied.
    pub threshold: f64,
}

/// `a ≤ b` iff `λ_min(b − a) ≥ −tol · max(1, ‖a‖_∞ + ‖b‖_∞)`.
pub fn loewner_leq(a: &Hermitian, b: &Hermitian, tol: f64) -> Result<OrderVerdict> {
    a.check_algebra(b)?;
    let diff = b.sub(a);
    let min_eigenvalue = diff.min_eigenvalue()?;
    let threshold = tol * (a.spectral_norm()? + b.spectral_norm()?).max(1.0);
    Ok(OrderVerdict {
        holds: min_eigenvalue >= -threshold,
        min_eigenvalue,
        tol,
        threshold,
    })
}

/// Sum of the spectral projections with `λ_i > tol · ‖h‖_∞`.
pub fn support_projection(h: &Hermitian, tol: f64) -> Result<Hermitian> {
    let spec = spectral_decompose(h, DEFAULT_CLUSTER_TOL)?;
    let cut = tol * spec.norm();
    spec.apply(|t| if t > cut { 1.0 } else { 0.0 })
}

/// `τ(e([ε, ∞)))` for the spectral measure of `|x|`.
pub fn chebyshev_tail(x: &Operator, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidParameter(format!("eps {eps} must be positive")));
    }
    let mut tail = 0.0;
    for (b, &c) in x.blocks().iter().zip(x.algebra().weights()) {
        let gram = b.adjoint() * b;
        let e = hermitian_eigen(&gram)?;
        let count = e.values.iter().filter(|&&v| v.max(0.0).sqrt() >= eps).count();
        tail += c * count as f64;
    }
    debug_assert!(tail <= x.l1_norm() / eps * (1.0 + 1e-12) + 1e-12);
    Ok(tail)
}

/// Spectral projections are idempotent, orthogonal and complete.
pub fn projection_defects(spec: &SpectralDecomposition) -> (f64, f64, f64) {
    let ps = spec.projections();
    let idem = ps
        .iter()
        .map(|p| (&(&**p * &**p) - &**p).norm_inf())
        .fold(0.0, f64::max);
    let mut orth: f64 = 0.0;
    for i in 0..ps.len() {
        for j in 0..ps.len() {
            if i != j {
                orth = orth.max((&*ps[i] * &*ps[j]).norm_inf());
            }
        }
    }
    let algebra = ps[0].algebra_arc().clone();
    let sum = ps.iter().fold(Operator::zeros(algebra.clone()), |acc, p| &acc + &**p);
    let complete = (&sum - &Operator::identity(algebra)).norm_inf();
    (idem, orth, complete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use std::sync::Arc;

    fn m(n: usize) -> Arc<BlockAlgebra> {
        Arc::new(BlockAlgebra::full(n).unwrap())
    }

    fn herm(n: usize, data: &[f64]) -> Hermitian {
        Hermitian::from_real(m(n), &[data]).unwrap()
    }

    #[test]
    fn diagonal_clusters() {
        let h = herm(2, &[0.7, 0.0, 0.0, 0.3]);
        let s = spectral_decompose(&h, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.eigenvalues()[0] - 0.7).abs() < 1e-15);
        assert!((s.projections()[0].block(0)[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((s.projections()[1].block(0)[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_is_one_cluster() {
        let h = Hermitian::identity(m(3));
        let s = spectral_decompose(&h, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.trace_weights(), &[3.0]);
        assert!(s.cluster_gap().is_infinite());
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let h = herm(2, &[0.7, 0.2, 0.2, 0.3]);
        let s = spectral_decompose(&h, DEFAULT_CLUSTER_TOL).unwrap();
        // roots of λ² − λ + 0.17
        assert!((s.eigenvalues()[0] - 0.782_842_712_474_619).abs() < 1e-12);
        assert!((s.eigenvalues()[1] - 0.217_157_287_525_381).abs() < 1e-12);
        let (i, o, c) = projection_defects(&s);
        assert!(i < 1e-9 && o < 1e-9 && c < 1e-9);
        assert!(s.reconstruction_error(&h).unwrap() < 1e-12);
    }

    #[test]
    fn cross_block_clusters_merge() {
        let a = Arc::new(BlockAlgebra::new(vec![1, 2], vec![1.0, 3.0]).unwrap());
        let h = Hermitian::from_real(a, &[&[0.5], &[0.5, 0.0, 0.0, 0.25]]).unwrap();
        let s = spectral_decompose(&h, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.trace_weights(), &[4.0, 3.0]);
    }

    #[test]
    fn functional_calculus_examples() {
        let h = herm(2, &[0.7, 0.2, 0.2, 0.3]);
        let id = apply_function(&h, |t| t).unwrap();
        assert!((&*id - &*h).norm_inf() < 1e-10);

        let ones = herm(2, &[1.0, 1.0, 1.0, 1.0]);
        let sq = apply_function(&ones, |t| t * t).unwrap();
        let expect = herm(2, &[2.0, 2.0, 2.0, 2.0]);
        assert!((&*sq - &*expect).norm_inf() < 1e-12);

        let d = herm(2, &[4.0, 0.0, 0.0, 9.0]);
        let r = apply_function(&d, f64::sqrt).unwrap();
        assert!((&*r - &*herm(2, &[2.0, 0.0, 0.0, 3.0])).norm_inf() < 1e-14);
    }

    #[test]
    fn log_at_zero_is_domain_error() {
        let d = herm(2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(apply_function(&d, f64::ln), Err(LabError::DomainError(_))));
    }

    #[test]
    fn power_examples() {
        let p = Density::from_real(m(2), &[&[0.5, 0.5, 0.5, 0.5]]).unwrap();
        for alpha in [0.3, 1.7, 4.0] {
            let q = power(&p, alpha).unwrap();
            assert!((&*q - p.as_operator()).norm_inf() < 1e-12);
        }
        let d = Density::from_real(m(2), &[&[0.25, 0.0, 0.0, 0.0]]).unwrap();
        let r = power(&d, 0.5).unwrap();
        assert!((&*r - &*herm(2, &[0.5, 0.0, 0.0, 0.0])).norm_inf() < 1e-15);

        let h = Density::from_real(m(2), &[&[0.7, 0.2, 0.2, 0.3]]).unwrap();
        let h2 = power(&h, 2.0).unwrap();
        assert!((&*h2 - &(h.as_operator() * h.as_operator())).norm_inf() < 1e-12);
        assert!((h2.trace_re() - 0.66).abs() < 1e-12);

        assert!(matches!(power(&h, 0.0), Err(LabError::InvalidAlpha(_))));
        assert!(matches!(power(&h, -1.0), Err(LabError::InvalidAlpha(_))));
    }

    #[test]
    fn resolvent_examples() {
        let one = Density::new(Hermitian::identity(m(2))).unwrap();
        let r = resolvent_product(&one, 1.0).unwrap();
        assert!((&*r - &*Hermitian::identity(m(2)).scale(0.5)).norm_inf() < 1e-15);

        let d = Density::from_real(m(2), &[&[1.0, 0.0, 0.0, 3.0]]).unwrap();
        let r = resolvent_product(&d, 1.0).unwrap();
        assert!((&*r - &*herm(2, &[0.5, 0.0, 0.0, 0.75])).norm_inf() < 1e-15);

        assert!(matches!(resolvent_product(&d, 0.0), Err(LabError::InvalidParameter(_))));
    }

    #[test]
    fn loewner_examples() {
        let a = herm(2, &[1.0, 0.0, 0.0, 1.0]);
        let b = herm(2, &[2.0, 1.0, 1.0, 2.0]);
        let v = loewner_leq(&a, &b, 1e-12).unwrap();
        assert!(v.holds);
        assert!(v.min_eigenvalue.abs() < 1e-14);
        let v = loewner_leq(&b, &a, 1e-12).unwrap();
        assert!(!v.holds);
        assert!((v.min_eigenvalue + 2.0).abs() < 1e-14);
        assert!(loewner_leq(&a, &a, 0.0).unwrap().holds);
    }

    #[test]
    fn support_examples() {
        let d = herm(2, &[0.5, 0.0, 0.0, 0.0]);
        let s = support_projection(&d, 1e-10).unwrap();
        assert!((&*s - &*herm(2, &[1.0, 0.0, 0.0, 0.0])).norm_inf() < 1e-15);
        let inv = herm(2, &[0.7, 0.2, 0.2, 0.3]);
        let s = support_projection(&inv, 1e-10).unwrap();
        assert!((&*s - &*Hermitian::identity(m(2))).norm_inf() < 1e-12);
        let p = herm(2, &[0.5, 0.5, 0.5, 0.5]);
        let s = support_projection(&p, 1e-10).unwrap();
        assert!((&*s - &*p).norm_inf() < 1e-12);
    }

    #[test]
    fn chebyshev_examples() {
        let z = Operator::zeros(m(2));
        assert_eq!(chebyshev_tail(&z, 0.1).unwrap(), 0.0);
        let x = Operator::from_real(m(2), &[&[2.0, 0.0, 0.0, 0.1]]).unwrap();
        assert_eq!(chebyshev_tail(&x, 1.0).unwrap(), 1.0);
        assert!(chebyshev_tail(&x, 0.0).is_err());
    }
}
