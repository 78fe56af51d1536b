use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Channel;
use crate::algebra::{BlockAlgebra, MatrixUnit};
use crate::eigen::{hermitian_eigen, C64};
use crate::error::{LabError, Result};
use crate::operator::{Hermitian, Operator};
use crate::random::{random_unit_vector, seeded_rng};

pub const UNITAL_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const JORDAN_TOL: f64 = 1e-8;
pub const INJECTIVE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const POSITIVITY_SAMPLES: usize = 1000;

const POSITIVITY_SEED: u64 = 0x005e_ed0f_9051;

/// How positivity was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositivityCertificate {
    /// Every Choi block is positive semidefinite: complete positivity.
    ProvenByChoi,
    /// No violation among this many random pure-state inputs.
    Sampled { samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProperties {
    pub unital: bool,
    pub trace_preserving: bool,
    pub positive: bool,
    pub positivity_certificate: PositivityCertificate,
    pub completely_positive: bool,
    pub jordan_multiplicative: bool,
    pub injective: bool,
    /// `‖Φ(1) − 1‖_∞`.
    pub unital_defect: f64,
    /// `max |τ(Φ(E)) − τ(E)| / ‖E‖₁` over matrix units.
    pub trace_defect: f64,
    /// Smallest eigenvalue over all Choi blocks.
    pub choi_min_eigenvalue: f64,
    /// Smallest eigenvalue over sampled images (or the Choi bound).
    pub positivity_min_eigenvalue: f64,
    /// `max ‖Φ(x∘y) − Φ(x)∘Φ(y)‖_∞` over Hermitian basis pairs.
    pub jordan_defect: f64,
    /// Smallest singular value of the superoperator.
    pub min_singular_value: f64,
}

impl ChannelProperties {
    /// The implications `CP ⟹ positive` and
    /// `Jordan ∧ trace-preserving ⟹ injective`.
    pub fn check_consistency(&self) -> Result<()> {
        if self.completely_positive && !self.positive {
            return Err(LabError::Inconsistent("completely positive but not positive".into()));
        }
        if self.jordan_multiplicative && self.trace_preserving && !self.injective {
            return Err(LabError::Inconsistent(format!(
                "trace-preserving Jordan map with smallest singular value {:e}",
                self.min_singular_value
            )));
        }
        Ok(())
    }
}

/// Hermitian basis of the algebra: `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)`.
pub fn hermitian_basis(algebra: &Arc<BlockAlgebra>) -> Vec<Hermitian> {
    let mut out = Vec::with_capacity(algebra.vec_dim());
    for (block, &n) in algebra.dims().iter().enumerate() {
        for i in 0..n {
            let e = Operator::matrix_unit(algebra.clone(), MatrixUnit { block, row: i, col: i });
            out.push(Hermitian::mirrored(e));
            for j in (i + 1)..n {
                let eij = Operator::matrix_unit(algebra.clone(), MatrixUnit { block, row: i, col: j });
                let eji = Operator::matrix_unit(algebra.clone(), MatrixUnit { block, row: j, col: i });
                out.push(Hermitian::mirrored(&eij + &eji));
                out.push(Hermitian::mirrored((&eij - &eji).scale_complex(C64::new(0.0, 1.0))));
            }
        }
    }
    out
}

/// `max ‖Φ(x∘y) − Φ(x)∘Φ(y)‖_∞` over unordered Hermitian basis pairs.
pub fn jordan_defect(phi: &Channel) -> f64 {
    let basis = hermitian_basis(phi.algebra());
    let images: Vec<Operator> = basis.iter().map(|b| phi.apply_unchecked(b)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let prod = basis[i].jordan(&basis[j]).expect("same algebra");
            let lhs = phi.apply_unchecked(&prod);
            let rhs = images[i].jordan(&images[j]).expect("same algebra");
            worst = worst.max((&lhs - &rhs).norm_inf());
        }
    }
    worst
}

/// Smallest eigenvalue over the Choi matrices of every block pair
/// `Φ_{kj}: M_{n_j} → M_{n_k}`, or `None` if some Choi block is not Hermitian.
fn choi_min_eigenvalue(phi: &Channel) -> Option<f64> {
    let algebra = phi.algebra();
    let s = phi.superoperator();
    let mut worst = f64::INFINITY;
    for (j, &nj) in algebra.dims().iter().enumerate() {
        for (k, &nk) in algebra.dims().iter().enumerate() {
            let dim = nj * nk;
            let mut choi = DMatrix::<C64>::zeros(dim, dim);
            for a in 0..nj {
                for b in 0..nj {
                    let col = algebra.unit_index(MatrixUnit { block: j, row: a, col: b });
                    for c in 0..nk {
                        for d in 0..nk {
                            let row = algebra.unit_index(MatrixUnit { block: k, row: c, col: d });
                            choi[(a * nk + c, b * nk + d)] = s[(row, col)];
                        }
                    }
                }
            }
            let scale = choi.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            let asym = (&choi - choi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if asym > 1e-9 * scale {
                return None;
            }
            let e = hermitian_eigen(&choi).ok()?;
            worst = worst.min(e.values.iter().copied().fold(f64::INFINITY, f64::min) / scale);
        }
    }
    Some(worst)
}

/// Smallest eigenvalue of `Φ(vv*)` over seeded random unit vectors, or
/// `None` if some image is not Hermitian.
fn sampled_positivity(phi: &Channel, samples: usize) -> Option<f64> {
    let algebra = phi.algebra();
    let mut rng = seeded_rng(POSITIVITY_SEED);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let block = rng.random_range(0..algebra.num_blocks());
        let n = algebra.dims()[block];
        let v = random_unit_vector(n, &mut rng);
        let p = Operator::from_block(algebra.clone(), block, &v * v.adjoint()).expect("block shape");
        let y = phi.apply_unchecked(&p);
        let scale = y.max_abs_entry().max(1.0);
        if y.hermitian_defect() > POSITIVITY_TOL * scale {
            return None;
        }
        let h = Hermitian::mirrored(y);
        let min = h.min_eigenvalue().ok()?;
        worst = worst.min(min / scale);
    }
    Some(worst)
}

/// Classifies `phi`; see [`ChannelProperties`] for the reported flags.
pub fn classify_channel(phi: &Channel) -> ChannelProperties {
    let algebra = phi.algebra().clone();
    let one = Operator::identity(algebra.clone());
    let unital_defect = (&phi.apply_unchecked(&one) - &one).norm_inf();

    let trace_defect = algebra
        .matrix_units()
        .map(|u| {
            let e = Operator::matrix_unit(algebra.clone(), u);
            let c = algebra.weights()[u.block];
            (phi.apply_unchecked(&e).trace() - e.trace()).norm() / c
        })
        .fold(0.0, f64::max);

    let choi = choi_min_eigenvalue(phi);
    let completely_positive = matches!(choi, Some(v) if v >= -POSITIVITY_TOL);
    let (positive, positivity_certificate, positivity_min_eigenvalue) = if completely_positive {
        (true, PositivityCertificate::ProvenByChoi, choi.unwrap_or(0.0))
    } else {
        let sampled = sampled_positivity(phi, POSITIVITY_SAMPLES);
        (
            matches!(sampled, Some(v) if v >= -POSITIVITY_TOL),
            PositivityCertificate::Sampled {
                samples: POSITIVITY_SAMPLES,
            },
            sampled.unwrap_or(f64::NEG_INFINITY),
        )
    };

    let jordan = jordan_defect(phi);
    let min_singular_value = phi
        .superoperator()
        .clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    ChannelProperties {
        unital: unital_defect <= UNITAL_TOL,
        trace_preserving: trace_defect <= TRACE_TOL,
        positive,
        positivity_certificate,
        completely_positive,
        jordan_multiplicative: jordan <= JORDAN_TOL,
        injective: min_singular_value > INJECTIVE_TOL,
        unital_defect,
        trace_defect,
        choi_min_eigenvalue: choi.unwrap_or(f64::NEG_INFINITY),
        positivity_min_eigenvalue,
        jordan_defect: jordan,
        min_singular_value,
    }
}
