//! Unital trace-preserving maps on a block algebra.
//!
//! A [`Channel`] is any linear map `Φ: M → M`, given by a Kraus family
//! (`Φ(x) = Σ K_i x K_i*`), an explicit superoperator matrix acting on
//! vectorised operators, or one of the [`Builtin`] constructions. Every
//! linear map on a finite-dimensional algebra is normal, so normality is not
//! tracked. Classification results are computed on first use and cached.

pub mod classify;
mod random;

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

pub use classify::{classify_channel, hermitian_basis, jordan_defect, ChannelProperties, PositivityCertificate};
pub use random::{random_channel, random_channel_with, ChannelFamily};

use crate::algebra::{BlockAlgebra, MatrixUnit};
use crate::eigen::C64;
use crate::error::{LabError, Result};
use crate::operator::{Block, Hermitian, Operator};

/// Tolerance used when validating builtin parameters.
pub const BUILD_TOL: f64 = 1e-9;

/// Named constructions.
#[derive(Clone, Debug)]
pub enum Builtin {
    Identity,
    /// `x ↦ U x U*`.
    UnitaryConjugation { unitary: Operator },
    /// Transposition with respect to the orthonormal basis given by the
    /// columns of `basis` (the standard basis when absent).
    Transpose { basis: Option<Operator> },
    /// `x ↦ Σ p x p` for orthogonal projections summing to the unit.
    Pinching { projections: Vec<Hermitian> },
    /// Output block `k` is input block `permutation[k]`.
    BlockPermutation { permutation: Vec<usize> },
    /// Convex combination of channels.
    Mixture { components: Vec<(f64, Channel)> },
    /// Projection onto the diagonal of every block.
    DiagonalConditionalExpectation,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Identity => "identity",
            Builtin::UnitaryConjugation { .. } => "unitary_conjugation",
            Builtin::Transpose { .. } => "transpose",
            Builtin::Pinching { .. } => "pinching",
            Builtin::BlockPermutation { .. } => "block_permutation",
            Builtin::Mixture { .. } => "mixture",
            Builtin::DiagonalConditionalExpectation => "diagonal_conditional_expectation",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Representation {
    Kraus(Vec<Operator>),
    /// `Σ n_k² × Σ n_k²` matrix acting on [`Operator::to_vector`].
    Superoperator(DMatrix<C64>),
    Builtin(Builtin),
}

#[derive(Clone, Debug)]
pub struct Channel {
    algebra: Arc<BlockAlgebra>,
    repr: Representation,
    superop: OnceLock<DMatrix<C64>>,
    props: OnceLock<ChannelProperties>,
}

impl Channel {
    fn from_repr(algebra: Arc<BlockAlgebra>, repr: Representation) -> Self {
        Channel {
            algebra,
            repr,
            superop: OnceLock::new(),
            props: OnceLock::new(),
        }
    }

    /// `Φ(x) = Σ K_i x K_i*`.
    pub fn from_kraus(algebra: Arc<BlockAlgebra>, ops: Vec<Operator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(LabError::InvalidParameter("empty Kraus family".into()));
        }
        for k in &ops {
            if k.algebra() != &*algebra {
                return Err(LabError::AlgebraMismatch("Kraus operator from another algebra".into()));
            }
        }
        Ok(Self::from_repr(algebra, Representation::Kraus(ops)))
    }

    pub fn from_superoperator(algebra: Arc<BlockAlgebra>, matrix: DMatrix<C64>) -> Result<Self> {
        let d = algebra.vec_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(LabError::AlgebraMismatch(format!(
                "superoperator is {}x{}, algebra needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self::from_repr(algebra, Representation::Superoperator(matrix)))
    }

    pub fn identity(algebra: Arc<BlockAlgebra>) -> Self {
        Self::from_repr(algebra, Representation::Builtin(Builtin::Identity))
    }

    pub fn algebra(&self) -> &Arc<BlockAlgebra> {
        &self.algebra
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Short description for reports.
    pub fn label(&self) -> String {
        match &self.repr {
            Representation::Kraus(ops) => format!("kraus[{}]", ops.len()),
            Representation::Superoperator(_) => "superop".into(),
            Representation::Builtin(b) => b.name().into(),
        }
    }

    /// `Φ(x)`.
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if x.algebra() != &*self.algebra {
            return Err(LabError::AlgebraMismatch(format!(
                "channel acts on {:?}, operator lives in {:?}",
                self.algebra.dims(),
                x.algebra().dims()
            )));
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &Operator) -> Operator {
        match &self.repr {
            Representation::Kraus(ops) => ops.iter().fold(Operator::zeros(self.algebra.clone()), |acc, k| {
                &acc + &(&(k * x) * &k.adjoint())
            }),
            Representation::Superoperator(s) => {
                Operator::from_vector(self.algebra.clone(), &(s * x.to_vector())).expect("dimension checked")
            }
            Representation::Builtin(b) => apply_builtin(&self.algebra, b, x),
        }
    }

    /// `Φ(h)` for Hermitian `h`, symmetrised to absorb roundoff.
    pub fn apply_hermitian(&self, h: &Hermitian) -> Result<Hermitian> {
        let y = self.apply(h)?;
        Ok(Hermitian::symmetrized(&y))
    }

    /// Matrix of `Φ` in the matrix-unit basis; column `β` is `vec(Φ(E_β))`.
    pub fn superoperator(&self) -> &DMatrix<C64> {
        self.superop.get_or_init(|| match &self.repr {
            Representation::Superoperator(s) => s.clone(),
            _ => {
                let d = self.algebra.vec_dim();
                let mut s = DMatrix::zeros(d, d);
                for (col, unit) in self.algebra.matrix_units().enumerate() {
                    let e = Operator::matrix_unit(self.algebra.clone(), unit);
                    s.set_column(col, &self.apply_unchecked(&e).to_vector());
                }
                s
            }
        })
    }

    /// Kraus operators when the representation admits them directly.
    pub fn kraus_operators(&self) -> Option<Vec<Operator>> {
        match &self.repr {
            Representation::Kraus(ops) => Some(ops.clone()),
            Representation::Superoperator(_) => None,
            Representation::Builtin(b) => match b {
                Builtin::Identity => Some(vec![Operator::identity(self.algebra.clone())]),
                Builtin::UnitaryConjugation { unitary } => Some(vec![unitary.clone()]),
                Builtin::Pinching { projections } => {
                    Some(projections.iter().map(|p| p.as_operator().clone()).collect())
                }
                Builtin::DiagonalConditionalExpectation => Some(
                    self.algebra
                        .dims()
                        .iter()
                        .enumerate()
                        .flat_map(|(block, &n)| (0..n).map(move |i| MatrixUnit { block, row: i, col: i }))
                        .map(|u| Operator::matrix_unit(self.algebra.clone(), u))
                        .collect(),
                ),
                Builtin::Mixture { components } => {
                    let mut all = Vec::new();
                    for (w, c) in components {
                        let ops = c.kraus_operators()?;
                        all.extend(ops.into_iter().map(|k| k.scale(w.sqrt())));
                    }
                    Some(all)
                }
                Builtin::Transpose { .. } | Builtin::BlockPermutation { .. } => None,
            },
        }
    }

    /// Cached classification.
    pub fn properties(&self) -> &ChannelProperties {
        self.props.get_or_init(|| classify_channel(self))
    }

    /// Classification if it has already been computed.
    pub fn cached_properties(&self) -> Option<&ChannelProperties> {
        self.props.get()
    }
}

fn apply_builtin(algebra: &Arc<BlockAlgebra>, b: &Builtin, x: &Operator) -> Operator {
    match b {
        Builtin::Identity => x.clone(),
        Builtin::UnitaryConjugation { unitary } => &(unitary * x) * &unitary.adjoint(),
        Builtin::Transpose { basis: None } => x.transpose(),
        Builtin::Transpose { basis: Some(w) } => {
            let inner = &(&w.adjoint() * x) * w;
            &(w * &inner.transpose()) * &w.adjoint()
        }
        Builtin::Pinching { projections } => projections.iter().fold(Operator::zeros(algebra.clone()), |acc, p| {
            &acc + &(&(p.as_operator() * x) * p.as_operator())
        }),
        Builtin::BlockPermutation { permutation } => {
            let blocks = permutation.iter().map(|&src| x.block(src).clone()).collect();
            Operator::from_blocks(algebra.clone(), blocks).expect("permutation validated at build time")
        }
        Builtin::Mixture { components } => components.iter().fold(Operator::zeros(algebra.clone()), |acc, (w, c)| {
            &acc + &c.apply_unchecked(x).scale(*w)
        }),
        Builtin::DiagonalConditionalExpectation => x.map_blocks(|m| {
            let n = m.nrows();
            Block::from_fn(n, n, |i, j| if i == j { m[(i, i)] } else { C64::new(0.0, 0.0) })
        }),
    }
}

fn unitary_defect(u: &Operator) -> f64 {
    let one = Operator::identity(u.algebra_arc().clone());
    (&(&u.adjoint() * u) - &one).norm_inf().max((&(u * &u.adjoint()) - &one).norm_inf())
}

/// Validates the builtin's parameters against `algebra` and wraps it.
pub fn build_channel(algebra: Arc<BlockAlgebra>, spec: Builtin) -> Result<Channel> {
    match &spec {
        Builtin::Identity | Builtin::DiagonalConditionalExpectation => {}
        Builtin::UnitaryConjugation { unitary } => {
            if unitary.algebra() != &*algebra {
                return Err(LabError::AlgebraMismatch("unitary from another algebra".into()));
            }
            let d = unitary_defect(unitary);
            if d > BUILD_TOL {
                return Err(LabError::InvalidParameter(format!("U is not unitary (defect {d:e})")));
            }
        }
        Builtin::Transpose { basis } => {
            if let Some(w) = basis {
                if w.algebra() != &*algebra {
                    return Err(LabError::AlgebraMismatch("basis from another algebra".into()));
                }
                let d = unitary_defect(w);
                if d > BUILD_TOL {
                    return Err(LabError::InvalidParameter(format!(
                        "transpose basis is not orthonormal (defect {d:e})"
                    )));
                }
            }
        }
        Builtin::Pinching { projections } => validate_pinching(&algebra, projections)?,
        Builtin::BlockPermutation { permutation } => validate_permutation(&algebra, permutation)?,
        Builtin::Mixture { components } => {
            if components.is_empty() {
                return Err(LabError::InvalidParameter("empty mixture".into()));
            }
            let total: f64 = components.iter().map(|(w, _)| *w).sum();
            if components.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(LabError::InvalidParameter(format!(
                    "mixture weights must be non-negative and sum to 1 (sum {total})"
                )));
            }
            if components.iter().any(|(_, c)| **c.algebra() != *algebra) {
                return Err(LabError::AlgebraMismatch("mixture component on another algebra".into()));
            }
        }
    }
    Ok(Channel::from_repr(algebra, Representation::Builtin(spec)))
}

fn validate_pinching(algebra: &Arc<BlockAlgebra>, projections: &[Hermitian]) -> Result<()> {
    if projections.is_empty() {
        return Err(LabError::InvalidParameter("pinching needs at least one projection".into()));
    }
    let mut sum = Operator::zeros(algebra.clone());
    for (i, p) in projections.iter().enumerate() {
        if p.algebra() != &**algebra {
            return Err(LabError::AlgebraMismatch("projection from another algebra".into()));
        }
        let idem = (&(p.as_operator() * p.as_operator()) - p.as_operator()).norm_inf();
        if idem > BUILD_TOL {
            return Err(LabError::InvalidParameter(format!("projection {i} is not idempotent ({idem:e})")));
        }
        for (j, q) in projections.iter().enumerate().skip(i + 1) {
            let o = (p.as_operator() * q.as_operator()).norm_inf();
            if o > BUILD_TOL {
                return Err(LabError::InvalidParameter(format!(
                    "projections {i} and {j} are not orthogonal ({o:e})"
                )));
            }
        }
        sum = &sum + p.as_operator();
    }
    let c = (&sum - &Operator::identity(algebra.clone())).norm_inf();
    if c > BUILD_TOL {
        return Err(LabError::InvalidParameter(format!("projections do not sum to 1 ({c:e})")));
    }
    Ok(())
}

fn validate_permutation(algebra: &BlockAlgebra, permutation: &[usize]) -> Result<()> {
    let k = algebra.num_blocks();
    let mut seen = vec![false; k];
    if permutation.len() != k {
        return Err(LabError::InvalidParameter(format!(
            "permutation of length {} for {k} blocks",
            permutation.len()
        )));
    }
    for &p in permutation {
        if p >= k || seen[p] {
            return Err(LabError::InvalidParameter(format!("{permutation:?} is not a permutation")));
        }
        seen[p] = true;
    }
    for (dst, &src) in permutation.iter().enumerate() {
        let (nd, ns) = (algebra.dims()[dst], algebra.dims()[src]);
        let (cd, cs) = (algebra.weights()[dst], algebra.weights()[src]);
        if nd != ns {
            return Err(LabError::TraceMismatch(format!(
                "block {src} (dim {ns}) cannot be moved onto block {dst} (dim {nd})"
            )));
        }
        if (cd - cs).abs() > 1e-12 * cd.max(cs) {
            return Err(LabError::TraceMismatch(format!(
                "block {src} (weight {cs}) cannot be moved onto block {dst} (weight {cd})"
            )));
        }
    }
    Ok(())
}

/// `Φ(x)`, with the contraction `‖Φ(x)‖₁ ≤ ‖x‖₁` verified for Hermitian `x`
/// when the channel is already known to be positive and trace preserving.
pub fn apply_channel(phi: &Channel, x: &Operator) -> Result<Operator> {
    let y = phi.apply(x)?;
    if let Some(p) = phi.cached_properties() {
        if p.positive && p.trace_preserving && x.is_hermitian(0.0) {
            let (ny, nx) = (y.l1_norm(), x.l1_norm());
            if ny > nx * (1.0 + 1e-9) + 1e-12 {
                return Err(LabError::Inconsistent(format!(
                    "trace-preserving positive map expanded the L1 norm: {ny} > {nx}"
                )));
            }
        }
    }
    Ok(y)
}

/// The τ-adjoint `Φ*` with `τ(Φ(x) y) = τ(x Φ*(y))`.
pub fn adjoint_channel(phi: &Channel) -> Result<Channel> {
    let algebra = phi.algebra().clone();
    match phi.representation() {
        Representation::Builtin(Builtin::Identity) => return Ok(Channel::identity(algebra)),
        Representation::Builtin(Builtin::UnitaryConjugation { unitary }) => {
            return build_channel(
                algebra,
                Builtin::UnitaryConjugation {
                    unitary: unitary.adjoint(),
                },
            )
        }
        Representation::Kraus(ops) => {
            return Channel::from_kraus(algebra, ops.iter().map(|k| k.adjoint()).collect());
        }
        _ => {}
    }
    // Taking x = E^{(k)}_{ij}: τ(E_ij z) = c_k z_ji, so z_ji = τ(Φ(E_ij) y) / c_k.
    let s = phi.superoperator();
    let d = algebra.vec_dim();
    let units: Vec<MatrixUnit> = algebra.matrix_units().collect();
    let mut adj = DMatrix::zeros(d, d);
    for (beta, &ub) in units.iter().enumerate() {
        // y = E_β, so τ(Φ(E_α) E_β) = c · Φ(E_α)[ub.col, ub.row] in block ub.block.
        let row_of = algebra.unit_index(MatrixUnit {
            block: ub.block,
            row: ub.col,
            col: ub.row,
        });
        let cb = algebra.weights()[ub.block];
        for (alpha, &ua) in units.iter().enumerate() {
            let pairing = s[(row_of, alpha)] * cb;
            if pairing == C64::new(0.0, 0.0) {
                continue;
            }
            let target = algebra.unit_index(MatrixUnit {
                block: ua.block,
                row: ua.col,
                col: ua.row,
            });
            adj[(target, beta)] += pairing / algebra.weights()[ua.block];
        }
    }
    Channel::from_superoperator(algebra, adj)
}
