//! Block-diagonal operators on a [`BlockAlgebra`].

use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{BlockAlgebra, MatrixUnit};
use crate::eigen::{hermitian_eigen, C64};
use crate::error::{LabError, Result};

pub type Block = DMatrix<C64>;

/// Default asymmetry tolerated when loading a Hermitian operator.
pub const HERMITIAN_LOAD_TOL: f64 = 1e-12;

/// Relative PSD tolerance: `λ_min ≥ −PSD_TOL · max(1, ‖h‖_∞)`.
pub const PSD_TOL: f64 = 1e-10;

/// Smallest trace a density may carry.
pub const MIN_DENSITY_TRACE: f64 = 1e-12;

/// An element `x = x_1 ⊕ … ⊕ x_K` of a block algebra.
#[derive(Clone, Debug)]
pub struct Operator {
    algebra: Arc<BlockAlgebra>,
    blocks: Vec<Block>,
}

impl Operator {
    pub fn from_blocks(algebra: Arc<BlockAlgebra>, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(LabError::AlgebraMismatch(format!(
                "{} blocks supplied, algebra has {}",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (k, (b, &n)) in blocks.iter().zip(algebra.dims()).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(LabError::AlgebraMismatch(format!(
                    "block {k} is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Operator { algebra, blocks })
    }

    /// Builds an operator from real row-major blocks.
    pub fn from_real(algebra: Arc<BlockAlgebra>, blocks: &[&[f64]]) -> Result<Self> {
        let mats = blocks
            .iter()
            .zip(algebra.dims())
            .map(|(data, &n)| {
                if data.len() != n * n {
                    return Err(LabError::AlgebraMismatch(format!(
                        "expected {} entries, got {}",
                        n * n,
                        data.len()
                    )));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| C64::new(data[i * n + j], 0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(algebra, mats)
    }

    pub fn zeros(algebra: Arc<BlockAlgebra>) -> Self {
        let blocks = algebra.dims().iter().map(|&n| DMatrix::zeros(n, n)).collect();
        Operator { algebra, blocks }
    }

    pub fn identity(algebra: Arc<BlockAlgebra>) -> Self {
        let blocks = algebra.dims().iter().map(|&n| DMatrix::identity(n, n)).collect();
        Operator { algebra, blocks }
    }

    /// The matrix unit `E^{(k)}_{ij}`.
    pub fn matrix_unit(algebra: Arc<BlockAlgebra>, unit: MatrixUnit) -> Self {
        let mut x = Self::zeros(algebra);
        x.blocks[unit.block][(unit.row, unit.col)] = C64::new(1.0, 0.0);
        x
    }

    /// Embeds a single matrix into block `k`, all other blocks zero.
    pub fn from_block(algebra: Arc<BlockAlgebra>, k: usize, block: Block) -> Result<Self> {
        let mut x = Self::zeros(algebra);
        if k >= x.blocks.len() || x.blocks[k].shape() != block.shape() {
            return Err(LabError::AlgebraMismatch(format!("cannot place block at index {k}")));
        }
        x.blocks[k] = block;
        Ok(x)
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn algebra_arc(&self) -> &Arc<BlockAlgebra> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &Block {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn same_algebra(&self, other: &Operator) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra
    }

    pub fn check_algebra(&self, other: &Operator) -> Result<()> {
        if self.same_algebra(other) {
            Ok(())
        } else {
            Err(LabError::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self.algebra.dims(),
                other.algebra.dims()
            )))
        }
    }

    pub fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Operator {
        Operator {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip_blocks(&self, other: &Operator, f: impl Fn(&Block, &Block) -> Block) -> Operator {
        assert!(
            self.same_algebra(other),
            "operators belong to different algebras: {:?} vs {:?}",
            self.algebra.dims(),
            other.algebra.dims()
        );
        Operator {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn scale(&self, c: f64) -> Operator {
        self.map_blocks(|b| b * C64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: C64) -> Operator {
        self.map_blocks(|b| b * c)
    }

    /// Entrywise transpose of every block.
    pub fn transpose(&self) -> Operator {
        self.map_blocks(|b| b.transpose())
    }

    /// Weighted trace `τ(x) = Σ_k c_k tr(x_k)`.
    pub fn trace(&self) -> C64 {
        self.blocks
            .iter()
            .zip(self.algebra.weights())
            .map(|(b, &c)| b.trace() * c)
            .sum()
    }

    /// Largest absolute entry; used for round-trip comparisons.
    pub fn max_abs_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Asymmetry `max |x − x*|` over entries.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                let mut d: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        d = d.max((b[(i, j)] - b[(j, i)].conj()).norm());
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Singular values of each block (square roots of the eigenvalues of `x*x`).
    fn singular_values(&self) -> Result<Vec<Vec<f64>>> {
        self.blocks
            .iter()
            .map(|b| {
                if block_is_hermitian(b) {
                    // |λ| is more accurate than sqrt(eig(x*x)) for small singular values.
                    let e = hermitian_eigen(b)?;
                    return Ok(e.values.iter().map(|v| v.abs()).collect());
                }
                let gram = b.adjoint() * b;
                let e = hermitian_eigen(&gram)?;
                Ok(e.values.iter().map(|&v| v.max(0.0).sqrt()).collect())
            })
            .collect()
    }

    /// Operator norm `‖x‖_∞`.
    pub fn norm_inf(&self) -> f64 {
        match self.singular_values() {
            Ok(sv) => sv.iter().flatten().copied().fold(0.0, f64::max),
            // Frobenius bound if the eigensolver fails on pathological input.
            Err(_) => self
                .blocks
                .iter()
                .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// `‖x‖₁ = τ(|x|)`, computed from the spectrum of `x*x`.
    pub fn l1_norm(&self) -> f64 {
        match self.singular_values() {
            Ok(sv) => sv
                .iter()
                .zip(self.algebra.weights())
                .map(|(s, &c)| c * s.iter().sum::<f64>())
                .sum(),
            Err(_) => f64::NAN,
        }
    }

    /// Jordan product `(xy + yx)/2`.
    pub fn jordan(&self, other: &Operator) -> Result<Operator> {
        self.check_algebra(other)?;
        let xy = self * other;
        let yx = other * self;
        Ok((&xy + &yx).scale(0.5))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Row-major concatenation of the blocks, length `Σ n_k²`.
    pub fn to_vector(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.algebra.vec_dim());
        let mut idx = 0;
        for b in &self.blocks {
            let n = b.nrows();
            for i in 0..n {
                for j in 0..n {
                    v[idx] = b[(i, j)];
                    idx += 1;
                }
            }
        }
        v
    }

    /// Inverse of [`to_vector`](Self::to_vector).
    pub fn from_vector(algebra: Arc<BlockAlgebra>, v: &DVector<C64>) -> Result<Self> {
        if v.len() != algebra.vec_dim() {
            return Err(LabError::AlgebraMismatch(format!(
                "vector of length {} for algebra of dimension {}",
                v.len(),
                algebra.vec_dim()
            )));
        }
        let mut idx = 0;
        let blocks = algebra
            .dims()
            .iter()
            .map(|&n| {
                let b = DMatrix::from_fn(n, n, |i, j| v[idx + i * n + j]);
                idx += n * n;
                b
            })
            .collect();
        Ok(Operator { algebra, blocks })
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a * b)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

fn block_is_hermitian(b: &Block) -> bool {
    let n = b.nrows();
    (0..n).all(|i| b[(i, i)].im == 0.0 && (i + 1..n).all(|j| b[(i, j)] == b[(j, i)].conj()))
}

/// `τ(x)` with an explicit algebra check.
pub fn trace(algebra: &BlockAlgebra, x: &Operator) -> Result<C64> {
    if x.algebra() != algebra {
        return Err(LabError::AlgebraMismatch(format!(
            "operator lives in {:?}, expected {:?}",
            x.algebra().dims(),
            algebra.dims()
        )));
    }
    Ok(x.trace())
}

pub fn jordan_product(x: &Operator, y: &Operator) -> Result<Operator> {
    x.jordan(y)
}

/// A self-adjoint operator. Storage is exactly Hermitian.
#[derive(Clone, Debug)]
pub struct Hermitian(Operator);

impl Hermitian {
    /// Accepts `x` if `max |x − x*| ≤ tol`, then mirrors the upper triangle.
    pub fn new(x: Operator, tol: f64) -> Result<Self> {
        let defect = x.hermitian_defect();
        if defect > tol {
            return Err(LabError::NotHermitian(defect));
        }
        Ok(Self::mirrored(x))
    }

    /// Copies the upper triangle onto the lower one and drops the imaginary
    /// part of the diagonal.
    pub fn mirrored(x: Operator) -> Self {
        let blocks = x
            .blocks
            .into_iter()
            .map(|mut b| {
                let n = b.nrows();
                for i in 0..n {
                    b[(i, i)] = C64::new(b[(i, i)].re, 0.0);
                    for j in (i + 1)..n {
                        b[(j, i)] = b[(i, j)].conj();
                    }
                }
                b
            })
            .collect();
        Hermitian(Operator {
            algebra: x.algebra,
            blocks,
        })
    }

    /// Symmetrises `(x + x*)/2`.
    pub fn symmetrized(x: &Operator) -> Self {
        Self::mirrored((x + &x.adjoint()).scale(0.5))
    }

    pub fn from_real(algebra: Arc<BlockAlgebra>, blocks: &[&[f64]]) -> Result<Self> {
        Self::new(Operator::from_real(algebra, blocks)?, HERMITIAN_LOAD_TOL)
    }

    pub fn identity(algebra: Arc<BlockAlgebra>) -> Self {
        Hermitian(Operator::identity(algebra))
    }

    pub fn zeros(algebra: Arc<BlockAlgebra>) -> Self {
        Hermitian(Operator::zeros(algebra))
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// Real trace.
    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    /// All eigenvalues (with multiplicity) in decreasing order, paired with
    /// the block they come from.
    pub fn eigenvalues(&self) -> Result<Vec<(f64, usize)>> {
        let mut out = Vec::with_capacity(self.0.algebra.total_dim());
        for (k, b) in self.0.blocks.iter().enumerate() {
            let e = hermitian_eigen(b)?;
            out.extend(e.values.into_iter().map(|v| (v, k)));
        }
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(out)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().map(|e| e.0).unwrap_or(0.0))
    }

    /// Spectral norm `max |λ|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().map(|e| e.0.abs()).fold(0.0, f64::max))
    }

    pub fn add(&self, other: &Hermitian) -> Hermitian {
        Hermitian::mirrored(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Hermitian) -> Hermitian {
        Hermitian::mirrored(&self.0 - &other.0)
    }

    pub fn scale(&self, c: f64) -> Hermitian {
        Hermitian(self.0.scale(c))
    }

    pub fn jordan(&self, other: &Hermitian) -> Result<Hermitian> {
        Ok(Hermitian::mirrored(self.0.jordan(&other.0)?))
    }

    /// `x²`, which stays Hermitian.
    pub fn square(&self) -> Hermitian {
        Hermitian::mirrored(&self.0 * &self.0)
    }

    /// Conjugation `a x a*`.
    pub fn conjugate_by(&self, a: &Operator) -> Hermitian {
        Hermitian::mirrored(&(a * &self.0) * &a.adjoint())
    }
}

impl Deref for Hermitian {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

/// A positive semidefinite operator with strictly positive trace.
#[derive(Clone, Debug)]
pub struct Density(Hermitian);

impl Density {
    pub fn new(h: Hermitian) -> Result<Self> {
        let ev = h.eigenvalues()?;
        let norm = ev.iter().map(|e| e.0.abs()).fold(0.0, f64::max);
        let min = ev.last().map(|e| e.0).unwrap_or(0.0);
        if min < -PSD_TOL * norm.max(1.0) {
            return Err(LabError::NotPositive(min));
        }
        let tr = h.trace_re();
        if tr <= MIN_DENSITY_TRACE {
            return Err(LabError::DegenerateDensity(tr));
        }
        Ok(Density(h))
    }

    pub fn from_real(algebra: Arc<BlockAlgebra>, blocks: &[&[f64]]) -> Result<Self> {
        Self::new(Hermitian::from_real(algebra, blocks)?)
    }

    /// `(1/N)·1`, normalised in the unweighted matrix trace.
    pub fn maximally_mixed(algebra: Arc<BlockAlgebra>) -> Self {
        let n = algebra.total_dim() as f64;
        Density(Hermitian::identity(algebra).scale(1.0 / n))
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.0
    }

    pub fn into_hermitian(self) -> Hermitian {
        self.0
    }

    /// `c·h` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Density> {
        if !(c > 0.0) {
            return Err(LabError::InvalidParameter(format!("scale {c} must be positive")));
        }
        Density::new(self.0.scale(c))
    }
}

impl Deref for Density {
    type Target = Hermitian;
    fn deref(&self) -> &Hermitian {
        &self.0
    }
}
