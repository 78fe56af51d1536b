//! Finite direct sums of full matrix algebras carrying a weighted trace.
//!
//! `M = M_{n_1} ⊕ … ⊕ M_{n_K}` with `τ(x) = Σ_k c_k · tr(x_k)`. Every weight
//! `c_k` is strictly positive so the trace is faithful, and unequal weights
//! stand in for a semifinite (non-normalised) trace.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default cap on the total matrix dimension `Σ n_k`.
pub const DEFAULT_MAX_DIM: usize = 16;

/// Environment variable overriding [`DEFAULT_MAX_DIM`].
pub const MAX_DIM_ENV: &str = "RENYI_LAB_MAX_DIM";

/// The dimension cap in effect: `RENYI_LAB_MAX_DIM` when set to a positive
/// integer, otherwise [`DEFAULT_MAX_DIM`].
pub fn configured_max_dim() -> usize {
    std::env::var(MAX_DIM_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_MAX_DIM)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraFile", into = "AlgebraFile")]
pub struct BlockAlgebra {
    dims: Vec<usize>,
    weights: Vec<f64>,
}

/// On-disk form: `{"dims": [...], "weights": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl TryFrom<AlgebraFile> for BlockAlgebra {
    type Error = LabError;

    fn try_from(file: AlgebraFile) -> Result<Self> {
        match file.weights {
            Some(w) => BlockAlgebra::new(file.dims, w),
            None => BlockAlgebra::unweighted(file.dims),
        }
    }
}

impl From<BlockAlgebra> for AlgebraFile {
    fn from(a: BlockAlgebra) -> Self {
        AlgebraFile {
            dims: a.dims,
            weights: Some(a.weights),
        }
    }
}

impl BlockAlgebra {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        Self::with_max_dim(dims, weights, configured_max_dim())
    }

    /// All trace weights equal to one.
    pub fn unweighted(dims: Vec<usize>) -> Result<Self> {
        let weights = vec![1.0; dims.len()];
        Self::new(dims, weights)
    }

    /// A single full matrix block `M_n` with the standard trace.
    pub fn full(n: usize) -> Result<Self> {
        Self::unweighted(vec![n])
    }

    pub fn with_max_dim(dims: Vec<usize>, weights: Vec<f64>, max_dim: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(LabError::InvalidAlgebra("no blocks".into()));
        }
        if dims.len() != weights.len() {
            return Err(LabError::InvalidAlgebra(format!(
                "{} blocks but {} weights",
                dims.len(),
                weights.len()
            )));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(LabError::InvalidAlgebra(format!("block {k} has dimension 0")));
        }
        if let Some(k) = weights.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(LabError::InvalidAlgebra(format!(
                "block {k} has non-positive weight {}",
                weights[k]
            )));
        }
        let total: usize = dims.iter().sum();
        if total > max_dim {
            return Err(LabError::InvalidAlgebra(format!(
                "total dimension {total} exceeds the cap {max_dim}"
            )));
        }
        Ok(BlockAlgebra { dims, weights })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    /// Total matrix dimension `N = Σ n_k`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Linear dimension of the algebra, `Σ n_k²`.
    pub fn vec_dim(&self) -> usize {
        self.dims.iter().map(|n| n * n).sum()
    }

    /// Offset of block `k` in the vectorised (row-major per block) layout.
    pub fn vec_offset(&self, block: usize) -> usize {
        self.dims[..block].iter().map(|n| n * n).sum()
    }

    /// Matrix units `E^{(k)}_{ij}` in vectorisation order.
    pub fn matrix_units(&self) -> impl Iterator<Item = MatrixUnit> + '_ {
        self.dims.iter().enumerate().flat_map(|(block, &n)| {
            (0..n).flat_map(move |row| (0..n).map(move |col| MatrixUnit { block, row, col }))
        })
    }

    /// Position of a matrix unit in the vectorised layout.
    pub fn unit_index(&self, unit: MatrixUnit) -> usize {
        self.vec_offset(unit.block) + unit.row * self.dims[unit.block] + unit.col
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixUnit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}
