//! Operator-algebra laboratory for Rényi entropies on finite direct sums of
//! matrix algebras with a weighted trace.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`], [`eigen`], [`operator`], [`spectral`]: block-diagonal
//!   operators, a Jacobi eigensolver, functional calculus and the Loewner order.
//! * [`channel`]: unital trace-preserving maps, their classification
//!   (positivity, complete positivity, Jordan multiplicativity, injectivity).
//! * [`entropy`]: Rényi, Segal and relative entropies.
//! * [`quadrature`], [`integral`]: the Stieltjes-type integral representations
//!   of `t^α` and their operator versions, truncations and convergence traces.
//! * [`lab`]: executable checks of Jensen-type inequalities and of the
//!   entropy-preservation ⇒ isomorphism statements.
//! * [`random`], [`io`], [`suite`]: seeded instance generation, JSON file
//!   formats and suite orchestration.

// `!(x >= 0.0)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod channel;
pub mod eigen;
pub mod entropy;
pub mod error;
pub mod integral;
pub mod io;
pub mod lab;
pub mod operator;
pub mod quadrature;
pub mod random;
pub mod spectral;
pub mod suite;

pub use algebra::BlockAlgebra;
pub use channel::{build_channel, Builtin, Channel, ChannelProperties};
pub use error::{LabError, Result};
pub use operator::{Density, Hermitian, Operator};
pub use spectral::{spectral_decompose, OrderVerdict, SpectralDecomposition};
