use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_channel, Builtin, Channel};
use crate::algebra::BlockAlgebra;
use crate::eigen::{hermitian_eigen, C64};
use crate::error::{LabError, Result};
use crate::operator::{Hermitian, Operator};
use crate::random::{ginibre, haar_unitary, haar_unitary_operator, seeded_rng};

/// Kraus normalisation must reach this defect on both sides.
const KRAUS_TOL: f64 = 1e-12;
const KRAUS_MAX_ITER: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    HaarUnitaryConjugation,
    RandomPinching,
    RandomMixture,
    RandomKrausUnitalTp,
}

impl ChannelFamily {
    pub const ALL: [ChannelFamily; 4] = [
        ChannelFamily::HaarUnitaryConjugation,
        ChannelFamily::RandomPinching,
        ChannelFamily::RandomMixture,
        ChannelFamily::RandomKrausUnitalTp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::HaarUnitaryConjugation => "haar_unitary_conjugation",
            ChannelFamily::RandomPinching => "random_pinching",
            ChannelFamily::RandomMixture => "random_mixture",
            ChannelFamily::RandomKrausUnitalTp => "random_kraus_unital_tp",
        }
    }
}

impl FromStr for ChannelFamily {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ChannelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LabError::InvalidParameter(format!("unknown channel family {s:?}")))
    }
}

/// Reproducible random channel of the given family.
pub fn random_channel(algebra: &Arc<BlockAlgebra>, family: ChannelFamily, seed: u64) -> Result<Channel> {
    let mut rng = seeded_rng(seed);
    random_channel_with(algebra, family, &mut rng)
}

pub fn random_channel_with<R: Rng + ?Sized>(
    algebra: &Arc<BlockAlgebra>,
    family: ChannelFamily,
    rng: &mut R,
) -> Result<Channel> {
    match family {
        ChannelFamily::HaarUnitaryConjugation => {
            let unitary = haar_unitary_operator(algebra, rng);
            build_channel(algebra.clone(), Builtin::UnitaryConjugation { unitary })
        }
        ChannelFamily::RandomPinching => {
            let projections = random_projections(algebra, rng);
            build_channel(algebra.clone(), Builtin::Pinching { projections })
        }
        ChannelFamily::RandomMixture => random_mixture(algebra, rng),
        ChannelFamily::RandomKrausUnitalTp => random_unital_kraus(algebra, rng),
    }
}

/// Orthogonal projections summing to one: each block is split along a Haar
/// basis into at least two groups whenever its dimension allows.
fn random_projections<R: Rng + ?Sized>(algebra: &Arc<BlockAlgebra>, rng: &mut R) -> Vec<Hermitian> {
    let mut out = Vec::new();
    for (k, &n) in algebra.dims().iter().enumerate() {
        let u = haar_unitary(n, rng);
        let groups = if n >= 2 { rng.random_range(2..=n) } else { 1 };
        // Every group gets one column, the rest are assigned at random.
        let mut labels: Vec<usize> = (0..n).map(|i| if i < groups { i } else { rng.random_range(0..groups) }).collect();
        labels.shuffle(rng);
        for g in 0..groups {
            let mut p = crate::operator::Block::zeros(n, n);
            for (col, _) in labels.iter().enumerate().filter(|(_, &l)| l == g) {
                let v = u.column(col);
                p += v * v.adjoint();
            }
            let op = Operator::from_block(algebra.clone(), k, p).expect("block shape");
            out.push(Hermitian::mirrored(op));
        }
    }
    out
}

fn random_mixture<R: Rng + ?Sized>(algebra: &Arc<BlockAlgebra>, rng: &mut R) -> Result<Channel> {
    let count = rng.random_range(2..=3);
    let raw: Vec<f64> = (0..count).map(|_| -rng.random_range(1e-3..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut components = Vec::with_capacity(count);
    let mut acc = 0.0;
    for (i, r) in raw.iter().enumerate() {
        let w = if i + 1 == count { 1.0 - acc } else { r / total };
        acc += w;
        let channel = match rng.random_range(0..3) {
            0 => build_channel(
                algebra.clone(),
                Builtin::Transpose {
                    basis: Some(haar_unitary_operator(algebra, rng)),
                },
            )?,
            1 => build_channel(algebra.clone(), Builtin::Pinching { projections: random_projections(algebra, rng) })?,
            _ => build_channel(
                algebra.clone(),
                Builtin::UnitaryConjugation {
                    unitary: haar_unitary_operator(algebra, rng),
                },
            )?,
        };
        components.push((w, channel));
    }
    build_channel(algebra.clone(), Builtin::Mixture { components })
}

/// `a^{-1/2}` for positive definite `a`, from the raw eigenpairs: clustering
/// would average the nearly equal eigenvalues this iteration is trying to fix.
fn inverse_sqrt(a: &Hermitian) -> Result<Operator> {
    let mut blocks = Vec::with_capacity(a.blocks().len());
    for b in a.blocks() {
        let eig = hermitian_eigen(b)?;
        if eig.values.iter().any(|&l| l <= 0.0) {
            return Err(LabError::GenerationFailure("normalisation operator is singular".into()));
        }
        let n = eig.values.len();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(1.0 / eig.values[i].sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        blocks.push(&eig.vectors * d * eig.vectors.adjoint());
    }
    Operator::from_blocks(a.algebra_arc().clone(), blocks)
}

/// Ginibre Kraus family driven to `Σ K*K = 1` and `Σ KK* = 1` by alternating
/// normalisations.
fn random_unital_kraus<R: Rng + ?Sized>(algebra: &Arc<BlockAlgebra>, rng: &mut R) -> Result<Channel> {
    let count = rng.random_range(2..=3);
    let mut ops: Vec<Operator> = (0..count)
        .map(|_| {
            let blocks = algebra.dims().iter().map(|&n| ginibre(n, rng)).collect();
            Operator::from_blocks(algebra.clone(), blocks)
        })
        .collect::<Result<_>>()?;
    let one = Operator::identity(algebra.clone());
    let gram = |ops: &[Operator], left: bool| {
        let sum = ops.iter().fold(Operator::zeros(algebra.clone()), |acc, k| {
            let term = if left { &k.adjoint() * k } else { k * &k.adjoint() };
            &acc + &term
        });
        Hermitian::mirrored(sum)
    };
    for _ in 0..KRAUS_MAX_ITER {
        let t = inverse_sqrt(&gram(&ops, true))?;
        ops = ops.iter().map(|k| k * &t).collect();
        let s = inverse_sqrt(&gram(&ops, false))?;
        ops = ops.iter().map(|k| &s * k).collect();
        let tp = (&*gram(&ops, true) - &one).norm_inf();
        let un = (&*gram(&ops, false) - &one).norm_inf();
        if tp <= KRAUS_TOL && un <= KRAUS_TOL {
            return Channel::from_kraus(algebra.clone(), ops);
        }
    }
    Err(LabError::GenerationFailure(format!(
        "Kraus normalisation did not converge in {KRAUS_MAX_ITER} rounds"
    )))
}
