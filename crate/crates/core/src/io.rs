//! JSON file formats for algebras, operators and channels.
//!
//! Operator: `{"algebra": {"dims": [..], "weights": [..]}, "blocks": [{"re": [[..]], "im": [[..]]}]}`
//! with `im` optional.
//!
//! Channel: one of
//!
//! ```text
//! {"kind": "kraus",   "ops": [operator, ..]}
//! {"kind": "superop", "matrix": {"re": [[..]], "im": [[..]]}}
//! {"kind": "builtin", "name": "transpose", "params": {..}}
//! ```
//!
//! each with an optional `"algebra"`; when it is absent the algebra must be
//! supplied by the caller (Kraus files can also infer it from their ops).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::BlockAlgebra;
use crate::channel::{build_channel, Builtin, Channel, Representation};
use crate::eigen::C64;
use crate::error::{LabError, Result};
use crate::operator::{Block, Density, Hermitian, Operator, HERMITIAN_LOAD_TOL};

/// A complex matrix as separate real and imaginary row lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixFile {
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.re.len();
        let m = self.re.first().map(|r| r.len()).unwrap_or(0);
        if self.re.iter().any(|r| r.len() != m) {
            return Err(LabError::InvalidParameter("ragged real part".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != m) {
                return Err(LabError::InvalidParameter("imaginary part has a different shape".into()));
            }
        }
        let out = DMatrix::from_fn(n, m, |i, j| {
            let im = self.im.as_ref().map(|v| v[i][j]).unwrap_or(0.0);
            C64::new(self.re[i][j], im)
        });
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub algebra: BlockAlgebra,
    pub blocks: Vec<MatrixFile>,
}

impl OperatorFile {
    pub fn from_operator(x: &Operator) -> Self {
        OperatorFile {
            algebra: x.algebra().clone(),
            blocks: x.blocks().iter().map(MatrixFile::from_matrix).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        operator_on(Arc::new(self.algebra.clone()), &self.blocks)
    }
}

fn operator_on(algebra: Arc<BlockAlgebra>, blocks: &[MatrixFile]) -> Result<Operator> {
    let blocks: Vec<Block> = blocks.iter().map(MatrixFile::to_matrix).collect::<Result<_>>()?;
    Operator::from_blocks(algebra, blocks)
}

/// What to do with a Hermitian input that is not exactly Hermitian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HermitianPolicy {
    /// Reject when `‖A − A*‖_∞` exceeds the tolerance, then mirror.
    Reject { tol: f64 },
    /// Always mirror the upper triangle.
    Mirror,
}

impl Default for HermitianPolicy {
    fn default() -> Self {
        HermitianPolicy::Reject { tol: HERMITIAN_LOAD_TOL }
    }
}

fn hermitian_from(x: Operator, policy: HermitianPolicy) -> Result<Hermitian> {
    match policy {
        HermitianPolicy::Reject { tol } => Hermitian::new(x, tol),
        HermitianPolicy::Mirror => Ok(Hermitian::mirrored(x)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureComponentFile {
    pub weight: f64,
    pub channel: ChannelFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelFile {
    Kraus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        algebra: Option<BlockAlgebra>,
        ops: Vec<OperatorFile>,
    },
    Superop {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        algebra: Option<BlockAlgebra>,
        matrix: MatrixFile,
    },
    Builtin {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        algebra: Option<BlockAlgebra>,
        name: String,
        #[serde(default)]
        params: serde_json::Value,
    },
}

/// Builtin parameters in file form; every field is optional so that one
/// struct covers all names.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuiltinParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<Vec<MatrixFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<MatrixFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projections: Option<Vec<Vec<MatrixFile>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    permutation: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    components: Option<Vec<MixtureComponentFile>>,
}

fn blocks_of(x: &Operator) -> Vec<MatrixFile> {
    x.blocks().iter().map(MatrixFile::from_matrix).collect()
}

impl ChannelFile {
    pub fn from_channel(phi: &Channel) -> Self {
        let algebra = Some((**phi.algebra()).clone());
        match phi.representation() {
            Representation::Kraus(ops) => ChannelFile::Kraus {
                algebra,
                ops: ops.iter().map(OperatorFile::from_operator).collect(),
            },
            Representation::Superoperator(m) => ChannelFile::Superop {
                algebra,
                matrix: MatrixFile::from_matrix(m),
            },
            Representation::Builtin(b) => {
                let mut params = BuiltinParams::default();
                match b {
                    Builtin::Identity | Builtin::DiagonalConditionalExpectation => {}
                    Builtin::UnitaryConjugation { unitary } => params.unitary = Some(blocks_of(unitary)),
                    Builtin::Transpose { basis } => params.basis = basis.as_ref().map(blocks_of),
                    Builtin::Pinching { projections } => {
                        params.projections = Some(projections.iter().map(|p| blocks_of(p)).collect())
                    }
                    Builtin::BlockPermutation { permutation } => params.permutation = Some(permutation.clone()),
                    Builtin::Mixture { components } => {
                        params.components = Some(
                            components
                                .iter()
                                .map(|(w, c)| MixtureComponentFile {
                                    weight: *w,
                                    channel: ChannelFile::from_channel(c),
                                })
                                .collect(),
                        )
                    }
                }
                ChannelFile::Builtin {
                    algebra,
                    name: b.name().to_string(),
                    params: serde_json::to_value(params).expect("params serialise"),
                }
            }
        }
    }

    fn declared_algebra(&self) -> Option<&BlockAlgebra> {
        match self {
            ChannelFile::Kraus { algebra, ops } => algebra.as_ref().or(ops.first().map(|o| &o.algebra)),
            ChannelFile::Superop { algebra, .. } | ChannelFile::Builtin { algebra, .. } => algebra.as_ref(),
        }
    }

    /// Builds the channel; `algebra` is required when the file has none and
    /// must agree with the file when both are present.
    pub fn to_channel(&self, algebra: Option<&Arc<BlockAlgebra>>) -> Result<Channel> {
        let algebra = match (self.declared_algebra(), algebra) {
            (Some(d), Some(given)) => {
                if d != &**given {
                    return Err(LabError::AlgebraMismatch(
                        "channel file declares a different algebra".into(),
                    ));
                }
                given.clone()
            }
            (Some(d), None) => Arc::new(d.clone()),
            (None, Some(given)) => given.clone(),
            (None, None) => {
                return Err(LabError::InvalidParameter(
                    "channel file has no algebra and none was supplied".into(),
                ))
            }
        };
        match self {
            ChannelFile::Kraus { ops, .. } => {
                let ops = ops
                    .iter()
                    .map(|o| {
                        if o.algebra != *algebra {
                            return Err(LabError::AlgebraMismatch("Kraus operator on another algebra".into()));
                        }
                        operator_on(algebra.clone(), &o.blocks)
                    })
                    .collect::<Result<_>>()?;
                Channel::from_kraus(algebra, ops)
            }
            ChannelFile::Superop { matrix, .. } => Channel::from_superoperator(algebra, matrix.to_matrix()?),
            ChannelFile::Builtin { name, params, .. } => {
                let params: BuiltinParams = if params.is_null() {
                    BuiltinParams::default()
                } else {
                    serde_json::from_value(params.clone())?
                };
                let missing = |what: &str| LabError::InvalidParameter(format!("builtin {name} needs `{what}`"));
                let spec = match name.as_str() {
                    "identity" => Builtin::Identity,
                    "diagonal_conditional_expectation" => Builtin::DiagonalConditionalExpectation,
                    "unitary_conjugation" => Builtin::UnitaryConjugation {
                        unitary: operator_on(algebra.clone(), params.unitary.as_deref().ok_or_else(|| missing("unitary"))?)?,
                    },
                    "transpose" => Builtin::Transpose {
                        basis: params
                            .basis
                            .as_deref()
                            .map(|b| operator_on(algebra.clone(), b))
                            .transpose()?,
                    },
                    "pinching" => Builtin::Pinching {
                        projections: params
                            .projections
                            .as_ref()
                            .ok_or_else(|| missing("projections"))?
                            .iter()
                            .map(|p| hermitian_from(operator_on(algebra.clone(), p)?, HermitianPolicy::default()))
                            .collect::<Result<_>>()?,
                    },
                    "block_permutation" => Builtin::BlockPermutation {
                        permutation: params.permutation.clone().ok_or_else(|| missing("permutation"))?,
                    },
                    "mixture" => Builtin::Mixture {
                        components: params
                            .components
                            .as_ref()
                            .ok_or_else(|| missing("components"))?
                            .iter()
                            .map(|c| Ok((c.weight, c.channel.to_channel(Some(&algebra))?)))
                            .collect::<Result<_>>()?,
                    },
                    other => return Err(LabError::InvalidParameter(format!("unknown builtin {other:?}"))),
                };
                build_channel(algebra, spec)
            }
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn operator_from_str(text: &str) -> Result<Operator> {
    serde_json::from_str::<OperatorFile>(text)?.to_operator()
}

pub fn operator_to_string(x: &Operator) -> Result<String> {
    to_json_string(&OperatorFile::from_operator(x))
}

pub fn load_algebra(path: &Path) -> Result<BlockAlgebra> {
    read_json(path)
}

pub fn load_operator(path: &Path) -> Result<Operator> {
    read_json::<OperatorFile>(path)?.to_operator()
}

pub fn load_hermitian(path: &Path, policy: HermitianPolicy) -> Result<Hermitian> {
    hermitian_from(load_operator(path)?, policy)
}

pub fn load_density(path: &Path, policy: HermitianPolicy) -> Result<Density> {
    Density::new(load_hermitian(path, policy)?)
}

pub fn save_operator(path: &Path, x: &Operator) -> Result<()> {
    fs::write(path, operator_to_string(x)?)?;
    Ok(())
}

pub fn channel_from_str(text: &str, algebra: Option<&Arc<BlockAlgebra>>) -> Result<Channel> {
    serde_json::from_str::<ChannelFile>(text)?.to_channel(algebra)
}

pub fn channel_to_string(phi: &Channel) -> Result<String> {
    to_json_string(&ChannelFile::from_channel(phi))
}

pub fn load_channel(path: &Path, algebra: Option<&Arc<BlockAlgebra>>) -> Result<Channel> {
    read_json::<ChannelFile>(path)?.to_channel(algebra)
}

pub fn save_channel(path: &Path, phi: &Channel) -> Result<()> {
    fs::write(path, channel_to_string(phi)?)?;
    Ok(())
}

/// Largest entrywise difference of two operators on the same algebra.
pub fn max_entry_difference(a: &Operator, b: &Operator) -> Result<f64> {
    a.check_algebra(b)?;
    Ok((a - b).max_abs_entry())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_channel, ChannelFamily};
    use crate::random::{random_density, random_operator, seeded_rng, DensityOptions};

    #[test]
    fn operator_round_trip_is_exact() {
        let alg = Arc::new(BlockAlgebra::new(vec![2, 3], vec![1.0, 0.25]).unwrap());
        let mut rng = seeded_rng(1);
        for _ in 0..5 {
            let x = random_operator(&alg, &mut rng);
            let back = operator_from_str(&operator_to_string(&x).unwrap()).unwrap();
            assert!(max_entry_difference(&x, &back).unwrap() <= 1e-15);
            assert_eq!(back.algebra(), x.algebra());
        }
    }

    #[test]
    fn documented_operator_layout_parses() {
        let text = r#"{"algebra": {"dims": [2]}, "blocks": [{"re": [[0.7, 0.2], [0.2, 0.3]]}]}"#;
        let x = operator_from_str(text).unwrap();
        assert_eq!(x.algebra().weights(), &[1.0]);
        assert_eq!(x.block(0)[(0, 1)], C64::new(0.2, 0.0));
    }

    #[test]
    fn hermitian_policy() {
        let alg = Arc::new(BlockAlgebra::full(2).unwrap());
        let x = Operator::from_real(alg, &[&[1.0, 0.5, 0.4, 1.0]]).unwrap();
        assert!(matches!(
            hermitian_from(x.clone(), HermitianPolicy::default()),
            Err(LabError::NotHermitian(_))
        ));
        let h = hermitian_from(x, HermitianPolicy::Mirror).unwrap();
        assert_eq!(h.block(0)[(1, 0)], C64::new(0.5, 0.0));
    }

    #[test]
    fn channels_round_trip() {
        let alg = Arc::new(BlockAlgebra::unweighted(vec![2, 2]).unwrap());
        let mut rng = seeded_rng(4);
        let h = random_density(&alg, &DensityOptions::default(), &mut rng).unwrap();
        let mut channels: Vec<Channel> = ChannelFamily::ALL
            .iter()
            .map(|&f| random_channel(&alg, f, 11).unwrap())
            .collect();
        channels.push(build_channel(alg.clone(), Builtin::BlockPermutation { permutation: vec![1, 0] }).unwrap());
        channels.push(build_channel(alg.clone(), Builtin::Transpose { basis: None }).unwrap());
        channels.push(Channel::from_superoperator(alg.clone(), channels[0].superoperator().clone()).unwrap());
        for phi in &channels {
            let text = channel_to_string(phi).unwrap();
            let back = channel_from_str(&text, None).unwrap();
            assert_eq!(back.label(), phi.label());
            let a = phi.apply(&h).unwrap();
            let b = back.apply(&h).unwrap();
            assert!(max_entry_difference(&a, &b).unwrap() <= 1e-15, "{}", phi.label());
        }
    }

    #[test]
    fn builtin_without_algebra_needs_one() {
        let text = r#"{"kind": "builtin", "name": "transpose", "params": {}}"#;
        assert!(channel_from_str(text, None).is_err());
        let alg = Arc::new(BlockAlgebra::full(2).unwrap());
        let phi = channel_from_str(text, Some(&alg)).unwrap();
        assert_eq!(phi.label(), "transpose");
        let other = Arc::new(BlockAlgebra::full(3).unwrap());
        let text = channel_to_string(&phi).unwrap();
        assert!(matches!(channel_from_str(&text, Some(&other)), Err(LabError::AlgebraMismatch(_))));
        let bad = r#"{"kind": "builtin", "name": "teleport", "params": {}}"#;
        assert!(channel_from_str(bad, Some(&alg)).is_err());
    }
}
