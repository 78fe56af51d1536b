//! Seeded verification suites.
//!
//! Instance `i` of a run draws everything from `instance_rng(seed, i)`, so a
//! failing instance can be replayed from `(suite, seed, index)` alone; the
//! generated channel and densities are also attached to every violation.
//! Instances are evaluated in parallel and merged in index order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::BlockAlgebra;
use crate::channel::{build_channel, random_channel_with, Builtin, Channel, ChannelFamily};
use crate::error::{LabError, Result};
use crate::io::{ChannelFile, OperatorFile};
use crate::lab::{
    alpha_ge_2_reduction_check, jensen_concave_check, jensen_convex_check, jordan_isomorphism_test,
    loewner_power_order, monotonicity_check, preservation_test_with, relative_entropy_invariance_test,
    resolvent_jensen_check, trace_jensen_check, PreservationVerdict, Tolerances,
};
use crate::operator::Density;
use crate::random::{
    haar_unitary_operator, instance_rng, random_density, random_ordered_pair, DensityOptions, LabRng,
};
use crate::spectral::OrderVerdict;

pub const CONCAVE_ALPHAS: [f64; 3] = [0.3, 0.5, 0.9];
pub const CONVEX_ALPHAS: [f64; 2] = [1.3, 2.0];
pub const TRACE_ALPHAS: [f64; 2] = [2.5, 3.0];
pub const RESOLVENT_SHIFTS: [f64; 3] = [0.1, 1.0, 10.0];
pub const MONOTONE_ALPHA: f64 = 0.5;
pub const PRESERVATION_ALPHAS: [f64; 3] = [0.5, 2.0, 3.0];
pub const REDUCTION: (f64, f64) = (3.0, 1.5);

/// Probability that a preservation instance uses a degenerate density.
const DEGENERATE_FRACTION: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Jensen,
    Monotone,
    Preservation,
    Jordan,
    All,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Jensen => "jensen",
            SuiteKind::Monotone => "monotone",
            SuiteKind::Preservation => "preservation",
            SuiteKind::Jordan => "jordan",
            SuiteKind::All => "all",
        }
    }

    /// The concrete suites this kind runs.
    pub fn members(self) -> Vec<SuiteKind> {
        match self {
            SuiteKind::All => vec![
                SuiteKind::Jensen,
                SuiteKind::Monotone,
                SuiteKind::Preservation,
                SuiteKind::Jordan,
            ],
            k => vec![k],
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        [
            SuiteKind::Jensen,
            SuiteKind::Monotone,
            SuiteKind::Preservation,
            SuiteKind::Jordan,
            SuiteKind::All,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| LabError::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: SuiteKind,
    pub instances: usize,
    pub seed: u64,
    /// Instance `i` uses `algebras[i % len]`.
    pub algebras: Vec<BlockAlgebra>,
    pub tolerances: Tolerances,
    /// Adds the `t²` pair to the monotonicity checker at exponent 2 as an
    /// ordinary instance (testing hook for the violation path).
    #[serde(default)]
    pub inject_violation: bool,
}

impl SuiteConfig {
    pub fn new(suite: SuiteKind, instances: usize, seed: u64) -> Self {
        SuiteConfig {
            suite,
            instances,
            seed,
            algebras: default_algebras(),
            tolerances: Tolerances::default(),
            inject_violation: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.algebras.is_empty() {
            return Err(LabError::InvalidParameter("no algebras configured".into()));
        }
        Ok(())
    }
}

/// `M_2`, `M_3`, `M_2 ⊕ M_2`, `M_4`.
pub fn default_algebras() -> Vec<BlockAlgebra> {
    [vec![2], vec![3], vec![2, 2], vec![4]]
        .into_iter()
        .map(|d| BlockAlgebra::unweighted(d).expect("small algebras"))
        .collect()
}

/// Everything needed to rebuild an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub suite: SuiteKind,
    pub seed: u64,
    /// `None` for fixtures that are not drawn from the seed.
    pub index: Option<u64>,
    pub algebra: BlockAlgebra,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<OperatorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_density: Option<OperatorFile>,
    /// Power for fixture pairs checked as `u1^p ≤ u2^p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
    pub instance: InstanceRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub evaluated: usize,
    pub violations: usize,
    /// Smallest `allowed − observed` over all evaluations; negative means a
    /// violation.
    pub min_margin: f64,
}

/// Statistics of the preservation corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub size: usize,
    pub preserved: usize,
    /// Preserved instances whose density has at least two clusters.
    pub preserved_multi_cluster: usize,
    pub isomorphic_verdicts: usize,
    pub inconclusive_verdicts: usize,
    pub contrapositive_failures: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub seed: u64,
    pub instances: usize,
    pub algebras: Vec<BlockAlgebra>,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckSummary>,
    pub corpus: Option<CorpusSummary>,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn total_evaluations(&self) -> usize {
        self.checks.iter().map(|c| c.evaluated).sum()
    }
}

/// One evaluation: passes when `margin ≥ 0`.
struct Eval {
    check: &'static str,
    margin: f64,
    detail: String,
}

#[derive(Default)]
struct InstanceOutcome {
    evals: Vec<Eval>,
    record: Option<InstanceRecord>,
    corpus: CorpusSummary,
}

impl InstanceOutcome {
    fn push(&mut self, check: &'static str, margin: f64, detail: impl Into<String>) {
        self.evals.push(Eval {
            check,
            margin,
            detail: detail.into(),
        });
    }

    fn order(&mut self, check: &'static str, v: &OrderVerdict, what: impl fmt::Display) {
        self.push(
            check,
            v.min_eigenvalue + v.threshold,
            format!("{what}: min eigenvalue {:e} below -{:e}", v.min_eigenvalue, v.threshold),
        );
    }

    fn result<T>(&mut self, check: &'static str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(check, f64::NEG_INFINITY, format!("error: {e}"));
                None
            }
        }
    }
}

fn record(
    suite: SuiteKind,
    seed: u64,
    index: Option<u64>,
    algebra: &BlockAlgebra,
    channel: Option<&Channel>,
    density: Option<&Density>,
    second: Option<&Density>,
) -> InstanceRecord {
    InstanceRecord {
        suite,
        seed,
        index,
        algebra: algebra.clone(),
        channel: channel.map(ChannelFile::from_channel),
        density: density.map(|d| OperatorFile::from_operator(d)),
        second_density: second.map(|d| OperatorFile::from_operator(d)),
        exponent: None,
    }
}

fn algebra_for(config: &SuiteConfig, index: u64) -> Arc<BlockAlgebra> {
    Arc::new(config.algebras[(index as usize) % config.algebras.len()].clone())
}

fn jensen_instance(config: &SuiteConfig, index: u64) -> InstanceOutcome {
    let mut out = InstanceOutcome::default();
    let mut rng = instance_rng(config.seed, index);
    let alg = algebra_for(config, index);
    let family = *ChannelFamily::ALL.choose(&mut rng).expect("families");
    let Some(phi) = out.result("generate", random_channel_with(&alg, family, &mut rng)) else {
        return out;
    };
    let Some(h) = out.result("generate", random_density(&alg, &DensityOptions::default(), &mut rng)) else {
        return out;
    };
    let tol = config.tolerances;

    for alpha in CONCAVE_ALPHAS {
        if let Some(v) = out.result("jensen_concave", jensen_concave_check(&phi, &h, alpha, tol.order)) {
            out.order("jensen_concave", &v, format_args!("alpha {alpha}"));
        }
    }
    for alpha in CONVEX_ALPHAS {
        if let Some(v) = out.result("jensen_convex", jensen_convex_check(&phi, &h, alpha, tol.order)) {
            out.order("jensen_convex", &v, format_args!("alpha {alpha}"));
        }
    }
    for alpha in TRACE_ALPHAS {
        if let Some(v) = out.result("trace_jensen", trace_jensen_check(&phi, &h, alpha, tol.order)) {
            let scale = v.gap.abs().max(1.0);
            let margin = if v.holds { v.gap + tol.order * scale } else { v.gap.min(-f64::MIN_POSITIVE) };
            out.push(
                "trace_jensen",
                margin,
                format!("alpha {alpha}: gap {:e}, trace drift {:e}", v.gap, v.trace_preservation_defect),
            );
        }
    }
    for s in RESOLVENT_SHIFTS {
        if let Some(v) = out.result("resolvent_jensen", resolvent_jensen_check(&phi, &h, s, tol.order)) {
            out.order("resolvent_jensen", &v.product_form, format_args!("s {s}, product form"));
            out.order("resolvent_jensen", &v.inverse_form, format_args!("s {s}, inverse form"));
            out.push(
                "f1_identity",
                tol.identity - v.identity_defect,
                format!("s {s}: identity defect {:e}", v.identity_defect),
            );
        }
    }
    let (alpha, gamma) = REDUCTION;
    if let Some(v) = out.result(
        "alpha_ge_2_reduction",
        alpha_ge_2_reduction_check(&phi, &h, alpha, gamma, tol.identity),
    ) {
        let scale = v.lhs.abs().max(1.0) * tol.identity;
        let chain = (v.lhs - v.middle).min(v.middle - v.rhs) + scale;
        let margin = if v.holds() { chain.max(0.0) } else { chain.min(-f64::MIN_POSITIVE) };
        out.push(
            "alpha_ge_2_reduction",
            margin,
            format!("chain {:.15} >= {:.15} >= {:.15}, conclusion {:?}", v.lhs, v.middle, v.rhs, v.conclusion_defect),
        );
    }
    out.record = Some(record(SuiteKind::Jensen, config.seed, Some(index), &alg, Some(&phi), Some(&h), None));
    out
}

/// The pair `[[1,1],[1,1]] ≤ [[2,1],[1,1]]` whose squares are not ordered.
pub fn square_counterexample() -> (Density, Density) {
    let alg = Arc::new(BlockAlgebra::full(2).expect("M_2"));
    let u1 = Density::from_real(alg.clone(), &[&[1.0, 1.0, 1.0, 1.0]]).expect("fixture");
    let u2 = Density::from_real(alg, &[&[2.0, 1.0, 1.0, 1.0]]).expect("fixture");
    (u1, u2)
}

fn monotone_instance(config: &SuiteConfig, index: u64) -> InstanceOutcome {
    let mut out = InstanceOutcome::default();
    let mut rng = instance_rng(config.seed, index);
    let alg = algebra_for(config, index);
    let Some((u1, u2)) = out.result("generate", random_ordered_pair(&alg, &mut rng)) else {
        return out;
    };
    if let Some(v) = out.result(
        "monotonicity",
        monotonicity_check(&u1, &u2, MONOTONE_ALPHA, config.tolerances.order),
    ) {
        out.order("monotonicity", &v, format_args!("alpha {MONOTONE_ALPHA}"));
    }
    out.record = Some(record(SuiteKind::Monotone, config.seed, Some(index), &alg, None, Some(&u1), Some(&u2)));
    out
}

/// Evaluated once per monotone run: the checker must flag the `t²` pair.
fn monotone_controls(config: &SuiteConfig) -> Vec<InstanceOutcome> {
    let (u1, u2) = square_counterexample();
    let fixture = |out: &mut InstanceOutcome| {
        let mut r = record(SuiteKind::Monotone, config.seed, None, u1.algebra(), None, Some(&u1), Some(&u2));
        r.exponent = Some(2.0);
        out.record = Some(r);
    };
    let mut control = InstanceOutcome::default();
    if let Some(v) = control.result(
        "monotonicity_negative_control",
        loewner_power_order(&u1, &u2, 2.0, config.tolerances.order),
    ) {
        let margin = -(v.min_eigenvalue + v.threshold);
        control.push(
            "monotonicity_negative_control",
            margin,
            format!("t^2 pair reported as ordered (min eigenvalue {:e})", v.min_eigenvalue),
        );
    }
    fixture(&mut control);
    let mut outs = vec![control];
    if config.inject_violation {
        let mut injected = InstanceOutcome::default();
        if let Some(v) = injected.result("monotonicity", loewner_power_order(&u1, &u2, 2.0, config.tolerances.order)) {
            injected.order("monotonicity", &v, "injected t^2 pair at exponent 2");
        }
        fixture(&mut injected);
        outs.push(injected);
    }
    outs
}

/// Channels with a known answer to "is this a Jordan isomorphism".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ChannelPick {
    Random(ChannelFamily),
    Transpose,
    BlockSwap,
}

fn equal_block_pair(alg: &BlockAlgebra) -> Option<(usize, usize)> {
    let (d, w) = (alg.dims(), alg.weights());
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if d[i] == d[j] && w[i] == w[j] {
                return Some((i, j));
            }
        }
    }
    None
}

fn pick_channel(alg: &Arc<BlockAlgebra>, rng: &mut LabRng) -> Result<(Channel, bool)> {
    let mut picks = vec![
        ChannelPick::Random(ChannelFamily::HaarUnitaryConjugation),
        ChannelPick::Transpose,
        ChannelPick::Random(ChannelFamily::RandomPinching),
        ChannelPick::Random(ChannelFamily::RandomMixture),
        ChannelPick::Random(ChannelFamily::RandomKrausUnitalTp),
    ];
    if equal_block_pair(alg).is_some() {
        picks.push(ChannelPick::BlockSwap);
    }
    let pick = *picks.choose(rng).expect("non-empty");
    // On an algebra of 1×1 blocks every unital trace-preserving map is the
    // identity, so even the "generic" families are isomorphisms there.
    let trivial = alg.dims().iter().all(|&n| n == 1);
    Ok(match pick {
        ChannelPick::Random(f) => {
            let iso = trivial || f == ChannelFamily::HaarUnitaryConjugation;
            (random_channel_with(alg, f, rng)?, iso)
        }
        ChannelPick::Transpose => (
            build_channel(
                alg.clone(),
                Builtin::Transpose {
                    basis: Some(haar_unitary_operator(alg, rng)),
                },
            )?,
            true,
        ),
        ChannelPick::BlockSwap => {
            let (i, j) = equal_block_pair(alg).expect("checked above");
            let mut permutation: Vec<usize> = (0..alg.num_blocks()).collect();
            permutation.swap(i, j);
            (build_channel(alg.clone(), Builtin::BlockPermutation { permutation })?, true)
        }
    })
}

fn preservation_instance(config: &SuiteConfig, index: u64) -> InstanceOutcome {
    let mut out = InstanceOutcome::default();
    let mut rng = instance_rng(config.seed, index);
    let alg = algebra_for(config, index);
    let Some((phi, iso)) = out.result("generate", pick_channel(&alg, &mut rng)) else {
        return out;
    };
    let opts = DensityOptions {
        degenerate: rng.random_bool(DEGENERATE_FRACTION),
        ..Default::default()
    };
    let Some(h) = out.result("generate", random_density(&alg, &opts, &mut rng)) else {
        return out;
    };
    let tol = config.tolerances;
    for alpha in PRESERVATION_ALPHAS {
        let Some(r) = out.result("preservation", preservation_test_with(&phi, &h, alpha, &tol)) else {
            continue;
        };
        out.corpus.size += 1;
        let preserved = r.delta_s <= tol.entropy;
        match r.verdict {
            PreservationVerdict::PreservedAndIsomorphic => out.corpus.isomorphic_verdicts += 1,
            PreservationVerdict::PreservedButInconclusive => out.corpus.inconclusive_verdicts += 1,
            PreservationVerdict::NotPreserved => {}
        }
        if preserved {
            out.corpus.preserved += 1;
        }
        if iso {
            let margin = (tol.entropy - r.delta_s).min(tol.structural - r.multiplicativity_defect);
            out.push(
                "isomorphism_preservation",
                margin,
                format!(
                    "alpha {alpha}: delta_s {:e}, multiplicativity defect {:e}",
                    r.delta_s, r.multiplicativity_defect
                ),
            );
        }
        if preserved && r.clusters >= 2 {
            out.corpus.preserved_multi_cluster += 1;
            let margin = tol.structural - r.multiplicativity_defect;
            if margin < 0.0 {
                out.corpus.contrapositive_failures += 1;
            }
            out.push(
                "contrapositive",
                margin,
                format!(
                    "alpha {alpha}: entropy preserved (delta_s {:e}) on {} clusters but multiplicativity defect {:e}",
                    r.delta_s, r.clusters, r.multiplicativity_defect
                ),
            );
        }
    }
    out.record = Some(record(SuiteKind::Preservation, config.seed, Some(index), &alg, Some(&phi), Some(&h), None));
    out
}

fn jordan_instance(config: &SuiteConfig, index: u64) -> InstanceOutcome {
    let mut out = InstanceOutcome::default();
    let mut rng = instance_rng(config.seed, index);
    let alg = algebra_for(config, index);
    let Some((phi, iso)) = out.result("generate", pick_channel(&alg, &mut rng)) else {
        return out;
    };
    let tol = config.tolerances;
    let mut densities = Vec::new();
    if let Some(v) = out.result("jordan_classification", jordan_isomorphism_test(&phi, tol.order)) {
        out.push(
            "jordan_classification",
            if v.isomorphism == iso { 1.0 } else { -1.0 },
            format!("expected isomorphism = {iso}, got {} (defect {:e})", v.isomorphism, v.defect),
        );
        if v.isomorphism {
            let full = random_density(&alg, &DensityOptions::default(), &mut rng);
            let other = random_density(&alg, &DensityOptions::default(), &mut rng);
            let deficient = random_density(
                &alg,
                &DensityOptions {
                    zero_eigenvalues: 1,
                    ..Default::default()
                },
                &mut rng,
            );
            if let (Some(h), Some(k), Some(z)) = (
                out.result("generate", full),
                out.result("generate", other),
                out.result("generate", deficient),
            ) {
                if let Some(v) = out.result(
                    "relative_entropy_invariance",
                    relative_entropy_invariance_test(&phi, &h, &k, tol.identity),
                ) {
                    out.push(
                        "relative_entropy_invariance",
                        if v.holds { tol.identity - v.difference.max(v.support_transport_defect) } else { -1.0 },
                        format!("difference {:e}, support transport {:e}", v.difference, v.support_transport_defect),
                    );
                }
                if let Some(v) = out.result(
                    "relative_entropy_invariance",
                    relative_entropy_invariance_test(&phi, &h, &z, tol.identity),
                ) {
                    let both_infinite = v.d_before.is_infinite() && v.d_after.is_infinite();
                    out.push(
                        "relative_entropy_invariance",
                        if both_infinite && v.holds { 1.0 } else { -1.0 },
                        format!("support-violating pair gave {} and {}", v.d_before, v.d_after),
                    );
                }
                densities = vec![h, z];
            }
        }
    }
    out.record = Some(record(
        SuiteKind::Jordan,
        config.seed,
        Some(index),
        &alg,
        Some(&phi),
        densities.first(),
        densities.get(1),
    ));
    out
}

fn run_instance(suite: SuiteKind, config: &SuiteConfig, index: u64) -> InstanceOutcome {
    match suite {
        SuiteKind::Jensen => jensen_instance(config, index),
        SuiteKind::Monotone => monotone_instance(config, index),
        SuiteKind::Preservation => preservation_instance(config, index),
        SuiteKind::Jordan => jordan_instance(config, index),
        SuiteKind::All => unreachable!("expanded by members()"),
    }
}

/// Runs the configured suite(s). Deterministic in `config`.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let mut tallies: BTreeMap<&'static str, CheckSummary> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut corpus: Option<CorpusSummary> = None;

    for suite in config.suite.members() {
        let mut outcomes: Vec<InstanceOutcome> = (0..config.instances as u64)
            .into_par_iter()
            .map(|i| run_instance(suite, config, i))
            .collect();
        if suite == SuiteKind::Monotone {
            outcomes.extend(monotone_controls(config));
        }
        for o in outcomes {
            if suite == SuiteKind::Preservation {
                let c = corpus.get_or_insert_with(CorpusSummary::default);
                c.size += o.corpus.size;
                c.preserved += o.corpus.preserved;
                c.preserved_multi_cluster += o.corpus.preserved_multi_cluster;
                c.isomorphic_verdicts += o.corpus.isomorphic_verdicts;
                c.inconclusive_verdicts += o.corpus.inconclusive_verdicts;
                c.contrapositive_failures += o.corpus.contrapositive_failures;
            }
            for e in o.evals {
                let t = tallies.entry(e.check).or_insert_with(|| CheckSummary {
                    check: e.check.to_string(),
                    evaluated: 0,
                    violations: 0,
                    min_margin: f64::INFINITY,
                });
                t.evaluated += 1;
                t.min_margin = t.min_margin.min(e.margin);
                // NaN margins count as violations.
                if !(e.margin >= 0.0) {
                    t.violations += 1;
                    violations.push(Violation {
                        check: e.check.to_string(),
                        detail: e.detail,
                        instance: o.record.clone().unwrap_or_else(|| InstanceRecord {
                            suite,
                            seed: config.seed,
                            index: None,
                            algebra: config.algebras[0].clone(),
                            channel: None,
                            density: None,
                            second_density: None,
                            exponent: None,
                        }),
                    });
                }
            }
        }
    }

    Ok(SuiteReport {
        suite: config.suite,
        seed: config.seed,
        instances: config.instances,
        algebras: config.algebras.clone(),
        tolerances: config.tolerances,
        checks: tallies.into_values().collect(),
        corpus,
        violations,
    })
}

fn replay_fixture(config: &SuiteConfig, r: &InstanceRecord) -> Result<InstanceOutcome> {
    let (Some(a), Some(b), Some(p)) = (&r.density, &r.second_density, r.exponent) else {
        return Err(LabError::InvalidParameter("fixture record lacks its pair or exponent".into()));
    };
    let u1 = Density::new(crate::operator::Hermitian::mirrored(a.to_operator()?))?;
    let u2 = Density::new(crate::operator::Hermitian::mirrored(b.to_operator()?))?;
    let mut out = InstanceOutcome::default();
    if let Some(v) = out.result("monotonicity", loewner_power_order(&u1, &u2, p, config.tolerances.order)) {
        out.order("monotonicity", &v, format_args!("fixture pair at exponent {p}"));
    }
    out.record = Some(r.clone());
    Ok(out)
}

/// Re-runs the instances named by `records` and returns the violations they
/// produce now. Seeded records are regenerated; fixture pairs are re-checked
/// from the stored operators.
pub fn replay(config: &SuiteConfig, records: &[InstanceRecord]) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for r in records {
        if r.suite == SuiteKind::All {
            return Err(LabError::InvalidParameter("instance records name a concrete suite".into()));
        }
        let o = match r.index {
            Some(index) => {
                let mut cfg = config.clone();
                cfg.seed = r.seed;
                run_instance(r.suite, &cfg, index)
            }
            None => replay_fixture(config, r)?,
        };
        for e in o.evals {
            if !(e.margin >= 0.0) {
                out.push(Violation {
                    check: e.check.to_string(),
                    detail: e.detail,
                    instance: o.record.clone().unwrap_or_else(|| r.clone()),
                });
            }
        }
    }
    Ok(out)
}
