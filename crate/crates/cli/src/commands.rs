use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use renyi_lab::channel::{random_channel, ChannelProperties};
use renyi_lab::entropy::{extended_real, relative_entropy, renyi_entropy, segal_entropy, EntropyValue};
use renyi_lab::integral::{convergence_diagnostic, ConvergenceTrace, Schedule};
use renyi_lab::io::{load_algebra, load_channel, load_density, ChannelFile, HermitianPolicy, OperatorFile};
use renyi_lab::lab::{preservation_test_with, PreservationReport, Tolerances};
use renyi_lab::random::{random_density, seeded_rng, DensityOptions};
use renyi_lab::suite::{replay, run_suite, SuiteConfig, SuiteReport, Violation};
use renyi_lab::{BlockAlgebra, Channel};

use crate::args::{
    parse_dims, parse_dims_list, parse_weights, AlgebraArgs, ClassifyArgs, Cli, Command, ConvergenceArgs,
    EntropyArgs, Format, GenerateArgs, GenerateKind, PreservationArgs, SuiteArgs, ToleranceArgs,
};
use crate::output::{emit, json, sci, table, write_atomic};
use crate::Outcome;

/// Support tolerance for `--relative`.
const RELATIVE_SUPPORT_TOL: f64 = 1e-7;

pub fn run(cli: Cli) -> Result<Outcome> {
    let out = cli.output.as_deref();
    match cli.command {
        Command::Entropy(a) => entropy(a, cli.format, out),
        Command::ChannelClassify(a) => classify(a, cli.format, out),
        Command::PreservationTest(a) => preservation(a, cli.format, out),
        Command::VerifySuite(a) => verify_suite(a, cli.format, out),
        Command::ConvergenceDemo(a) => convergence(a, cli.format, out),
        Command::Generate(a) => generate(a, out),
    }
}

fn density(path: &Path) -> Result<renyi_lab::Density> {
    load_density(path, HermitianPolicy::default()).with_context(|| format!("reading density {}", path.display()))
}

fn algebra(path: Option<&Path>) -> Result<Option<Arc<BlockAlgebra>>> {
    path.map(|p| {
        load_algebra(p)
            .map(Arc::new)
            .with_context(|| format!("reading algebra {}", p.display()))
    })
    .transpose()
}

fn channel(path: &Path, algebra: Option<&Arc<BlockAlgebra>>) -> Result<Channel> {
    load_channel(path, algebra).with_context(|| format!("reading channel {}", path.display()))
}

fn tolerances(t: &ToleranceArgs) -> Result<Tolerances> {
    let d = Tolerances::default();
    let tol = Tolerances {
        entropy: t.tol_entropy.unwrap_or(d.entropy),
        structural: t.tol_structural.unwrap_or(d.structural),
        order: t.tol_order.unwrap_or(d.order),
        identity: t.tol_identity.unwrap_or(d.identity),
    };
    for v in [tol.entropy, tol.structural, tol.order, tol.identity] {
        if !(v >= 0.0 && v.is_finite()) {
            bail!("tolerances must be finite and nonnegative, got {v}");
        }
    }
    Ok(tol)
}

#[derive(Serialize)]
struct Extended(#[serde(with = "extended_real")] f64);

#[derive(Serialize)]
struct EntropyReport {
    #[serde(flatten)]
    renyi: EntropyValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    segal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative: Option<Extended>,
}

fn entropy(a: EntropyArgs, format: Format, out: Option<&Path>) -> Result<Outcome> {
    let h = density(&a.density)?;
    let renyi = renyi_entropy(&h, a.alpha)?;
    let segal = if a.segal { Some(segal_entropy(&h)?) } else { None };
    let relative = match &a.relative {
        Some(p) => Some(Extended(relative_entropy(&h, &density(p)?, RELATIVE_SUPPORT_TOL)?)),
        None => None,
    };
    let mut summary = format!("S_{} = {:.6}", a.alpha, renyi.value);
    if let Some(s) = segal {
        let _ = write!(summary, ", tau(h ln h) = {s:.6}");
    }
    if let Some(Extended(d)) = &relative {
        let _ = write!(summary, ", D(h||k) = {d:.6}");
    }
    let report = EntropyReport { renyi, segal, relative };
    if format == Format::Json {
        eprintln!("{summary}");
    }
    emit(&report, || summary.clone(), format, out)?;
    Ok(Outcome::Clean)
}

fn yes(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn properties_table(label: &str, p: &ChannelProperties) -> String {
    let rows = vec![
        vec!["unital".into(), yes(p.unital), sci(p.unital_defect)],
        vec!["trace preserving".into(), yes(p.trace_preserving), sci(p.trace_defect)],
        vec!["positive".into(), yes(p.positive), sci(p.positivity_min_eigenvalue)],
        vec!["completely positive".into(), yes(p.completely_positive), sci(p.choi_min_eigenvalue)],
        vec!["jordan multiplicative".into(), yes(p.jordan_multiplicative), sci(p.jordan_defect)],
        vec!["injective".into(), yes(p.injective), sci(p.min_singular_value)],
    ];
    format!(
        "channel: {label}\npositivity: {:?}\n{}",
        p.positivity_certificate,
        table(&["property", "holds", "measure"], &rows)
    )
}

fn classify(a: ClassifyArgs, format: Format, out: Option<&Path>) -> Result<Outcome> {
    let alg = algebra(a.algebra.as_deref())?;
    let phi = channel(&a.channel, alg.as_ref())?;
    let props = phi.properties();
    props.check_consistency()?;
    let text = properties_table(&phi.label(), props);
    if format == Format::Json {
        eprint!("{text}");
    }
    emit(props, || text.clone(), format, out)?;
    Ok(Outcome::Clean)
}

fn preservation(a: PreservationArgs, format: Format, out: Option<&Path>) -> Result<Outcome> {
    let h = density(&a.density)?;
    let alg = match algebra(a.algebra.as_deref())? {
        Some(given) => given,
        None => h.algebra_arc().clone(),
    };
    let phi = channel(&a.channel, Some(&alg))?;
    let report = preservation_test_with(&phi, &h, a.alpha, &tolerances(&a.tolerances)?)?;
    emit(&report, || preservation_text(&report), format, out)?;
    Ok(Outcome::Clean)
}

fn preservation_text(r: &PreservationReport) -> String {
    let mut rows = vec![
        vec!["alpha".into(), r.alpha.to_string()],
        vec!["S(h)".into(), format!("{:.9}", r.s_before.value)],
        vec!["S(phi(h))".into(), format!("{:.9}", r.s_after.value)],
        vec!["delta S".into(), sci(r.delta_s)],
        vec!["trace equality defect".into(), sci(r.trace_equality_defect)],
        vec!["operator equality defect".into(), sci(r.operator_equality_defect)],
        vec!["multiplicativity defect".into(), sci(r.multiplicativity_defect)],
        vec!["min projection image".into(), sci(r.min_projection_image)],
        vec!["clusters".into(), r.clusters.to_string()],
        vec!["cluster gap".into(), sci(r.cluster_gap)],
    ];
    if let Some(d) = r.resolvent_defect {
        rows.push(vec!["resolvent defect".into(), sci(d)]);
    }
    format!(
        "verdict: {}\n{}",
        serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        table(&["quantity", "value"], &rows)
    )
}

/// Written when a suite fails; `--replay` re-runs it.
#[derive(Serialize, Deserialize)]
struct ReplayFile {
    config: SuiteConfig,
    violations: Vec<Violation>,
}

fn suite_text(reports: &[SuiteReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let rows: Vec<Vec<String>> = r
            .checks
            .iter()
            .map(|c| vec![c.check.clone(), c.evaluated.to_string(), c.violations.to_string(), sci(c.min_margin)])
            .collect();
        let _ = writeln!(s, "suite {} (seed {}, {} instances)", r.suite, r.seed, r.instances);
        s.push_str(&table(&["check", "evaluated", "violations", "min margin"], &rows));
        if let Some(c) = &r.corpus {
            let _ = writeln!(
                s,
                "corpus: {} evaluations, {} preserved ({} on >= 2 clusters), {} contrapositive failures",
                c.size, c.preserved, c.preserved_multi_cluster, c.contrapositive_failures
            );
        }
        for v in &r.violations {
            let _ = writeln!(s, "VIOLATION {}: {} (instance {:?})", v.check, v.detail, v.instance.index);
        }
        s.push('\n');
    }
    s
}

fn verify_suite(a: SuiteArgs, format: Format, out: Option<&Path>) -> Result<Outcome> {
    if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: ReplayFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let records: Vec<_> = file.violations.iter().map(|v| v.instance.clone()).collect();
        let again = replay(&file.config, &records)?;
        let text = again
            .iter()
            .map(|v| format!("VIOLATION {}: {}\n", v.check, v.detail))
            .collect::<String>();
        emit(&again, || format!("{} violation(s) reproduced\n{text}", again.len()), format, out)?;
        return Ok(if again.is_empty() { Outcome::Clean } else { Outcome::Violations });
    }

    let algebras = parse_dims_list(&a.dims)?
        .into_iter()
        .map(BlockAlgebra::unweighted)
        .collect::<renyi_lab::Result<Vec<_>>>()?;
    let base = SuiteConfig {
        algebras,
        tolerances: tolerances(&a.tolerances)?,
        inject_violation: a.inject_violation,
        ..SuiteConfig::new(a.suite, a.instances, a.seed)
    };
    let mut reports = Vec::new();
    for kind in a.suite.members() {
        let cfg = SuiteConfig { suite: kind, ..base.clone() };
        reports.push(run_suite(&cfg)?);
    }
    let violations: Vec<Violation> = reports.iter().flat_map(|r| r.violations.iter().cloned()).collect();
    emit(&reports, || suite_text(&reports), format, out)?;
    if violations.is_empty() {
        return Ok(Outcome::Clean);
    }
    let n = violations.len();
    write_atomic(&a.replay_out, &json(&ReplayFile { config: base, violations })?)?;
    eprintln!("{n} violation(s); instances written to {}", a.replay_out.display());
    Ok(Outcome::Violations)
}

fn convergence(a: ConvergenceArgs, format: Format, out: Option<&Path>) -> Result<Outcome> {
    let h = density(&a.density)?;
    let schedule = if a.schedule == "default" {
        Schedule::default_cutoffs()
    } else {
        let text = std::fs::read_to_string(&a.schedule).with_context(|| format!("reading schedule {}", a.schedule))?;
        serde_json::from_str(&text).with_context(|| format!("parsing schedule {}", a.schedule))?
    };
    let trace = convergence_diagnostic(&h, a.alpha, &schedule)?;
    let text = convergence_text(&trace);
    if format == Format::Json {
        eprint!("{text}");
    }
    emit(&trace, || text.clone(), format, out)?;
    Ok(Outcome::Clean)
}

fn convergence_text(t: &ConvergenceTrace) -> String {
    let rows: Vec<Vec<String>> = t
        .stages
        .iter()
        .map(|s| {
            vec![
                sci(s.lower),
                sci(s.upper),
                format!("{:.12}", s.trace_value),
                sci(s.l1_gap),
                sci(s.tail_bound),
            ]
        })
        .collect();
    format!(
        "{}monotone: {}, loewner: {}\n",
        table(&["m", "M", "tau(z)", "||z - h^a||_1", "tail bound"], &rows),
        yes(t.monotone_flag),
        yes(t.loewner_ok)
    )
}

fn algebra_from(a: &AlgebraArgs) -> Result<Arc<BlockAlgebra>> {
    let dims = parse_dims(&a.dims)?;
    let alg = match &a.weights {
        Some(w) => BlockAlgebra::new(dims, parse_weights(w)?)?,
        None => BlockAlgebra::unweighted(dims)?,
    };
    Ok(Arc::new(alg))
}

fn generate(a: GenerateArgs, out: Option<&Path>) -> Result<Outcome> {
    let text = match a.kind {
        GenerateKind::Density(d) => {
            let alg = algebra_from(&d.algebra)?;
            let opts = DensityOptions {
                degenerate: d.degenerate,
                zero_eigenvalues: d.zero_eigenvalues,
                ..Default::default()
            };
            let h = random_density(&alg, &opts, &mut seeded_rng(d.algebra.seed))?;
            json(&OperatorFile::from_operator(&h))?
        }
        GenerateKind::Channel(c) => {
            let alg = algebra_from(&c.algebra)?;
            let phi = random_channel(&alg, c.family, c.algebra.seed)?;
            json(&ChannelFile::from_channel(&phi))?
        }
    };
    match out {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(Outcome::Clean)
}
