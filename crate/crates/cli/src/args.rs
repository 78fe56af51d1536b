use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renyi_lab::channel::ChannelFamily;
use renyi_lab::suite::SuiteKind;

#[derive(Parser, Debug)]
#[command(name = "renyi-lab", version, about = "Rényi entropy preservation laboratory")]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rényi (and optionally Segal or relative) entropy of a density file.
    Entropy(EntropyArgs),
    /// Classify a channel file.
    ChannelClassify(ClassifyArgs),
    /// Compare S_α(h) with S_α(Φ(h)) and report the structural defects.
    PreservationTest(PreservationArgs),
    /// Run a seeded verification suite.
    VerifySuite(SuiteArgs),
    /// Trace the integral representation of h^α along a cutoff schedule.
    ConvergenceDemo(ConvergenceArgs),
    /// Write a random density or channel file.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Also report the Segal entropy τ(h ln h).
    #[arg(long)]
    pub segal: bool,
    /// Also report D(h‖k) for this density.
    #[arg(long, value_name = "K")]
    pub relative: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Required when the channel file does not declare its algebra.
    #[arg(long)]
    pub algebra: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PreservationArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Needed only when neither file fixes the algebra.
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ToleranceArgs {
    /// Entropy equality tolerance.
    #[arg(long)]
    pub tol_entropy: Option<f64>,
    /// Structural (multiplicativity) defect tolerance.
    #[arg(long)]
    pub tol_structural: Option<f64>,
    /// Loewner order tolerance.
    #[arg(long)]
    pub tol_order: Option<f64>,
    /// Algebraic identity tolerance.
    #[arg(long)]
    pub tol_identity: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[arg(long, value_parser = parse_suite, default_value = "all")]
    pub suite: SuiteKind,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Algebras to cycle through, comma separated; `+` joins blocks
    /// (`2+2` is M_2 ⊕ M_2).
    #[arg(long, default_value = "2,3,2+2,4")]
    pub dims: String,
    /// Where failing instances are written for replay.
    #[arg(long, default_value = "renyi-lab-replay.json")]
    pub replay_out: PathBuf,
    /// Re-run the instances recorded in a replay file instead of a full suite.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[arg(long, hide = true)]
    pub inject_violation: bool,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// `default` or a schedule JSON file.
    #[arg(long, default_value = "default")]
    pub schedule: String,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
}

#[derive(Subcommand, Debug)]
pub enum GenerateKind {
    Density(GenerateDensity),
    Channel(GenerateChannel),
}

#[derive(Args, Debug)]
pub struct AlgebraArgs {
    /// Block sizes, comma separated.
    #[arg(long, default_value = "2")]
    pub dims: String,
    /// Block weights, comma separated (default all 1).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenerateDensity {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    /// Force a repeated eigenvalue.
    #[arg(long)]
    pub degenerate: bool,
    /// Number of zero eigenvalues.
    #[arg(long, default_value_t = 0)]
    pub zero_eigenvalues: usize,
}

#[derive(Args, Debug)]
pub struct GenerateChannel {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[arg(long, value_parser = parse_family, default_value = "haar_unitary_conjugation")]
    pub family: ChannelFamily,
}

fn parse_suite(s: &str) -> Result<SuiteKind, String> {
    s.parse().map_err(|e: renyi_lab::LabError| e.to_string())
}

fn parse_family(s: &str) -> Result<ChannelFamily, String> {
    s.parse().map_err(|e: renyi_lab::LabError| e.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse()
                .map_err(|_| anyhow::anyhow!("invalid {what} entry {p:?} in {s:?}"))
        })
        .collect()
}

pub fn parse_dims(s: &str) -> anyhow::Result<Vec<usize>> {
    parse_list(s, "dimension")
}

pub fn parse_weights(s: &str) -> anyhow::Result<Vec<f64>> {
    parse_list(s, "weight")
}

/// `"2,3,2+2"` → `[[2], [3], [2, 2]]`.
pub fn parse_dims_list(s: &str) -> anyhow::Result<Vec<Vec<usize>>> {
    s.split(',')
        .map(|a| a.split('+').map(|p| p.trim().parse()).collect::<Result<Vec<usize>, _>>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow::anyhow!("invalid algebra list {s:?}"))
}
