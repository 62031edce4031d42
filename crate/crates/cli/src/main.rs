//! `netreg`: simulate networked samples, compute codegree distances, estimate,
//! and run the Monte Carlo and distance-inequality checks.
//!
//! Exit codes: 0 success, 1 check failure, 2 input error, 3 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netreg::estimate::KernelVariant;
use netreg::simulate::AdjacencyFormat;

fn long_version() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        format!(
            "{}\nbuild: {} ({})\nrng: {}",
            env!("CARGO_PKG_VERSION"),
            if cfg!(debug_assertions) { "debug" } else { "release" },
            std::env::consts::ARCH,
            netreg::rng::RNG_ALGORITHM
        )
    })
}

#[derive(Parser, Debug)]
#[command(name = "netreg", version, long_version = long_version(), about = "Network-based semiparametric regression")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw outcomes and a network from a graphon design.
    Simulate(SimulateArgs),
    /// Compute the empirical codegree distance matrix.
    Distances(DistancesArgs),
    /// Estimate β and λ from observed data.
    Estimate(EstimateArgs),
    /// Run Monte Carlo checks from an experiment config.
    Mc(McArgs),
    /// Check the population distance inequalities for a graphon.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON with `graphon` and `outcome` objects.
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Dense)]
    format: Format,
    /// Also write the hidden types and λ values (`truth.csv`).
    #[arg(long)]
    emit_truth: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Dense,
    Edges,
}

impl From<Format> for AdjacencyFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Dense => AdjacencyFormat::Dense,
            Format::Edges => AdjacencyFormat::EdgeList,
        }
    }
}

#[derive(Args, Debug)]
struct DistancesArgs {
    #[arg(long)]
    adjacency: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the literal O(n⁴) triple sum instead of the Gram formulation.
    #[arg(long)]
    reference: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Boxcar,
    SmoothBump,
}

impl From<KernelArg> for KernelVariant {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Boxcar => KernelVariant::Boxcar,
            KernelArg::SmoothBump => KernelVariant::SmoothBump,
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// CSV with header `y,x1,...,xk`.
    #[arg(long)]
    outcomes: PathBuf,
    /// Dense 0/1 matrix or `i,j` edge list.
    #[arg(long)]
    adjacency: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Boxcar)]
    kernel: KernelArg,
    /// Bandwidth h applied to squared distances; default is automatic selection.
    #[arg(long, conflicts_with = "auto_bandwidth")]
    bandwidth: Option<f64>,
    #[arg(long)]
    auto_bandwidth: bool,
    #[arg(long, default_value_t = 1.0)]
    gamma_rate: f64,
    /// Window share every agent must reach under automatic selection.
    #[arg(long, default_value_t = netreg::experiments::DEFAULT_TARGET_R)]
    target_r: f64,
    /// Where to write per-agent λ̂ and r̂.
    #[arg(long, default_value = "lambda_hat.csv")]
    lambda_out: PathBuf,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for `raw.csv`, `aggregate.csv` and `summary.txt`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the config's memory budget for concurrent replications.
    #[arg(long)]
    memory_budget_mb: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LemmaArg {
    Lemma1,
    #[value(name = "lemmaA1", alias = "lemma-a1")]
    LemmaA1,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Graphon JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum)]
    check: LemmaArg,
    /// Uniform random pairs added to the grid.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    /// Points per axis of the regular pair grid.
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hölder exponent; with `--holder-c`, replaces the numerical search.
    #[arg(long, requires = "holder_c")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    holder_c: Option<f64>,
    /// Per-pair CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Distances(a) => commands::distances(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let netreg::Error::SingularDesign { .. } | netreg::Error::TargetUnreachable { .. } = e {
                eprintln!("hint: raise --bandwidth (or lower --target-r) so more pairs receive weight");
            }
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
