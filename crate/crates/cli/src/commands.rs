use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use netreg::codegree::{distance_matrix_fast, distance_matrix_reference};
use netreg::estimate::{estimate as run_estimate, select_bandwidth, KernelSpec, KernelVariant};
use netreg::experiments::{run_experiments, sweep_pairs, ExperimentConfig, SweepConfig};
use netreg::graphon::{
    holder_constants, verify_lemma1, verify_lemma_a1, write_report_csv, GraphonSpec, HolderCertificate,
    HolderConstants, QuadratureGrid, DEFAULT_HOLDER_RESOLUTION,
};
use netreg::simulate::{
    draw_sample, ingest_sample, read_adjacency, write_adjacency_dense, write_edge_list, write_outcomes,
    write_truth, AdjacencyFormat, OutcomeSpec,
};
use netreg::{Error, Result};
use serde::Deserialize;

use crate::{DistancesArgs, EstimateArgs, LemmaArg, McArgs, SimulateArgs, VerifyArgs};

/// The part of a config file `simulate` needs; other keys are ignored, so
/// experiment configs work too.
#[derive(Deserialize)]
struct Design {
    graphon: GraphonSpec<f64>,
    outcome: OutcomeSpec<f64>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })
}

/// Files written so far; removed again unless the command completes.
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn add(&mut self, path: PathBuf) -> PathBuf {
        self.0.push(path.clone());
        path
    }

    fn commit(mut self) {
        self.0.clear();
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = fs::remove_file(p);
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let design: Design = parse_json(&args.config)?;
    let sample = draw_sample(&design.graphon, &design.outcome, args.n, args.seed)?;
    create_dir(&args.out_dir)?;
    let mut outputs = Outputs(Vec::new());
    write_outcomes(&sample, &outputs.add(args.out_dir.join("outcomes.csv")))?;
    match AdjacencyFormat::from(args.format) {
        AdjacencyFormat::Dense => write_adjacency_dense(&sample.d, &outputs.add(args.out_dir.join("adjacency.csv")))?,
        AdjacencyFormat::EdgeList => write_edge_list(&sample.d, &outputs.add(args.out_dir.join("edges.csv")))?,
    }
    if args.emit_truth {
        write_truth(&sample, &outputs.add(args.out_dir.join("truth.csv")))?;
    }
    for p in &outputs.0 {
        println!("wrote {}", p.display());
    }
    println!("n = {}, k = {}, edges = {}, density = {:.6}", sample.n(), sample.k(), sample.d.edge_count(), sample.d.density());
    outputs.commit();
    Ok(ExitCode::SUCCESS)
}

pub fn distances(args: &DistancesArgs) -> Result<ExitCode> {
    let adj = read_adjacency(&args.adjacency, None)?;
    if args.reference && adj.n() > 60 {
        eprintln!("warning: the reference triple sum is O(n^4); n = {} will be slow", adj.n());
    }
    let delta = if args.reference { distance_matrix_reference::<f64>(&adj) } else { distance_matrix_fast::<f64>(&adj) };
    let mut outputs = Outputs(Vec::new());
    delta.write_csv(&outputs.add(args.out.clone()))?;
    println!("wrote {} ({} x {}, max distance {:.6e})", args.out.display(), delta.n(), delta.n(), delta.max_distance());
    outputs.commit();
    Ok(ExitCode::SUCCESS)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

pub fn estimate(args: &EstimateArgs) -> Result<ExitCode> {
    let sample = ingest_sample::<f64>(&args.outcomes, &args.adjacency)?;
    let delta = distance_matrix_fast(&sample.d);
    let variant = KernelVariant::from(args.kernel);
    let kernel = match args.bandwidth {
        Some(h) if !args.auto_bandwidth => KernelSpec::new(variant, h, args.gamma_rate)?,
        _ => {
            KernelSpec::new(variant, 1.0, args.gamma_rate)?;
            let h = select_bandwidth(&delta, variant, args.gamma_rate, args.target_r)?;
            KernelSpec::new(variant, h, args.gamma_rate)?
        }
    };
    let result = run_estimate(&sample, &delta, &kernel)?;
    let mut outputs = Outputs(Vec::new());
    result.write_lambda_csv(&outputs.add(args.lambda_out.clone()))?;

    let json = serde_json::to_string_pretty(&result.summary_json()).map_err(Error::Json)?;
    println!("{json}");

    let diag = &result.diagnostic;
    let mut r = diag.r_hat.clone();
    r.sort_by(f64::total_cmp);
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "bandwidth h = {:e} ({:?} kernel on squared distances)", kernel.bandwidth, kernel.variant);
    let _ = writeln!(err, "window share r_i over agents:");
    let _ = writeln!(err, "  {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "min", "q25", "median", "q75", "max", "mean");
    let _ = writeln!(
        err,
        "  {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
        r[0],
        quantile(&r, 0.25),
        quantile(&r, 0.5),
        quantile(&r, 0.75),
        r[r.len() - 1],
        diag.r_bar
    );
    let _ = writeln!(
        err,
        "  n^(-gamma/4) = {:.4}: min r_i {} it",
        diag.threshold,
        if diag.clears_threshold() { "exceeds" } else { "does NOT exceed" }
    );
    let _ = writeln!(
        err,
        "note: beta_hat carries no bias correction; do not base confidence intervals on it directly."
    );
    let _ = writeln!(err, "wrote {}", args.lambda_out.display());
    outputs.commit();
    Ok(ExitCode::SUCCESS)
}

pub fn mc(args: &McArgs) -> Result<ExitCode> {
    let text = read_text(&args.config)?;
    let mut config = ExperimentConfig::<f64>::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if args.memory_budget_mb.is_some() {
        config.memory_budget_mb = args.memory_budget_mb;
    }
    create_dir(&args.out_dir)?;
    let report = run_experiments(&config)?;
    let mut outputs = Outputs(Vec::new());
    report.write_raw_csv(&outputs.add(args.out_dir.join("raw.csv")))?;
    report.write_aggregate_csv(&outputs.add(args.out_dir.join("aggregate.csv")))?;
    let summary = report.summary();
    let path = outputs.add(args.out_dir.join("summary.txt"));
    fs::write(&path, &summary).map_err(|source| Error::Io { path: path.clone(), source })?;
    print!("{summary}");
    eprintln!("runtime: {:.2} s", report.runtime_secs);
    outputs.commit();
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let spec = GraphonSpec::<f64>::from_json(&read_text(&args.spec)?)
        .map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", args.spec.display())),
            other => other,
        })?;
    if args.grid_size == 1 {
        return Err(Error::Config("--grid-size must be 0 or at least 2".into()));
    }
    let pairs = sweep_pairs::<f64>(&SweepConfig { grid_size: args.grid_size, random_pairs: args.pairs }, args.seed);
    let grid = QuadratureGrid::default();
    let report = match args.check {
        LemmaArg::Lemma1 => verify_lemma1(&spec, &pairs, &grid)?,
        LemmaArg::LemmaA1 => {
            let holder = match (args.alpha, args.holder_c) {
                (Some(alpha), Some(c)) => HolderConstants::new(alpha, c)?,
                _ => match holder_constants(&spec, DEFAULT_HOLDER_RESOLUTION) {
                    Ok(HolderCertificate::Certified(h)) => h,
                    Ok(HolderCertificate::NotCertified { reason }) | Err(Error::Unsupported(reason)) => {
                        eprintln!("warning: Hoelder constants not certified for {}: {reason}", spec.name());
                        eprintln!("warning: the bound was not checked (pass --alpha and --holder-c to supply constants)");
                        return Ok(ExitCode::SUCCESS);
                    }
                    Err(e) => return Err(e),
                },
            };
            println!("using alpha = {}, C = {}", holder.alpha, holder.c);
            verify_lemma_a1(&spec, holder, &pairs, &grid)?
        }
    };
    if let Some(path) = &args.report {
        let mut outputs = Outputs(Vec::new());
        let file = fs::File::create(outputs.add(path.clone())).map_err(|source| Error::Io { path: path.clone(), source })?;
        write_report_csv(&report, std::io::BufWriter::new(file))?;
        outputs.commit();
    }
    let violations = report.violations();
    let ratios = report.tightness_ratios();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    println!(
        "{} pairs checked on {}: {} violation(s), max tightness ratio {:.6}",
        report.rows.len(),
        spec.name(),
        violations.len(),
        max_ratio
    );
    if violations.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("pair_index,u,v,delta,d,bound");
    for v in violations.iter().take(50) {
        eprintln!("{},{},{},{:e},{:e},{:e}", v.pair_index, v.u, v.v, v.delta, v.d, v.bound);
    }
    Ok(ExitCode::from(1))
}
