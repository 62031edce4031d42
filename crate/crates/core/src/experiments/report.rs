use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Check;
use crate::error::{Error, Result};

/// Quantity recorded per replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `‖β̂ − β‖₂`; signed column `β̂₁ − β₁`.
    BetaError,
    /// `max_i |λ̂_i − λ(w_i)|`; signed column is the mean error.
    LambdaError,
    /// `max_{i<j} |δ̂_ij − δ(w_i, w_j)|`; signed column is the mean error.
    DeltaError,
    /// `‖b − β‖₂` for exact-tie least squares.
    TieBetaError,
    /// `max_i |tie residual mean − tie mean of λ|`.
    TieLambdaError,
    /// Pairs violating the inequality.
    Violations,
    /// Largest checked-side/bound ratio over the sweep.
    TightnessMax,
    TightnessMedian,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::BetaError => "beta_error",
            Statistic::LambdaError => "lambda_error",
            Statistic::DeltaError => "delta_error",
            Statistic::TieBetaError => "tie_beta_error",
            Statistic::TieLambdaError => "tie_lambda_error",
            Statistic::Violations => "violations",
            Statistic::TightnessMax => "tightness_max",
            Statistic::TightnessMedian => "tightness_median",
        }
    }
}

/// One replication's value of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub check: Check,
    pub statistic: Statistic,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// `None` when the replication failed.
    pub value: Option<f64>,
    pub signed: Option<f64>,
    pub failure: Option<String>,
}

/// Summary over replications at one `(check, statistic, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub check: Check,
    pub statistic: Statistic,
    pub n: usize,
    pub successes: usize,
    pub failures: usize,
    pub median: f64,
    /// Mean of the signed column.
    pub bias: f64,
    /// Root mean square of the signed column.
    pub rmse: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: Check,
    pub statistic: Statistic,
    pub rule: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub raw: Vec<RawRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub verdicts: Vec<Verdict>,
    /// Wall-clock seconds; excluded from every file so reruns are byte-identical.
    #[serde(skip)]
    pub runtime_secs: f64,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Groups raw records by `(check, statistic, n)` in first-appearance order.
pub(crate) fn aggregate(raw: &[RawRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Check, Statistic, usize)> = Vec::new();
    for r in raw {
        let key = (r.check, r.statistic, r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(check, statistic, n)| {
            let group: Vec<&RawRecord> =
                raw.iter().filter(|r| r.check == check && r.statistic == statistic && r.n == n).collect();
            let mut values: Vec<f64> = group.iter().filter_map(|r| r.value).collect();
            let signed: Vec<f64> = group.iter().filter_map(|r| r.signed).collect();
            let successes = values.len();
            let (bias, rmse) = if signed.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let m = signed.len() as f64;
                (signed.iter().sum::<f64>() / m, (signed.iter().map(|s| s * s).sum::<f64>() / m).sqrt())
            };
            let max = values.iter().copied().fold(f64::NAN, f64::max);
            AggregateRow {
                check,
                statistic,
                n,
                successes,
                failures: group.len() - successes,
                median: median(&mut values),
                bias,
                rmse,
                max,
            }
        })
        .collect()
}

/// Below this every median counts as exact recovery.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// Strictly decreasing medians across `n`, tolerating one adjacent inversion when
/// `replications < 50`; or every median within [`EXACT_TOLERANCE`] of zero.
pub(crate) fn monotone_verdict(check: Check, statistic: Statistic, rows: &[&AggregateRow], replications: usize) -> Verdict {
    let allowed = if replications < 50 { 1 } else { 0 };
    let rule = format!(
        "medians strictly decreasing in n with at most {allowed} adjacent inversion(s), or all medians <= {EXACT_TOLERANCE:e}"
    );
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let listing = rows.iter().map(|r| format!("n={}: {:.6e}", r.n, r.median)).collect::<Vec<_>>().join(", ");
    if medians.iter().all(|m| m.abs() <= EXACT_TOLERANCE) {
        return Verdict { check, statistic, rule, passed: true, detail: format!("exact at every n ({listing})") };
    }
    let nan = medians.iter().any(|m| m.is_nan());
    let inversions = medians.windows(2).filter(|w| !(w[1] < w[0])).count();
    let passed = !nan && inversions <= allowed;
    Verdict { check, statistic, rule, passed, detail: format!("{inversions} inversion(s); {listing}") }
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, check: Check, statistic: Statistic) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check && v.statistic == statistic)
    }

    pub fn aggregates_for(&self, check: Check, statistic: Statistic) -> Vec<&AggregateRow> {
        self.aggregates.iter().filter(|a| a.check == check && a.statistic == statistic).collect()
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.raw.extend(other.raw);
        self.aggregates.extend(other.aggregates);
        self.verdicts.extend(other.verdicts);
        self.runtime_secs += other.runtime_secs;
    }

    pub fn write_raw_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["check", "statistic", "n", "replication", "seed", "value", "signed", "failure"])?;
        for r in &self.raw {
            w.write_record([
                r.check.name().to_string(),
                r.statistic.name().to_string(),
                r.n.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                opt(r.value),
                opt(r.signed),
                r.failure.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_aggregate_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["check", "statistic", "n", "successes", "failures", "median", "bias", "rmse", "max"])?;
        for a in &self.aggregates {
            w.write_record([
                a.check.name().to_string(),
                a.statistic.name().to_string(),
                a.n.to_string(),
                a.successes.to_string(),
                a.failures.to_string(),
                fmt(a.median),
                fmt(a.bias),
                fmt(a.rmse),
                fmt(a.max),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Human-readable verdicts and aggregate table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let _ = writeln!(
                s,
                "[{}] {} / {}: {}\n    rule: {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.check,
                v.statistic.name(),
                v.detail,
                v.rule
            );
        }
        let _ = writeln!(s, "\n{:<20} {:<18} {:>6} {:>5} {:>13} {:>13} {:>13}", "check", "statistic", "n", "fail", "median", "rmse", "max");
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{:<20} {:<18} {:>6} {:>5} {:>13.6e} {:>13.6e} {:>13.6e}",
                a.check.name(),
                a.statistic.name(),
                a.n,
                a.failures,
                a.median,
                a.rmse,
                a.max
            );
        }
        s
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, median: f64) -> AggregateRow {
        AggregateRow {
            check: Check::UniformDelta,
            statistic: Statistic::DeltaError,
            n,
            successes: 1,
            failures: 0,
            median,
            bias: 0.0,
            rmse: 0.0,
            max: median,
        }
    }

    fn verdict(medians: &[f64], reps: usize) -> bool {
        let rows: Vec<AggregateRow> = medians.iter().enumerate().map(|(i, &m)| row(100 << i, m)).collect();
        let refs: Vec<&AggregateRow> = rows.iter().collect();
        monotone_verdict(Check::UniformDelta, Statistic::DeltaError, &refs, reps).passed
    }

    #[test]
    fn monotonicity_rule() {
        assert!(verdict(&[0.4, 0.3, 0.2, 0.1], 50));
        assert!(!verdict(&[0.4, 0.5, 0.2, 0.1], 50));
        assert!(verdict(&[0.4, 0.5, 0.2, 0.1], 20));
        assert!(!verdict(&[0.4, 0.5, 0.2, 0.3], 20));
        // ties count as inversions
        assert!(!verdict(&[0.4, 0.4, 0.4], 50));
        assert!(verdict(&[0.0, 1e-13, 0.0], 50));
        assert!(!verdict(&[0.4, f64::NAN], 20));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn aggregation_counts_failures() {
        let rec = |rep, value: Option<f64>| RawRecord {
            check: Check::ConsistencyBeta,
            statistic: Statistic::BetaError,
            n: 10,
            replication: rep,
            seed: 0,
            value,
            signed: value.map(|v| -v),
            failure: value.is_none().then(|| "singular".to_string()),
        };
        let agg = aggregate(&[rec(0, Some(1.0)), rec(1, None), rec(2, Some(3.0))]);
        assert_eq!(agg.len(), 1);
        let a = &agg[0];
        assert_eq!((a.successes, a.failures), (2, 1));
        assert_eq!((a.median, a.bias, a.max), (2.0, -2.0, 3.0));
        assert!((a.rmse - 5f64.sqrt()).abs() < 1e-15);
    }
}
