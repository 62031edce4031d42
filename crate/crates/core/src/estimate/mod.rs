//! Pairwise-difference estimation of `β` and kernel smoothing of `λ`.
//!
//! ```text
//! β̂ = (Σ_{i<j} (x_i−x_j)'(x_i−x_j) K(δ̂²_ij/h))⁻¹ Σ_{i<j} (x_i−x_j)'(y_i−y_j) K(δ̂²_ij/h)
//! λ̂_i = Σ_t (y_t − x_t β̂) K(δ̂²_it/h) / Σ_t K(δ̂²_it/h)
//! ```
//!
//! The smoothing sum includes `t = i`, so `λ̂_i` is always defined.

mod bandwidth;
mod kernel;
mod linalg;

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codegree::CodegreeDistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};
use crate::simulate::Sample;

pub use bandwidth::{bandwidth_diagnostic, bandwidth_grid, select_bandwidth, BandwidthDiagnostic};
pub use kernel::{kernel_eval, KernelSpec, KernelVariant};

/// Reciprocal condition below which the weighted design is declared singular.
pub const RCOND_MIN: f64 = 1e-12;

/// Fitted `β̂` with the diagnostics of its weighted design.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFit<T> {
    pub beta_hat: Array1<T>,
    /// Pairs `i < j` with positive kernel weight.
    pub effective_pairs: u64,
    pub condition_number: T,
}

fn check_dims<T: Real>(sample: &Sample<T>, delta: &CodegreeDistanceMatrix<T>) -> Result<()> {
    if delta.n() != sample.n() {
        return Err(Error::DimensionMismatch { what: "distance matrix vs sample size", expected: sample.n(), found: delta.n() });
    }
    Ok(())
}

/// Weighted pairwise-difference least squares over the upper triangle.
///
/// Rows are accumulated in parallel and combined in row order with
/// compensated summation, so the result does not depend on the thread count.
pub fn beta_hat<T: Real>(
    sample: &Sample<T>,
    delta: &CodegreeDistanceMatrix<T>,
    kernel: &KernelSpec<T>,
) -> Result<BetaFit<T>> {
    check_dims(sample, delta)?;
    kernel.validate()?;
    let (n, k) = (sample.n(), sample.k());
    let x = &sample.x;
    let y = &sample.y;

    let rows: Vec<(Vec<T>, Vec<T>, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut a = vec![T::zero(); k * k];
            let mut b = vec![T::zero(); k];
            let mut pairs = 0u64;
            let mut dx = vec![T::zero(); k];
            for j in (i + 1)..n {
                let w = kernel.weight(delta.get(i, j));
                if w <= T::zero() {
                    continue;
                }
                pairs += 1;
                for c in 0..k {
                    dx[c] = x[(i, c)] - x[(j, c)];
                }
                let dy = y[i] - y[j];
                for r in 0..k {
                    let wr = w * dx[r];
                    b[r] = b[r] + wr * dy;
                    for c in r..k {
                        a[r * k + c] = a[r * k + c] + wr * dx[c];
                    }
                }
            }
            (a, b, pairs)
        })
        .collect();

    let effective_pairs: u64 = rows.iter().map(|r| r.2).sum();
    let mut gram = Array2::zeros((k, k));
    for r in 0..k {
        for c in r..k {
            let v = compensated_sum(rows.iter().map(|row| row.0[r * k + c]));
            gram[(r, c)] = v;
            gram[(c, r)] = v;
        }
    }
    let rhs: Array1<T> = (0..k).map(|r| compensated_sum(rows.iter().map(|row| row.1[r]))).collect();

    // f32 cannot resolve 1e-12; use a precision-aware floor there
    let rcond_min = T::lit(RCOND_MIN).max(T::epsilon() * T::from_count(10 * k));
    let sol = linalg::solve_psd(&gram, &rhs, rcond_min);
    match sol.x {
        Some(beta_hat) if effective_pairs > 0 => {
            Ok(BetaFit { beta_hat, effective_pairs, condition_number: T::one() / sol.rcond })
        }
        _ => Err(Error::SingularDesign { rcond: sol.rcond.to_f64_lossy(), effective_pairs }),
    }
}

/// Kernel-weighted average of residuals `y_t − x_t β̂` around each agent.
pub fn lambda_hat<T: Real>(
    sample: &Sample<T>,
    delta: &CodegreeDistanceMatrix<T>,
    kernel: &KernelSpec<T>,
    beta_hat: &Array1<T>,
) -> Result<Array1<T>> {
    check_dims(sample, delta)?;
    kernel.validate()?;
    if beta_hat.len() != sample.k() {
        return Err(Error::DimensionMismatch { what: "beta_hat length", expected: sample.k(), found: beta_hat.len() });
    }
    let residual = &sample.y - &sample.x.dot(beta_hat);
    let n = sample.n();
    let out: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let weights: Vec<T> = (0..n).map(|t| kernel.weight(delta.get(i, t))).collect();
            let num = compensated_sum(weights.iter().zip(residual.iter()).map(|(&w, &r)| w * r));
            let den = compensated_sum(weights.iter().copied());
            num / den
        })
        .collect();
    Ok(Array1::from(out))
}

/// Everything one estimation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EstimationResult<T> {
    pub kernel: KernelSpec<T>,
    pub beta_hat: Vec<T>,
    pub lambda_hat: Vec<T>,
    pub effective_pairs: u64,
    pub condition_number: T,
    pub diagnostic: BandwidthDiagnostic<T>,
}

impl<T: Real> EstimationResult<T> {
    pub fn r_hat(&self) -> &[T] {
        &self.diagnostic.r_hat
    }

    pub fn r_bar(&self) -> T {
        self.diagnostic.r_bar
    }

    /// `β̂` and the scalar diagnostics; per-agent vectors go to CSV instead.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta_hat": self.beta_hat,
            "kernel": self.kernel,
            "effective_pairs": self.effective_pairs,
            "condition_number": self.condition_number,
            "r_bar": self.diagnostic.r_bar,
            "r_min": self.diagnostic.r_min,
            "r_threshold": self.diagnostic.threshold,
            "r_clears_threshold": self.diagnostic.clears_threshold(),
            "n": self.lambda_hat.len(),
        })
    }

    /// `agent,lambda_hat,r_hat` with 1-based agent ids.
    pub fn write_lambda_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "agent,lambda_hat,r_hat")?;
            for (i, (l, r)) in self.lambda_hat.iter().zip(&self.diagnostic.r_hat).enumerate() {
                writeln!(out, "{},{:e},{:e}", i + 1, l.to_f64_lossy(), r.to_f64_lossy())?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// `β̂`, then `λ̂` at `β̂`, then the window diagnostics.
pub fn estimate<T: Real>(
    sample: &Sample<T>,
    delta: &CodegreeDistanceMatrix<T>,
    kernel: &KernelSpec<T>,
) -> Result<EstimationResult<T>> {
    let fit = beta_hat(sample, delta, kernel)?;
    let lambda = lambda_hat(sample, delta, kernel, &fit.beta_hat)?;
    Ok(EstimationResult {
        kernel: *kernel,
        beta_hat: fit.beta_hat.to_vec(),
        lambda_hat: lambda.to_vec(),
        effective_pairs: fit.effective_pairs,
        condition_number: fit.condition_number,
        diagnostic: bandwidth_diagnostic(delta, kernel),
    })
}
