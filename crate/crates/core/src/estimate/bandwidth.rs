use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelSpec, KernelVariant};
use crate::codegree::CodegreeDistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-agent share of other agents inside the kernel window, `r̂_i = (n−1)⁻¹ Σ_{j≠i} K(δ̂²_ij/h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BandwidthDiagnostic<T> {
    pub r_hat: Vec<T>,
    pub r_bar: T,
    pub r_min: T,
    /// `n^{−γ/4}`; the effective sample should be large relative to this.
    pub threshold: T,
}

impl<T: Real> BandwidthDiagnostic<T> {
    /// Whether every agent's window share exceeds `n^{−γ/4}`.
    pub fn clears_threshold(&self) -> bool {
        self.r_min > self.threshold
    }
}

pub fn bandwidth_diagnostic<T: Real>(
    delta: &CodegreeDistanceMatrix<T>,
    kernel: &KernelSpec<T>,
) -> BandwidthDiagnostic<T> {
    let n = delta.n();
    let r_hat: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            if n < 2 {
                return T::zero();
            }
            let total: T = (0..n).filter(|&j| j != i).map(|j| kernel.weight(delta.get(i, j))).sum();
            total / T::from_count(n - 1)
        })
        .collect();
    let r_bar = if n == 0 { T::zero() } else { r_hat.iter().copied().sum::<T>() / T::from_count(n) };
    let r_min = r_hat.iter().copied().fold(T::infinity(), T::min);
    let threshold = T::from_count(n).powf(-kernel.gamma_rate / T::lit(4.0));
    BandwidthDiagnostic { r_hat, r_bar, r_min: if n == 0 { T::zero() } else { r_min }, threshold }
}

/// Candidate bandwidths: 16 per decade from `10⁻¹⁰` to `10¹`.
pub fn bandwidth_grid<T: Real>() -> Vec<T> {
    (0..=176).map(|j| T::lit(10f64.powf(j as f64 / 16.0 - 10.0))).collect()
}

/// Smallest grid bandwidth whose minimum window share `min_i r̂_i` reaches `target`.
///
/// `min_i r̂_i` is non-decreasing in `h` for both kernels, so the grid is bisected.
pub fn select_bandwidth<T: Real>(
    delta: &CodegreeDistanceMatrix<T>,
    variant: KernelVariant,
    gamma_rate: T,
    target: T,
) -> Result<T> {
    if !(target > T::zero() && target <= T::one()) {
        return Err(Error::Config(format!("target window share must lie in (0, 1], got {target}")));
    }
    let grid = bandwidth_grid::<T>();
    let r_min = |h: T| -> Result<T> {
        let kernel = KernelSpec::new(variant, h, gamma_rate)?;
        Ok(bandwidth_diagnostic(delta, &kernel).r_min)
    };
    let top = r_min(grid[grid.len() - 1])?;
    if top < target {
        return Err(Error::TargetUnreachable { target: target.to_f64_lossy(), achieved: top.to_f64_lossy() });
    }
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    if r_min(grid[lo])? >= target {
        return Ok(grid[lo]);
    }
    // invariant: r_min(grid[lo]) < target <= r_min(grid[hi])
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if r_min(grid[mid])? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(grid[hi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegree::distance_matrix_fast;
    use crate::simulate::AdjacencyMatrix;
    use ndarray::Array2;

    fn path3() -> CodegreeDistanceMatrix<f64> {
        distance_matrix_fast(&AdjacencyMatrix::from_edges(3, [(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn wide_and_narrow_boxcar() {
        let delta = path3();
        let wide = bandwidth_diagnostic(&delta, &KernelSpec::boxcar(1.0).unwrap());
        assert_eq!(wide.r_hat, vec![1.0; 3]);
        assert_eq!(wide.r_bar, 1.0);
        // h below 6/27 keeps only the exact tie between agents 0 and 2
        let narrow = bandwidth_diagnostic(&delta, &KernelSpec::boxcar(0.1).unwrap());
        assert_eq!(narrow.r_hat, vec![0.5, 0.0, 0.5]);
        assert_eq!(narrow.r_min, 0.0);
        assert!(!narrow.clears_threshold());
        assert!((narrow.threshold - 3f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn grid_is_increasing_and_covers_unit_interval() {
        let g = bandwidth_grid::<f64>();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] <= 1e-10 * 1.000001 && *g.last().unwrap() > 1.0);
    }

    #[test]
    fn duplicate_columns_select_smallest_grid_point() {
        let delta = CodegreeDistanceMatrix::from_values(Array2::<f64>::zeros((5, 5))).unwrap();
        let h = select_bandwidth(&delta, KernelVariant::Boxcar, 1.0, 1.0).unwrap();
        assert_eq!(h, bandwidth_grid::<f64>()[0]);
    }

    #[test]
    fn full_target_with_boxcar_exceeds_max_squared_distance() {
        let delta = path3();
        let h = select_bandwidth(&delta, KernelVariant::Boxcar, 1.0, 1.0).unwrap();
        let max_sq = 6.0 / 27.0;
        let grid = bandwidth_grid::<f64>();
        let first_above = grid.iter().copied().find(|&g| g > max_sq).unwrap();
        assert_eq!(h, first_above);
    }

    #[test]
    fn unreachable_target() {
        let delta = path3();
        // the bump kernel never reaches weight 1 off a tie
        let err = select_bandwidth(&delta, KernelVariant::SmoothBump, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::TargetUnreachable { .. }));
        assert!(select_bandwidth(&delta, KernelVariant::Boxcar, 1.0, 0.0).is_err());
    }
}
