//! Empirical codegree distances between agents.
//!
//! With `M = D·D` (so `M_it` counts agents linked to both `i` and `t`),
//!
//! ```text
//! δ̂_ij = ( n⁻¹ Σ_t ( n⁻¹ Σ_s D_ts (D_is − D_js) )² )^{1/2}
//!      = ( n⁻³ Σ_t (M_ti − M_tj)² )^{1/2}.
//! ```
//!
//! Both sums run over all of `1..n`, including `t ∈ {i, j}`. The normalization
//! is `1/n` inside and outside, not `1/(n−2)`.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulate::AdjacencyMatrix;

/// Symmetric `n × n` matrix of `δ̂_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CodegreeDistanceMatrix<T> {
    values: Array2<T>,
}

impl<T: Real> CodegreeDistanceMatrix<T> {
    pub fn from_values(values: Array2<T>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch { what: "distance matrix columns", expected: n, found: values.ncols() });
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    /// Largest off-diagonal entry.
    pub fn max_distance(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Smallest strictly positive entry, if any.
    pub fn min_positive(&self) -> Option<T> {
        self.values.iter().filter(|&&v| v > T::zero()).fold(None, |acc: Option<T>, &v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
    }

    /// Relabels agents: agent `perm[i]` of the result is agent `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[(perm[i], perm[j])] = self.values[(i, j)];
            }
        }
        Self { values: out }
    }

    /// Dense CSV without header, one row per agent.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{:e}", v.to_f64_lossy())).collect();
            writeln!(out, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// `M = D·D`: `M_it = Σ_s D_is D_st` (common neighbours); `M_ii` is the degree of `i`.
pub fn squared_adjacency(d: &AdjacencyMatrix) -> Array2<u32> {
    let n = d.n();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = d.row_words(i);
            (0..n)
                .map(|t| {
                    ri.iter().zip(d.row_words(t)).map(|(a, b)| (a & b).count_ones()).sum()
                })
                .collect()
        })
        .collect();
    Array2::from_shape_vec((n, n), rows.concat()).expect("n × n")
}

/// Literal triple sum; `O(n⁴)`, intended as a test oracle for small `n`.
pub fn distance_matrix_reference<T: Real>(d: &AdjacencyMatrix) -> CodegreeDistanceMatrix<T> {
    let n = d.n();
    let adj = |a: usize, b: usize| d.get(a, b) as i64;
    let scale = (n as f64).powi(3);
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut total: i64 = 0;
            for t in 0..n {
                let inner: i64 = (0..n).map(|s| adj(t, s) * (adj(i, s) - adj(j, s))).sum();
                total += inner * inner;
            }
            let delta = T::lit((total as f64 / scale).sqrt());
            values[(i, j)] = delta;
            values[(j, i)] = delta;
        }
    }
    CodegreeDistanceMatrix { values }
}

/// Gram formulation: `G = M·M`, `δ̂²_ij = n⁻³ (G_ii − 2 G_ij + G_jj)`.
///
/// `M` and `G` are carried in `f64`, which represents their integer entries
/// exactly while `n³ < 2⁵³`, so the subtraction has no cancellation error.
pub fn distance_matrix_fast<T: Real>(d: &AdjacencyMatrix) -> CodegreeDistanceMatrix<T> {
    let n = d.n();
    let m = squared_adjacency(d).mapv(f64::from);
    let gram = m.dot(&m);
    let scale = (n as f64).powi(3);
    let diag: Vec<f64> = (0..n).map(|i| gram[(i, i)]).collect();
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (gram, diag) = (&gram, &diag);
            (0..n).map(move |j| {
                if i == j {
                    return T::zero();
                }
                let sq = (diag[i] - 2.0 * gram[(i, j)] + diag[j]).max(0.0);
                T::lit((sq / scale).sqrt())
            })
        })
        .collect();
    let values = Array2::from_shape_vec((n, n), rows).expect("n × n");
    CodegreeDistanceMatrix { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        AdjacencyMatrix::from_edges(n, edges).unwrap()
    }

    #[test]
    fn squared_path() {
        let m = squared_adjacency(&path3());
        assert_eq!(m, ndarray::array![[1, 0, 1], [0, 2, 0], [1, 0, 1]]);
    }

    #[test]
    fn squared_empty_and_complete() {
        assert!(squared_adjacency(&AdjacencyMatrix::empty(5)).iter().all(|&v| v == 0));
        let n = 7;
        let complete = AdjacencyMatrix::from_edges(
            n,
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))),
        )
        .unwrap();
        let m = squared_adjacency(&complete);
        for i in 0..n {
            for t in 0..n {
                assert_eq!(m[(i, t)] as usize, if i == t { n - 1 } else { n - 2 });
            }
        }
    }

    #[test]
    fn path_distances_by_hand() {
        for delta in [distance_matrix_reference::<f64>(&path3()), distance_matrix_fast(&path3())] {
            assert_eq!(delta.get(0, 2), 0.0);
            assert_eq!(delta.get(0, 1), (6.0f64 / 27.0).sqrt());
            assert_eq!(delta.get(1, 0), delta.get(0, 1));
            assert_eq!(delta.get(1, 1), 0.0);
        }
    }

    #[test]
    fn duplicate_agents_have_zero_distance() {
        // agents 0 and 1 both link exactly to 2 and 3
        let adj = AdjacencyMatrix::from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(distance_matrix_fast::<f64>(&adj).get(0, 1), 0.0);
        assert_eq!(distance_matrix_reference::<f64>(&adj).get(0, 1), 0.0);
    }

    #[test]
    fn fast_matches_reference_on_dense_and_sparse_graphs() {
        for (seed, n) in (3..=40).step_by(3).enumerate() {
            for p in [0.1, 0.5, 0.9] {
                let adj = random_graph(n, p, seed as u64);
                let a = distance_matrix_reference::<f64>(&adj);
                let b = distance_matrix_fast::<f64>(&adj);
                let diff = (a.values() - b.values()).mapv(f64::abs).fold(0.0f64, |x, &y| x.max(y));
                assert!(diff < 1e-10, "n={n} p={p}: {diff}");
            }
        }
    }

    #[test]
    fn entries_are_bounded_by_one() {
        let adj = random_graph(30, 0.5, 8);
        let delta = distance_matrix_fast::<f64>(&adj);
        assert!(delta.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(delta.min_positive().unwrap() > 0.0);
    }

    #[test]
    fn single_precision_output() {
        let d32 = distance_matrix_fast::<f32>(&path3());
        assert!((d32.get(0, 1) - (6.0f32 / 27.0).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        distance_matrix_fast::<f64>(&path3()).write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("0e0,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn metric_properties(n in 3usize..25, p in 0.05..0.95f64, seed in any::<u64>()) {
            let adj = random_graph(n, p, seed);
            for delta in [distance_matrix_reference::<f64>(&adj), distance_matrix_fast(&adj)] {
                for i in 0..n {
                    prop_assert_eq!(delta.get(i, i), 0.0);
                    for j in 0..n {
                        prop_assert_eq!(delta.get(i, j), delta.get(j, i));
                        for t in 0..n {
                            prop_assert!(delta.get(i, j) <= delta.get(i, t) + delta.get(t, j) + 1e-12);
                        }
                    }
                }
            }
        }

        #[test]
        fn permutation_equivariance(n in 3usize..30, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let adj = random_graph(n, 0.4, seed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1));
            let lhs = distance_matrix_fast::<f64>(&adj.permuted(&perm));
            let rhs = distance_matrix_fast::<f64>(&adj).permuted(&perm);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
