//! Simulation of outcomes `y_i = x_i β + λ(w_i) + ε_i` and of the network
//! `D_ij = 1{η_ij ≤ f(w_i, w_j)} 1{i ≠ j}`, plus ingestion of observed data.

mod adjacency;
mod io;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{GraphonOracle, GraphonSpec, QuadratureGrid};
use crate::rng::{self, Domain};
use crate::scalar::Real;

pub use adjacency::AdjacencyMatrix;
pub use io::{
    ingest_sample, read_adjacency, read_outcomes, write_adjacency_dense, write_edge_list,
    write_outcomes, write_truth, AdjacencyFormat,
};

/// One coordinate of the conditional covariate mean `m(w) = E[x | w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum CovariateMean<T> {
    Constant { c: T },
    /// `a + b w`
    Linear { a: T, b: T },
    /// `a + b w + c w²`
    Quadratic { a: T, b: T, c: T },
}

impl<T: Real> CovariateMean<T> {
    pub fn eval(&self, w: T) -> T {
        match *self {
            CovariateMean::Constant { c } => c,
            CovariateMean::Linear { a, b } => a + b * w,
            CovariateMean::Quadratic { a, b, c } => a + (b + c * w) * w,
        }
    }
}

/// The social-influence function `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum LambdaSpec<T> {
    /// `λ(w) = α[block(w)]`; requires a block-model graphon with `alpha.len()` blocks.
    BlockEffects { alpha: Vec<T> },
    /// `λ(w) = ρ w`.
    LinearInW { rho: T },
    /// `λ(w) = E[x_j | D_ij = 1, w]·γ + δ E[y_j | D_ij = 1, w]`.
    PeerEffects { gamma: Vec<T>, delta: T },
    Zero,
}

/// Outcome model: covariates `x = m(w) + noise`, errors `ε ~ N(0, ε_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OutcomeSpec<T> {
    pub beta: Vec<T>,
    pub lambda: LambdaSpec<T>,
    pub covariate_mean: Vec<CovariateMean<T>>,
    pub covariate_noise_sd: Vec<T>,
    pub epsilon_sd: T,
}

impl<T: Real> OutcomeSpec<T> {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    /// Checks the invariants that do not depend on the graphon.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Config("beta must have at least one coefficient".into()));
        }
        if self.covariate_mean.len() != k {
            return Err(Error::DimensionMismatch { what: "covariate_mean", expected: k, found: self.covariate_mean.len() });
        }
        if self.covariate_noise_sd.len() != k {
            return Err(Error::DimensionMismatch {
                what: "covariate_noise_sd",
                expected: k,
                found: self.covariate_noise_sd.len(),
            });
        }
        if self.covariate_noise_sd.iter().any(|&s| !(s > T::zero() && s.is_finite())) {
            return Err(Error::Config(
                "covariate_noise_sd must be strictly positive in every coordinate".into(),
            ));
        }
        if !(self.epsilon_sd >= T::zero() && self.epsilon_sd.is_finite()) {
            return Err(Error::Config("epsilon_sd must be a nonnegative real".into()));
        }
        match &self.lambda {
            LambdaSpec::PeerEffects { gamma, delta } => {
                if gamma.len() != k {
                    return Err(Error::DimensionMismatch { what: "peer-effect gamma", expected: k, found: gamma.len() });
                }
                if !(delta.abs() < T::one()) {
                    return Err(Error::NotContraction(delta.to_f64_lossy()));
                }
            }
            LambdaSpec::BlockEffects { alpha } if alpha.is_empty() => {
                return Err(Error::Config("block effects need at least one alpha".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks that `λ` can be evaluated under `graphon`.
    pub fn check_pairing(&self, graphon: &GraphonSpec<T>) -> Result<()> {
        if let LambdaSpec::BlockEffects { alpha } = &self.lambda {
            match graphon.block_count() {
                Some(l) if l == alpha.len() => {}
                Some(l) => {
                    return Err(Error::Config(format!(
                        "block effects have {} entries but the block model has {l} blocks",
                        alpha.len()
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "block effects require a blockmodel graphon, not {}",
                        graphon.name()
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn mean_at(&self, w: T) -> Vec<T> {
        self.covariate_mean.iter().map(|m| m.eval(w)).collect()
    }

    /// `ε ≡ 0`.
    pub fn is_noiseless(&self) -> bool {
        self.epsilon_sd == T::zero()
    }
}

/// Evaluates `λ(w)` for a validated outcome/graphon pair.
#[derive(Debug, Clone)]
pub struct LambdaFunction<T: Real> {
    kind: LambdaKind<T>,
}

#[derive(Debug, Clone)]
enum LambdaKind<T: Real> {
    Block { spec: GraphonSpec<T>, alpha: Vec<T> },
    Linear(T),
    // λ tabulated at quadrature nodes, interpolated linearly
    Tabulated { nodes: Vec<T>, values: Vec<T> },
    Zero,
}

impl<T: Real> LambdaFunction<T> {
    pub fn new(graphon: &GraphonSpec<T>, outcome: &OutcomeSpec<T>) -> Result<Self> {
        outcome.validate()?;
        outcome.check_pairing(graphon)?;
        let kind = match &outcome.lambda {
            LambdaSpec::BlockEffects { alpha } => LambdaKind::Block { spec: graphon.clone(), alpha: alpha.clone() },
            LambdaSpec::LinearInW { rho } => LambdaKind::Linear(*rho),
            LambdaSpec::Zero => LambdaKind::Zero,
            LambdaSpec::PeerEffects { gamma, delta } => {
                let grid = QuadratureGrid::default();
                let oracle = GraphonOracle::new(graphon, &grid);
                let values = oracle.peer_effect_lambda(&outcome.beta, gamma, *delta, |w| outcome.mean_at(w))?;
                LambdaKind::Tabulated { nodes: grid.nodes().to_vec(), values }
            }
        };
        Ok(Self { kind })
    }

    pub fn eval(&self, w: T) -> T {
        match &self.kind {
            LambdaKind::Block { spec, alpha } => alpha[spec.block_of(w).expect("block model")],
            LambdaKind::Linear(rho) => *rho * w,
            LambdaKind::Zero => T::zero(),
            LambdaKind::Tabulated { nodes, values } => interpolate(nodes, values, w),
        }
    }
}

/// Piecewise-linear interpolation, extrapolating the end segments.
fn interpolate<T: Real>(nodes: &[T], values: &[T], w: T) -> T {
    if nodes.len() == 1 {
        return values[0];
    }
    let upper = nodes.partition_point(|&x| x < w).clamp(1, nodes.len() - 1);
    let (x0, x1) = (nodes[upper - 1], nodes[upper]);
    let (y0, y1) = (values[upper - 1], values[upper]);
    y0 + (y1 - y0) * (w - x0) / (x1 - x0)
}

/// One dataset: outcomes, covariates, network, and (for simulations) the hidden truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub y: Array1<T>,
    /// `n × k`
    pub x: Array2<T>,
    pub d: AdjacencyMatrix,
    pub hidden_w: Option<Array1<T>>,
    pub hidden_lambda: Option<Array1<T>>,
}

impl<T: Real> Sample<T> {
    pub fn new(y: Array1<T>, x: Array2<T>, d: AdjacencyMatrix) -> Result<Self> {
        let n = d.n();
        if y.len() != n {
            return Err(Error::DimensionMismatch { what: "outcome rows vs adjacency size", expected: n, found: y.len() });
        }
        if x.nrows() != n {
            return Err(Error::DimensionMismatch { what: "covariate rows vs adjacency size", expected: n, found: x.nrows() });
        }
        Ok(Self { y, x, d, hidden_w: None, hidden_lambda: None })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Relabels agents: agent `perm[i]` of the result is agent `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut y = Array1::zeros(n);
        let mut x = Array2::zeros((n, self.k()));
        for (i, &p) in perm.iter().enumerate() {
            y[p] = self.y[i];
            x.row_mut(p).assign(&self.x.row(i));
        }
        let relabel = |v: &Array1<T>| {
            let mut out = Array1::zeros(n);
            for (i, &p) in perm.iter().enumerate() {
                out[p] = v[i];
            }
            out
        };
        Sample {
            y,
            x,
            d: self.d.permuted(perm),
            hidden_w: self.hidden_w.as_ref().map(relabel),
            hidden_lambda: self.hidden_lambda.as_ref().map(relabel),
        }
    }
}

/// Draws `n` agents and their network.
///
/// Agent `i` uses stream `(seed, Agent, i)` for `w_i`, then its `k` covariate
/// shocks, then `ε_i`. Row `i` of the upper triangle uses stream
/// `(seed, EdgeRow, i)` for `η_ij`, `j = i+1, …, n−1`. The result is identical
/// for any thread count.
pub fn draw_sample<T: Real>(
    graphon: &GraphonSpec<T>,
    outcome: &OutcomeSpec<T>,
    n: usize,
    seed: u64,
) -> Result<Sample<T>> {
    if n < 2 {
        return Err(Error::SampleTooSmall(n));
    }
    let lambda = LambdaFunction::new(graphon, outcome)?;
    let k = outcome.k();

    let agents: Vec<(T, Vec<T>, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Domain::Agent, i as u64);
            let w = T::lit(rng.random::<f64>());
            let x: Vec<T> = outcome
                .covariate_mean
                .iter()
                .zip(&outcome.covariate_noise_sd)
                .map(|(m, &sd)| m.eval(w) + sd * T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let eps = outcome.epsilon_sd * T::lit(rng.sample::<f64, _>(StandardNormal));
            (w, x, eps)
        })
        .collect();

    let w: Array1<T> = agents.iter().map(|a| a.0).collect();
    let mut x = Array2::zeros((n, k));
    for (i, (_, xi, _)) in agents.iter().enumerate() {
        for (c, &v) in xi.iter().enumerate() {
            x[(i, c)] = v;
        }
    }
    let lam: Array1<T> = w.iter().map(|&wi| lambda.eval(wi)).collect();
    let y: Array1<T> = (0..n)
        .map(|i| {
            let xb: T = x.row(i).iter().zip(&outcome.beta).map(|(&a, &b)| a * b).sum();
            xb + lam[i] + agents[i].2
        })
        .collect();

    let words = n.div_ceil(64);
    let upper: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Domain::EdgeRow, i as u64);
            let mut row = vec![0u64; words];
            for j in (i + 1)..n {
                // η ∈ (0, 1] so that f = 0 never links and f = 1 always does
                let eta = 1.0 - rng.random::<f64>();
                if eta <= graphon.eval_unchecked(w[i], w[j]).to_f64_lossy() {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
            row
        })
        .collect();
    let d = AdjacencyMatrix::from_upper_rows(n, upper);

    Ok(Sample { y, x, d, hidden_w: Some(w), hidden_lambda: Some(lam) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn homophily_outcome() -> OutcomeSpec<f64> {
        OutcomeSpec {
            beta: vec![1.0],
            lambda: LambdaSpec::LinearInW { rho: 2.0 },
            covariate_mean: vec![CovariateMean::Linear { a: 0.0, b: 1.0 }],
            covariate_noise_sd: vec![1.0],
            epsilon_sd: 0.5,
        }
    }

    fn constant(c: f64) -> GraphonSpec<f64> {
        GraphonSpec::blockmodel(vec![vec![c]]).unwrap()
    }

    #[test]
    fn full_and_empty_graphs() {
        let full = draw_sample(&constant(1.0), &homophily_outcome(), 40, 1).unwrap();
        assert_eq!(full.d.edge_count(), 40 * 39 / 2);
        for i in 0..40 {
            assert!(!full.d.get(i, i));
        }
        let empty = draw_sample(&constant(0.0), &homophily_outcome(), 40, 1).unwrap();
        assert_eq!(empty.d.edge_count(), 0);
    }

    #[test]
    fn sample_is_symmetric_with_zero_diagonal() {
        let s = draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 150, 3).unwrap();
        for i in 0..150 {
            assert!(!s.d.get(i, i));
            for j in 0..150 {
                assert_eq!(s.d.get(i, j), s.d.get(j, i));
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_samples() {
        let a = draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 90, 42).unwrap();
        let b = draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 90, 42).unwrap();
        let c = draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 90, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_the_draw() {
        let draw = || draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 120, 9).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(draw);
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(draw);
        assert_eq!(single, many);
    }

    #[test]
    fn outcome_equation_holds() {
        let mut spec = homophily_outcome();
        spec.epsilon_sd = 0.0;
        let s = draw_sample(&GraphonSpec::homophily(), &spec, 50, 5).unwrap();
        let w = s.hidden_w.as_ref().unwrap();
        for i in 0..50 {
            assert_abs_diff_eq!(s.y[i], s.x[(i, 0)] + 2.0 * w[i], epsilon = 1e-14);
            assert_abs_diff_eq!(s.hidden_lambda.as_ref().unwrap()[i], 2.0 * w[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn small_n_and_bad_pairings_are_rejected() {
        assert!(matches!(
            draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 1, 0),
            Err(Error::SampleTooSmall(1))
        ));
        let mut spec = homophily_outcome();
        spec.lambda = LambdaSpec::BlockEffects { alpha: vec![1.0, 2.0] };
        assert!(matches!(draw_sample(&GraphonSpec::homophily(), &spec, 10, 0), Err(Error::Config(_))));
        assert!(matches!(draw_sample(&constant(0.5), &spec, 10, 0), Err(Error::Config(_))));
        spec.lambda = LambdaSpec::PeerEffects { gamma: vec![1.0], delta: 1.2 };
        assert!(matches!(draw_sample(&constant(0.5), &spec, 10, 0), Err(Error::NotContraction(_))));
        let mut spec = homophily_outcome();
        spec.covariate_noise_sd = vec![0.0];
        assert!(draw_sample(&GraphonSpec::homophily(), &spec, 10, 0).is_err());
    }

    #[test]
    fn block_effects_follow_hidden_blocks() {
        let g = GraphonSpec::blockmodel(vec![vec![0.8, 0.2], vec![0.2, 0.6]]).unwrap();
        let mut spec = homophily_outcome();
        spec.lambda = LambdaSpec::BlockEffects { alpha: vec![-1.0, 3.0] };
        let s = draw_sample(&g, &spec, 60, 2).unwrap();
        let w = s.hidden_w.unwrap();
        for (wi, li) in w.iter().zip(s.hidden_lambda.unwrap().iter()) {
            assert_eq!(*li, if *wi < 0.5 { -1.0 } else { 3.0 });
        }
    }

    #[test]
    fn peer_effects_lambda_is_interpolated_from_fixed_point() {
        let mut spec = homophily_outcome();
        spec.lambda = LambdaSpec::PeerEffects { gamma: vec![0.0], delta: 0.0 };
        let s = draw_sample(&GraphonSpec::homophily(), &spec, 20, 2).unwrap();
        assert!(s.hidden_lambda.unwrap().iter().all(|&l| l.abs() < 1e-15));

        spec.lambda = LambdaSpec::PeerEffects { gamma: vec![1.0], delta: 0.0 };
        let s = draw_sample(&GraphonSpec::homophily(), &spec, 20, 2).unwrap();
        let grid = QuadratureGrid::default();
        for (&w, &l) in s.hidden_w.unwrap().iter().zip(s.hidden_lambda.unwrap().iter()) {
            let stats = crate::graphon::population_statistics(&GraphonSpec::homophily(), w, |t| t, &grid).unwrap();
            assert_abs_diff_eq!(l, stats.peer_mean, epsilon = 1e-5);
        }
    }

    #[test]
    fn interpolation_is_exact_for_lines() {
        let nodes = [0.1, 0.4, 0.9];
        let values = [0.2, 0.8, 1.8];
        for w in [0.0, 0.1, 0.25, 0.9, 1.0] {
            assert_abs_diff_eq!(interpolate(&nodes, &values, w), 2.0 * w, epsilon = 1e-15);
        }
    }

    #[test]
    fn permutation_keeps_outcome_network_alignment() {
        let s = draw_sample(&GraphonSpec::homophily(), &homophily_outcome(), 12, 4).unwrap();
        let perm: Vec<usize> = (0..12).rev().collect();
        let p = s.permuted(&perm);
        assert_eq!(p.y[11], s.y[0]);
        assert_eq!(p.d.get(11, 10), s.d.get(0, 1));
    }

    #[test]
    fn single_precision_sampling() {
        let spec = OutcomeSpec::<f32> {
            beta: vec![1.0],
            lambda: LambdaSpec::Zero,
            covariate_mean: vec![CovariateMean::Constant { c: 0.0 }],
            covariate_noise_sd: vec![1.0],
            epsilon_sd: 0.0,
        };
        let s = draw_sample(&GraphonSpec::<f32>::homophily(), &spec, 30, 1).unwrap();
        assert_eq!(s.y, s.x.column(0).to_owned());
    }

    #[test]
    fn outcome_spec_json() {
        let text = r#"{"beta":[1.0],"lambda":{"kind":"linear_in_w","rho":2.0},
            "covariate_mean":[{"kind":"linear","a":0.0,"b":1.0}],
            "covariate_noise_sd":[1.0],"epsilon_sd":0.5}"#;
        let spec: OutcomeSpec<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(spec, homophily_outcome());
        let zero: OutcomeSpec<f64> = serde_json::from_str(
            r#"{"beta":[1.0,2.0],"lambda":{"kind":"zero"},"covariate_mean":[{"kind":"constant","c":1.0},{"kind":"quadratic","a":0,"b":0,"c":1}],"covariate_noise_sd":[1.0,1.0],"epsilon_sd":0.0}"#,
        )
        .unwrap();
        assert_eq!(zero.mean_at(2.0), vec![1.0, 4.0]);
    }
}
