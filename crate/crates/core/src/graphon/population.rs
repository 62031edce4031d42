//! Population link and codegree functions, evaluated on a quadrature grid.

use serde::Serialize;

use super::{check_unit, GraphonSpec, QuadratureGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 10_000;

/// A graphon bound to a quadrature grid, with `f` tabulated at every pair of nodes.
///
/// The table makes a codegree function cost one `m × m` matrix-vector product
/// instead of a nested integral per node.
#[derive(Debug, Clone)]
pub struct GraphonOracle<T: Real> {
    spec: GraphonSpec<T>,
    grid: QuadratureGrid<T>,
    // f(x_t, x_s), row-major m × m
    table: Vec<T>,
}

impl<T: Real> GraphonOracle<T> {
    pub fn new(spec: &GraphonSpec<T>, grid: &QuadratureGrid<T>) -> Self {
        let nodes = grid.nodes();
        let m = nodes.len();
        let mut table = vec![T::zero(); m * m];
        for (t, &xt) in nodes.iter().enumerate() {
            for (s, &xs) in nodes.iter().enumerate() {
                table[t * m + s] = spec.eval_unchecked(xt, xs);
            }
        }
        Self { spec: spec.clone(), grid: grid.clone(), table }
    }

    pub fn spec(&self) -> &GraphonSpec<T> {
        &self.spec
    }

    pub fn grid(&self) -> &QuadratureGrid<T> {
        &self.grid
    }

    fn row(&self, t: usize) -> &[T] {
        let m = self.grid.len();
        &self.table[t * m..(t + 1) * m]
    }

    /// `f(u, x_t)` for every node `x_t`.
    pub fn link_function(&self, u: T) -> Result<Vec<T>> {
        check_unit("u", u)?;
        Ok(self.link_unchecked(u))
    }

    fn link_unchecked(&self, u: T) -> Vec<T> {
        self.grid.nodes().iter().map(|&x| self.spec.eval_unchecked(u, x)).collect()
    }

    /// `t ↦ Σ_s w_s g(x_s) f(x_t, x_s)`: the integral operator of `f` applied to `g`.
    fn apply(&self, g: &[T]) -> Vec<T> {
        let weighted: Vec<T> = g.iter().zip(self.grid.weights()).map(|(&a, &w)| a * w).collect();
        (0..self.grid.len())
            .map(|t| self.row(t).iter().zip(&weighted).map(|(&f, &a)| f * a).sum())
            .collect()
    }

    /// `p(u, x_t) = ∫ f(u, τ) f(x_t, τ) dτ` for every node `x_t`.
    pub fn codegree_function(&self, u: T) -> Result<Vec<T>> {
        check_unit("u", u)?;
        Ok(self.apply(&self.link_unchecked(u)))
    }

    /// `‖f(u, ·) − f(v, ·)‖₂`.
    pub fn network_distance(&self, u: T, v: T) -> Result<T> {
        let fu = self.link_function(u)?;
        let fv = self.link_function(v)?;
        Ok(self.grid.l2_distance(&fu, &fv))
    }

    /// `‖p(u, ·) − p(v, ·)‖₂`, computed from the link-function difference.
    pub fn codegree_distance(&self, u: T, v: T) -> Result<T> {
        let fu = self.link_function(u)?;
        let fv = self.link_function(v)?;
        Ok(self.codegree_distance_from_links(&fu, &fv))
    }

    pub(crate) fn codegree_distance_from_links(&self, fu: &[T], fv: &[T]) -> T {
        let diff: Vec<T> = fu.iter().zip(fv).map(|(&a, &b)| a - b).collect();
        let pd = self.apply(&diff);
        self.grid.dot(&pd, &pd).sqrt()
    }

    /// Degree, peer mean of `covariate_mean`, and clustering of an agent of type `u`.
    pub fn population_statistics(
        &self,
        u: T,
        covariate_mean: impl Fn(T) -> T,
    ) -> Result<PopulationStatistics<T>> {
        check_unit("u", u)?;
        let fu = self.link_unchecked(u);
        let degree = self.grid.integrate_values(&fu);
        if !(degree > T::zero()) {
            return Err(Error::ZeroDegree { u: u.to_f64_lossy() });
        }
        let means: Vec<T> = self.grid.nodes().iter().map(|&x| covariate_mean(x)).collect();
        let peer_mean = self.grid.dot(&means, &fu) / degree;
        let triangle = self.grid.dot(&fu, &self.apply(&fu));
        Ok(PopulationStatistics { degree, peer_mean, clustering: triangle / (degree * degree) })
    }

    /// Social influence under linear-in-means peer effects, at each grid node.
    ///
    /// Solves `g(u) = m(u)·β + λ(u)` with
    /// `λ(u) = E[m(w_j)·γ + δ g(w_j) | D_ij = 1, w_i = u]` by fixed-point iteration,
    /// where the conditional mean averages over `f(u, ·)`.
    pub fn peer_effect_lambda(
        &self,
        beta: &[T],
        gamma: &[T],
        delta: T,
        covariate_mean: impl Fn(T) -> Vec<T>,
    ) -> Result<Vec<T>> {
        if !(delta.abs() < T::one()) {
            return Err(Error::NotContraction(delta.to_f64_lossy()));
        }
        let m = self.grid.len();
        let mut direct = Vec::with_capacity(m);
        let mut contextual = Vec::with_capacity(m);
        for &x in self.grid.nodes() {
            let mx = covariate_mean(x);
            if mx.len() != beta.len() || mx.len() != gamma.len() {
                return Err(Error::DimensionMismatch {
                    what: "covariate mean dimension",
                    expected: beta.len(),
                    found: mx.len(),
                });
            }
            direct.push(mx.iter().zip(beta).map(|(&a, &b)| a * b).sum::<T>());
            contextual.push(mx.iter().zip(gamma).map(|(&a, &b)| a * b).sum::<T>());
        }
        let degrees = self.apply(&vec![T::one(); m]);
        if let Some(t) = degrees.iter().position(|&d| !(d > T::zero())) {
            return Err(Error::ZeroDegree { u: self.grid.nodes()[t].to_f64_lossy() });
        }
        let average = |h: &[T]| -> Vec<T> {
            self.apply(h).into_iter().zip(&degrees).map(|(a, &d)| a / d).collect()
        };

        let tol = T::lit(FIXED_POINT_TOL);
        let mut damping = T::one();
        let mut expected_y = direct.clone();
        let mut last_change = T::infinity();
        for _ in 0..FIXED_POINT_MAX_ITER {
            let peers: Vec<T> =
                contextual.iter().zip(&expected_y).map(|(&c, &g)| c + delta * g).collect();
            let target: Vec<T> =
                direct.iter().zip(average(&peers)).map(|(&a, lam)| a + lam).collect();
            let mut change = T::zero();
            for (g, t) in expected_y.iter_mut().zip(&target) {
                let step = damping * (*t - *g);
                change = change.max(step.abs());
                *g = *g + step;
            }
            if change < tol {
                return Ok(expected_y.iter().zip(&direct).map(|(&g, &a)| g - a).collect());
            }
            if change > last_change && damping == T::one() {
                damping = T::lit(0.5);
            }
            last_change = change;
        }
        Err(Error::NoConvergence {
            iterations: FIXED_POINT_MAX_ITER,
            last_change: last_change.to_f64_lossy(),
        })
    }
}

impl<T: Real> QuadratureGrid<T> {
    pub(crate) fn integrate_values(&self, values: &[T]) -> T {
        values.iter().zip(self.weights()).map(|(&v, &w)| v * w).sum()
    }
}

/// Population analogues of agent degree, average peer characteristic, and clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationStatistics<T> {
    pub degree: T,
    pub peer_mean: T,
    pub clustering: T,
}

pub fn link_function<T: Real>(
    spec: &GraphonSpec<T>,
    u: T,
    grid: &QuadratureGrid<T>,
) -> Result<Vec<T>> {
    check_unit("u", u)?;
    Ok(grid.nodes().iter().map(|&x| spec.eval_unchecked(u, x)).collect())
}

pub fn codegree_function<T: Real>(
    spec: &GraphonSpec<T>,
    u: T,
    grid: &QuadratureGrid<T>,
) -> Result<Vec<T>> {
    GraphonOracle::new(spec, grid).codegree_function(u)
}

pub fn network_distance<T: Real>(
    spec: &GraphonSpec<T>,
    u: T,
    v: T,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    let fu = link_function(spec, u, grid)?;
    let fv = link_function(spec, v, grid)?;
    Ok(grid.l2_distance(&fu, &fv))
}

pub fn codegree_distance<T: Real>(
    spec: &GraphonSpec<T>,
    u: T,
    v: T,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    GraphonOracle::new(spec, grid).codegree_distance(u, v)
}

pub fn population_statistics<T: Real>(
    spec: &GraphonSpec<T>,
    u: T,
    covariate_mean: impl Fn(T) -> T,
    grid: &QuadratureGrid<T>,
) -> Result<PopulationStatistics<T>> {
    GraphonOracle::new(spec, grid).population_statistics(u, covariate_mean)
}

/// See [`GraphonOracle::peer_effect_lambda`].
pub fn peer_effect_lambda<T: Real>(
    spec: &GraphonSpec<T>,
    beta: &[T],
    gamma: &[T],
    delta: T,
    covariate_mean: impl Fn(T) -> Vec<T>,
    grid: &QuadratureGrid<T>,
) -> Result<Vec<T>> {
    GraphonOracle::new(spec, grid).peer_effect_lambda(beta, gamma, delta, covariate_mean)
}
