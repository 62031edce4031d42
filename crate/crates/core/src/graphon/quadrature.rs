//! Quadrature rules on the unit interval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default panel count of the composite rule.
pub const DEFAULT_PANELS: usize = 64;
/// Default Gauss-Legendre order per panel.
pub const DEFAULT_ORDER: usize = 8;

/// Nodes and positive weights on `[0, 1]`; the weights form a probability measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(nodes: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidQuadrature("no nodes".into()));
        }
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "quadrature weights",
                expected: nodes.len(),
                found: weights.len(),
            });
        }
        if nodes.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(Error::InvalidQuadrature("nodes must lie in [0, 1]".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidQuadrature("nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::InvalidQuadrature("weights must be positive".into()));
        }
        let total: f64 = weights.iter().map(|w| w.to_f64_lossy()).sum();
        let tol = 1e-12_f64.max(8.0 * T::epsilon().to_f64_lossy() * weights.len() as f64);
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidQuadrature(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { nodes, weights })
    }

    /// Composite Gauss-Legendre rule: `panels` equal-width panels, `order` nodes each.
    pub fn gauss_legendre(panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(Error::InvalidQuadrature("panels and order must be positive".into()));
        }
        let (x, w) = legendre_rule(order);
        let width = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let left = p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(T::lit(left + 0.5 * width * (xi + 1.0)));
                weights.push(T::lit(0.5 * width * wi));
            }
        }
        Self::new(nodes, weights)
    }

    /// Composite rule with (approximately) `total_nodes` nodes at the default order.
    pub fn with_resolution(total_nodes: usize) -> Result<Self> {
        let panels = (total_nodes / DEFAULT_ORDER).max(1);
        Self::gauss_legendre(panels, DEFAULT_ORDER.min(total_nodes.max(1)))
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_t w_t g(x_t)`.
    pub fn integrate(&self, mut g: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// Weighted inner product of two vectors sampled at the nodes.
    pub fn dot(&self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| w * x * y)
            .sum()
    }

    /// `(Σ_t w_t (a_t - b_t)²)^{1/2}`.
    pub fn l2_distance(&self, a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| {
                let d = x - y;
                w * d * d
            })
            .sum::<T>()
            .sqrt()
    }
}

impl<T: Real> Default for QuadratureGrid<T> {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_PANELS, DEFAULT_ORDER).expect("default rule is valid")
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
fn legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_panel_rule_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        for order in 1..=12 {
            let grid = QuadratureGrid::<f64>::gauss_legendre(1, order).unwrap();
            for deg in 0..(2 * order) {
                let exact = 1.0 / (deg as f64 + 1.0);
                let got = grid.integrate(|x| x.powi(deg as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn default_grid_has_512_nodes_and_unit_mass() {
        let grid = QuadratureGrid::<f64>::default();
        assert_eq!(grid.len(), 512);
        assert_abs_diff_eq!(grid.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(grid.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn smooth_integrand_converges() {
        let grid = QuadratureGrid::<f64>::default();
        let got = grid.integrate(|x| (3.0 * x).exp());
        assert_abs_diff_eq!(got, (3f64.exp() - 1.0) / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn f32_grid_is_valid() {
        let grid = QuadratureGrid::<f32>::gauss_legendre(16, 4).unwrap();
        assert!((grid.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(QuadratureGrid::new(vec![0.2, 0.1], vec![0.5, 0.5]).is_err());
        assert!(QuadratureGrid::new(vec![0.1, 0.2], vec![0.5, 0.4]).is_err());
        assert!(QuadratureGrid::new(vec![0.1, 1.2], vec![0.5, 0.5]).is_err());
        assert!(QuadratureGrid::new(vec![0.1, 0.2], vec![1.0, 0.0]).is_err());
        assert!(QuadratureGrid::<f64>::new(vec![], vec![]).is_err());
        assert!(QuadratureGrid::new(vec![0.25, 0.75], vec![0.5, 0.5]).is_ok());
    }
}
