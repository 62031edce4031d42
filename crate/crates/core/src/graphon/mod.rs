//! Graphon link-probability models and their population (quadrature) functionals.
//!
//! A graphon `f: [0,1]² → [0,1]` is symmetric; agents with latent types `u`, `v`
//! link with probability `f(u, v)`. Everything in this module is a pure function
//! of the graphon and a [`QuadratureGrid`]: link functions `f(u, ·)`, codegree
//! functions `p(u, ·) = ∫ f(u, τ) f(·, τ) dτ`, the L² distances between them,
//! and numerical checks of the inequalities relating the two distances.

mod lemma;
mod population;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use lemma::{
    holder_constants, verify_lemma1, verify_lemma_a1, write_report_csv, HolderCertificate,
    HolderConstants, LemmaReport, PairCheck, DEFAULT_HOLDER_RESOLUTION, LEMMA_TOLERANCE,
};
pub use population::{
    codegree_distance, codegree_function, link_function, network_distance, peer_effect_lambda,
    population_statistics, GraphonOracle, PopulationStatistics,
};
pub use quadrature::{QuadratureGrid, DEFAULT_ORDER, DEFAULT_PANELS};

/// Closed-form or tabulated shape of a graphon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphonKind<T> {
    /// `f(u, v) = Θ[block(u)][block(v)]` with `block(u) = min(⌊l·u⌋, l − 1)`.
    Blockmodel { l: usize, theta: Vec<Vec<T>> },
    /// `f(u, v) = 1 − (u − v)²`.
    Homophily,
    /// `f(u, v) = 1 / (1 + exp(−(u + v)))`.
    AdditiveLogistic,
    /// Piecewise constant on an `m × m` grid of equal cells; `values` row-major.
    Grid { m: usize, values: Vec<T> },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct GraphonRepr<T> {
    #[serde(flatten)]
    kind: GraphonKind<T>,
    #[serde(default)]
    sparsity_scale: Option<T>,
}

/// A validated graphon, optionally scaled pointwise by `sparsity_scale ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "GraphonRepr<T>",
    into = "GraphonRepr<T>",
    bound = "T: Real"
)]
pub struct GraphonSpec<T: Real> {
    kind: GraphonKind<T>,
    sparsity_scale: T,
}

impl<T: Real> TryFrom<GraphonRepr<T>> for GraphonSpec<T> {
    type Error = Error;

    fn try_from(repr: GraphonRepr<T>) -> Result<Self> {
        Self::new(repr.kind, repr.sparsity_scale.unwrap_or_else(T::one))
    }
}

impl<T: Real> From<GraphonSpec<T>> for GraphonRepr<T> {
    fn from(spec: GraphonSpec<T>) -> Self {
        GraphonRepr { kind: spec.kind, sparsity_scale: Some(spec.sparsity_scale) }
    }
}

#[inline]
pub(crate) fn cell_index<T: Real>(u: T, cells: usize) -> usize {
    let idx = (u * T::from_count(cells)).floor().to_usize().unwrap_or(0);
    idx.min(cells - 1)
}

#[inline]
fn logistic<T: Real>(t: T) -> T {
    T::one() / (T::one() + (-t).exp())
}

fn check_probability<T: Real>(value: T, what: &str) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidGraphon(format!("{what} = {value} is not a probability")))
    }
}

pub(crate) fn check_unit<T: Real>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval { name, value: value.to_f64_lossy() })
    }
}

impl<T: Real> GraphonSpec<T> {
    pub fn new(kind: GraphonKind<T>, sparsity_scale: T) -> Result<Self> {
        if !(sparsity_scale > T::zero() && sparsity_scale <= T::one()) {
            return Err(Error::InvalidGraphon(format!(
                "sparsity_scale = {sparsity_scale} must lie in (0, 1]"
            )));
        }
        match &kind {
            GraphonKind::Blockmodel { l, theta } => {
                if *l == 0 {
                    return Err(Error::InvalidGraphon("block count l must be positive".into()));
                }
                if theta.len() != *l || theta.iter().any(|row| row.len() != *l) {
                    return Err(Error::InvalidGraphon(format!("theta must be {l}×{l}")));
                }
                for a in 0..*l {
                    for b in 0..*l {
                        check_probability(theta[a][b], "theta entry")?;
                        if theta[a][b] != theta[b][a] {
                            return Err(Error::InvalidGraphon(format!(
                                "theta is not symmetric at ({a}, {b})"
                            )));
                        }
                    }
                }
            }
            GraphonKind::Grid { m, values } => {
                if *m == 0 {
                    return Err(Error::InvalidGraphon("grid resolution m must be positive".into()));
                }
                if values.len() != m * m {
                    return Err(Error::InvalidGraphon(format!(
                        "grid needs {} values, found {}",
                        m * m,
                        values.len()
                    )));
                }
                for a in 0..*m {
                    for b in 0..*m {
                        check_probability(values[a * m + b], "grid value")?;
                        if values[a * m + b] != values[b * m + a] {
                            return Err(Error::InvalidGraphon(format!(
                                "grid values are not symmetric at ({a}, {b})"
                            )));
                        }
                    }
                }
            }
            GraphonKind::Homophily | GraphonKind::AdditiveLogistic => {}
        }
        Ok(Self { kind, sparsity_scale })
    }

    pub fn homophily() -> Self {
        Self { kind: GraphonKind::Homophily, sparsity_scale: T::one() }
    }

    pub fn additive_logistic() -> Self {
        Self { kind: GraphonKind::AdditiveLogistic, sparsity_scale: T::one() }
    }

    pub fn blockmodel(theta: Vec<Vec<T>>) -> Result<Self> {
        let l = theta.len();
        Self::new(GraphonKind::Blockmodel { l, theta }, T::one())
    }

    pub fn grid(m: usize, values: Vec<T>) -> Result<Self> {
        Self::new(GraphonKind::Grid { m, values }, T::one())
    }

    pub fn with_sparsity(self, sparsity_scale: T) -> Result<Self> {
        Self::new(self.kind, sparsity_scale)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kind(&self) -> &GraphonKind<T> {
        &self.kind
    }

    pub fn sparsity_scale(&self) -> T {
        self.sparsity_scale
    }

    /// Short lowercase name of the variant, as used in JSON.
    pub fn name(&self) -> &'static str {
        match self.kind {
            GraphonKind::Blockmodel { .. } => "blockmodel",
            GraphonKind::Homophily => "homophily",
            GraphonKind::AdditiveLogistic => "additive_logistic",
            GraphonKind::Grid { .. } => "grid",
        }
    }

    /// Number of latent communities for block models.
    pub fn block_count(&self) -> Option<usize> {
        match self.kind {
            GraphonKind::Blockmodel { l, .. } => Some(l),
            _ => None,
        }
    }

    /// Zero-based community of a latent type, for block models.
    pub fn block_of(&self, u: T) -> Option<usize> {
        self.block_count().map(|l| cell_index(u, l))
    }

    /// True for the variants whose `f` is continuous on `[0, 1]²`.
    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, GraphonKind::Homophily | GraphonKind::AdditiveLogistic)
    }

    /// Link probability `sparsity_scale · f(u, v)`.
    pub fn eval(&self, u: T, v: T) -> Result<T> {
        check_unit("u", u)?;
        check_unit("v", v)?;
        Ok(self.eval_unchecked(u, v))
    }

    /// As [`eval`](Self::eval) without the domain check; callers guarantee `u, v ∈ [0, 1]`.
    #[inline]
    pub fn eval_unchecked(&self, u: T, v: T) -> T {
        let raw = match &self.kind {
            GraphonKind::Blockmodel { l, theta } => theta[cell_index(u, *l)][cell_index(v, *l)],
            GraphonKind::Homophily => {
                let d = u - v;
                T::one() - d * d
            }
            GraphonKind::AdditiveLogistic => logistic(u + v),
            GraphonKind::Grid { m, values } => values[cell_index(u, *m) * m + cell_index(v, *m)],
        };
        raw * self.sparsity_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_block() -> GraphonSpec<f64> {
        GraphonSpec::blockmodel(vec![vec![0.8, 0.2], vec![0.2, 0.6]]).unwrap()
    }

    fn builtins() -> Vec<GraphonSpec<f64>> {
        vec![
            two_block(),
            GraphonSpec::homophily(),
            GraphonSpec::additive_logistic(),
            GraphonSpec::grid(2, vec![0.1, 0.5, 0.5, 0.9]).unwrap(),
            GraphonSpec::homophily().with_sparsity(0.3).unwrap(),
        ]
    }

    #[test]
    fn homophily_values() {
        let g = GraphonSpec::<f64>::homophily();
        assert_eq!(g.eval(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(g.eval(0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn blockmodel_uses_floor_index_and_closes_at_one() {
        let g = two_block();
        assert_eq!(g.eval(0.1, 0.9).unwrap(), 0.2);
        assert_eq!(g.eval(1.0, 1.0).unwrap(), 0.6);
        assert_eq!(g.eval(0.5, 0.0).unwrap(), 0.2);
        assert_eq!(g.block_of(0.4999), Some(0));
        assert_eq!(g.block_of(1.0), Some(1));
    }

    #[test]
    fn additive_logistic_at_zero() {
        let g = GraphonSpec::<f64>::additive_logistic();
        assert_eq!(g.eval(0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        let g = GraphonSpec::<f64>::homophily();
        assert!(matches!(g.eval(-0.1, 0.5), Err(Error::OutOfUnitInterval { name: "u", .. })));
        assert!(matches!(g.eval(0.5, 1.5), Err(Error::OutOfUnitInterval { name: "v", .. })));
        assert!(g.eval(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(GraphonSpec::blockmodel(vec![vec![0.8, 0.3], vec![0.2, 0.6]]).is_err());
        assert!(GraphonSpec::blockmodel(vec![vec![1.2]]).is_err());
        assert!(GraphonSpec::<f64>::blockmodel(vec![]).is_err());
        assert!(GraphonSpec::grid(2, vec![0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(GraphonSpec::grid(2, vec![0.1, 0.2, 0.2]).is_err());
        assert!(GraphonSpec::<f64>::homophily().with_sparsity(0.0).is_err());
        assert!(GraphonSpec::<f64>::homophily().with_sparsity(1.5).is_err());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let g: GraphonSpec<f64> =
            GraphonSpec::from_json(r#"{"kind":"blockmodel","l":2,"theta":[[0.8,0.2],[0.2,0.6]]}"#)
                .unwrap();
        assert_eq!(g, two_block());
        let h: GraphonSpec<f64> =
            GraphonSpec::from_json(r#"{"kind":"homophily","sparsity_scale":0.5}"#).unwrap();
        assert_eq!(h.sparsity_scale(), 0.5);
        let grid: GraphonSpec<f64> =
            GraphonSpec::from_json(r#"{"kind":"grid","m":2,"values":[0.1,0.5,0.5,0.9]}"#).unwrap();
        assert_eq!(grid.eval(0.9, 0.1).unwrap(), 0.5);
        for spec in builtins() {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(GraphonSpec::<f64>::from_json(&text).unwrap(), spec);
        }
        assert!(GraphonSpec::<f64>::from_json(r#"{"kind":"blockmodel","l":2,"theta":[[0.8,0.1],[0.2,0.6]]}"#).is_err());
        assert!(GraphonSpec::<f64>::from_json(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn sparsity_scales_pointwise() {
        let g = GraphonSpec::<f64>::homophily().with_sparsity(0.25).unwrap();
        assert_eq!(g.eval(0.5, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn works_in_single_precision() {
        let g = GraphonSpec::<f32>::blockmodel(vec![vec![0.8, 0.2], vec![0.2, 0.6]]).unwrap();
        assert_eq!(g.eval(0.1, 0.9).unwrap(), 0.2f32);
    }

    proptest! {
        #[test]
        fn symmetric_and_in_range(u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
            for g in builtins() {
                let a = g.eval(u, v).unwrap();
                prop_assert_eq!(a, g.eval(v, u).unwrap());
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
