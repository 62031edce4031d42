//! Semiparametric regression with network-determined unobserved effects.
//!
//! Agents carry a latent type `w`; links form as `D_ij = 1{η_ij ≤ f(w_i, w_j)}`
//! for a graphon `f`; outcomes follow `y_i = x_i β + λ(w_i) + ε_i`. The library
//! estimates `β` by kernel-weighted pairwise differences between agents whose
//! empirical codegree distance `δ̂_ij` is small, and then `λ(w_i)` by kernel
//! smoothing of residuals.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

// `!(x > 0)` guards are deliberate (they also reject NaN); index loops mirror
// the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod codegree;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod graphon;
pub mod rng;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Graphon = graphon::GraphonSpec<f64>;
pub type Outcome = simulate::OutcomeSpec<f64>;
pub type Sample = simulate::Sample<f64>;
pub type DistanceMatrix = codegree::CodegreeDistanceMatrix<f64>;
pub type Kernel = estimate::KernelSpec<f64>;
pub type Estimation = estimate::EstimationResult<f64>;
pub type Experiment = experiments::ExperimentConfig<f64>;
