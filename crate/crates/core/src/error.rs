use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),

    #[error("invalid quadrature grid: {0}")]
    InvalidQuadrature(String),

    #[error("invalid Hölder constants: alpha = {alpha}, c = {c} (both must be positive)")]
    InvalidHolder { alpha: f64, c: f64 },

    /// `∫ f(u, τ) dτ = 0`: peer means and clustering are undefined.
    #[error("zero expected degree at u = {u}")]
    ZeroDegree { u: f64 },

    #[error("peer-effect coefficient |delta| = {0} must be < 1 for the fixed point to exist")]
    NotContraction(f64),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sample size n = {0} must be at least 2")]
    SampleTooSmall(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("kernel argument {0} is negative")]
    NegativeKernelArgument(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error(
        "weighted design matrix is singular (reciprocal condition {rcond:e}, {effective_pairs} effective pairs): \
         bandwidth too small or insufficient matched covariate variation"
    )]
    SingularDesign { rcond: f64, effective_pairs: u64 },

    #[error("no bandwidth on the search grid reaches min r_hat >= {target}; best achieved {achieved}")]
    TargetUnreachable { target: f64, achieved: f64 },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("adjacency has a self-loop at node {node}")]
    SelfLoop { node: usize },

    #[error("adjacency is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("adjacency entry ({row}, {col}) = {value:?} is not 0 or 1")]
    NonBinary { row: usize, col: usize, value: String },

    #[error("edge ({i}, {j}) references a node outside 1..={n}")]
    EdgeOutOfRange { i: usize, j: usize, n: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the numerical procedure itself (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign { .. }
                | Error::NoConvergence { .. }
                | Error::TargetUnreachable { .. }
        )
    }
}
