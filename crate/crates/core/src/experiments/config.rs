use serde::{Deserialize, Serialize};

use crate::codegree::CodegreeDistanceMatrix;
use crate::error::{Error, Result};
use crate::estimate::{select_bandwidth, KernelSpec, KernelVariant};
use crate::graphon::GraphonSpec;
use crate::scalar::Real;
use crate::simulate::OutcomeSpec;

/// Default window-share target for automatic bandwidths.
pub const DEFAULT_TARGET_R: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    ConsistencyBeta,
    ConsistencyLambda,
    UniformDelta,
    Lemma1,
    #[serde(rename = "lemmaA1", alias = "lemma_a1")]
    LemmaA1,
    Identification,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::ConsistencyBeta,
        Check::ConsistencyLambda,
        Check::UniformDelta,
        Check::Lemma1,
        Check::LemmaA1,
        Check::Identification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ConsistencyBeta => "consistency_beta",
            Check::ConsistencyLambda => "consistency_lambda",
            Check::UniformDelta => "uniform_delta",
            Check::Lemma1 => "lemma1",
            Check::LemmaA1 => "lemmaA1",
            Check::Identification => "identification",
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || (s == "lemma_a1" && *c == Check::LemmaA1))
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

/// How each replication picks its kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", bound = "T: Real")]
pub enum KernelChoice<T> {
    Fixed {
        #[serde(flatten)]
        kernel: KernelSpec<T>,
    },
    /// Smallest grid bandwidth with `min_i r̂_i ≥ target`.
    Auto { variant: KernelVariant, gamma_rate: T, target: T },
}

impl<T: Real> Default for KernelChoice<T> {
    fn default() -> Self {
        KernelChoice::Auto { variant: KernelVariant::Boxcar, gamma_rate: T::one(), target: T::lit(DEFAULT_TARGET_R) }
    }
}

impl<T: Real> KernelChoice<T> {
    pub fn resolve(&self, delta: &CodegreeDistanceMatrix<T>) -> Result<KernelSpec<T>> {
        match *self {
            KernelChoice::Fixed { kernel } => {
                kernel.validate()?;
                Ok(kernel)
            }
            KernelChoice::Auto { variant, gamma_rate, target } => {
                let h = select_bandwidth(delta, variant, gamma_rate, target)?;
                KernelSpec::new(variant, h, gamma_rate)
            }
        }
    }
}

/// Pair set for the distance-inequality sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Points per axis of the regular grid (including both endpoints).
    pub grid_size: usize,
    pub random_pairs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { grid_size: 100, random_pairs: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExperimentConfig<T: Real> {
    pub graphon: GraphonSpec<T>,
    pub outcome: OutcomeSpec<T>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub kernel: KernelChoice<T>,
    #[serde(default)]
    pub base_seed: u64,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Caps concurrent replications so that their `O(n²)` buffers fit.
    #[serde(default)]
    pub memory_budget_mb: Option<usize>,
}

impl<T: Real> ExperimentConfig<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.outcome.validate()?;
        self.outcome.check_pairing(&self.graphon)?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sample_sizes must be strictly increasing".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::SampleTooSmall(n));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        if self.sweep.grid_size == 1 {
            return Err(Error::Config("sweep grid needs 0 or at least 2 points per axis".into()));
        }
        if let KernelChoice::Fixed { kernel } = &self.kernel {
            kernel.validate()?;
        }
        Ok(())
    }

    pub fn wants(&self, check: Check) -> bool {
        self.checks.contains(&check)
    }

    /// Homophily graphon, `m(w) = w`, unit covariate noise, `β = 1`,
    /// `λ(w) = 2w`, `ε_sd = 0.5`, automatic boxcar bandwidth.
    pub fn default_consistency() -> Self {
        use crate::simulate::{CovariateMean, LambdaSpec};
        ExperimentConfig {
            graphon: GraphonSpec::homophily(),
            outcome: OutcomeSpec {
                beta: vec![T::one()],
                lambda: LambdaSpec::LinearInW { rho: T::lit(2.0) },
                covariate_mean: vec![CovariateMean::Linear { a: T::zero(), b: T::one() }],
                covariate_noise_sd: vec![T::one()],
                epsilon_sd: T::lit(0.5),
            },
            sample_sizes: vec![100, 200, 400, 800],
            replications: 50,
            kernel: KernelChoice::default(),
            base_seed: 20_240_601,
            checks: vec![Check::ConsistencyBeta, Check::ConsistencyLambda],
            sweep: SweepConfig::default(),
            memory_budget_mb: None,
        }
    }
}
