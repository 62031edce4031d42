use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `K(u) = 1` on `[0, 1)`.
    #[default]
    Boxcar,
    /// `K(u) = exp(1 − 1/(1 − u))` on `[0, 1)`.
    SmoothBump,
}

impl std::str::FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boxcar" => Ok(Self::Boxcar),
            "smooth_bump" | "smooth-bump" | "bump" => Ok(Self::SmoothBump),
            other => Err(Error::InvalidKernel(format!("unknown kernel `{other}` (expected boxcar or smooth_bump)"))),
        }
    }
}

impl KernelVariant {
    /// `K(u)` for `u ≥ 0`; exactly zero for `u ≥ 1`.
    #[inline]
    pub fn eval<T: Real>(self, u: T) -> T {
        if !(u < T::one()) {
            return T::zero();
        }
        match self {
            KernelVariant::Boxcar => T::one(),
            KernelVariant::SmoothBump => (T::one() - T::one() / (T::one() - u)).exp(),
        }
    }

    /// `K(0)`, the kernel's maximum.
    pub fn peak<T: Real>(self) -> T {
        T::one()
    }
}

/// Kernel, bandwidth `h`, and the rate exponent `γ` used by the bandwidth diagnostics.
///
/// Weights are `K(δ̂²/h)`: the kernel sees the *squared* distance over `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelSpec<T> {
    pub variant: KernelVariant,
    pub bandwidth: T,
    #[serde(default = "default_gamma")]
    pub gamma_rate: T,
}

fn default_gamma<T: Real>() -> T {
    T::one()
}

impl<T: Real> KernelSpec<T> {
    pub fn new(variant: KernelVariant, bandwidth: T, gamma_rate: T) -> Result<Self> {
        let spec = Self { variant, bandwidth, gamma_rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn boxcar(bandwidth: T) -> Result<Self> {
        Self::new(KernelVariant::Boxcar, bandwidth, T::one())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > T::zero() && self.bandwidth.is_finite()) {
            return Err(Error::InvalidKernel(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if !(self.gamma_rate > T::zero() && self.gamma_rate.is_finite()) {
            return Err(Error::InvalidKernel(format!("gamma_rate must be positive, got {}", self.gamma_rate)));
        }
        Ok(())
    }

    pub fn with_bandwidth(self, bandwidth: T) -> Result<Self> {
        Self::new(self.variant, bandwidth, self.gamma_rate)
    }

    /// `K(δ²/h)` for a (non-squared) distance `δ`.
    #[inline]
    pub fn weight(&self, distance: T) -> T {
        self.variant.eval(distance * distance / self.bandwidth)
    }
}

/// `K(u)`, rejecting negative arguments.
pub fn kernel_eval<T: Real>(kernel: &KernelSpec<T>, u: T) -> Result<T> {
    if !(u >= T::zero()) {
        return Err(Error::NegativeKernelArgument(u.to_f64_lossy()));
    }
    Ok(kernel.variant.eval(u))
}
