//! Delay distributions over the non-negative integers.
//!
//! A delay `D` is the number of rounds between playing an action and the
//! reveal of its conversion: `D = 0` means the conversion is visible at the end
//! of the same round.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Geometric, LogNormal};

use crate::error::{Error, Result};

/// Distribution of reward delays.
///
/// Values are immutable after construction; construct through the checked
/// constructors ([`geometric`](Self::geometric), [`fixed`](Self::fixed),
/// [`empirical`](Self::empirical), [`lognormal`](Self::lognormal)).
#[derive(Debug, Clone, PartialEq)]
pub enum DelayDistribution {
    /// Geometric on `{0, 1, 2, …}` with success probability `1 / (mean + 1)`,
    /// so the mean is exactly `mean` and `P(D ≤ m) = 1 − (1 − p)^(m+1)`.
    Geometric { mean: f64 },
    /// Point mass.
    Fixed { value: u64 },
    /// Uniform over a multiset of already-scaled integer delays, kept sorted.
    Empirical { samples: Vec<u64>, scale: f64 },
    /// `floor(exp(N(log_mean, log_std²)))`, a heavy-tailed synthetic model.
    LogNormal { log_mean: f64, log_std: f64 },
}

impl DelayDistribution {
    pub fn geometric(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::invalid("mean", "geometric mean must be finite and >= 0"));
        }
        Ok(Self::Geometric { mean })
    }

    pub fn fixed(value: u64) -> Self {
        Self::Fixed { value }
    }

    /// Builds an empirical distribution from raw samples, each mapped to
    /// `floor(scale · x)`. Negative or non-finite samples are rejected.
    pub fn empirical(raw: &[f64], scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("scale", "must be finite and > 0"));
        }
        if raw.is_empty() {
            return Err(Error::invalid("samples", "empty delay sample set"));
        }
        let mut samples = Vec::with_capacity(raw.len());
        for &x in raw {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::invalid("samples", "delays must be finite and >= 0"));
            }
            samples.push(scale_sample(x, scale));
        }
        samples.sort_unstable();
        Ok(Self::Empirical { samples, scale })
    }

    pub fn lognormal(log_mean: f64, log_std: f64) -> Result<Self> {
        if !log_mean.is_finite() {
            return Err(Error::invalid("log_mean", "must be finite"));
        }
        if !(log_std.is_finite() && log_std >= 0.0) {
            return Err(Error::invalid("log_std", "must be finite and >= 0"));
        }
        Ok(Self::LogNormal { log_mean, log_std })
    }

    /// Draws one delay.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Geometric { mean } => {
                // p = 1 is accepted by `Geometric::new` and always yields 0.
                Geometric::new(1.0 / (mean + 1.0))
                    .expect("success probability lies in (0, 1]")
                    .sample(rng)
            }
            Self::Fixed { value } => *value,
            Self::Empirical { samples, .. } => samples[rng.random_range(0..samples.len())],
            Self::LogNormal { log_mean, log_std } => {
                let x: f64 = LogNormal::new(*log_mean, *log_std)
                    .expect("validated at construction")
                    .sample(rng);
                saturating_floor(x)
            }
        }
    }

    /// `τ_m = P(D ≤ m)`.
    ///
    /// Exact for geometric, fixed and empirical delays; the lognormal case is
    /// the closed form `Φ((ln(m + 1) − log_mean) / log_std)` of the floored
    /// variable.
    pub fn cdf(&self, m: u64) -> f64 {
        match self {
            Self::Geometric { mean } => {
                if *mean == 0.0 {
                    return 1.0;
                }
                let p = 1.0 / (mean + 1.0);
                // 1 − (1 − p)^(m+1), written to stay accurate for small p.
                -libm::expm1((m as f64 + 1.0) * libm::log1p(-p))
            }
            Self::Fixed { value } => {
                if *value <= m {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Empirical { samples, .. } => {
                let below = samples.partition_point(|&s| s <= m);
                below as f64 / samples.len() as f64
            }
            Self::LogNormal { log_mean, log_std } => {
                let upper = libm::log(m as f64 + 1.0);
                if *log_std == 0.0 {
                    return if *log_mean < upper { 1.0 } else { 0.0 };
                }
                let z = (upper - log_mean) / log_std;
                0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
            }
        }
    }

    /// Mean delay. For the lognormal model this is `exp(μ + σ²/2)`, the mean
    /// before integer rounding, so it overstates the true mean by less than 1.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Geometric { mean } => *mean,
            Self::Fixed { value } => *value as f64,
            Self::Empirical { samples, .. } => {
                samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len() as f64
            }
            Self::LogNormal { log_mean, log_std } => libm::exp(log_mean + 0.5 * log_std * log_std),
        }
    }

    /// Window `m = ⌈2 · mean⌉`. By Markov's inequality `P(D > 2μ) ≤ 1/2`, so
    /// the returned window always has `cdf(m) ≥ 1/2`.
    pub fn recommended_window(&self) -> u64 {
        let mean = self.mean();
        debug_assert!(mean.is_finite());
        saturating_floor(libm::ceil(2.0 * mean))
    }

    /// Short human-readable label, e.g. `geometric(mean=100)`.
    pub fn label(&self) -> alloc::string::String {
        use alloc::format;
        match self {
            Self::Geometric { mean } => format!("geometric(mean={mean})"),
            Self::Fixed { value } => format!("fixed({value})"),
            Self::Empirical { samples, scale } => {
                format!("empirical(n={}, scale={scale})", samples.len())
            }
            Self::LogNormal { log_mean, log_std } => {
                format!("lognormal(log_mean={log_mean}, log_std={log_std})")
            }
        }
    }
}

fn scale_sample(x: f64, scale: f64) -> u64 {
    saturating_floor(scale * x)
}

fn saturating_floor(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        libm::floor(x) as u64
    }
}
