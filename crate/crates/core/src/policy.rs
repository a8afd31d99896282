//! Bandit policies behind a common select/observe interface.
//!
//! - [`OtfLinUcb`]: optimism with the widened confidence set of the windowed
//!   estimator.
//! - [`OtfLinTs`]: Gaussian perturbation of the windowed estimate with
//!   covariance inflated by `β_{t,δ}`.
//! - [`OracleLinUcb`]: LinUCB fed the uncensored reward immediately. A
//!   reference curve, not a feasible learner.
//! - [`RandomPolicy`]: uniform play.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::RngCore;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::environment::{ActionSet, ConversionEvent};
use crate::error::{Error, Result};
use crate::estimator::{WidthMode, WindowedEstimator};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    OtfLinUcb,
    OtfLinTs,
    OracleLinUcb,
    Random,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::OtfLinUcb => "otf_linucb",
            PolicyKind::OtfLinTs => "otf_lints",
            PolicyKind::OracleLinUcb => "oracle",
            PolicyKind::Random => "random",
        }
    }
}

impl core::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "otf_linucb" | "otflinucb" => Ok(PolicyKind::OtfLinUcb),
            "otf_lints" | "otflints" => Ok(PolicyKind::OtfLinTs),
            "oracle" | "oracle_linucb" => Ok(PolicyKind::OracleLinUcb),
            "random" => Ok(PolicyKind::Random),
            _ => Err(Error::invalid(
                "policy",
                "expected one of otf_linucb, otf_lints, oracle, random",
            )),
        }
    }
}

impl core::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Confidence level δ ∈ (0, 1].
    pub delta: f64,
    /// Ridge regularizer λ > 0.
    pub lambda: f64,
    /// Window `m`: conversions later than this are ignored.
    pub window: u64,
    pub width_mode: WidthMode,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, window: u64) -> Self {
        Self {
            kind,
            delta: 0.05,
            lambda: 1.0,
            window,
            width_mode: WidthMode::Cached,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1]"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Instantiates the configured policy for actions in `ℝ^dim`.
    pub fn build(&self, dim: usize) -> Result<Box<dyn Policy + Send>> {
        self.validate()?;
        Ok(match self.kind {
            PolicyKind::OtfLinUcb => Box::new(OtfLinUcb::new(dim, self)?),
            PolicyKind::OtfLinTs => Box::new(OtfLinTs::new(dim, self)?),
            PolicyKind::OracleLinUcb => Box::new(OracleLinUcb::new(dim, self)?),
            PolicyKind::Random => Box::new(RandomPolicy),
        })
    }
}

/// What a policy learns at the end of a round.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    /// Round that was just played.
    pub round: u64,
    /// The action played this round.
    pub action: &'a [f64],
    /// Conversions revealed at the end of this round.
    pub events: &'a [ConversionEvent],
    /// Uncensored reward of this round. Censored learners must ignore it.
    pub reward: bool,
}

pub trait Policy {
    /// Chooses an index into `set`. Does not mutate the policy.
    fn select(&self, set: &ActionSet, rng: &mut dyn RngCore) -> Result<usize>;

    /// Incorporates the round's feedback.
    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()>;

    fn kind(&self) -> PolicyKind;

    /// The underlying estimator, for policies that have one.
    fn estimator(&self) -> Option<&WindowedEstimator> {
        None
    }
}

/// Index of the first maximal score.
pub fn argmax_lowest_index(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Credits the round's conversions to a windowed estimator and records the
/// played action. Conversions of earlier rounds are applied while the
/// window still covers `t − m … t − 1`; a same-round conversion (zero delay)
/// is applied after the action enters the window.
fn absorb(est: &mut WindowedEstimator, feedback: &Feedback<'_>) -> Result<()> {
    debug_assert_eq!(feedback.round, est.round());
    let current = est.round();
    for e in feedback.events.iter().filter(|e| e.round < current) {
        est.record_conversion(e.round);
    }
    est.record_action(feedback.action)?;
    for e in feedback.events.iter().filter(|e| e.round == current) {
        est.record_conversion(e.round);
    }
    Ok(())
}

fn ucb_scores(est: &WindowedEstimator, set: &ActionSet, width: f64) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    let theta = est.estimate();
    set.iter()
        .map(|a| Ok(dot(a, &theta) + width * est.mahalanobis_norm(a)?))
        .collect()
}

#[derive(Debug, Clone)]
pub struct OtfLinUcb {
    est: WindowedEstimator,
    delta: f64,
    width_mode: WidthMode,
}

impl OtfLinUcb {
    pub fn new(dim: usize, config: &PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            est: WindowedEstimator::new(dim, config.lambda, config.window)?,
            delta: config.delta,
            width_mode: config.width_mode,
        })
    }

    pub fn from_estimator(est: WindowedEstimator, delta: f64, width_mode: WidthMode) -> Self {
        Self { est, delta, width_mode }
    }

    /// `⟨a, θ̂⟩ + α_{t,δ} ‖a‖_{V_t⁻¹}` for every action.
    pub fn scores(&self, set: &ActionSet) -> Result<Vec<f64>> {
        let width = self.est.confidence_width(self.delta, self.width_mode)?;
        ucb_scores(&self.est, set, width)
    }
}

impl Policy for OtfLinUcb {
    fn select(&self, set: &ActionSet, _rng: &mut dyn RngCore) -> Result<usize> {
        argmax_lowest_index(self.scores(set)?).ok_or(Error::EmptyActionSet)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        absorb(&mut self.est, feedback)
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::OtfLinUcb
    }

    fn estimator(&self) -> Option<&WindowedEstimator> {
        Some(&self.est)
    }
}

#[derive(Debug, Clone)]
pub struct OtfLinTs {
    est: WindowedEstimator,
    delta: f64,
    width_mode: WidthMode,
    covariance_scale: f64,
}

impl OtfLinTs {
    pub fn new(dim: usize, config: &PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            est: WindowedEstimator::new(dim, config.lambda, config.window)?,
            delta: config.delta,
            width_mode: config.width_mode,
            covariance_scale: 1.0,
        })
    }

    pub fn from_estimator(est: WindowedEstimator, delta: f64, width_mode: WidthMode) -> Self {
        Self {
            est,
            delta,
            width_mode,
            covariance_scale: 1.0,
        }
    }

    /// Multiplies the sampling covariance by `scale`; `0` makes the policy
    /// greedy with respect to the windowed estimate.
    pub fn with_covariance_scale(mut self, scale: f64) -> Self {
        self.covariance_scale = scale.max(0.0);
        self
    }

    /// `β_{t,δ} = 1 + Σ_{s=t−m}^{t−1} ‖A_s‖ / f_{t,δ}`.
    pub fn beta(&self) -> Result<f64> {
        let f = self.est.exploration_radius(self.delta)?;
        Ok(1.0 + self.est.window_norm_sum(self.width_mode) / f)
    }

    /// Draws `θ̃ ~ N(θ̂, β V⁻¹)` through the Cholesky factor of `V⁻¹`.
    pub fn sample_parameter(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let mut theta = self.est.estimate();
        let scale = self.beta()? * self.covariance_scale;
        if scale == 0.0 {
            return Ok(theta);
        }
        let chol = self
            .est
            .design_inverse()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let z: Vec<f64> = (0..theta.len()).map(|_| rng.sample(StandardNormal)).collect();
        let root = libm::sqrt(scale);
        for (i, t) in theta.iter_mut().enumerate() {
            *t += root * dot(&chol.row(i)[..=i], &z[..=i]);
        }
        Ok(theta)
    }
}

impl Policy for OtfLinTs {
    fn select(&self, set: &ActionSet, rng: &mut dyn RngCore) -> Result<usize> {
        if set.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        let theta = self.sample_parameter(rng)?;
        argmax_lowest_index(set.iter().map(|a| dot(a, &theta))).ok_or(Error::EmptyActionSet)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        absorb(&mut self.est, feedback)
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::OtfLinTs
    }

    fn estimator(&self) -> Option<&WindowedEstimator> {
        Some(&self.est)
    }
}

/// LinUCB on the uncensored, undelayed reward with width `f_{t,δ}`.
#[derive(Debug, Clone)]
pub struct OracleLinUcb {
    est: WindowedEstimator,
    delta: f64,
}

impl OracleLinUcb {
    pub fn new(dim: usize, config: &PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            // every reward is credited in its own round, so a one-slot window
            // is enough
            est: WindowedEstimator::new(dim, config.lambda, 1)?,
            delta: config.delta,
        })
    }

    pub fn scores(&self, set: &ActionSet) -> Result<Vec<f64>> {
        let width = self.est.exploration_radius(self.delta)?;
        ucb_scores(&self.est, set, width)
    }
}

impl Policy for OracleLinUcb {
    fn select(&self, set: &ActionSet, _rng: &mut dyn RngCore) -> Result<usize> {
        argmax_lowest_index(self.scores(set)?).ok_or(Error::EmptyActionSet)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let round = self.est.round();
        self.est.record_action(feedback.action)?;
        if feedback.reward {
            self.est.record_conversion(round);
        }
        Ok(())
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::OracleLinUcb
    }

    fn estimator(&self) -> Option<&WindowedEstimator> {
        Some(&self.est)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn select(&self, set: &ActionSet, rng: &mut dyn RngCore) -> Result<usize> {
        if set.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        Ok(rng.random_range(0..set.len()))
    }

    fn observe(&mut self, _feedback: &Feedback<'_>) -> Result<()> {
        Ok(())
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }
}
