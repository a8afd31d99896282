//! The interaction protocol.
//!
//! Each round the learner picks an action `A_t` from a finite set, a reward
//! `X_t ~ Bernoulli(⟨A_t, θ⟩)` and a delay `D_t` are drawn, and the reward is
//! revealed at the end of round `t + D_t` only if `X_t = 1`. Zero rewards are
//! never signalled, so the learner cannot tell "not yet" from "never".

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::delay::DelayDistribution;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

const NORM_TOLERANCE: f64 = 1e-9;
const MEAN_TOLERANCE: f64 = 1e-9;

/// A finite set of actions in `ℝᵈ`, each with Euclidean norm at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    dim: usize,
    actions: Vec<Vec<f64>>,
}

impl ActionSet {
    pub fn new(actions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = actions.first().ok_or(Error::EmptyActionSet)?.len();
        if dim == 0 {
            return Err(Error::invalid("actions", "dimension must be >= 1"));
        }
        for a in &actions {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if !a.iter().all(|x| x.is_finite()) || norm2(a) > 1.0 + NORM_TOLERANCE {
                return Err(Error::invalid("actions", "every action needs finite entries and norm <= 1"));
            }
        }
        Ok(Self { dim, actions })
    }

    /// `{e₁, …, e_K}` in `ℝᴷ`.
    pub fn standard_basis(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyActionSet);
        }
        let actions = (0..k)
            .map(|i| {
                let mut e = alloc::vec![0.0; k];
                e[i] = 1.0;
                e
            })
            .collect();
        Ok(Self { dim: k, actions })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<&[f64]> {
        self.actions.get(index).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.actions.iter().map(Vec::as_slice)
    }
}

/// Draws `k` vectors uniformly from `{0,1}ᵈ \ {0}` and normalizes each to
/// unit length. All-zero draws are rejected and redrawn.
pub fn generate_action_set<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Result<ActionSet> {
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    if k == 0 {
        return Err(Error::EmptyActionSet);
    }
    let mut actions = Vec::with_capacity(k);
    while actions.len() < k {
        let bits: Vec<f64> = (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let ones = bits.iter().filter(|&&b| b == 1.0).count();
        if ones == 0 {
            continue;
        }
        let inv = 1.0 / libm::sqrt(ones as f64);
        actions.push(bits.into_iter().map(|b| b * inv).collect());
    }
    Ok(ActionSet { dim: d, actions })
}

/// Index of the first action maximizing `⟨a, θ⟩` together with that value.
pub fn best_action(theta: &[f64], set: &ActionSet) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, a) in set.iter().enumerate() {
        let v = dot(a, theta);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// `max_a ⟨θ, a⟩ − ⟨θ, chosen⟩`.
pub fn instantaneous_regret(theta: &[f64], chosen: &[f64], set: &ActionSet) -> f64 {
    let (_, best) = best_action(theta, set);
    (best - dot(theta, chosen)).max(0.0)
}

/// The two-point hard instance used by the minimax lower bound:
/// `θ = (1/2 + Δ, 1/2, …, 1/2)` and `φ = θ` except `φ_i = 1/2 + 2Δ`.
/// `arm` is 1-based and must satisfy `2 ≤ arm ≤ k`.
pub fn make_k_armed_hard_pair(k: usize, gap: f64, arm: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k < 2 {
        return Err(Error::invalid("k", "need at least two arms"));
    }
    if !(gap > 0.0 && gap < 0.25) {
        return Err(Error::invalid("gap", "must lie in (0, 1/4)"));
    }
    if !(2..=k).contains(&arm) {
        return Err(Error::invalid("arm", "must satisfy 2 <= arm <= k"));
    }
    let mut theta = alloc::vec![0.5; k];
    theta[0] = 0.5 + gap;
    let mut phi = theta.clone();
    phi[arm - 1] = 0.5 + 2.0 * gap;
    Ok((theta, phi))
}

/// A revealed conversion: the reward of round `round` was 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConversionEvent {
    pub round: u64,
}

impl ConversionEvent {
    /// Revealed rewards are always 1.
    #[inline]
    pub const fn value(&self) -> u8 {
        1
    }
}

/// Result of one environment round.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Round that was just played (1-based).
    pub round: u64,
    /// The uncensored reward `X_t`. Only the oracle baseline may look at it.
    pub reward: bool,
    /// Delay drawn for this round.
    pub delay: u64,
    /// Conversions revealed at the end of this round, in increasing round order.
    pub events: Vec<ConversionEvent>,
}

/// Simulated environment for one episode.
#[derive(Debug, Clone)]
pub struct Environment<R> {
    theta: Vec<f64>,
    delay: DelayDistribution,
    round: u64,
    // reveal round -> originating rounds; only X_s = 1 entries are queued
    pending: BTreeMap<u64, Vec<u64>>,
    positives: u64,
    revealed: u64,
    rng: R,
}

impl<R: Rng> Environment<R> {
    pub fn new(theta: Vec<f64>, delay: DelayDistribution, rng: R) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("theta", "dimension must be >= 1"));
        }
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("theta", "entries must be finite"));
        }
        Ok(Self {
            theta,
            delay,
            round: 1,
            pending: BTreeMap::new(),
            positives: 0,
            revealed: 0,
            rng,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn delay(&self) -> &DelayDistribution {
        &self.delay
    }

    /// The round about to be played (1-based).
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Number of `X_s = 1` draws so far.
    pub fn positives(&self) -> u64 {
        self.positives
    }

    /// Number of conversions revealed so far.
    pub fn revealed(&self) -> u64 {
        self.revealed
    }

    /// Number of positive rewards still waiting to be revealed.
    pub fn pending(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    /// Draws an action set from the environment's own random stream.
    pub fn generate_action_set(&mut self, k: usize) -> Result<ActionSet> {
        generate_action_set(&mut self.rng, self.theta.len(), k)
    }

    /// Plays `chosen` from `set` in the current round.
    pub fn step(&mut self, chosen: usize, set: &ActionSet) -> Result<StepOutcome> {
        self.validate(set)?;
        let action = set.get(chosen).ok_or(Error::ActionIndexOutOfRange {
            index: chosen,
            len: set.len(),
        })?;
        let mean = dot(action, &self.theta).clamp(0.0, 1.0);
        let reward = self.rng.random_bool(mean);
        let delay = self.delay.sample(&mut self.rng);
        let round = self.round;
        if reward {
            self.positives += 1;
            self.pending.entry(round.saturating_add(delay)).or_default().push(round);
        }
        let events = self.reveal(round);
        self.round += 1;
        Ok(StepOutcome {
            round,
            reward,
            delay,
            events,
        })
    }

    /// Advances one round without playing, revealing whatever converts.
    /// Used to drain pending rewards after the horizon.
    pub fn idle_step(&mut self) -> Vec<ConversionEvent> {
        let events = self.reveal(self.round);
        self.round += 1;
        events
    }

    pub fn regret(&self, chosen: usize, set: &ActionSet) -> Result<f64> {
        let action = set.get(chosen).ok_or(Error::ActionIndexOutOfRange {
            index: chosen,
            len: set.len(),
        })?;
        Ok(instantaneous_regret(&self.theta, action, set))
    }

    fn validate(&self, set: &ActionSet) -> Result<()> {
        if set.dim() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                found: set.dim(),
            });
        }
        for (index, a) in set.iter().enumerate() {
            let mean = dot(a, &self.theta);
            if !(-MEAN_TOLERANCE..=1.0 + MEAN_TOLERANCE).contains(&mean) {
                return Err(Error::MeanRewardOutOfRange { index, mean });
            }
        }
        Ok(())
    }

    fn reveal(&mut self, round: u64) -> Vec<ConversionEvent> {
        let Some(mut origins) = self.pending.remove(&round) else {
            return Vec::new();
        };
        origins.sort_unstable();
        self.revealed += origins.len() as u64;
        origins.into_iter().map(|s| ConversionEvent { round: s }).collect()
    }
}
