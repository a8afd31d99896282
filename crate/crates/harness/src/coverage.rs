//! Empirical coverage of the windowed estimator's confidence set.
//!
//! Over `n_reps` replications that share one fixed action sequence but draw
//! fresh rewards and delays, counts how often
//! `‖θ̂_t − τ_m θ‖_{V_t} ≤ α_{t,δ}` (exact width) holds at every round.

use delayed_bandit_core::policy::{OtfLinUcb, Policy, PolicyConfig, PolicyKind};
use delayed_bandit_core::{ActionSet, DelayDistribution, Environment, Feedback, WidthMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ActionMode, ExperimentConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub reps: u64,
    /// Replications in which the bound held at every round.
    pub covered: u64,
    pub tau: f64,
    /// Largest ratio `‖θ̂_t − τθ‖_{V_t} / α_{t,δ}` seen in any replication.
    pub worst_ratio: f64,
}

impl CoverageReport {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.reps as f64
    }
}

/// The action sequence shared by all replications: one uniformly chosen
/// action from each round's set, generated from `base_seed`.
fn fixed_action_sequence(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.base_seed);
    let basis = ActionSet::standard_basis(config.d)?;
    (0..config.horizon)
        .map(|_| {
            let set = match config.action_mode {
                ActionMode::FixedBasis => basis.clone(),
                ActionMode::ResampleEachRound => {
                    delayed_bandit_core::environment::generate_action_set(&mut rng, config.d, config.k)?
                }
            };
            let i = rng.random_range(0..set.len());
            Ok(set.get(i).expect("index in range").to_vec())
        })
        .collect()
}

fn replicate(config: &ExperimentConfig, actions: &[Vec<f64>], theta: &[f64], tau: f64, rep: u64) -> Result<(bool, f64)> {
    let rng = ChaCha8Rng::seed_from_u64(config.base_seed.wrapping_add(rep).wrapping_add(1));
    let mut env = Environment::new(theta.to_vec(), config.delay.clone(), rng)?;
    let policy_cfg = PolicyConfig {
        kind: PolicyKind::OtfLinUcb,
        width_mode: WidthMode::Exact,
        ..config.policy
    };
    let mut learner = OtfLinUcb::new(config.d, &policy_cfg)?;
    let scaled: Vec<f64> = theta.iter().map(|x| tau * x).collect();
    let mut covered = true;
    let mut worst: f64 = 0.0;
    let mut check = |learner: &OtfLinUcb| -> Result<()> {
        let est = learner.estimator().expect("OTFLinUCB has an estimator");
        let err: Vec<f64> = est.estimate().iter().zip(&scaled).map(|(a, b)| a - b).collect();
        let lhs = est.design_norm(&err)?;
        let width = est.confidence_width(config.policy.delta, WidthMode::Exact)?;
        worst = worst.max(lhs / width);
        if lhs > width {
            covered = false;
        }
        Ok(())
    };
    for action in actions {
        check(&learner)?;
        let set = ActionSet::new(vec![action.clone()])?;
        let out = env.step(0, &set)?;
        learner.observe(&Feedback {
            round: out.round,
            action,
            events: &out.events,
            reward: out.reward,
        })?;
    }
    Ok((covered, worst))
}

/// Fraction of replications in which the confidence bound holds at all
/// rounds `t ≤ T`.
pub fn concentration_check(config: &ExperimentConfig, n_reps: u64) -> Result<CoverageReport> {
    if n_reps == 0 {
        return Err(HarnessError::Config("coverage needs at least one replication".into()));
    }
    if let DelayDistribution::Empirical { samples, .. } = &config.delay {
        if samples.is_empty() {
            return Err(HarnessError::Config("empirical delay distribution has no samples".into()));
        }
    }
    let theta = config.theta()?;
    let tau = config.tau();
    let actions = fixed_action_sequence(config)?;
    let run = |rep: u64| replicate(config, &actions, &theta, tau, rep);
    let results: Vec<(bool, f64)> = if config.parallel {
        (0..n_reps).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..n_reps).map(run).collect::<Result<_>>()?
    };
    Ok(CoverageReport {
        reps: n_reps,
        covered: results.iter().filter(|(c, _)| *c).count() as u64,
        tau,
        worst_ratio: results.iter().map(|(_, w)| *w).fold(0.0, f64::max),
    })
}
