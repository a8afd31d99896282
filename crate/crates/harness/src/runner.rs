//! Episode execution and aggregation over replications.

use delayed_bandit_core::environment::ActionSet;
use delayed_bandit_core::{Environment, Feedback};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ActionMode, ExperimentConfig};
use crate::error::Result;

/// Cumulative pseudo-regret of one episode, one entry per round.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run_id: u64,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Everything measured during one episode.
#[derive(Debug, Clone)]
pub struct EpisodeReport {
    pub trace: RegretTrace,
    /// `Σ_t ‖A_t‖²_{V_t⁻¹}` for policies with an estimator, else `None`.
    pub elliptical_potential: Option<f64>,
    /// Number of `X_t = 1` draws.
    pub positives: u64,
    /// Conversions revealed before the horizon.
    pub revealed: u64,
}

/// Seeds for run `run_index`: the environment and the policy draw from two
/// streams of the same ChaCha key `base_seed + run_index`.
pub fn run_rngs(base_seed: u64, run_index: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let seed = base_seed.wrapping_add(run_index);
    let env_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    policy_rng.set_stream(1);
    (env_rng, policy_rng)
}

pub fn run_episode(config: &ExperimentConfig, run_index: u64) -> Result<RegretTrace> {
    Ok(run_episode_detailed(config, run_index)?.trace)
}

/// Runs one episode: action set → select → environment step → observe →
/// regret, for `config.horizon` rounds.
pub fn run_episode_detailed(config: &ExperimentConfig, run_index: u64) -> Result<EpisodeReport> {
    let (env_rng, mut policy_rng) = run_rngs(config.base_seed, run_index);
    let mut env = Environment::new(config.theta()?, config.delay.clone(), env_rng)?;
    let mut policy = config.policy.build(config.d)?;
    let basis = match config.action_mode {
        ActionMode::FixedBasis => Some(ActionSet::standard_basis(config.d)?),
        ActionMode::ResampleEachRound => None,
    };

    let mut cumulative = Vec::with_capacity(config.horizon as usize);
    let mut total = 0.0;
    let mut potential = policy.estimator().map(|_| 0.0);
    for _ in 0..config.horizon {
        let fresh;
        let set = match &basis {
            Some(b) => b,
            None => {
                fresh = env.generate_action_set(config.k)?;
                &fresh
            }
        };
        let chosen = policy.select(set, &mut policy_rng)?;
        let action = set.get(chosen).expect("policy returned an in-range index");
        if let (Some(p), Some(est)) = (potential.as_mut(), policy.estimator()) {
            let norm = est.mahalanobis_norm(action)?;
            *p += norm * norm;
        }
        total += env.regret(chosen, set)?;
        cumulative.push(total);
        let outcome = env.step(chosen, set)?;
        policy.observe(&Feedback {
            round: outcome.round,
            action,
            events: &outcome.events,
            reward: outcome.reward,
        })?;
    }
    Ok(EpisodeReport {
        trace: RegretTrace {
            run_id: run_index,
            cumulative,
        },
        elliptical_potential: potential,
        positives: env.positives(),
        revealed: env.revealed(),
    })
}

/// Per-round mean and standard deviation across runs, plus final-regret
/// quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n − 1` denominator; 0 for a single run).
    pub std: Vec<f64>,
    /// `(q, value)` for each of [`FINAL_QUANTILES`].
    pub final_quantiles: Vec<(f64, f64)>,
}

pub const FINAL_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

impl SummaryStats {
    /// Summarizes traces, which must all have the same length. Traces are
    /// taken in `run_id` order so the result does not depend on input order.
    pub fn from_traces(traces: &[RegretTrace]) -> Self {
        let mut sorted: Vec<&RegretTrace> = traces.iter().collect();
        sorted.sort_by_key(|t| t.run_id);
        let n = sorted.len();
        let len = sorted.first().map_or(0, |t| t.cumulative.len());
        let mut mean = vec![0.0; len];
        let mut std = vec![0.0; len];
        for t in 0..len {
            let m = sorted.iter().map(|tr| tr.cumulative[t]).sum::<f64>() / n as f64;
            mean[t] = m;
            if n > 1 {
                let ss: f64 = sorted.iter().map(|tr| (tr.cumulative[t] - m).powi(2)).sum();
                std[t] = (ss / (n - 1) as f64).sqrt();
            }
        }
        let mut finals: Vec<f64> = sorted.iter().map(|t| t.final_regret()).collect();
        finals.sort_by(f64::total_cmp);
        let final_quantiles = FINAL_QUANTILES.iter().map(|&q| (q, quantile(&finals, q))).collect();
        Self {
            runs: n,
            mean,
            std,
            final_quantiles,
        }
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(0.0)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Runs `config.runs` independent episodes, in parallel when
/// `config.parallel` is set. Traces come back sorted by run id.
pub fn run_batch(config: &ExperimentConfig) -> Result<(Vec<RegretTrace>, SummaryStats)> {
    let reports = run_batch_detailed(config)?;
    let traces: Vec<RegretTrace> = reports.into_iter().map(|r| r.trace).collect();
    let stats = SummaryStats::from_traces(&traces);
    Ok((traces, stats))
}

pub fn run_batch_detailed(config: &ExperimentConfig) -> Result<Vec<EpisodeReport>> {
    let mut reports: Vec<EpisodeReport> = if config.parallel {
        (0..config.runs)
            .into_par_iter()
            .map(|i| run_episode_detailed(config, i))
            .collect::<Result<_>>()?
    } else {
        (0..config.runs)
            .map(|i| run_episode_detailed(config, i))
            .collect::<Result<_>>()?
    };
    reports.sort_by_key(|r| r.trace.run_id);
    Ok(reports)
}
