//! Experiment configuration.
//!
//! Configs are flat `key = value` files (TOML syntax, no tables). Every key is
//! optional; values are layered as built-in defaults, then the preset named
//! by `preset`, then the file's own keys, then command-line overrides.
//!
//! | key            | default        | meaning                                              |
//! |----------------|----------------|------------------------------------------------------|
//! | `preset`       | none           | `A`, `B`, `C` or `D` (see [`Preset`])                |
//! | `d`            | 5              | action dimension                                     |
//! | `k`            | 10             | actions per round                                    |
//! | `horizon`/`T`  | 3000           | rounds per episode                                   |
//! | `theta`        | `uniform`      | `uniform` (θᵢ = 1/√d), `explicit`, `hard`            |
//! | `theta_values` | none           | θ for `theta = "explicit"`                           |
//! | `hard_gap`     | 0.1            | Δ of the hard instance                               |
//! | `hard_arm`     | 2              | 1-based arm raised to 1/2 + 2Δ in the `phi` variant  |
//! | `hard_variant` | `theta`        | `theta` or `phi`                                     |
//! | `actions`      | `resample`     | `resample` (fresh binary set each round) or `basis`  |
//! | `delay`        | `geometric`    | `geometric`, `fixed`, `empirical`, `lognormal`       |
//! | `delay_mean`   | 100            | geometric mean                                       |
//! | `delay_value`  | 0              | fixed delay                                          |
//! | `delay_file`   | none           | sample file for `empirical`                          |
//! | `delay_scale`  | 1.0            | multiplier applied to empirical samples              |
//! | `delay_log_mean` | 6.0          | lognormal μ                                          |
//! | `delay_log_std`  | 1.5          | lognormal σ                                          |
//! | `policy`       | `otf_linucb`   | `otf_linucb`, `otf_lints`, `oracle`, `random`        |
//! | `delta`        | 0.05           | confidence level                                     |
//! | `lambda`       | 1.0            | ridge regularizer                                    |
//! | `window`       | ⌈2·mean delay⌉ | window `m`                                           |
//! | `width_mode`   | `cached`       | `cached` or `exact`                                  |
//! | `runs`         | 100            | replications                                         |
//! | `seed`         | 0              | base seed; run `i` uses `seed + i`                   |
//! | `out`          | `results`      | output directory                                     |
//! | `parallel`     | true           | run replications on a thread pool                    |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use delayed_bandit_core::environment::make_k_armed_hard_pair;
use delayed_bandit_core::{DelayDistribution, PolicyConfig, PolicyKind, WidthMode};
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::io::load_empirical;

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    /// `θᵢ = 1/√d`.
    UniformUnit,
    Explicit(Vec<f64>),
    /// The two-point hard instance; `phi` selects the perturbed member.
    KArmedHard { gap: f64, arm: usize, phi: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// `K` normalized nonzero binary vectors drawn every round.
    ResampleEachRound,
    /// `{e₁, …, e_d}` every round.
    FixedBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelaySpec {
    Geometric { mean: f64 },
    Fixed { value: u64 },
    Empirical { path: PathBuf, scale: f64 },
    LogNormal { log_mean: f64, log_std: f64 },
}

impl DelaySpec {
    pub fn resolve(&self) -> Result<DelayDistribution> {
        Ok(match self {
            DelaySpec::Geometric { mean } => DelayDistribution::geometric(*mean)?,
            DelaySpec::Fixed { value } => DelayDistribution::fixed(*value),
            DelaySpec::Empirical { path, scale } => load_empirical(path, *scale)?,
            DelaySpec::LogNormal { log_mean, log_std } => DelayDistribution::lognormal(*log_mean, *log_std)?,
        })
    }
}

/// The scenarios of the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `d = 5, K = 10, T = 3000`, geometric delays with mean 100, `m = 100`.
    A,
    /// As `A` with `m = 500`.
    B,
    /// Geometric delays with mean 500, `m = 100`.
    C,
    /// Heavy-tailed lognormal delays, `m = 2000`, `T = 10⁴`.
    D,
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Preset::A),
            "B" => Ok(Preset::B),
            "C" => Ok(Preset::C),
            "D" => Ok(Preset::D),
            other => Err(HarnessError::Config(format!("unknown preset `{other}` (expected A, B, C or D)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
        };
        f.write_str(s)
    }
}

/// Lognormal parameters of the synthetic heavy-tailed preset: median
/// `e⁶ ≈ 403` rounds, mean ≈ 1243, `P(D ≤ 2000) ≈ 0.86`.
pub const HEAVY_TAIL_LOG_MEAN: f64 = 6.0;
pub const HEAVY_TAIL_LOG_STD: f64 = 1.5;

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub d: usize,
    pub k: usize,
    pub horizon: u64,
    pub theta_spec: ThetaSpec,
    pub action_mode: ActionMode,
    pub delay_spec: DelaySpec,
    pub delay: DelayDistribution,
    pub policy: PolicyConfig,
    pub runs: u64,
    pub base_seed: u64,
    pub output: PathBuf,
    pub parallel: bool,
}

/// Unresolved key/value settings, as read from a file or the command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub preset: Option<String>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    #[serde(alias = "T")]
    pub horizon: Option<u64>,
    pub theta: Option<String>,
    pub theta_values: Option<Vec<f64>>,
    pub hard_gap: Option<f64>,
    pub hard_arm: Option<usize>,
    pub hard_variant: Option<String>,
    pub actions: Option<String>,
    pub delay: Option<String>,
    pub delay_mean: Option<f64>,
    pub delay_value: Option<u64>,
    pub delay_file: Option<PathBuf>,
    pub delay_scale: Option<f64>,
    pub delay_log_mean: Option<f64>,
    pub delay_log_std: Option<f64>,
    pub policy: Option<String>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub window: Option<u64>,
    pub width_mode: Option<String>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub parallel: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field; } )*
    };
}

impl Settings {
    /// Parses a config file. Relative `delay_file` paths are resolved against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut settings = Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (Some(file), Some(dir)) = (settings.delay_file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(settings)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Keys set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: Settings) {
        overlay!(
            self, other, preset, d, k, horizon, theta, theta_values, hard_gap, hard_arm, hard_variant, actions,
            delay, delay_mean, delay_value, delay_file, delay_scale, delay_log_mean, delay_log_std, policy, delta,
            lambda, window, width_mode, runs, seed, out, parallel,
        );
    }

    fn preset_defaults(preset: Preset) -> Settings {
        let mut s = Settings {
            d: Some(5),
            k: Some(10),
            horizon: Some(3000),
            theta: Some("uniform".into()),
            actions: Some("resample".into()),
            delay: Some("geometric".into()),
            ..Settings::default()
        };
        match preset {
            Preset::A => {
                s.delay_mean = Some(100.0);
                s.window = Some(100);
            }
            Preset::B => {
                s.delay_mean = Some(100.0);
                s.window = Some(500);
            }
            Preset::C => {
                s.delay_mean = Some(500.0);
                s.window = Some(100);
            }
            Preset::D => {
                s.delay = Some("lognormal".into());
                s.delay_log_mean = Some(HEAVY_TAIL_LOG_MEAN);
                s.delay_log_std = Some(HEAVY_TAIL_LOG_STD);
                s.window = Some(2000);
                s.horizon = Some(10_000);
            }
        }
        s
    }

    /// Applies the preset (if any), fills defaults and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let preset = self.preset.as_deref().map(Preset::from_str).transpose()?;
        let mut s = match preset {
            Some(p) => Self::preset_defaults(p),
            None => Settings::default(),
        };
        s.overlay(self.clone());

        let d = s.d.unwrap_or(5);
        let k = s.k.unwrap_or(10);
        let horizon = s.horizon.unwrap_or(3000);
        if horizon == 0 {
            return Err(config_err("horizon must be >= 1"));
        }
        if k == 0 {
            return Err(config_err("k must be >= 1"));
        }

        let theta_spec = match s.theta.as_deref().unwrap_or("uniform") {
            "uniform" => ThetaSpec::UniformUnit,
            "explicit" => ThetaSpec::Explicit(
                s.theta_values
                    .clone()
                    .ok_or_else(|| config_err("theta = \"explicit\" needs theta_values"))?,
            ),
            "hard" => ThetaSpec::KArmedHard {
                gap: s.hard_gap.unwrap_or(0.1),
                arm: s.hard_arm.unwrap_or(2),
                phi: match s.hard_variant.as_deref().unwrap_or("theta") {
                    "theta" => false,
                    "phi" => true,
                    other => return Err(config_err(format!("unknown hard_variant `{other}`"))),
                },
            },
            other => return Err(config_err(format!("unknown theta `{other}`"))),
        };
        let action_mode = match s.actions.as_deref().unwrap_or("resample") {
            "resample" => ActionMode::ResampleEachRound,
            "basis" => ActionMode::FixedBasis,
            other => return Err(config_err(format!("unknown actions `{other}`"))),
        };
        // the hard instance lives on the K-armed basis
        let (d, action_mode, k) = match theta_spec {
            ThetaSpec::KArmedHard { .. } => (k, ActionMode::FixedBasis, k),
            _ => (d, action_mode, k),
        };
        if d == 0 {
            return Err(config_err("d must be >= 1"));
        }

        let delay_spec = match s.delay.as_deref().unwrap_or("geometric") {
            "geometric" => DelaySpec::Geometric {
                mean: s.delay_mean.unwrap_or(100.0),
            },
            "fixed" => DelaySpec::Fixed {
                value: s.delay_value.unwrap_or(0),
            },
            "empirical" => DelaySpec::Empirical {
                path: s
                    .delay_file
                    .clone()
                    .ok_or_else(|| config_err("delay = \"empirical\" needs delay_file"))?,
                scale: s.delay_scale.unwrap_or(1.0),
            },
            "lognormal" => DelaySpec::LogNormal {
                log_mean: s.delay_log_mean.unwrap_or(HEAVY_TAIL_LOG_MEAN),
                log_std: s.delay_log_std.unwrap_or(HEAVY_TAIL_LOG_STD),
            },
            other => return Err(config_err(format!("unknown delay `{other}`"))),
        };
        let delay = delay_spec.resolve()?;

        let kind: PolicyKind = s
            .policy
            .as_deref()
            .unwrap_or("otf_linucb")
            .parse()
            .map_err(|e: delayed_bandit_core::Error| config_err(e.to_string()))?;
        let width_mode = match s.width_mode.as_deref().unwrap_or("cached") {
            "cached" => WidthMode::Cached,
            "exact" => WidthMode::Exact,
            other => return Err(config_err(format!("unknown width_mode `{other}`"))),
        };
        let policy = PolicyConfig {
            kind,
            delta: s.delta.unwrap_or(0.05),
            lambda: s.lambda.unwrap_or(1.0),
            window: s.window.unwrap_or_else(|| delay.recommended_window()),
            width_mode,
        };
        policy.validate().map_err(|e| config_err(e.to_string()))?;

        let runs = s.runs.unwrap_or(100);
        if runs == 0 {
            return Err(config_err("runs must be >= 1"));
        }

        let config = ExperimentConfig {
            preset,
            d,
            k,
            horizon,
            theta_spec,
            action_mode,
            delay_spec,
            delay,
            policy,
            runs,
            base_seed: s.seed.unwrap_or(0),
            output: s.out.clone().unwrap_or_else(|| PathBuf::from("results")),
            parallel: s.parallel.unwrap_or(true),
        };
        let theta = config.theta()?;
        if theta.len() != config.d {
            return Err(config_err(format!("theta has {} entries but d = {}", theta.len(), config.d)));
        }
        if !matches!(config.theta_spec, ThetaSpec::KArmedHard { .. }) {
            let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1.0 + 1e-9 {
                return Err(config_err(format!("theta has norm {norm} > 1")));
            }
        }
        Ok(config)
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Result<Self> {
        Settings {
            preset: Some(preset.to_string()),
            ..Settings::default()
        }
        .resolve()
    }

    /// The true parameter vector.
    pub fn theta(&self) -> Result<Vec<f64>> {
        Ok(match &self.theta_spec {
            ThetaSpec::UniformUnit => vec![1.0 / (self.d as f64).sqrt(); self.d],
            ThetaSpec::Explicit(v) => v.clone(),
            ThetaSpec::KArmedHard { gap, arm, phi } => {
                let (theta, phi_vec) = make_k_armed_hard_pair(self.k, *gap, *arm).map_err(|e| config_err(e.to_string()))?;
                if *phi {
                    phi_vec
                } else {
                    theta
                }
            }
        })
    }

    /// `τ_m` for the configured delay distribution and window.
    pub fn tau(&self) -> f64 {
        self.delay.cdf(self.policy.window)
    }

    /// Resolved settings as `(key, value)` pairs, in a stable order.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("preset", self.preset.map(|p| p.to_string()).unwrap_or_else(|| "none".into()));
        push("d", self.d.to_string());
        push("k", self.k.to_string());
        push("horizon", self.horizon.to_string());
        match &self.theta_spec {
            ThetaSpec::UniformUnit => push("theta", "uniform".into()),
            ThetaSpec::Explicit(v) => {
                push("theta", "explicit".into());
                push("theta_values", format!("{v:?}"));
            }
            ThetaSpec::KArmedHard { gap, arm, phi } => {
                push("theta", "hard".into());
                push("hard_gap", gap.to_string());
                push("hard_arm", arm.to_string());
                push("hard_variant", if *phi { "phi" } else { "theta" }.into());
            }
        }
        push(
            "actions",
            match self.action_mode {
                ActionMode::ResampleEachRound => "resample",
                ActionMode::FixedBasis => "basis",
            }
            .into(),
        );
        match &self.delay_spec {
            DelaySpec::Geometric { mean } => {
                push("delay", "geometric".into());
                push("delay_mean", mean.to_string());
            }
            DelaySpec::Fixed { value } => {
                push("delay", "fixed".into());
                push("delay_value", value.to_string());
            }
            DelaySpec::Empirical { path, scale } => {
                push("delay", "empirical".into());
                push("delay_file", path.display().to_string());
                push("delay_scale", scale.to_string());
            }
            DelaySpec::LogNormal { log_mean, log_std } => {
                push("delay", "lognormal".into());
                push("delay_log_mean", log_mean.to_string());
                push("delay_log_std", log_std.to_string());
            }
        }
        push("delay_mean_resolved", self.delay.mean().to_string());
        push("policy", self.policy.kind.to_string());
        push("delta", self.policy.delta.to_string());
        push("lambda", self.policy.lambda.to_string());
        push("window", self.policy.window.to_string());
        push(
            "width_mode",
            match self.policy.width_mode {
                WidthMode::Cached => "cached",
                WidthMode::Exact => "exact",
            }
            .into(),
        );
        push("runs", self.runs.to_string());
        push("seed", self.base_seed.to_string());
        push("parallel", self.parallel.to_string());
        out
    }
}
