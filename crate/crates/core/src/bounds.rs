//! Closed-form quantities: the self-normalized confidence radius, the
//! elliptical-potential budget, the OTFLinUCB regret upper bound and the
//! minimax lower bound for censored Bernoulli bandits.

use crate::error::{Error, Result};

/// Number of grid points used by [`tuned_lower_bound`].
pub const LOWER_BOUND_GRID_POINTS: usize = 64;
/// Smallest gap on the tuning grid.
pub const LOWER_BOUND_GRID_MIN: f64 = 1e-4;
/// Largest gap on the tuning grid (the argument needs `2Δ ≤ 1/4`).
pub const LOWER_BOUND_GRID_MAX: f64 = 0.125;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("delta", "must lie in (0, 1]"))
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite and > 0"))
    }
}

/// `log((dλ + n) / (dλ))`.
fn log_det_ratio(d: usize, lambda: f64, n: f64) -> f64 {
    let dl = d as f64 * lambda;
    libm::log1p(n / dl)
}

/// Exploration radius
/// `f = √λ + √(2 log(1/δ) + d log((dλ + n)/(dλ)))` after `n` observations.
pub fn exploration_radius(d: usize, lambda: f64, n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_positive("lambda", lambda)?;
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    let inner = 2.0 * libm::log(1.0 / delta) + d as f64 * log_det_ratio(d, lambda, n as f64);
    Ok(libm::sqrt(lambda) + libm::sqrt(inner))
}

/// `2 d log((dλ + T)/(dλ))`, the budget for `Σ_t ‖A_t‖²_{V_t⁻¹}` when
/// `λ ≥ 1` and actions have norm at most 1.
pub fn elliptical_potential_bound(d: usize, lambda: f64, horizon: u64) -> f64 {
    2.0 * d as f64 * log_det_ratio(d, lambda, horizon as f64)
}

/// High-probability regret upper bound for OTFLinUCB:
///
/// `(4 f_{T,δ} / τ) √(2 d T L) + (4 m d / τ) L`, with `L = log((dλ + T)/(dλ))`.
pub fn theorem2_bound(horizon: u64, d: usize, lambda: f64, delta: f64, window: u64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid("tau", "must lie in (0, 1]"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    let f = exploration_radius(d, lambda, horizon, delta)?;
    let t = horizon as f64;
    let df = d as f64;
    let log_term = log_det_ratio(d, lambda, t);
    Ok(4.0 * f / tau * libm::sqrt(2.0 * df * t * log_term) + 4.0 * window as f64 * df / tau * log_term)
}

/// Bernoulli relative entropy `d(p, q)` with the convention `0 log 0 = 0`.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", "must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("q", "must lie in [0, 1]"));
    }
    if p == q {
        return Ok(0.0);
    }
    if q == 0.0 || q == 1.0 {
        return Err(Error::invalid("q", "must lie in (0, 1) when p != q"));
    }
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * libm::log(x / y) };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

/// `32 τ Δ²`, the χ²-style upper bound on `d(τ/2, τ(1/2 + 2Δ))` valid for
/// `Δ ≤ 1/8`.
pub fn censored_kl_upper_bound(tau: f64, gap: f64) -> f64 {
    32.0 * tau * gap * gap
}

fn check_lower_bound_inputs(horizon: u64, k: usize, tau: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid("k", "need K > 1"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Bretagnolle–Huber lower bound on the summed regret of the hard pair
/// `(θ, φ)` for a given gap: `(T Δ / 4) exp(−32 τ Δ² T / (K − 1))`.
pub fn lower_bound_value(horizon: u64, k: usize, tau: f64, gap: f64) -> Result<f64> {
    check_lower_bound_inputs(horizon, k, tau)?;
    if !(gap > 0.0 && gap <= LOWER_BOUND_GRID_MAX) {
        return Err(Error::invalid("gap", "must lie in (0, 1/8]"));
    }
    let t = horizon as f64;
    Ok(t * gap / 4.0 * libm::exp(-32.0 * tau * gap * gap * t / (k as f64 - 1.0)))
}

/// Maximizes [`lower_bound_value`] over a geometric grid of
/// [`LOWER_BOUND_GRID_POINTS`] gaps in
/// `[LOWER_BOUND_GRID_MIN, LOWER_BOUND_GRID_MAX]`. Returns `(gap, value)`.
pub fn tuned_lower_bound(horizon: u64, k: usize, tau: f64) -> Result<(f64, f64)> {
    check_lower_bound_inputs(horizon, k, tau)?;
    let ratio = LOWER_BOUND_GRID_MAX / LOWER_BOUND_GRID_MIN;
    let steps = (LOWER_BOUND_GRID_POINTS - 1) as f64;
    let mut best = (LOWER_BOUND_GRID_MIN, f64::NEG_INFINITY);
    for i in 0..LOWER_BOUND_GRID_POINTS {
        let gap = if i + 1 == LOWER_BOUND_GRID_POINTS {
            LOWER_BOUND_GRID_MAX
        } else {
            LOWER_BOUND_GRID_MIN * libm::pow(ratio, i as f64 / steps)
        };
        let value = lower_bound_value(horizon, k, tau, gap)?;
        if value > best.1 {
            best = (gap, value);
        }
    }
    Ok(best)
}
