//! Windowed least-squares estimation under censored, delayed rewards.
//!
//! The estimator is
//!
//! ```text
//! θ̂_t = V_t(λ)⁻¹ B_t,   V_t(λ) = λI + Σ_{s<t} A_s A_sᵀ,   B_t = Σ_{s<t} Ỹ_{s,t} A_s
//! ```
//!
//! where `Ỹ_{s,t}` is the reward of round `s` if it converted within `m`
//! rounds and has already been revealed, and 0 otherwise. The design matrix
//! keeps every action; only conversions are truncated. Because the estimator
//! only ever sees a `τ_m` fraction of the positives, `θ̂_t` concentrates around
//! `τ_m θ` rather than `θ`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::bounds;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};

/// Full re-inversion period for the incrementally maintained inverse.
pub const REINVERT_EVERY: u64 = 1000;
/// How often the inverse residual is checked between scheduled re-inversions.
pub const RESIDUAL_CHECK_EVERY: u64 = 16;
/// Residual `‖V·V⁻¹ − I‖_max` above which the inverse is rebuilt.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Which norms enter the window penalty `Σ_{s=t−m}^{t−1} ‖A_s‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthMode {
    /// `‖A_s‖_{V_t⁻¹}`, recomputed against the current inverse. O(m d²).
    Exact,
    /// The norm cached when `A_s` was recorded. It upper bounds the exact
    /// norm and costs O(1) per round.
    #[default]
    Cached,
}

/// One of the last `m` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub round: u64,
    pub action: Vec<f64>,
    /// `‖A_s‖` in the inverse design metric right after `A_s` was added.
    pub cached_norm: f64,
    pub converted: bool,
}

#[derive(Debug, Clone)]
pub struct WindowedEstimator {
    dim: usize,
    lambda: f64,
    window_len: u64,
    /// Round whose action will be recorded next (1-based).
    round: u64,
    v: Matrix,
    v_inv: Matrix,
    b: Vec<f64>,
    window: VecDeque<WindowEntry>,
    updates_since_inversion: u64,
}

impl WindowedEstimator {
    pub fn new(dim: usize, lambda: f64, window_len: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "must be >= 1"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be finite and > 0"));
        }
        Ok(Self {
            dim,
            lambda,
            window_len,
            round: 1,
            v: Matrix::scaled_identity(dim, lambda),
            v_inv: Matrix::scaled_identity(dim, 1.0 / lambda),
            b: alloc::vec![0.0; dim],
            window: VecDeque::with_capacity(window_len.min(1 << 16) as usize),
            updates_since_inversion: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn window_len(&self) -> u64 {
        self.window_len
    }

    /// Current round `t`; `t − 1` actions have been recorded.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn recorded(&self) -> u64 {
        self.round - 1
    }

    pub fn design(&self) -> &Matrix {
        &self.v
    }

    pub fn design_inverse(&self) -> &Matrix {
        &self.v_inv
    }

    pub fn response(&self) -> &[f64] {
        &self.b
    }

    pub fn window(&self) -> impl ExactSizeIterator<Item = &WindowEntry> + '_ {
        self.window.iter()
    }

    /// `max |(V V⁻¹ − I)_ij|`.
    pub fn inverse_residual(&self) -> f64 {
        self.v.identity_residual(&self.v_inv)
    }

    fn check_dim(&self, a: &[f64]) -> Result<()> {
        if a.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.len(),
            })
        }
    }

    /// Adds the action played in the current round and advances the round.
    ///
    /// Returns `‖a‖²` in the inverse design metric *before* the update, the
    /// per-round term of the elliptical potential.
    pub fn record_action(&mut self, a: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("action", "entries must be finite"));
        }
        let v_inv_a = self.v_inv.mul_vec(a);
        let prior_sq = dot(a, &v_inv_a).max(0.0);

        self.v.add_outer(a, a, 1.0);
        self.v_inv.add_outer(&v_inv_a, &v_inv_a, -1.0 / (1.0 + prior_sq));
        self.v_inv.symmetrize();
        self.updates_since_inversion += 1;
        if self.updates_since_inversion >= REINVERT_EVERY
            || (self.updates_since_inversion.is_multiple_of(RESIDUAL_CHECK_EVERY)
                && self.inverse_residual() > RESIDUAL_TOLERANCE)
        {
            self.reinvert();
        }

        if self.window_len > 0 {
            if self.window.len() as u64 >= self.window_len {
                self.window.pop_front();
            }
            let cached_norm = libm::sqrt(self.v_inv.quadratic_form(a).max(0.0));
            self.window.push_back(WindowEntry {
                round: self.round,
                action: a.to_vec(),
                cached_norm,
                converted: false,
            });
        }
        self.round += 1;
        Ok(prior_sq)
    }

    fn reinvert(&mut self) {
        if let Some(mut inv) = self.v.inverse() {
            inv.symmetrize();
            self.v_inv = inv;
        }
        self.updates_since_inversion = 0;
    }

    /// Credits a conversion for round `s`. Conversions for rounds that left the
    /// window, were never recorded, or were already credited are ignored;
    /// returns whether `B` changed.
    pub fn record_conversion(&mut self, s: u64) -> bool {
        let Some(front) = self.window.front() else {
            return false;
        };
        let Some(offset) = s.checked_sub(front.round) else {
            return false;
        };
        let Some(entry) = self.window.get_mut(offset as usize) else {
            return false;
        };
        debug_assert_eq!(entry.round, s);
        if entry.converted {
            return false;
        }
        entry.converted = true;
        for (b, x) in self.b.iter_mut().zip(&entry.action) {
            *b += x;
        }
        true
    }

    /// `θ̂ = V⁻¹ B`.
    pub fn estimate(&self) -> Vec<f64> {
        self.v_inv.mul_vec(&self.b)
    }

    /// `√(aᵀ V⁻¹ a)`.
    pub fn mahalanobis_norm(&self, a: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        Ok(libm::sqrt(self.v_inv.quadratic_form(a).max(0.0)))
    }

    /// `√(xᵀ V x)`, the metric in which the estimation error is measured.
    pub fn design_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(libm::sqrt(self.v.quadratic_form(x).max(0.0)))
    }

    /// `f_{t,δ}` evaluated at the number of recorded actions.
    pub fn exploration_radius(&self, delta: f64) -> Result<f64> {
        bounds::exploration_radius(self.dim, self.lambda, self.recorded(), delta)
    }

    /// `Σ_{s=t−m}^{t−1} ‖A_s‖` over the window, in the chosen metric.
    pub fn window_norm_sum(&self, mode: WidthMode) -> f64 {
        match mode {
            WidthMode::Cached => self.window.iter().map(|e| e.cached_norm).sum(),
            WidthMode::Exact => self
                .window
                .iter()
                .map(|e| libm::sqrt(self.v_inv.quadratic_form(&e.action).max(0.0)))
                .sum(),
        }
    }

    /// `α_{t,δ} = 2 f_{t,δ} + Σ_{s=t−m}^{t−1} ‖A_s‖`.
    pub fn confidence_width(&self, delta: f64, mode: WidthMode) -> Result<f64> {
        Ok(2.0 * self.exploration_radius(delta)? + self.window_norm_sum(mode))
    }

    /// Euclidean norm of the current estimate; handy for diagnostics.
    pub fn estimate_norm(&self) -> f64 {
        norm2(&self.estimate())
    }
}
