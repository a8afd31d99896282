//! Stochastic linear bandits with delayed, censored Bernoulli rewards.
//!
//! The learner plays an action, the Bernoulli reward is drawn immediately but
//! only positive outcomes ("conversions") are ever revealed, after a random
//! delay. This crate provides the pieces needed to learn in that setting:
//!
//! - [`delay`]: delay distributions with exact CDFs and window recommendation.
//! - [`environment`]: the interaction protocol and pseudo-regret accounting.
//! - [`estimator`]: the windowed least-squares estimator, which discards
//!   conversions that arrive more than `m` rounds late.
//! - [`policy`]: OTFLinUCB, OTFLinTS and two baselines.
//! - [`bounds`]: closed-form confidence radius, regret upper bound and
//!   minimax lower-bound calculators.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod delay;
pub mod environment;
mod error;
pub mod estimator;
pub mod linalg;
pub mod policy;

pub use delay::DelayDistribution;
pub use environment::{ActionSet, ConversionEvent, Environment, StepOutcome};
pub use error::{Error, Result};
pub use estimator::{WidthMode, WindowedEstimator};
pub use policy::{Feedback, Policy, PolicyConfig, PolicyKind};
