//! Multi-scale online learning: experts and bandit learners whose regret
//! against each action scales with that action's own reward range, plus the
//! pricing/auction reductions built on top of them.
//!
//! The learners share one primitive: a smooth multi-scale projection onto the
//! simplex under the weighted negative entropy `F(x) = Σ c_i x_i ln x_i`.
//! Everything downstream (posted pricing on a geometric price ladder, the
//! growing-ladder variant for unknown value ranges, discretized optimal-auction
//! learning, adversarial lower-bound environments) is a reduction onto that
//! primitive.
//!
//! Weights are carried in log-domain throughout so that million-round runs of
//! multiplicative updates neither overflow nor underflow.

// Validation guards are written `!(x > 0.0)` so NaN fails them too; the
// partial_cmp form clippy suggests would hide that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod bandits;
pub mod baselines;
pub mod experts;
pub mod ledger;
pub mod math;
pub mod myerson;
pub mod pricing;
pub mod projection;
pub mod rng;
pub mod space;
pub mod trace;
pub mod unknown_h;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
