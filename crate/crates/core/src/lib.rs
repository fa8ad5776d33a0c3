//! Performance tradeoffs of networks whose nodes alternate between pulse
//! radar sensing and slotted-ALOHA data transmission on a shared channel.
//!
//! - [`model`]: validated parameters and the physical formulas.
//! - [`analytic`]: closed-form threshold, radar range, interference law,
//!   packet success and throughput density.
//! - [`simulator`]: Monte Carlo network realizations used to calibrate
//!   thresholds against the aggregate interference and check the analytics.
//! - [`tradeoff`]: throughput maximization under a radar range target.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod exec;
pub mod model;
pub mod simulator;
pub mod tradeoff;

pub use exec::Execution;
pub use model::{RawParams, SystemParams};
