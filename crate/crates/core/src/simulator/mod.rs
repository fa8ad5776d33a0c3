//! Monte Carlo realization of the slotted radar/ALOHA network.
//!
//! Nodes form a homogeneous PPP. Each node keeps one boresight for the whole
//! run and both transmits and listens on it, so two nodes interact only when
//! each lies in the other's beam. A node with mark ν pulses at slots
//! `ν + nM`, listens for `M_r - 1` slots, then runs `q_c`-persistent ALOHA
//! in the remaining `M - M_r` slots. The typical node sits at the origin with
//! mark 0 and is never counted as an interferer.
//!
//! Every trial draws from its own [`SeedSpec`] stream and ALOHA decisions are
//! keyed by node and slot, so results do not depend on evaluation order or
//! thread count.

mod estimate;
mod network;
mod seed;

use thiserror::Error;

use crate::model::ModelError;

pub use estimate::{
    calibrate_threshold, echo_window_ensemble, estimate_detection_probability,
    estimate_false_alarm, estimate_throughput, false_alarm_from_maxima, simulated_radar_range,
    slot_interference_samples, threshold_quantile, Estimate, SimConfig, ThroughputEstimate,
    TrialEnsemble, MIN_CALIBRATION_TRIALS, MIN_THROUGHPUT_TRIALS,
};
pub use network::{
    active_aligned_interferers, active_aligned_interferers_at, default_window_radius,
    echo_window_max, echo_window_profile, min_window_radius, node_activity, sample_aligned_view,
    sample_network, slot_interference, Activity, NetworkRealization, Node, Observer, Point,
};
pub use seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("node density must be non-negative (got {0})")]
    NegativeDensity(f64),
    #[error("window radius {radius} m is below the minimum {min} m for this density")]
    WindowTooSmall { radius: f64, min: f64 },
    #[error("a node coincides with the observer")]
    CoincidentNode,
    #[error("{requested} trials requested, at least {min} needed")]
    InsufficientTrials { requested: u64, min: u64 },
    #[error("threshold must be positive (got {0})")]
    NonPositiveThreshold(f64),
}
