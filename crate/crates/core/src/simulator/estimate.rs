use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::network::{
    default_window_radius, draw_typical_observer, echo_window_max, sample_aligned_view,
    slot_interference, NetworkRealization, Observer, Point,
};
use super::seed::SeedSpec;
use super::SimError;
use crate::analytic::range_for_threshold;
use crate::exec::Execution;
use crate::model::{radar_return_power, SystemParams};

/// Minimum trials for threshold calibration; fewer leave the tail quantile
/// too noisy for a 5% range comparison.
pub const MIN_CALIBRATION_TRIALS: u64 = 1000;
pub const MIN_THROUGHPUT_TRIALS: u64 = 100;
/// Redraws allowed for a realization with a node on top of the observer.
const MAX_REDRAWS: u32 = 16;
const Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo controls shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    /// `None` selects [`default_window_radius`].
    pub window_radius: Option<f64>,
    pub seed: u64,
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            window_radius: None,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_window_radius(mut self, radius: f64) -> Self {
        self.window_radius = Some(radius);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn resolved_window(&self, p: &SystemParams, lambda: f64) -> f64 {
        self.window_radius
            .unwrap_or_else(|| default_window_radius(p, lambda))
    }
}

/// A Monte Carlo proportion with its 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn proportion(hits: u64, trials: u64) -> Self {
        let n = trials as f64;
        let value = hits as f64 / n;
        Self {
            value,
            half_width: Z95 * (value * (1.0 - value) / n).sqrt(),
            trials,
        }
    }

    /// Binomial standard error at success probability `p`.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Per-trial interference statistics at the typical node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEnsemble {
    /// Largest slot interference over each trial's echo window, watts.
    pub echo_maxima: Vec<f64>,
    /// Interference in one comm slot of the typical node per trial, watts.
    pub slot_samples: Vec<f64>,
    pub trials: u64,
    /// Realizations redrawn because a node coincided with the observer.
    pub redraws: u64,
}

/// Run `trial` with a fresh stream, redrawing on a coincident node.
fn with_redraws<T>(
    seed: SeedSpec,
    mut trial: impl FnMut(&mut ChaCha8Rng) -> Result<T, SimError>,
) -> Result<(T, u64), SimError> {
    for attempt in 0..=MAX_REDRAWS {
        let mut rng = seed.rng_for_attempt(attempt);
        match trial(&mut rng) {
            Err(SimError::CoincidentNode) => continue,
            other => return other.map(|v| (v, u64::from(attempt))),
        }
    }
    Err(SimError::CoincidentNode)
}

/// A slot in which the typical node sends a comm packet, uniformly chosen.
/// Radar-only cycles have none; any slot then has the same law.
fn typical_comm_slot(p: &SystemParams, rng: &mut ChaCha8Rng) -> u64 {
    let (lo, hi) = if p.comm_slots() > 0 {
        (p.radar_slots(), p.cycle_slots())
    } else {
        (0, p.cycle_slots())
    };
    u64::from(rng.random_range(lo..hi))
}

fn typical_view(
    p: &SystemParams,
    lambda: f64,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkRealization, SimError> {
    let typical = draw_typical_observer(rng);
    sample_aligned_view(p, lambda, radius, typical, typical, rng)
}

/// Echo-window maxima and single-slot samples over `cfg.trials`
/// target-free realizations.
pub fn echo_window_ensemble(
    p: &SystemParams,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<TrialEnsemble, SimError> {
    let radius = cfg.resolved_window(p, lambda);
    let results = cfg.execution.map(cfg.trials, |i| {
        with_redraws(SeedSpec::new(cfg.seed, i), |rng| {
            let net = typical_view(p, lambda, radius, rng)?;
            let slot = typical_comm_slot(p, rng);
            Ok((
                echo_window_max(&net, p)?,
                slot_interference(&net, p, slot, &net.typical)?,
            ))
        })
    });
    let mut ens = TrialEnsemble {
        echo_maxima: Vec::with_capacity(results.len()),
        slot_samples: Vec::with_capacity(results.len()),
        trials: cfg.trials,
        redraws: 0,
    };
    for r in results {
        let ((max, slot), redraws) = r?;
        ens.echo_maxima.push(max);
        ens.slot_samples.push(slot);
        ens.redraws += redraws;
    }
    Ok(ens)
}

/// Single-slot aggregate interference at the typical node, one sample per
/// trial, taken in a uniformly chosen comm slot of the typical node.
pub fn slot_interference_samples(
    p: &SystemParams,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    let radius = cfg.resolved_window(p, lambda);
    cfg.execution
        .map(cfg.trials, |i| {
            with_redraws(SeedSpec::new(cfg.seed, i), |rng| {
                let net = typical_view(p, lambda, radius, rng)?;
                let slot = typical_comm_slot(p, rng);
                slot_interference(&net, p, slot, &net.typical)
            })
            .map(|(v, _)| v)
        })
        .into_iter()
        .collect()
}

/// Empirical `(1 - pf)`-quantile: the smallest sample value exceeded by at
/// most `pf · n` samples.
pub fn threshold_quantile(samples: &[f64], pf: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = (((1.0 - pf) * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

/// Detection threshold meeting the false alarm target against the full
/// aggregate interference.
pub fn calibrate_threshold(
    p: &SystemParams,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<f64, SimError> {
    if cfg.trials < MIN_CALIBRATION_TRIALS {
        return Err(SimError::InsufficientTrials {
            requested: cfg.trials,
            min: MIN_CALIBRATION_TRIALS,
        });
    }
    let ens = echo_window_ensemble(p, lambda, cfg)?;
    Ok(threshold_quantile(&ens.echo_maxima, p.pf_target()))
}

/// Fraction of echo-window maxima above `theta`.
pub fn false_alarm_from_maxima(maxima: &[f64], theta: f64) -> Estimate {
    let hits = maxima.iter().filter(|&&m| m > theta).count() as u64;
    Estimate::proportion(hits, maxima.len() as u64)
}

pub fn estimate_false_alarm(
    p: &SystemParams,
    lambda: f64,
    theta: f64,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::InsufficientTrials {
            requested: 0,
            min: 1,
        });
    }
    let ens = echo_window_ensemble(p, lambda, cfg)?;
    Ok(false_alarm_from_maxima(&ens.echo_maxima, theta))
}

/// Range at which the target echo equals a simulated threshold.
pub fn simulated_radar_range(p: &SystemParams, theta: f64) -> Result<f64, SimError> {
    if !(theta > 0.0) {
        return Err(SimError::NonPositiveThreshold(theta));
    }
    Ok(range_for_threshold(p, theta))
}

/// Frequency of `S(d) + I > θ` over single-slot interference samples.
pub fn estimate_detection_probability(
    p: &SystemParams,
    lambda: f64,
    theta: f64,
    distance: f64,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    let s = radar_return_power(p, distance)?;
    let samples = slot_interference_samples(p, lambda, cfg)?;
    let hits = samples.iter().filter(|&&i| s + i > theta).count() as u64;
    Ok(Estimate::proportion(hits, cfg.trials))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputEstimate {
    pub success: Estimate,
    /// `(1 - ε) q_c λ P̂_s`, packets per slot per m².
    pub throughput: f64,
    pub throughput_half_width: f64,
}

/// Monte Carlo packet success and throughput density.
///
/// Each trial places the typical transmitter at the origin and its receiver
/// `d_c` away along the transmitter's boresight. The receiver listens on a
/// beam pointed back at the transmitter and interference is summed at the
/// receiver in a uniformly chosen comm slot. Works for any `α > 2`.
pub fn estimate_throughput(
    p: &SystemParams,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<ThroughputEstimate, SimError> {
    if cfg.trials < MIN_THROUGHPUT_TRIALS {
        return Err(SimError::InsufficientTrials {
            requested: cfg.trials,
            min: MIN_THROUGHPUT_TRIALS,
        });
    }
    let radius = cfg.resolved_window(p, lambda);
    let signal = p.path_constant() * p.dc().powf(-p.alpha());
    let outcomes = cfg.execution.map(cfg.trials, |i| {
        with_redraws(SeedSpec::new(cfg.seed, i), |rng| {
            let boresight = rng.random::<f64>() * TAU;
            let typical = Observer::typical(boresight);
            let receiver = Observer {
                position: Point::polar(Point::ORIGIN, p.dc(), boresight),
                boresight: (boresight + PI).rem_euclid(TAU),
            };
            let slot = typical_comm_slot(p, rng);
            let net = sample_aligned_view(p, lambda, radius, receiver, typical, rng)?;
            let interference = slot_interference(&net, p, slot, &receiver)?;
            Ok(interference == 0.0 || signal / interference > p.gamma())
        })
        .map(|(ok, _)| ok)
    });
    let mut hits = 0u64;
    for o in outcomes {
        hits += u64::from(o?);
    }
    let success = Estimate::proportion(hits, cfg.trials);
    let scale = (1.0 - p.eps()) * p.qc() * lambda;
    Ok(ThroughputEstimate {
        success,
        throughput: scale * success.value,
        throughput_half_width: scale * success.half_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_order_statistics() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(threshold_quantile(&xs, 0.1), 9.0);
        assert_eq!(threshold_quantile(&xs, 0.25), 8.0);
        assert_eq!(threshold_quantile(&xs, 0.999), 1.0);
        assert_eq!(threshold_quantile(&[], 0.1), 0.0);
        // At most pf·n samples exceed the quantile.
        let est = false_alarm_from_maxima(&xs, threshold_quantile(&xs, 0.1));
        assert!(est.value <= 0.1);
    }

    #[test]
    fn lower_pf_never_lowers_threshold() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1000) as f64 * 1.3)
            .collect();
        let mut last = 0.0;
        for pf in [0.5, 0.3, 0.1, 0.05, 0.01, 0.001] {
            let t = threshold_quantile(&xs, pf);
            assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn proportion_half_width() {
        let e = Estimate::proportion(100, 1000);
        assert_eq!(e.value, 0.1);
        assert!((e.half_width - Z95 * (0.09f64 / 1000.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::proportion(0, 10).half_width, 0.0);
    }

    #[test]
    fn zero_density_calibrates_to_zero() {
        let p = SystemParams::defaults();
        let cfg = SimConfig::new(1000, 1);
        assert_eq!(calibrate_threshold(&p, 0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn insufficient_trials() {
        let p = SystemParams::defaults();
        assert!(matches!(
            calibrate_threshold(&p, 1e-4, &SimConfig::new(999, 1)),
            Err(SimError::InsufficientTrials { requested: 999, .. })
        ));
        assert!(matches!(
            estimate_throughput(&p, 1e-4, &SimConfig::new(10, 1)),
            Err(SimError::InsufficientTrials { .. })
        ));
    }

    #[test]
    fn infinite_threshold_never_alarms() {
        let p = SystemParams::defaults();
        let e = estimate_false_alarm(&p, 1e-3, f64::INFINITY, &SimConfig::new(200, 4)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn zero_threshold_alarms_almost_always() {
        // At q_c = 0.5 the probability that no aligned node is active in the
        // window is exp(-C λ_a π R²), negligible at the default window.
        let p = SystemParams::defaults();
        let e = estimate_false_alarm(&p, 1e-3, 0.0, &SimConfig::new(200, 4)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn simulated_range_inverts_echo_power() {
        let p = SystemParams::defaults();
        for d in [0.3, 1.0, 14.4, 250.0] {
            let s = radar_return_power(&p, d).unwrap();
            let back = simulated_radar_range(&p, s).unwrap();
            assert!(((back - d) / d).abs() < 1e-12);
        }
        let r1 = simulated_radar_range(&p, 1e-15).unwrap();
        let r2 = simulated_radar_range(&p, 256e-15).unwrap();
        assert!((r1 / r2 - 2.0).abs() < 1e-12);
        assert_eq!(
            simulated_radar_range(&p, 0.0),
            Err(SimError::NonPositiveThreshold(0.0))
        );
    }

    #[test]
    fn throughput_edge_cases() {
        let p = SystemParams::defaults();
        let cfg = SimConfig::new(200, 8);
        let silent = estimate_throughput(&p.with_qc(0.0).unwrap(), 1e-2, &cfg).unwrap();
        assert_eq!(silent.throughput, 0.0);
        let empty = estimate_throughput(&p, 0.0, &cfg).unwrap();
        assert_eq!(empty.success.value, 1.0);
        assert_eq!(empty.throughput, 0.0);
    }

    #[test]
    fn ensemble_shapes() {
        let p = SystemParams::defaults();
        let ens = echo_window_ensemble(&p, 1e-3, &SimConfig::new(50, 2)).unwrap();
        assert_eq!(ens.echo_maxima.len(), 50);
        assert_eq!(ens.slot_samples.len(), 50);
        assert!(ens.echo_maxima.iter().all(|&m| m >= 0.0));
        assert!(ens.slot_samples.iter().all(|&m| m >= 0.0));
    }
}
