//! Closed-form radar and communication metrics.
//!
//! The radar side calibrates the detection threshold against the nearest
//! mutually aligned interferer only. The nearest such node lies within `r`
//! with probability `1 - exp(-λ_a π r²)` and is active during the echo
//! window with probability [`activity_factor`], so the false alarm rate is
//! `C · (1 - exp(-λ_a π (K/θ)^{2/α}))`. Inverting gives the threshold for
//! any `α > 2`, and equating it with the echo power gives the range.
//!
//! The comm side uses the aggregate interference of the thinned radar and
//! comm PPPs. Its Laplace transform is available for any `α > 2`; for
//! `α = 4` the law is Lévy and the CDF is an `erfc`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{radar_return_power, thinned_intensities, ModelError, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("false alarm target {pf} is not below the interferer activity factor {c}")]
    InfeasibleFalseAlarm { pf: f64, c: f64 },
    #[error("zero node density: no interference to calibrate the threshold against")]
    ZeroDensity,
    #[error("closed form only exists for alpha = 4 (got {0})")]
    UnsupportedAlpha(f64),
    #[error("argument must be positive (got {0})")]
    NonPositiveArgument(f64),
}

/// Probability that the nearest aligned interferer transmits at least once
/// during the `M_r - 1` echo slots of the typical radar.
///
/// Marks are uniform over the `M` cycle offsets. Offset 0 pulses together
/// with the typical node and stays silent, offsets `1..M_r` pulse inside
/// the window, and an offset `i >= M_r` spends `N_i = min(M_r - 1, M - i)`
/// window slots in comm mode and stays silent with probability
/// `(1 - q_c)^{N_i}`.
pub fn activity_factor(p: &SystemParams) -> f64 {
    let mr = p.radar_slots();
    let m = p.cycle_slots();
    let inv_m = 1.0 / f64::from(m);
    let silent = 1.0 - p.qc();
    let mut silent_mass = 0.0;
    for i in mr..m {
        let n = (mr - 1).min(m - i);
        silent_mass += inv_m * silent.powi(n as i32);
    }
    1.0 - inv_m - silent_mass
}

/// `-ln(1 - P_f / C)`, the aligned-node mean count inside the threshold
/// radius.
fn threshold_exponent(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    if !(lambda >= 0.0) {
        return Err(ModelError::NegativeDensity(lambda).into());
    }
    if lambda == 0.0 {
        return Err(AnalyticError::ZeroDensity);
    }
    let c = activity_factor(p);
    let pf = p.pf_target();
    if pf >= c {
        return Err(AnalyticError::InfeasibleFalseAlarm { pf, c });
    }
    Ok(-(-pf / c).ln_1p())
}

/// Detection threshold (watts) meeting the false alarm target.
pub fn detection_threshold(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    let e = threshold_exponent(p, lambda)?;
    let aligned = thinned_intensities(p, lambda)?.aligned;
    Ok(p.path_constant() * (aligned * PI / e).powf(p.alpha() / 2.0))
}

/// Largest target distance whose echo reaches the detection threshold.
pub fn radar_range(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    let theta = detection_threshold(p, lambda)?;
    Ok(range_for_threshold(p, theta))
}

/// Inverse of the radar equation: distance at which the echo equals `theta`.
pub(crate) fn range_for_threshold(p: &SystemParams, theta: f64) -> f64 {
    (p.path_constant() * p.sigma() / (4.0 * PI * theta)).powf(1.0 / (2.0 * p.alpha()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarAnalytics {
    /// Interferer activity factor `C`.
    pub c: f64,
    /// Detection threshold, watts.
    pub theta: f64,
    /// Maximum reliable detection range, meters.
    pub d_rm: f64,
}

pub fn radar_analytics(p: &SystemParams, lambda: f64) -> Result<RadarAnalytics, AnalyticError> {
    let theta = detection_threshold(p, lambda)?;
    Ok(RadarAnalytics {
        c: activity_factor(p),
        theta,
        d_rm: range_for_threshold(p, theta),
    })
}

/// `E[exp(-s I)]` for the single-slot aggregate interference.
pub fn interference_laplace(p: &SystemParams, lambda: f64, s: f64) -> Result<f64, AnalyticError> {
    if !(s >= 0.0) {
        return Err(AnalyticError::NonPositiveArgument(s));
    }
    let active = thinned_intensities(p, lambda)?.active();
    let delta = 2.0 / p.alpha();
    let exponent =
        active * p.path_constant().powf(delta) * PI * libm::tgamma(1.0 - delta) * s.powf(delta);
    Ok((-exponent).exp())
}

/// Scale `c` of the Lévy law `F(x) = erfc(sqrt(c / 2x))` followed by the
/// interference at `α = 4`.
pub fn levy_scale(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    require_alpha4(p)?;
    let active = thinned_intensities(p, lambda)?.active();
    Ok(PI.powi(3) * active * active * p.path_constant() / 2.0)
}

fn require_alpha4(p: &SystemParams) -> Result<(), AnalyticError> {
    if p.alpha() == 4.0 {
        Ok(())
    } else {
        Err(AnalyticError::UnsupportedAlpha(p.alpha()))
    }
}

/// `P{I <= x}` for the single-slot aggregate interference, `α = 4` only.
pub fn interference_cdf(p: &SystemParams, lambda: f64, x: f64) -> Result<f64, AnalyticError> {
    require_alpha4(p)?;
    if !(x > 0.0) {
        return Err(AnalyticError::NonPositiveArgument(x));
    }
    let active = thinned_intensities(p, lambda)?.active();
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(libm::erfc(
        PI.powf(1.5) * active * (p.path_constant() / x).sqrt() / 2.0,
    ))
}

/// Probability that a packet sent over `d_c` clears the SIR threshold.
pub fn success_probability(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    let x = p.path_constant() * p.dc().powf(-p.alpha()) / p.gamma();
    interference_cdf(p, lambda, x)
}

/// Delivered packets per slot per m²: `(1 - ε) q_c λ P_s`.
///
/// This composes [`success_probability`] directly. The commonly quoted
/// single-expression form with `γ²` in the erfc denominator does not follow
/// from that composition; the argument carries `√γ` in the numerator.
pub fn throughput_density(p: &SystemParams, lambda: f64) -> Result<f64, AnalyticError> {
    let ps = success_probability(p, lambda)?;
    Ok((1.0 - p.eps()) * p.qc() * lambda * ps)
}

/// Limit of `T / λ` as `λ → 0`: `(1 - ε) q_c`.
pub fn small_density_slope(p: &SystemParams) -> f64 {
    (1.0 - p.eps()) * p.qc()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommAnalytics {
    pub p_s: f64,
    /// Packets per slot per m².
    pub throughput: f64,
    pub levy_scale: f64,
}

pub fn comm_analytics(p: &SystemParams, lambda: f64) -> Result<CommAnalytics, AnalyticError> {
    let p_s = success_probability(p, lambda)?;
    Ok(CommAnalytics {
        p_s,
        throughput: (1.0 - p.eps()) * p.qc() * lambda * p_s,
        levy_scale: levy_scale(p, lambda)?,
    })
}

/// `P{S + I > θ}` for a target at `distance`, `α = 4` only.
pub fn detection_probability(
    p: &SystemParams,
    lambda: f64,
    theta: f64,
    distance: f64,
) -> Result<f64, AnalyticError> {
    require_alpha4(p)?;
    if !(theta > 0.0) {
        return Err(AnalyticError::NonPositiveArgument(theta));
    }
    let s = radar_return_power(p, distance)?;
    if s >= theta {
        return Ok(1.0);
    }
    Ok(1.0 - interference_cdf(p, lambda, theta - s)?)
}

/// All closed-form outputs for one parameter point. Quantities that are
/// undefined at this point carry the reason instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticReport {
    pub lambda: f64,
    pub c: f64,
    pub radar: Result<RadarAnalytics, AnalyticError>,
    pub comm: Result<CommAnalytics, AnalyticError>,
}

pub fn analytic_report(p: &SystemParams, lambda: f64) -> AnalyticReport {
    AnalyticReport {
        lambda,
        c: activity_factor(p),
        radar: radar_analytics(p, lambda),
        comm: comm_analytics(p, lambda),
    }
}
