//! Scenario parameters, unit conventions and the deterministic physical
//! formulas shared by the analytic engine and the simulator.
//!
//! Units are SI throughout: watts, hertz, meters, radians. Densities are
//! nodes per square meter. Power in dBm is only accepted at the edges via
//! [`dbm_to_watts`].

use std::f64::consts::{PI, TAU};
use std::fmt;

use thiserror::Error;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

/// Cycle length that realizes a requested radar duty fraction for a given
/// number of radar slots, `M = round(M_r / eps)`.
///
/// The effective fraction is `M_r / M`, which can differ slightly from the
/// request.
pub fn cycle_slots_for_eps(radar_slots: u32, eps: f64) -> u32 {
    let m = (f64::from(radar_slots) / eps).round();
    if m.is_finite() && m >= f64::from(radar_slots) {
        m.min(f64::from(u32::MAX)) as u32
    } else {
        radar_slots
    }
}

/// Unvalidated scenario parameters, as parsed from flags or config files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    /// Transmit power `P_t`, watts.
    pub pt_watts: f64,
    /// Carrier frequency, Hz.
    pub freq_hz: f64,
    /// Main-beam width, radians.
    pub phi: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Target radar cross section, m².
    pub sigma: f64,
    /// Radar slots per cycle `M_r` (one pulse followed by the echo window).
    pub radar_slots: u32,
    /// Total cycle length `M` in slots.
    pub cycle_slots: u32,
    /// ALOHA transmit probability per comm slot.
    pub qc: f64,
    /// SIR decoding threshold, linear.
    pub gamma: f64,
    /// Comm link distance, meters.
    pub dc: f64,
    /// Target false alarm probability.
    pub pf_target: f64,
}

impl Default for RawParams {
    /// 10 dBm at 60 GHz, α = 4, φ = π/6, σ = 10 m², M_r = 100, M = 200,
    /// q_c = 0.5, γ = 5, d_c = 5 m, P_f = 0.1.
    fn default() -> Self {
        Self {
            pt_watts: dbm_to_watts(10.0),
            freq_hz: 60e9,
            phi: PI / 6.0,
            alpha: 4.0,
            sigma: 10.0,
            radar_slots: 100,
            cycle_slots: 200,
            qc: 0.5,
            gamma: 5.0,
            dc: 5.0,
            pf_target: 0.1,
        }
    }
}

/// One violated constraint found by [`SystemParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    AlphaOutOfRange(f64),
    CycleInvalid { radar_slots: u32, cycle_slots: u32 },
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    NonPositive { name: &'static str, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AlphaOutOfRange(a) => write!(f, "alpha must exceed 2 (got {a})"),
            Violation::CycleInvalid {
                radar_slots,
                cycle_slots,
            } => write!(
                f,
                "cycle needs 2 <= M_r <= M (got M_r={radar_slots}, M={cycle_slots})"
            ),
            Violation::ProbabilityOutOfRange { name, value } => {
                write!(f, "{name} is outside its probability range (got {value})")
            }
            Violation::NonPositive { name, value } => {
                write!(f, "{name} must be positive (got {value})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModelError {
    #[error("distance must be positive (got {0})")]
    NonPositiveDistance(f64),
    #[error("node density must be non-negative (got {0})")]
    NegativeDensity(f64),
}

/// Validated scenario parameters. Immutable; build variants through
/// [`SystemParams::modify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    raw: RawParams,
}

impl SystemParams {
    pub fn validate(raw: RawParams) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        // Written as negated comparisons so NaN is rejected too.
        if !(raw.alpha > 2.0) || !raw.alpha.is_finite() {
            violations.push(Violation::AlphaOutOfRange(raw.alpha));
        }
        if raw.radar_slots < 2 || raw.cycle_slots < raw.radar_slots {
            violations.push(Violation::CycleInvalid {
                radar_slots: raw.radar_slots,
                cycle_slots: raw.cycle_slots,
            });
        }
        if !(0.0..=1.0).contains(&raw.qc) {
            violations.push(Violation::ProbabilityOutOfRange {
                name: "qc",
                value: raw.qc,
            });
        }
        if !(raw.pf_target > 0.0 && raw.pf_target < 1.0) {
            violations.push(Violation::ProbabilityOutOfRange {
                name: "pf",
                value: raw.pf_target,
            });
        }
        for (name, value) in [
            ("pt", raw.pt_watts),
            ("freq", raw.freq_hz),
            ("sigma", raw.sigma),
            ("gamma", raw.gamma),
            ("dc", raw.dc),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                violations.push(Violation::NonPositive { name, value });
            }
        }
        if !(raw.phi > 0.0) {
            violations.push(Violation::NonPositive {
                name: "phi",
                value: raw.phi,
            });
        } else if raw.phi > TAU {
            violations.push(Violation::ProbabilityOutOfRange {
                name: "phi",
                value: raw.phi,
            });
        }
        if violations.is_empty() {
            Ok(Self { raw })
        } else {
            Err(ParamError { violations })
        }
    }

    /// Reference scenario (see [`RawParams::default`]).
    pub fn defaults() -> Self {
        Self::validate(RawParams::default()).expect("defaults are valid")
    }

    /// Copy the parameters, apply `f` and revalidate.
    pub fn modify(&self, f: impl FnOnce(&mut RawParams)) -> Result<Self, ParamError> {
        let mut raw = self.raw;
        f(&mut raw);
        Self::validate(raw)
    }

    pub fn with_qc(&self, qc: f64) -> Result<Self, ParamError> {
        self.modify(|r| r.qc = qc)
    }

    /// Re-time the cycle so that `M_r / M` is as close as possible to `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self, ParamError> {
        self.modify(|r| r.cycle_slots = cycle_slots_for_eps(r.radar_slots, eps))
    }

    pub fn raw(&self) -> RawParams {
        self.raw
    }

    pub fn pt_watts(&self) -> f64 {
        self.raw.pt_watts
    }
    pub fn freq_hz(&self) -> f64 {
        self.raw.freq_hz
    }
    pub fn phi(&self) -> f64 {
        self.raw.phi
    }
    pub fn alpha(&self) -> f64 {
        self.raw.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.raw.sigma
    }
    pub fn radar_slots(&self) -> u32 {
        self.raw.radar_slots
    }
    pub fn cycle_slots(&self) -> u32 {
        self.raw.cycle_slots
    }
    pub fn comm_slots(&self) -> u32 {
        self.raw.cycle_slots - self.raw.radar_slots
    }
    pub fn qc(&self) -> f64 {
        self.raw.qc
    }
    pub fn gamma(&self) -> f64 {
        self.raw.gamma
    }
    pub fn dc(&self) -> f64 {
        self.raw.dc
    }
    pub fn pf_target(&self) -> f64 {
        self.raw.pf_target
    }

    /// Radar duty fraction `M_r / M`.
    pub fn eps(&self) -> f64 {
        f64::from(self.raw.radar_slots) / f64::from(self.raw.cycle_slots)
    }

    pub fn gain(&self) -> f64 {
        4.0 * PI / (self.raw.phi * self.raw.phi)
    }

    /// Path constant `K = P_t (G c / (4π f))²`, W·m^α.
    pub fn path_constant(&self) -> f64 {
        let a = self.gain() * SPEED_OF_LIGHT / (4.0 * PI * self.raw.freq_hz);
        self.raw.pt_watts * a * a
    }

    /// Probability `(φ/2π)²` that two independently pointed beams overlap.
    pub fn alignment_probability(&self) -> f64 {
        let a = self.raw.phi / TAU;
        a * a
    }

    pub fn derived(&self) -> DerivedConstants {
        derived_constants(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Path constant `K`, W·m^α.
    pub k: f64,
    /// Main-beam antenna gain.
    pub gain: f64,
    /// Radar duty fraction.
    pub eps: f64,
    /// Speed of light used for `K`.
    pub c: f64,
}

pub fn derived_constants(p: &SystemParams) -> DerivedConstants {
    DerivedConstants {
        k: p.path_constant(),
        gain: p.gain(),
        eps: p.eps(),
        c: SPEED_OF_LIGHT,
    }
}

/// Per-slot densities of interferers whose beams overlap the observer's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinnedIntensities {
    /// Underlying node density λ.
    pub lambda: f64,
    /// Aligned nodes sending a radar pulse in a given slot.
    pub radar: f64,
    /// Aligned nodes sending a comm packet in a given slot.
    pub comm: f64,
    /// All aligned nodes, regardless of activity.
    pub aligned: f64,
}

impl ThinnedIntensities {
    pub fn active(&self) -> f64 {
        self.radar + self.comm
    }
}

pub fn thinned_intensities(
    p: &SystemParams,
    lambda: f64,
) -> Result<ThinnedIntensities, ModelError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ModelError::NegativeDensity(lambda));
    }
    let aligned = p.alignment_probability() * lambda;
    let eps = p.eps();
    Ok(ThinnedIntensities {
        lambda,
        radar: eps / f64::from(p.radar_slots()) * aligned,
        comm: (1.0 - eps) * p.qc() * aligned,
        aligned,
    })
}

/// Target echo power `K σ/(4π) d^{-2α}` from the radar equation.
pub fn radar_return_power(p: &SystemParams, distance: f64) -> Result<f64, ModelError> {
    if !(distance > 0.0) {
        return Err(ModelError::NonPositiveDistance(distance));
    }
    Ok(p.path_constant() * p.sigma() / (4.0 * PI) * distance.powf(-2.0 * p.alpha()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn defaults_validate() {
        let p = SystemParams::defaults();
        assert_eq!(p.alpha(), 4.0);
        assert_eq!(p.radar_slots(), 100);
        assert_eq!(p.eps(), 0.5);
    }

    #[test]
    fn alpha_two_rejected() {
        let err = SystemParams::validate(RawParams {
            alpha: 2.0,
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.violations, vec![Violation::AlphaOutOfRange(2.0)]);
    }

    #[test]
    fn single_radar_slot_rejected() {
        let err = SystemParams::validate(RawParams {
            radar_slots: 1,
            cycle_slots: 2,
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err.violations[0], Violation::CycleInvalid { .. }));
    }

    #[test]
    fn all_violations_reported() {
        let err = SystemParams::validate(RawParams {
            alpha: 1.5,
            qc: 1.5,
            pf_target: 0.0,
            sigma: -1.0,
            cycle_slots: 50,
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.violations.len(), 5);
        let msg = err.to_string();
        assert!(msg.contains("qc") && msg.contains("sigma") && msg.contains("pf"));
    }

    #[test]
    fn nan_rejected() {
        assert!(SystemParams::validate(RawParams {
            alpha: f64::NAN,
            ..Default::default()
        })
        .is_err());
        assert!(SystemParams::validate(RawParams {
            qc: f64::NAN,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn gain_and_eps() {
        let d = SystemParams::defaults().derived();
        assert!(rel(d.gain, 144.0 / PI) < 1e-15);
        assert_eq!(d.eps, 0.5);
        assert_eq!(d.c, 299_792_458.0);
    }

    #[test]
    fn path_constant_matches_hand_value() {
        // 0.01 W, 60 GHz, φ = π/6, exact c; evaluated at 40 digits offline.
        let k = SystemParams::defaults().path_constant();
        assert!(rel(k, 3.321_577_697_838_414e-6) < 1e-13, "{k}");
    }

    #[test]
    fn dbm_conversion() {
        assert!(rel(dbm_to_watts(10.0), 0.01) < 1e-15);
        assert!(rel(dbm_to_watts(30.0), 1.0) < 1e-15);
        assert!((watts_to_dbm(0.01) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn return_power_unit_distance_and_doubling() {
        let p = SystemParams::defaults();
        let k = p.path_constant();
        let s1 = radar_return_power(&p, 1.0).unwrap();
        assert!(rel(s1, k * 10.0 / (4.0 * PI)) < 1e-15);
        let a = radar_return_power(&p, 3.0).unwrap();
        let b = radar_return_power(&p, 6.0).unwrap();
        assert!(rel(a / b, 256.0) < 1e-13);
        assert_eq!(
            radar_return_power(&p, 0.0),
            Err(ModelError::NonPositiveDistance(0.0))
        );
    }

    #[test]
    fn return_power_oracle_value() {
        let s = radar_return_power(&SystemParams::defaults(), 14.4).unwrap();
        assert!(rel(s, 1.429_666_085_783_18e-15) < 1e-12, "{s}");
    }

    #[test]
    fn return_power_log_slope_is_exact() {
        let p = SystemParams::defaults();
        let mut d = 0.5;
        let c0 = radar_return_power(&p, d).unwrap() * d.powf(8.0);
        for _ in 0..30 {
            d *= 1.7;
            let c = radar_return_power(&p, d).unwrap() * d.powf(8.0);
            assert!(rel(c, c0) < 1e-13);
        }
    }

    #[test]
    fn thinning_examples() {
        let p = SystemParams::defaults();
        assert!(rel(p.alignment_probability(), 1.0 / 144.0) < 1e-15);
        let t = thinned_intensities(&p, 1e-4).unwrap();
        assert!(rel(t.radar, 1e-4 * 0.005 / 144.0) < 1e-14);
        assert!(rel(t.comm, 1e-4 * 0.25 / 144.0) < 1e-14);
        let t0 = thinned_intensities(&p.with_qc(0.0).unwrap(), 1e-4).unwrap();
        assert_eq!(t0.comm, 0.0);
        assert_eq!(
            thinned_intensities(&p, -1.0),
            Err(ModelError::NegativeDensity(-1.0))
        );
    }

    #[test]
    fn eps_mapping_is_exact_for_integer_pairs() {
        let p = SystemParams::defaults();
        for (eps, m) in [(0.1, 1000), (0.2, 500), (0.5, 200), (0.8, 125), (1.0, 100)] {
            let q = p.with_eps(eps).unwrap();
            assert_eq!(q.cycle_slots(), m);
            assert_eq!(q.eps(), eps);
        }
        // 0.3 is not representable with M_r = 100.
        let q = p.with_eps(0.3).unwrap();
        assert_eq!(q.cycle_slots(), 333);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn thinning_never_increases_density(
                lambda in 0.0f64..10.0,
                phi in 0.01f64..TAU,
                qc in 0.0f64..=1.0,
                mr in 2u32..300,
                extra in 0u32..2000,
            ) {
                let p = SystemParams::validate(RawParams {
                    phi, qc, radar_slots: mr, cycle_slots: mr + extra,
                    ..Default::default()
                }).unwrap();
                let t = thinned_intensities(&p, lambda).unwrap();
                prop_assert!(t.radar >= 0.0 && t.comm >= 0.0);
                prop_assert!(t.active() <= t.aligned * (1.0 + 1e-12));
                prop_assert!(t.aligned <= lambda);
            }
        }
    }
}
