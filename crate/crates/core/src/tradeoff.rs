//! Throughput maximization over the ALOHA persistency, optionally subject to
//! a minimum radar range.

use thiserror::Error;

use crate::analytic::{radar_range, throughput_density, AnalyticError};
use crate::model::SystemParams;

/// Bisection stops once the bracket is this narrow (in `q_c`).
const QC_TOLERANCE: f64 = 1e-9;
/// Grid step of the coarse scan that seeds the golden-section refinement.
const GRID_STEP: f64 = 1e-3;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TradeoffError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("closed form only exists for alpha = 4 (got {0})")]
    UnsupportedAlpha(f64),
    #[error("minimum range must be positive (got {0})")]
    NonPositiveRange(f64),
}

fn require_alpha4(p: &SystemParams) -> Result<(), TradeoffError> {
    if p.alpha() == 4.0 {
        Ok(())
    } else {
        Err(TradeoffError::UnsupportedAlpha(p.alpha()))
    }
}

fn at_qc(p: &SystemParams, qc: f64) -> SystemParams {
    p.with_qc(qc.clamp(0.0, 1.0))
        .expect("clamped persistency is always valid")
}

/// Radar range with `+∞` where no finite threshold is needed: zero density,
/// or an interferer activity factor already below the false alarm target.
pub fn range_or_unbounded(p: &SystemParams, lambda: f64) -> Result<f64, TradeoffError> {
    match radar_range(p, lambda) {
        Ok(d) => Ok(d),
        Err(AnalyticError::ZeroDensity | AnalyticError::InfeasibleFalseAlarm { .. }) => {
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QcBound {
    /// Even `q_c = 0` misses the range target.
    Infeasible,
    /// Largest persistency meeting the range target.
    UpTo(f64),
}

/// Largest `q_c` whose radar range is still at least `d_min`.
pub fn max_qc_for_range(
    p: &SystemParams,
    lambda: f64,
    d_min: f64,
) -> Result<QcBound, TradeoffError> {
    require_alpha4(p)?;
    if !(d_min > 0.0) {
        return Err(TradeoffError::NonPositiveRange(d_min));
    }
    let meets = |q: f64| -> Result<bool, TradeoffError> {
        Ok(range_or_unbounded(&at_qc(p, q), lambda)? >= d_min)
    };
    if !meets(0.0)? {
        return Ok(QcBound::Infeasible);
    }
    if meets(1.0)? {
        return Ok(QcBound::UpTo(1.0));
    }
    // Range decreases in q_c, so [lo, hi] always brackets the crossing.
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > QC_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if meets(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QcBound::UpTo(lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// Interior optimum.
    None,
    /// The optimum sits on the largest `q_c` allowed by the range target.
    RangeConstraint,
    /// The optimum sits at `q_c = 0` or `q_c = 1`.
    Boundary,
}

impl Binding {
    pub fn as_str(self) -> &'static str {
        match self {
            Binding::None => "none",
            Binding::RangeConstraint => "range_constraint",
            Binding::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffResult {
    /// Maximizing persistency; `None` when infeasible.
    pub q_c_star: Option<f64>,
    /// Throughput density at the optimum, 0 when infeasible.
    pub t_star: f64,
    pub feasible: bool,
    pub binding: Binding,
    /// Upper end of the searched interval.
    pub q_max: Option<f64>,
}

impl TradeoffResult {
    fn infeasible() -> Self {
        Self {
            q_c_star: None,
            t_star: 0.0,
            feasible: false,
            binding: Binding::RangeConstraint,
            q_max: None,
        }
    }
}

fn golden_section_max(
    f: impl Fn(f64) -> Result<f64, TradeoffError>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64), TradeoffError> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Maximize throughput density over `q_c`, with `ε` held fixed.
///
/// A `GRID_STEP` scan locates the best cell, then golden-section search
/// refines within its neighbours. The objective `q ↦ q·erfc(a + b q)` has a
/// single interior stationary point, so the refinement cannot leave the
/// basin the scan found.
pub fn optimize_throughput(
    p: &SystemParams,
    lambda: f64,
    d_min: Option<f64>,
) -> Result<TradeoffResult, TradeoffError> {
    require_alpha4(p)?;
    let q_max = match d_min {
        None => 1.0,
        Some(d) => match max_qc_for_range(p, lambda, d)? {
            QcBound::Infeasible => return Ok(TradeoffResult::infeasible()),
            QcBound::UpTo(q) => q,
        },
    };
    let objective =
        |q: f64| -> Result<f64, TradeoffError> { Ok(throughput_density(&at_qc(p, q), lambda)?) };

    let cells = ((q_max / GRID_STEP).ceil() as usize).max(1);
    let grid = |j: usize| q_max * j as f64 / cells as f64;
    let mut best = (0.0, objective(0.0)?);
    let mut best_j = 0;
    for j in 1..=cells {
        let q = grid(j);
        let t = objective(q)?;
        if t > best.1 {
            best = (q, t);
            best_j = j;
        }
    }
    let lo = grid(best_j.saturating_sub(1));
    let hi = grid((best_j + 1).min(cells));
    if hi > lo {
        let refined = golden_section_max(objective, lo, hi, QC_TOLERANCE)?;
        if refined.1 > best.1 {
            best = refined;
        }
    }

    let (q, t) = best;
    let binding = if d_min.is_some() && q_max < 1.0 && q_max - q <= 1e-6 {
        Binding::RangeConstraint
    } else if q >= 1.0 - 1e-6 || q <= 1e-6 {
        Binding::Boundary
    } else {
        Binding::None
    };
    Ok(TradeoffResult {
        q_c_star: Some(q),
        t_star: t,
        feasible: true,
        binding,
        q_max: Some(q_max),
    })
}

/// Densities bracketing the point where the range target becomes
/// unreachable even with `q_c = 0`: feasible at `lower`, infeasible at
/// `upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalDensity {
    pub lower: f64,
    pub upper: f64,
}

impl CriticalDensity {
    pub fn estimate(&self) -> f64 {
        (self.lower * self.upper).sqrt()
    }
}

/// Locate the feasibility frontier in λ by log-space bisection.
///
/// `None` means the target is met at every density (the radar needs no
/// finite threshold when comm is silent).
pub fn critical_density(
    p: &SystemParams,
    d_min: f64,
) -> Result<Option<CriticalDensity>, TradeoffError> {
    require_alpha4(p)?;
    if !(d_min > 0.0) {
        return Err(TradeoffError::NonPositiveRange(d_min));
    }
    let silent = at_qc(p, 0.0);
    let feasible = |lambda: f64| -> Result<bool, TradeoffError> {
        Ok(range_or_unbounded(&silent, lambda)? >= d_min)
    };
    if feasible(1e300)? {
        return Ok(None);
    }
    let mut lower = 1e-6;
    while !feasible(lower)? {
        lower *= 1e-3;
    }
    let mut upper = lower * 10.0;
    while feasible(upper)? {
        lower = upper;
        upper *= 10.0;
    }
    while upper / lower > 1.0 + 1e-12 {
        let mid = (lower * upper).sqrt();
        if feasible(mid)? {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    Ok(Some(CriticalDensity { lower, upper }))
}
