//! Subcommand bodies. Each builds its tables from direct library calls; the
//! only arithmetic done here is unit conversion of the input columns.

use radcom_core::analytic::{
    activity_factor, comm_analytics, radar_analytics, small_density_slope, AnalyticError,
};
use radcom_core::model::{watts_to_dbm, SystemParams};
use radcom_core::simulator::{
    echo_window_ensemble, estimate_throughput, false_alarm_from_maxima, simulated_radar_range,
    threshold_quantile, Estimate, SimConfig, SimError, MIN_CALIBRATION_TRIALS,
    MIN_THROUGHPUT_TRIALS,
};
use radcom_core::tradeoff::{critical_density, optimize_throughput, TradeoffError};
use radcom_core::Execution;

use crate::config::{Axis, ExperimentConfig, Quantity, Subcommand};
use crate::output::{write_outputs, Row, Table};
use crate::{CliError, RunOutput};

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    if cfg.simulate
        && uses_radar_sim(cfg.subcommand)
        && cfg.calibration_trials < MIN_CALIBRATION_TRIALS
    {
        return Err(CliError::config(
            "calibration-trials",
            format!("at least {MIN_CALIBRATION_TRIALS} needed"),
        ));
    }
    if cfg.simulate
        && uses_comm_sim(cfg.subcommand)
        && cfg.throughput_trials < MIN_THROUGHPUT_TRIALS
    {
        return Err(CliError::config(
            "throughput-trials",
            format!("at least {MIN_THROUGHPUT_TRIALS} needed"),
        ));
    }
    let (tables, infeasible) = match cfg.subcommand {
        Subcommand::Fig2 | Subcommand::Fig4 => (vec![radar_table(cfg)?], None),
        Subcommand::Fig3 => (vec![comm_table(cfg)?], None),
        Subcommand::Fig5 => {
            let (t, infeasible) = tradeoff_table(cfg)?;
            (vec![t], infeasible)
        }
        Subcommand::Sweep | Subcommand::Simulate => (vec![full_table(cfg)?], None),
        Subcommand::Analytic => (vec![analytic_table(cfg)?], None),
    };
    let files = write_outputs(&cfg.out, cfg.subcommand, &cfg.settings, &tables)?;
    if let Some(msg) = infeasible {
        return Err(CliError::Infeasible(msg));
    }
    Ok(RunOutput {
        out_dir: cfg.out.clone(),
        files,
    })
}

fn uses_radar_sim(s: Subcommand) -> bool {
    matches!(
        s,
        Subcommand::Fig2 | Subcommand::Fig4 | Subcommand::Sweep | Subcommand::Simulate
    )
}

fn uses_comm_sim(s: Subcommand) -> bool {
    matches!(
        s,
        Subcommand::Fig3 | Subcommand::Sweep | Subcommand::Simulate
    )
}

fn reason(e: &AnalyticError) -> &'static str {
    match e {
        AnalyticError::Model(_) => "invalid_input",
        AnalyticError::InfeasibleFalseAlarm { .. } => "infeasible_false_alarm",
        AnalyticError::ZeroDensity => "zero_density",
        AnalyticError::UnsupportedAlpha(_) => "unsupported_alpha",
        AnalyticError::NonPositiveArgument(_) => "invalid_input",
    }
}

fn sim_error(e: SimError, context: &str) -> CliError {
    match e {
        SimError::WindowTooSmall { .. } => {
            CliError::config("window-radius", format!("{e} at {context}"))
        }
        SimError::InsufficientTrials { .. } => {
            CliError::config("trials", format!("{e} at {context}"))
        }
        other => CliError::Numerical(format!("{other} at {context}")),
    }
}

fn tradeoff_error(e: TradeoffError, context: &str) -> CliError {
    match e {
        TradeoffError::UnsupportedAlpha(_) => {
            CliError::config("alpha", format!("{e} at {context}"))
        }
        other => CliError::Numerical(format!("{other} at {context}")),
    }
}

/// One evaluation point of a table.
#[derive(Debug, Clone, Copy)]
struct Point {
    lambda: f64,
    eps_requested: f64,
    params: SystemParams,
    /// Sweep axis value, when the table has one.
    axis_value: Option<f64>,
}

impl Point {
    fn context(&self) -> String {
        format!(
            "lambda={:e} eps={} qc={} m={}",
            self.lambda,
            self.eps_requested,
            self.params.qc(),
            self.params.cycle_slots()
        )
    }

    fn row(&self) -> Result<Row, CliError> {
        Row::new(self.context())
            .num("lambda", self.lambda)?
            .num("eps_requested", self.eps_requested)?
            .num("eps", self.params.eps())?
            .num("qc", self.params.qc())
            .map(|r| {
                r.int(self.params.radar_slots())
                    .int(self.params.cycle_slots())
            })
    }
}

const POINT_COLUMNS: [&str; 6] = ["lambda", "eps_requested", "eps", "qc", "m_r", "m"];

fn grid_points(cfg: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    let mut points = Vec::new();
    for &eps in &cfg.eps {
        for &qc in &cfg.qc {
            let params = cfg.params(eps, qc)?;
            for &lambda in &cfg.lambdas {
                points.push(Point {
                    lambda,
                    eps_requested: eps,
                    params,
                    axis_value: None,
                });
            }
        }
    }
    Ok(points)
}

fn sim_config(cfg: &ExperimentConfig, trials: u64) -> SimConfig {
    SimConfig {
        trials,
        window_radius: cfg.window_radius,
        seed: cfg.seed,
        execution: Execution::Parallel,
    }
}

struct RadarSim {
    theta: f64,
    range: f64,
    false_alarm: Option<Estimate>,
    window: f64,
    redraws: u64,
}

fn radar_sim(
    cfg: &ExperimentConfig,
    pt: &Point,
    analytic_theta: Option<f64>,
) -> Result<Option<RadarSim>, CliError> {
    if !cfg.simulate || pt.lambda == 0.0 {
        return Ok(None);
    }
    let sc = sim_config(cfg, cfg.calibration_trials);
    let ens = echo_window_ensemble(&pt.params, pt.lambda, &sc)
        .map_err(|e| sim_error(e, &pt.context()))?;
    let theta = threshold_quantile(&ens.echo_maxima, pt.params.pf_target());
    let range =
        simulated_radar_range(&pt.params, theta).map_err(|e| sim_error(e, &pt.context()))?;
    Ok(Some(RadarSim {
        theta,
        range,
        false_alarm: analytic_theta.map(|t| false_alarm_from_maxima(&ens.echo_maxima, t)),
        window: sc.resolved_window(&pt.params, pt.lambda),
        redraws: ens.redraws,
    }))
}

fn radar_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut header = POINT_COLUMNS.to_vec();
    header.extend([
        "phi_deg",
        "c",
        "theta",
        "d_rm",
        "theta_sim",
        "d_rm_sim",
        "pf_hat",
        "pf_hat_half_width",
        "calibration_trials",
        "window_radius",
        "redraws",
        "status",
    ]);
    let mut table = Table::new(cfg.subcommand.name(), &header);
    let points = grid_points(cfg)?;
    let rows = Execution::Parallel.map_slice(&points, |pt| -> Result<Row, CliError> {
        let analytic = radar_analytics(&pt.params, pt.lambda);
        let sim = radar_sim(cfg, pt, analytic.ok().map(|a| a.theta))?;
        let status = analytic.err().map_or("ok", |e| reason(&e));
        Ok(pt
            .row()?
            .num("phi_deg", pt.params.phi().to_degrees())?
            .num("c", activity_factor(&pt.params))?
            .opt("theta", analytic.ok().map(|a| a.theta))?
            .opt("d_rm", analytic.ok().map(|a| a.d_rm))?
            .opt("theta_sim", sim.as_ref().map(|s| s.theta))?
            .opt("d_rm_sim", sim.as_ref().map(|s| s.range))?
            .opt(
                "pf_hat",
                sim.as_ref().and_then(|s| s.false_alarm).map(|e| e.value),
            )?
            .opt(
                "pf_hat_half_width",
                sim.as_ref()
                    .and_then(|s| s.false_alarm)
                    .map(|e| e.half_width),
            )?
            .int(if sim.is_some() {
                cfg.calibration_trials
            } else {
                0
            })
            .opt("window_radius", sim.as_ref().map(|s| s.window))?
            .int(sim.as_ref().map_or(0, |s| s.redraws))
            .text(status))
    });
    for r in rows {
        table.push(r?);
    }
    Ok(table)
}

fn comm_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut header = POINT_COLUMNS.to_vec();
    header.extend([
        "p_s",
        "throughput",
        "p_s_sim",
        "p_s_sim_half_width",
        "throughput_sim",
        "throughput_sim_half_width",
        "throughput_trials",
        "window_radius",
        "status",
    ]);
    let mut table = Table::new(cfg.subcommand.name(), &header);
    let points = grid_points(cfg)?;
    let rows = Execution::Parallel.map_slice(&points, |pt| -> Result<Row, CliError> {
        let analytic = comm_analytics(&pt.params, pt.lambda);
        let sc = sim_config(cfg, cfg.throughput_trials);
        let sim = if cfg.simulate {
            Some(
                estimate_throughput(&pt.params, pt.lambda, &sc)
                    .map_err(|e| sim_error(e, &pt.context()))?,
            )
        } else {
            None
        };
        let status = analytic.err().map_or("ok", |e| reason(&e));
        Ok(pt
            .row()?
            .opt("p_s", analytic.ok().map(|a| a.p_s))?
            .opt("throughput", analytic.ok().map(|a| a.throughput))?
            .opt("p_s_sim", sim.map(|s| s.success.value))?
            .opt("p_s_sim_half_width", sim.map(|s| s.success.half_width))?
            .opt("throughput_sim", sim.map(|s| s.throughput))?
            .opt(
                "throughput_sim_half_width",
                sim.map(|s| s.throughput_half_width),
            )?
            .int(if sim.is_some() {
                cfg.throughput_trials
            } else {
                0
            })
            .opt(
                "window_radius",
                sim.map(|_| sc.resolved_window(&pt.params, pt.lambda)),
            )?
            .text(status))
    });
    for r in rows {
        table.push(r?);
    }
    Ok(table)
}

/// Returns the table and, when no constrained point is feasible, a message
/// for the infeasible exit status.
fn tradeoff_table(cfg: &ExperimentConfig) -> Result<(Table, Option<String>), CliError> {
    let header = [
        "lambda",
        "eps_requested",
        "eps",
        "m_r",
        "m",
        "curve",
        "d_min",
        "feasible",
        "q_c_star",
        "t_star",
        "q_max",
        "binding",
        "lambda_crit_lower",
        "lambda_crit_upper",
    ];
    let mut table = Table::new("fig5", &header);
    let mut constrained = 0usize;
    let mut feasible_constrained = 0usize;
    for &eps in &cfg.eps {
        let p = cfg.params(eps, cfg.qc[0])?;
        let mut curves: Vec<Option<f64>> = vec![None];
        curves.extend(cfg.dmin.iter().copied().map(Some));
        for d_min in curves {
            let crit = match d_min {
                Some(d) => {
                    critical_density(&p, d).map_err(|e| tradeoff_error(e, &format!("d_min={d}")))?
                }
                None => None,
            };
            let curve = match d_min {
                Some(d) => format!("dmin={d}"),
                None => "unconstrained".to_owned(),
            };
            let results = Execution::Parallel.map_slice(&cfg.lambdas, |&lambda| {
                optimize_throughput(&p, lambda, d_min)
                    .map_err(|e| tradeoff_error(e, &format!("lambda={lambda:e} {curve}")))
            });
            for (&lambda, r) in cfg.lambdas.iter().zip(results) {
                let r = r?;
                if d_min.is_some() {
                    constrained += 1;
                    feasible_constrained += usize::from(r.feasible);
                }
                let row = Row::new(format!("lambda={lambda:e} {curve}"))
                    .num("lambda", lambda)?
                    .num("eps_requested", eps)?
                    .num("eps", p.eps())?
                    .int(p.radar_slots())
                    .int(p.cycle_slots())
                    .text(&curve)
                    .opt("d_min", d_min)?
                    .text(if r.feasible { "true" } else { "false" })
                    .opt("q_c_star", r.q_c_star)?
                    .num("t_star", r.t_star)?
                    .opt("q_max", r.q_max)?
                    .text(r.binding.as_str())
                    .opt("lambda_crit_lower", crit.map(|c| c.lower))?
                    .opt("lambda_crit_upper", crit.map(|c| c.upper))?;
                table.push(row);
            }
        }
    }
    let infeasible = (constrained > 0 && feasible_constrained == 0)
        .then(|| "no density point meets any range target".to_owned());
    Ok((table, infeasible))
}

fn full_points(cfg: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    let Some(sweep) = &cfg.sweep else {
        return grid_points(cfg);
    };
    let eps0 = cfg.eps[0];
    let qc0 = cfg.qc[0];
    let lambda0 = cfg.lambdas[0];
    let base = cfg.params(eps0, qc0)?;
    sweep
        .values()
        .into_iter()
        .map(|v| {
            let mut lambda = lambda0;
            let mut eps_requested = eps0;
            let params = match sweep.axis {
                Axis::Lambda => {
                    lambda = v;
                    Ok(base)
                }
                Axis::Eps => {
                    eps_requested = v;
                    cfg.params(v, qc0)
                }
                Axis::Qc => cfg.params(eps0, v),
                Axis::PhiDeg => base
                    .modify(|r| r.phi = v.to_radians())
                    .map_err(CliError::from),
                Axis::Sigma => base.modify(|r| r.sigma = v).map_err(CliError::from),
                Axis::Gamma => base.modify(|r| r.gamma = v).map_err(CliError::from),
                Axis::Dc => base.modify(|r| r.dc = v).map_err(CliError::from),
                Axis::Pf => base.modify(|r| r.pf_target = v).map_err(CliError::from),
                Axis::PtDbm => base
                    .modify(|r| r.pt_watts = radcom_core::model::dbm_to_watts(v))
                    .map_err(CliError::from),
                Axis::FreqGhz => base.modify(|r| r.freq_hz = v * 1e9).map_err(CliError::from),
                Axis::Alpha => base.modify(|r| r.alpha = v).map_err(CliError::from),
            }?;
            Ok(Point {
                lambda,
                eps_requested,
                params,
                axis_value: Some(v),
            })
        })
        .collect()
}

fn full_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut header = vec!["axis", "axis_value"];
    header.extend(POINT_COLUMNS);
    header.extend([
        "phi_deg",
        "alpha",
        "sigma",
        "gamma",
        "dc",
        "pf",
        "pt_dbm",
        "freq_ghz",
        "c",
        "theta",
        "d_rm",
        "p_s",
        "throughput",
        "theta_sim",
        "d_rm_sim",
        "pf_hat",
        "pf_hat_half_width",
        "p_s_sim",
        "p_s_sim_half_width",
        "throughput_sim",
        "throughput_sim_half_width",
        "calibration_trials",
        "throughput_trials",
        "status",
    ]);
    let axis = cfg.sweep.as_ref().map_or("point", |s| s.axis.name());
    let mut table = Table::new(cfg.subcommand.name(), &header);
    let points = full_points(cfg)?;
    let rows = Execution::Parallel.map_slice(&points, |pt| -> Result<Row, CliError> {
        let p = &pt.params;
        let radar = radar_analytics(p, pt.lambda);
        let comm = comm_analytics(p, pt.lambda);
        let rsim = radar_sim(cfg, pt, radar.ok().map(|a| a.theta))?;
        let csim = if cfg.simulate {
            let sc = sim_config(cfg, cfg.throughput_trials);
            Some(estimate_throughput(p, pt.lambda, &sc).map_err(|e| sim_error(e, &pt.context()))?)
        } else {
            None
        };
        let status = status_of(&radar.err(), &comm.err());
        let mut row = Row::new(pt.context()).text(axis);
        row = row.opt("axis_value", pt.axis_value)?;
        Ok(row
            .num("lambda", pt.lambda)?
            .num("eps_requested", pt.eps_requested)?
            .num("eps", p.eps())?
            .num("qc", p.qc())?
            .int(p.radar_slots())
            .int(p.cycle_slots())
            .num("phi_deg", p.phi().to_degrees())?
            .num("alpha", p.alpha())?
            .num("sigma", p.sigma())?
            .num("gamma", p.gamma())?
            .num("dc", p.dc())?
            .num("pf", p.pf_target())?
            .num("pt_dbm", watts_to_dbm(p.pt_watts()))?
            .num("freq_ghz", p.freq_hz() / 1e9)?
            .num("c", activity_factor(p))?
            .opt("theta", radar.ok().map(|a| a.theta))?
            .opt("d_rm", radar.ok().map(|a| a.d_rm))?
            .opt("p_s", comm.ok().map(|a| a.p_s))?
            .opt("throughput", comm.ok().map(|a| a.throughput))?
            .opt("theta_sim", rsim.as_ref().map(|s| s.theta))?
            .opt("d_rm_sim", rsim.as_ref().map(|s| s.range))?
            .opt(
                "pf_hat",
                rsim.as_ref().and_then(|s| s.false_alarm).map(|e| e.value),
            )?
            .opt(
                "pf_hat_half_width",
                rsim.as_ref()
                    .and_then(|s| s.false_alarm)
                    .map(|e| e.half_width),
            )?
            .opt("p_s_sim", csim.map(|s| s.success.value))?
            .opt("p_s_sim_half_width", csim.map(|s| s.success.half_width))?
            .opt("throughput_sim", csim.map(|s| s.throughput))?
            .opt(
                "throughput_sim_half_width",
                csim.map(|s| s.throughput_half_width),
            )?
            .int(if rsim.is_some() {
                cfg.calibration_trials
            } else {
                0
            })
            .int(if csim.is_some() {
                cfg.throughput_trials
            } else {
                0
            })
            .text(&status))
    });
    for r in rows {
        table.push(r?);
    }
    Ok(table)
}

fn status_of(radar: &Option<AnalyticError>, comm: &Option<AnalyticError>) -> String {
    match (radar, comm) {
        (None, None) => "ok".to_owned(),
        (Some(r), None) => format!("radar:{}", reason(r)),
        (None, Some(c)) => format!("comm:{}", reason(c)),
        (Some(r), Some(c)) => format!("radar:{};comm:{}", reason(r), reason(c)),
    }
}

fn analytic_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let radar_cols = matches!(cfg.quantity, Quantity::All | Quantity::Range);
    let comm_cols = matches!(cfg.quantity, Quantity::All | Quantity::Throughput);
    let mut header = POINT_COLUMNS.to_vec();
    header.push("c");
    if radar_cols {
        header.extend(["theta", "d_rm"]);
    }
    if comm_cols {
        header.extend(["p_s", "throughput", "small_density_slope"]);
    }
    header.push("status");
    let mut table = Table::new("analytic", &header);
    for pt in grid_points(cfg)? {
        let p = &pt.params;
        let radar = radar_analytics(p, pt.lambda);
        let comm = comm_analytics(p, pt.lambda);
        let mut row = pt.row()?.num("c", activity_factor(p))?;
        if radar_cols {
            row = row
                .opt("theta", radar.ok().map(|a| a.theta))?
                .opt("d_rm", radar.ok().map(|a| a.d_rm))?;
        }
        if comm_cols {
            row = row
                .opt("p_s", comm.ok().map(|a| a.p_s))?
                .opt("throughput", comm.ok().map(|a| a.throughput))?
                .num("small_density_slope", small_density_slope(p))?;
        }
        let status = status_of(
            &radar.err().filter(|_| radar_cols),
            &comm.err().filter(|_| comm_cols),
        );
        table.push(row.text(&status));
    }
    Ok(table)
}
