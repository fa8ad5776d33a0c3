//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p radcom-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radcom_core::analytic::{
    activity_factor, interference_cdf, interference_laplace, radar_analytics, radar_range,
    small_density_slope, success_probability, throughput_density,
};
use radcom_core::model::radar_return_power;
use radcom_core::simulator::{
    calibrate_threshold, estimate_false_alarm, estimate_throughput, simulated_radar_range,
    slot_interference_samples, SimConfig,
};
use radcom_core::tradeoff::{critical_density, max_qc_for_range, optimize_throughput, QcBound};
use radcom_core::SystemParams;

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn at(eps: f64, qc: f64) -> SystemParams {
    SystemParams::defaults()
        .with_eps(eps)
        .and_then(|p| p.with_qc(qc))
        .expect("valid grid point")
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Simulated range from a 1e4-trial aggregate-interference calibration is
/// within 5% of the closed form.
fn radar_range_matches_simulation() -> Outcome {
    let lambda = 1e-4;
    let mut worst = (0.0, 0.0, 0.0);
    for eps in [0.2, 0.5, 0.8] {
        for qc in [0.01, 0.2, 0.5, 1.0] {
            let p = at(eps, qc);
            let d = radar_range(&p, lambda).map_err(|e| e.to_string())?;
            let theta = calibrate_threshold(&p, lambda, &SimConfig::new(10_000, SEED))
                .map_err(|e| e.to_string())?;
            let d_sim = simulated_radar_range(&p, theta).map_err(|e| e.to_string())?;
            let err = rel(d_sim, d);
            if err > worst.0 {
                worst = (err, eps, qc);
            }
        }
    }
    check(
        worst.0 <= 0.05,
        format!(
            "12 points, worst |d_sim/d - 1| = {:.4} at eps={} qc={} (limit 0.05)",
            worst.0, worst.1, worst.2
        ),
    )
}

/// The analytic threshold produces the target false alarm rate in
/// simulation.
fn false_alarm_at_analytic_threshold() -> Outcome {
    let p = SystemParams::defaults();
    let mut parts = Vec::new();
    let mut ok = true;
    for lambda in [1e-5, 1e-4, 1e-3] {
        let theta = radar_analytics(&p, lambda)
            .map_err(|e| e.to_string())?
            .theta;
        let est = estimate_false_alarm(&p, lambda, theta, &SimConfig::new(10_000, SEED))
            .map_err(|e| e.to_string())?;
        let tol = est.half_width.max(0.02);
        ok &= (est.value - p.pf_target()).abs() <= tol;
        parts.push(format!(
            "λ={lambda:e}: {:.4}±{:.4}",
            est.value, est.half_width
        ));
    }
    check(
        ok,
        format!("{} (target 0.1, tol max(0.02, CI))", parts.join(", ")),
    )
}

/// Empirical law of single-slot interference against the erfc CDF and the
/// Laplace transform.
fn interference_law() -> Outcome {
    let p = at(0.5, 0.5);
    let lambda = 1e-2;
    let n = 100_000u64;
    let samples = slot_interference_samples(&p, lambda, &SimConfig::new(n, SEED))
        .map_err(|e| e.to_string())?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = if x > 0.0 {
            interference_cdf(&p, lambda, x).map_err(|e| e.to_string())?
        } else {
            0.0
        };
        ks = ks
            .max((f - i as f64 / n as f64).abs())
            .max((f - (i + 1) as f64 / n as f64).abs());
    }
    let k = p.path_constant();
    let mut worst_laplace = 0.0f64;
    for s in [0.1 / k, 1.0 / k, 10.0 / k] {
        let mc = samples.iter().map(|i| (-s * i).exp()).sum::<f64>() / n as f64;
        let exact = interference_laplace(&p, lambda, s).map_err(|e| e.to_string())?;
        worst_laplace = worst_laplace.max(rel(mc, exact));
    }
    check(
        ks <= 0.02 && worst_laplace <= 0.01,
        format!(
            "KS = {ks:.5} (limit 0.02), worst Laplace rel err = {worst_laplace:.2e} (limit 0.01)"
        ),
    )
}

/// Monte Carlo throughput within 3 binomial standard errors of the closed
/// form.
fn throughput_matches_simulation() -> Outcome {
    let n = 100_000u64;
    let mut worst = (0.0f64, 0.0, 0.0);
    for lambda in [1e-3, 1e-2, 1e-1] {
        for eps in [0.2, 0.5, 0.8] {
            let p = at(eps, 0.5);
            let t = throughput_density(&p, lambda).map_err(|e| e.to_string())?;
            let ps = success_probability(&p, lambda).map_err(|e| e.to_string())?;
            let est = estimate_throughput(&p, lambda, &SimConfig::new(n, SEED))
                .map_err(|e| e.to_string())?;
            let scale = (1.0 - p.eps()) * p.qc() * lambda;
            let se = scale * est.success.standard_error_at(ps);
            let z = if se > 0.0 {
                (est.throughput - t).abs() / se
            } else if est.throughput == t {
                0.0
            } else {
                f64::INFINITY
            };
            if z > worst.0 {
                worst = (z, lambda, eps);
            }
        }
    }
    check(
        worst.0 <= 3.0,
        format!(
            "9 points, worst |T_hat - T| = {:.2} SE at λ={:e} eps={} (limit 3)",
            worst.0, worst.1, worst.2
        ),
    )
}

fn exact_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut note = |e: f64| worst = worst.max(e);
    for eps in [0.2, 0.5, 0.8, 1.0] {
        let p = at(eps, 0.5);
        let m = f64::from(p.cycle_slots());
        let mr = f64::from(p.radar_slots());
        note(rel(
            activity_factor(&p.with_qc(0.0).unwrap()),
            (mr - 1.0) / m,
        ));
        note(rel(
            activity_factor(&p.with_qc(1.0).unwrap()),
            1.0 - 1.0 / m,
        ));
    }
    let p = SystemParams::defaults();
    let lambda = 1e-4;
    for l in [1e-6, 1e-4, 1e-2, 1.0] {
        let a = radar_analytics(&p, l).map_err(|e| e.to_string())?;
        note(rel(radar_return_power(&p, a.d_rm).unwrap(), a.theta));
    }
    let base = radar_range(&p, lambda).unwrap();
    for k in [1e-3, 0.1, 10.0, 1e3] {
        note(rel(
            radar_range(&p, lambda * k).unwrap(),
            base * k.powf(-0.25),
        ));
        let q = p.modify(|r| r.sigma *= k).unwrap();
        note(rel(radar_range(&q, lambda).unwrap(), base * k.powf(0.125)));
        let q = p.modify(|r| r.pt_watts *= k).unwrap();
        note(rel(radar_range(&q, lambda).unwrap(), base));
        let q = p.modify(|r| r.freq_hz *= k).unwrap();
        note(rel(radar_range(&q, lambda).unwrap(), base));
    }
    for f in [0.25, 0.5, 1.5, 2.0] {
        let q = p.modify(|r| r.phi *= f).unwrap();
        note(rel(radar_range(&q, lambda).unwrap(), base * f.powf(-0.5)));
    }
    check(
        worst <= 1e-12,
        format!("worst relative deviation {worst:.2e} (limit 1e-12)"),
    )
}

fn directional_claims() -> Outcome {
    let lambda = 1e-4;
    let inv_mr = 1.0 / f64::from(SystemParams::defaults().radar_slots());
    let eps_grid: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let over_eps = |qc: f64| -> Vec<f64> {
        eps_grid
            .iter()
            .map(|&e| radar_range(&at(e, qc), lambda).unwrap())
            .collect()
    };
    let mut failures = Vec::new();
    for qc in [0.001, 0.2, 1.0] {
        let r = over_eps(qc);
        let decreasing = r.windows(2).all(|w| w[1] < w[0]);
        let increasing = r.windows(2).all(|w| w[1] > w[0]);
        let expect_decreasing = qc < inv_mr;
        if (expect_decreasing && !decreasing) || (!expect_decreasing && !increasing) {
            failures.push(format!("eps trend at qc={qc}"));
        }
    }
    for eps in [0.2, 0.5, 0.8] {
        let r: Vec<f64> = (0..=20)
            .map(|i| radar_range(&at(eps, f64::from(i) / 20.0), lambda).unwrap())
            .collect();
        if !r.windows(2).all(|w| w[1] < w[0]) {
            failures.push(format!("qc trend at eps={eps}"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "d_rm vs eps (0.1..0.9): decreasing at qc=0.001, increasing at qc=0.2, 1; strictly decreasing in qc at eps=0.2, 0.5, 0.8".to_owned()
        } else {
            failures.join("; ")
        },
    )
}

/// Best throughput over a grid of step ≤ 1e-3 on `[0, q_max]`.
fn grid_oracle(p: &SystemParams, lambda: f64, q_max: f64) -> f64 {
    let cells = (q_max / 1e-3).ceil().max(1.0) as u32;
    (0..=cells)
        .map(|j| {
            let q = q_max * f64::from(j) / f64::from(cells);
            throughput_density(&p.with_qc(q).unwrap(), lambda).unwrap()
        })
        .fold(0.0, f64::max)
}

fn optimizer_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let mut constrained_points = 0;
    for _ in 0..50 {
        let eps = rng.random_range(0.1..0.9);
        let lambda = 10f64.powf(rng.random_range(-6.0..0.0));
        let d_min = rng.random_range(5.0..30.0);
        let p = at(eps, 0.5);

        let free = optimize_throughput(&p, lambda, None).map_err(|e| e.to_string())?;
        let oracle = grid_oracle(&p, lambda, 1.0);
        worst = worst.max(rel(free.t_star, oracle));

        let tied = optimize_throughput(&p, lambda, Some(d_min)).map_err(|e| e.to_string())?;
        if tied.t_star > free.t_star {
            problems.push(format!("constrained > unconstrained at λ={lambda:e}"));
        }
        match max_qc_for_range(&p, lambda, d_min).map_err(|e| e.to_string())? {
            QcBound::Infeasible => {
                if tied.feasible || radar_range(&p.with_qc(0.0).unwrap(), lambda).unwrap() >= d_min
                {
                    problems.push(format!("infeasibility mismatch at λ={lambda:e}"));
                }
            }
            QcBound::UpTo(q_max) => {
                constrained_points += 1;
                let range_at = |q: f64| radar_range(&p.with_qc(q).unwrap(), lambda).unwrap();
                if range_at(q_max) < d_min * (1.0 - 1e-9)
                    || (q_max < 1.0 && range_at((q_max + 1e-6).min(1.0)) >= d_min)
                {
                    problems.push(format!("q_max not at the range frontier at λ={lambda:e}"));
                }
                worst = worst.max(rel(tied.t_star, grid_oracle(&p, lambda, q_max)));
            }
        }
    }

    for eps in [0.2, 0.5, 0.8] {
        let p = at(eps, 0.5);
        for lambda in [1e-7, 1e-6] {
            let r = optimize_throughput(&p, lambda, None).unwrap();
            let slope = small_density_slope(&p.with_qc(1.0).unwrap());
            if r.q_c_star != Some(1.0)
                || rel(r.t_star / lambda, slope) > 1e-4
                || rel(slope, 1.0 - p.eps()) > 1e-15
            {
                problems.push(format!("small-λ optimum at eps={eps} λ={lambda:e}"));
            }
        }
    }

    let mut crit_checked = 0;
    for d_min in [10.0, 20.0] {
        for eps in [0.2, 0.5, 0.8] {
            let p = at(eps, 0.5);
            let Some(crit) = critical_density(&p, d_min).map_err(|e| e.to_string())? else {
                problems.push(format!("no critical density at eps={eps} d_min={d_min}"));
                continue;
            };
            // Independent scan of the silent-comm range on a fine log grid.
            let silent = p.with_qc(0.0).unwrap();
            let first_bad = (0..=8000)
                .map(|i| 10f64.powf(-8.0 + f64::from(i) * 1e-3))
                .find(|&l| radar_range(&silent, l).unwrap() < d_min)
                .unwrap();
            if !(first_bad >= crit.upper && first_bad <= crit.upper * 10f64.powf(1e-3)) {
                problems.push(format!("λ_crit scan mismatch at eps={eps} d_min={d_min}"));
            }
            for f in [1.01, 2.0, 100.0] {
                let r = optimize_throughput(&p, crit.upper * f, Some(d_min)).unwrap();
                if r.feasible || r.t_star != 0.0 || r.q_c_star.is_some() {
                    problems.push(format!(
                        "not flagged beyond λ_crit at eps={eps} d_min={d_min}"
                    ));
                }
            }
            let below = optimize_throughput(&p, crit.lower * 0.99, Some(d_min)).unwrap();
            if !below.feasible {
                problems.push(format!("flagged below λ_crit at eps={eps} d_min={d_min}"));
            }
            crit_checked += 1;
        }
    }
    if worst > 1e-4 {
        problems.push(format!("grid oracle deviation {worst:.2e}"));
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "50 random points ({constrained_points} with a feasible range target), worst rel dev from grid {worst:.2e} (limit 1e-4); small-λ q*=1 with slope 1-eps; {crit_checked} λ_crit frontiers flagged"
            )
        } else {
            problems.join("; ")
        },
    )
}

fn radcom(args: &[&str], out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_radcom"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, &[&str]); 2] = [
        (
            "fig2",
            &["fig2", "--points", "3", "--trials", "2000", "--seed", "5"],
        ),
        (
            "fig3",
            &["fig3", "--points", "3", "--trials", "2000", "--seed", "5"],
        ),
    ];
    let mut compared = 0;
    for (name, args) in runs {
        let mut outputs = Vec::new();
        for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
            let out = dir.path().join(format!("{name}-{tag}"));
            let mut a = args.to_vec();
            a.extend(["--threads", threads]);
            radcom(&a, &out)?;
            outputs.push(fs::read(out.join(format!("{name}.csv"))).map_err(|e| e.to_string())?);
        }
        let manifest = dir.path().join(format!("{name}-a")).join("manifest.txt");
        let out = dir.path().join(format!("{name}-m"));
        radcom(&[name, "--config", manifest.to_str().unwrap()], &out)?;
        outputs.push(fs::read(out.join(format!("{name}.csv"))).map_err(|e| e.to_string())?);
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!("{name}: CSVs differ between runs"));
        }
        compared += outputs.len();
    }
    Ok(format!(
        "{compared} CSVs byte-identical across repeat runs, 1 vs 4 threads, and manifest reruns"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "radar range: analytic vs simulation",
            radar_range_matches_simulation,
        ),
        (
            "false alarm at analytic threshold",
            false_alarm_at_analytic_threshold,
        ),
        ("interference law", interference_law),
        (
            "throughput: analytic vs simulation",
            throughput_matches_simulation,
        ),
        ("exact identities", exact_identities),
        ("directional trends", directional_claims),
        ("optimizer correctness", optimizer_correctness),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
