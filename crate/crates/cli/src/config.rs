//! Layered experiment configuration.
//!
//! Settings are plain `key = value` strings resolved in three layers:
//! subcommand defaults, then an optional config file, then command-line
//! flags. The merged map is what gets written to the run manifest, so a
//! manifest fed back through `--config` reproduces the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use radcom_core::model::{cycle_slots_for_eps, dbm_to_watts, RawParams};
use radcom_core::SystemParams;

use crate::CliError;

/// Keys a config file or manifest may set.
pub const KEYS: &[&str] = &[
    "out",
    "seed",
    "calibration-trials",
    "throughput-trials",
    "window-radius",
    "lambda",
    "lambda-min",
    "lambda-max",
    "points",
    "eps",
    "qc",
    "mr",
    "m",
    "phi-deg",
    "alpha",
    "sigma",
    "gamma",
    "dc",
    "pf",
    "pt-dbm",
    "freq-ghz",
    "dmin",
    "no-sim",
    "quantity",
    "axis",
    "axis-min",
    "axis-max",
    "spacing",
];

/// Manifest-only keys, accepted and ignored when reading a config.
const INFO_KEYS: &[&str] = &["tool-version", "subcommand"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Sweep,
    Simulate,
    Analytic,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Fig2 => "fig2",
            Subcommand::Fig3 => "fig3",
            Subcommand::Fig4 => "fig4",
            Subcommand::Fig5 => "fig5",
            Subcommand::Sweep => "sweep",
            Subcommand::Simulate => "simulate",
            Subcommand::Analytic => "analytic",
        }
    }

    fn defaults(self) -> Settings {
        let mut s = Settings::default();
        for (k, v) in [
            ("seed", "1"),
            ("calibration-trials", "10000"),
            ("throughput-trials", "100000"),
            ("pt-dbm", "10"),
            ("freq-ghz", "60"),
            ("phi-deg", "30"),
            ("alpha", "4"),
            ("sigma", "10"),
            ("gamma", "5"),
            ("dc", "5"),
            ("pf", "0.1"),
            ("mr", "100"),
            ("eps", "0.5"),
            ("qc", "0.5"),
            ("points", "7"),
            ("no-sim", "false"),
            ("quantity", "all"),
            ("spacing", "log"),
        ] {
            s.set(k, v);
        }
        s.set("out", &format!("out/{}", self.name()));
        let specific: &[(&str, &str)] = match self {
            Subcommand::Fig2 => &[("lambda-min", "1e-5"), ("lambda-max", "1e-2")],
            Subcommand::Fig3 => &[
                ("lambda-min", "1e-4"),
                ("lambda-max", "1"),
                ("points", "9"),
                ("eps", "0.2,0.5,0.8"),
            ],
            Subcommand::Fig4 => &[
                ("lambda", "1e-4"),
                ("eps", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"),
                ("qc", "0.001,0.01,0.2,1"),
            ],
            Subcommand::Fig5 => &[
                ("lambda-min", "1e-6"),
                ("lambda-max", "1"),
                ("points", "25"),
            ],
            Subcommand::Sweep => &[
                ("axis", "lambda"),
                ("axis-min", "1e-5"),
                ("axis-max", "1e-1"),
                ("points", "9"),
            ],
            Subcommand::Simulate => &[("lambda", "1e-4")],
            Subcommand::Analytic => &[
                ("lambda-min", "1e-6"),
                ("lambda-max", "1"),
                ("points", "13"),
            ],
        };
        for (k, v) in specific {
            s.set(k, v);
        }
        s
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat string settings, ordered by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) {
        self.0.insert(key.to_owned(), value.trim().to_owned());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    pub fn remove(&mut self, key: &str) {
        self.0.remove(key);
    }

    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parse the `key = value` grammar: one pair per line, `#` starts a
    /// comment, blank lines are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(
                    line,
                    format!("{origin}:{}: expected `key = value`", n + 1),
                ));
            };
            let key = key.trim();
            if INFO_KEYS.contains(&key) {
                continue;
            }
            // `trials` is shorthand for both trial counts.
            if key == "trials" {
                s.set("calibration-trials", value);
                s.set("throughput-trials", value);
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(CliError::config(
                    key,
                    format!("{origin}:{}: unknown key", n + 1),
                ));
            }
            s.set(key, value);
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.iter() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn resolve(subcommand: Subcommand, file: Option<&Settings>, flags: &Settings) -> Settings {
        let mut s = subcommand.defaults();
        if let Some(f) = file {
            s.merge(f);
        }
        s.merge(flags);
        s
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(key, format!("cannot parse `{v}`"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.parse_value(key)?
            .ok_or_else(|| CliError::config(key, "missing value".to_owned()))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let Some(v) = self.get(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| CliError::config(key, format!("cannot parse `{x}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    All,
    Range,
    Throughput,
}

/// Parameter a generic sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    Eps,
    Qc,
    PhiDeg,
    Sigma,
    Gamma,
    Dc,
    Pf,
    PtDbm,
    FreqGhz,
    Alpha,
}

impl Axis {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lambda" => Axis::Lambda,
            "eps" => Axis::Eps,
            "qc" => Axis::Qc,
            "phi-deg" => Axis::PhiDeg,
            "sigma" => Axis::Sigma,
            "gamma" => Axis::Gamma,
            "dc" => Axis::Dc,
            "pf" => Axis::Pf,
            "pt-dbm" => Axis::PtDbm,
            "freq-ghz" => Axis::FreqGhz,
            "alpha" => Axis::Alpha,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Eps => "eps",
            Axis::Qc => "qc",
            Axis::PhiDeg => "phi-deg",
            Axis::Sigma => "sigma",
            Axis::Gamma => "gamma",
            Axis::Dc => "dc",
            Axis::Pf => "pf",
            Axis::PtDbm => "pt-dbm",
            Axis::FreqGhz => "freq-ghz",
            Axis::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        grid(self.min, self.max, self.points, self.spacing)
    }
}

pub fn grid(min: f64, max: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    if points <= 1 {
        return vec![min];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = i as f64 / last;
            match spacing {
                Spacing::Linear => min + (max - min) * t,
                Spacing::Log => {
                    if i == 0 {
                        min
                    } else if i == points - 1 {
                        max
                    } else {
                        10f64.powf(min.log10() + (max.log10() - min.log10()) * t)
                    }
                }
            }
        })
        .collect()
}

/// Fully typed, validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub out: PathBuf,
    pub seed: u64,
    pub calibration_trials: u64,
    pub throughput_trials: u64,
    pub window_radius: Option<f64>,
    /// Densities to evaluate: either the single `lambda` or the
    /// `lambda-min..lambda-max` grid.
    pub lambdas: Vec<f64>,
    /// Base parameters; `cycle_slots` is set per requested ε.
    pub base: RawParams,
    /// Requested ε values, or the single ε implied by an explicit `m`.
    pub eps: Vec<f64>,
    pub explicit_cycle: Option<u32>,
    pub qc: Vec<f64>,
    pub dmin: Vec<f64>,
    pub simulate: bool,
    pub quantity: Quantity,
    pub sweep: Option<SweepAxis>,
    pub settings: Settings,
}

impl ExperimentConfig {
    pub fn from_settings(subcommand: Subcommand, settings: Settings) -> Result<Self, CliError> {
        let s = &settings;
        let spacing = match s.get("spacing").unwrap_or("log") {
            "log" => Spacing::Log,
            "lin" | "linear" => Spacing::Linear,
            other => {
                return Err(CliError::config(
                    "spacing",
                    format!("expected lin|log, got `{other}`"),
                ))
            }
        };
        let points: usize = s.required("points")?;
        if points == 0 {
            return Err(CliError::config("points", "must be at least 1".to_owned()));
        }
        let lambdas = match s.parse_value::<f64>("lambda")? {
            Some(l) => vec![l],
            None => {
                let min: f64 = s.required("lambda-min")?;
                let max: f64 = s.required("lambda-max")?;
                if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
                    return Err(CliError::config(
                        "lambda-min",
                        "log spacing needs positive bounds".to_owned(),
                    ));
                }
                grid(min, max, points, spacing)
            }
        };
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(CliError::config(
                "lambda",
                format!("density must be non-negative (got {bad})"),
            ));
        }

        let phi_deg: f64 = s.required("phi-deg")?;
        let radar_slots: u32 = s.required("mr")?;
        let base = RawParams {
            pt_watts: dbm_to_watts(s.required("pt-dbm")?),
            freq_hz: s.required::<f64>("freq-ghz")? * 1e9,
            phi: phi_deg.to_radians(),
            alpha: s.required("alpha")?,
            sigma: s.required("sigma")?,
            radar_slots,
            cycle_slots: radar_slots,
            qc: 0.5,
            gamma: s.required("gamma")?,
            dc: s.required("dc")?,
            pf_target: s.required("pf")?,
        };
        let explicit_cycle: Option<u32> = s.parse_value("m")?;
        let eps = match explicit_cycle {
            Some(m) => vec![f64::from(radar_slots) / f64::from(m)],
            None => s.list("eps")?,
        };
        if eps.is_empty() {
            return Err(CliError::config(
                "eps",
                "at least one value needed".to_owned(),
            ));
        }
        if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(CliError::config(
                "eps",
                format!("must be in (0, 1] (got {bad})"),
            ));
        }
        let qc = s.list("qc")?;
        if qc.is_empty() {
            return Err(CliError::config(
                "qc",
                "at least one value needed".to_owned(),
            ));
        }
        let dmin = s.list("dmin")?;
        if subcommand == Subcommand::Fig5 && dmin.is_empty() {
            return Err(CliError::config(
                "dmin",
                "fig5 needs at least one range target".to_owned(),
            ));
        }
        if let Some(bad) = dmin.iter().find(|d| !(**d > 0.0)) {
            return Err(CliError::config(
                "dmin",
                format!("must be positive (got {bad})"),
            ));
        }
        let window_radius: Option<f64> = s.parse_value("window-radius")?;
        if let Some(r) = window_radius {
            if !(r > 0.0) {
                return Err(CliError::config(
                    "window-radius",
                    format!("must be positive (got {r})"),
                ));
            }
        }
        let quantity = match s.get("quantity").unwrap_or("all") {
            "all" => Quantity::All,
            "range" => Quantity::Range,
            "throughput" => Quantity::Throughput,
            other => {
                return Err(CliError::config(
                    "quantity",
                    format!("expected all|range|throughput, got `{other}`"),
                ))
            }
        };
        let simulate = !s.required::<bool>("no-sim")?;
        let sweep = match subcommand {
            Subcommand::Sweep => {
                let name = s.get("axis").unwrap_or("lambda");
                let axis = Axis::parse(name).ok_or_else(|| {
                    CliError::config("axis", format!("unknown sweep axis `{name}`"))
                })?;
                let min: f64 = s.required("axis-min")?;
                let max: f64 = s.required("axis-max")?;
                if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
                    return Err(CliError::config(
                        "axis-min",
                        "log spacing needs positive bounds".to_owned(),
                    ));
                }
                Some(SweepAxis {
                    axis,
                    min,
                    max,
                    points,
                    spacing,
                })
            }
            _ => None,
        };
        let cfg = Self {
            subcommand,
            out: PathBuf::from(s.get("out").unwrap_or(".")),
            seed: s.required("seed")?,
            calibration_trials: s.required("calibration-trials")?,
            throughput_trials: s.required("throughput-trials")?,
            window_radius,
            lambdas,
            base,
            eps,
            explicit_cycle,
            qc,
            dmin,
            simulate,
            quantity,
            sweep,
            settings: settings.clone(),
        };
        // Surface parameter violations up front, naming the offending key.
        for &e in &cfg.eps {
            for &q in &cfg.qc {
                cfg.params(e, q)?;
            }
        }
        Ok(cfg)
    }

    pub fn cycle_for(&self, eps: f64) -> u32 {
        self.explicit_cycle
            .unwrap_or_else(|| cycle_slots_for_eps(self.base.radar_slots, eps))
    }

    /// Validated parameters for one requested (ε, q_c) pair.
    pub fn params(&self, eps: f64, qc: f64) -> Result<SystemParams, CliError> {
        let raw = RawParams {
            cycle_slots: self.cycle_for(eps),
            qc,
            ..self.base
        };
        SystemParams::validate(raw).map_err(CliError::from)
    }
}
