//! Experiment harness: figure reproductions, generic sweeps, CSV output and
//! run manifests.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser};
use thiserror::Error;

use radcom_core::model::{ParamError, Violation};

pub use config::{ExperimentConfig, Settings, Subcommand};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(key: &str, message: String) -> Self {
        CliError::Config {
            key: key.to_owned(),
            message,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        let key = match e.violations.first() {
            Some(Violation::AlphaOutOfRange(_)) => "alpha",
            Some(Violation::CycleInvalid { .. }) => "mr",
            Some(
                Violation::ProbabilityOutOfRange { name, .. } | Violation::NonPositive { name, .. },
            ) => match *name {
                "pt" => "pt-dbm",
                "freq" => "freq-ghz",
                "phi" => "phi-deg",
                other => other,
            },
            None => "params",
        };
        CliError::config(key, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "radcom",
    version,
    about = "Radar/communication coexistence tradeoff experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Radar range vs node density, analytic and calibrated by simulation.
    Fig2(Flags),
    /// Throughput density vs node density for several radar duty fractions.
    Fig3(Flags),
    /// Radar range vs radar duty fraction for several persistencies.
    Fig4(Flags),
    /// Maximum throughput density vs node density, with range targets.
    Fig5(Flags),
    /// Single-axis sweep of any parameter.
    Sweep(Flags),
    /// Analytic and simulated metrics at individual parameter points.
    Simulate(Flags),
    /// Closed-form metrics only.
    Analytic(Flags),
}

impl Command {
    fn split(self) -> (Subcommand, Flags) {
        match self {
            Command::Fig2(f) => (Subcommand::Fig2, f),
            Command::Fig3(f) => (Subcommand::Fig3, f),
            Command::Fig4(f) => (Subcommand::Fig4, f),
            Command::Fig5(f) => (Subcommand::Fig5, f),
            Command::Sweep(f) => (Subcommand::Sweep, f),
            Command::Simulate(f) => (Subcommand::Simulate, f),
            Command::Analytic(f) => (Subcommand::Analytic, f),
        }
    }
}

/// Flags shared by every subcommand. Values stay strings here and are
/// typed after layering with the config file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// `key = value` config file; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<String>,
    /// Trials for both threshold calibration and throughput estimation.
    #[arg(long, value_name = "N")]
    pub trials: Option<String>,
    #[arg(long, value_name = "N")]
    pub calibration_trials: Option<String>,
    #[arg(long, value_name = "N")]
    pub throughput_trials: Option<String>,
    #[arg(long, value_name = "METERS")]
    pub window_radius: Option<String>,
    /// Single node density (nodes/m²); replaces the lambda grid.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub lambda_min: Option<String>,
    #[arg(long)]
    pub lambda_max: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    /// Radar duty fraction(s); mapped to M = round(M_r / eps).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<String>,
    /// ALOHA persistency value(s).
    #[arg(long, value_delimiter = ',')]
    pub qc: Vec<String>,
    #[arg(long)]
    pub mr: Option<String>,
    /// Explicit cycle length; overrides eps.
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub phi_deg: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub dc: Option<String>,
    #[arg(long)]
    pub pf: Option<String>,
    #[arg(long)]
    pub pt_dbm: Option<String>,
    #[arg(long)]
    pub freq_ghz: Option<String>,
    /// Minimum radar range target(s), meters.
    #[arg(long, value_delimiter = ',')]
    pub dmin: Vec<String>,
    /// Skip Monte Carlo columns.
    #[arg(long)]
    pub no_sim: bool,
    /// all | range | throughput (analytic subcommand).
    #[arg(long)]
    pub quantity: Option<String>,
    /// Parameter swept by the sweep subcommand.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub axis_min: Option<String>,
    #[arg(long)]
    pub axis_max: Option<String>,
    /// lin | log
    #[arg(long)]
    pub spacing: Option<String>,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Flags {
    fn settings(&self) -> Settings {
        let mut s = Settings::default();
        let single = [
            ("out", &self.out),
            ("seed", &self.seed),
            ("calibration-trials", &self.trials),
            ("throughput-trials", &self.trials),
            ("window-radius", &self.window_radius),
            ("lambda", &self.lambda),
            ("lambda-min", &self.lambda_min),
            ("lambda-max", &self.lambda_max),
            ("points", &self.points),
            ("mr", &self.mr),
            ("m", &self.m),
            ("phi-deg", &self.phi_deg),
            ("alpha", &self.alpha),
            ("sigma", &self.sigma),
            ("gamma", &self.gamma),
            ("dc", &self.dc),
            ("pf", &self.pf),
            ("pt-dbm", &self.pt_dbm),
            ("freq-ghz", &self.freq_ghz),
            ("quantity", &self.quantity),
            ("axis", &self.axis),
            ("axis-min", &self.axis_min),
            ("axis-max", &self.axis_max),
            ("spacing", &self.spacing),
        ];
        for (k, v) in single {
            if let Some(v) = v {
                s.set(k, v);
            }
        }
        // Specific trial counts win over --trials.
        if let Some(v) = &self.calibration_trials {
            s.set("calibration-trials", v);
        }
        if let Some(v) = &self.throughput_trials {
            s.set("throughput-trials", v);
        }
        for (k, v) in [("eps", &self.eps), ("qc", &self.qc), ("dmin", &self.dmin)] {
            if !v.is_empty() {
                s.set(k, &v.join(","));
            }
        }
        if self.no_sim {
            s.set("no-sim", "true");
        }
        s
    }
}

/// Layer defaults, file and flags. A layer that picks a density grid or an
/// ε list drops a single `lambda` or explicit `m` inherited from below.
pub fn resolve_settings(
    subcommand: Subcommand,
    file: Option<&Settings>,
    flags: &Settings,
) -> Settings {
    let mut merged = Settings::resolve(subcommand, None, &Settings::default());
    for layer in file.into_iter().chain(std::iter::once(flags)) {
        if (layer.get("lambda-min").is_some() || layer.get("lambda-max").is_some())
            && layer.get("lambda").is_none()
        {
            merged.remove("lambda");
        }
        if layer.get("eps").is_some() && layer.get("m").is_none() {
            merged.remove("m");
        }
        merged.merge(layer);
    }
    merged
}

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<RunOutput, CliError> {
    let (subcommand, flags) = cli.command.split();
    let file = flags.config.as_deref().map(Settings::load).transpose()?;
    let settings = resolve_settings(subcommand, file.as_ref(), &flags.settings());
    let cfg = ExperimentConfig::from_settings(subcommand, settings)?;
    match flags.threads {
        Some(n) => with_threads(n, || commands::execute(&cfg)),
        None => commands::execute(&cfg),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    n: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(
    _n: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    f()
}

/// Parse arguments, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
