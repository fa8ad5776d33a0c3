//! CSV tables, run manifests and plot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Settings, Subcommand};
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// One CSV file: fixed header, rows of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.cells.len(), self.header.len(), "{}", self.name);
        self.rows.push(row.cells);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Row under construction. Non-finite numbers abort the run with the row's
/// context attached.
#[derive(Debug, Clone)]
pub struct Row {
    context: String,
    cells: Vec<String>,
}

impl Row {
    pub fn new(context: impl Into<String>) -> Self {
        Self {
            context: context.into(),
            cells: Vec::new(),
        }
    }

    pub fn num(mut self, column: &str, x: f64) -> Result<Self, CliError> {
        if !x.is_finite() {
            return Err(CliError::Numerical(format!(
                "{column} = {x} at {}",
                self.context
            )));
        }
        self.cells.push(fmt_f64(x));
        Ok(self)
    }

    pub fn opt(self, column: &str, x: Option<f64>) -> Result<Self, CliError> {
        match x {
            Some(x) => self.num(column, x),
            None => Ok(self.text("")),
        }
    }

    pub fn int(mut self, x: impl Into<u64>) -> Self {
        self.cells.push(x.into().to_string());
        self
    }

    pub fn text(mut self, s: &str) -> Self {
        self.cells.push(s.to_owned());
        self
    }
}

pub fn manifest_text(subcommand: Subcommand, settings: &Settings) -> String {
    format!(
        "# radcom run manifest; rerun with --config <this file>\ntool-version = {TOOL_VERSION}\nsubcommand = {subcommand}\n{}",
        settings.render()
    )
}

pub fn write_outputs(
    dir: &Path,
    subcommand: Subcommand,
    settings: &Settings,
    tables: &[Table],
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in tables {
        files.push(t.write(dir)?);
    }
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, manifest_text(subcommand, settings))?;
    files.push(manifest);
    let script = dir.join("plot.py");
    fs::write(&script, plot_script(subcommand, tables))?;
    files.push(script);
    Ok(files)
}

fn plot_script(subcommand: Subcommand, tables: &[Table]) -> String {
    let csvs: Vec<String> = tables
        .iter()
        .map(|t| format!("\"{}.csv\"", t.name))
        .collect();
    let (x, y, sim, group, logx, logy) = match subcommand {
        Subcommand::Fig2 => ("lambda", "d_rm", "d_rm_sim", "phi_deg", true, true),
        Subcommand::Fig3 => ("lambda", "throughput", "throughput_sim", "eps", true, true),
        Subcommand::Fig4 => ("eps", "d_rm", "d_rm_sim", "qc", false, false),
        Subcommand::Fig5 => ("lambda", "t_star", "", "curve", true, true),
        Subcommand::Sweep => ("axis_value", "d_rm", "d_rm_sim", "qc", true, true),
        Subcommand::Simulate => ("lambda", "throughput", "throughput_sim", "qc", true, true),
        Subcommand::Analytic => ("lambda", "throughput", "", "qc", true, true),
    };
    format!(
        r#"#!/usr/bin/env python3
# Generated by radcom {TOOL_VERSION}. Reads only the CSV files next to it.
import csv
import os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
FILES = [{files}]
X, Y, SIM, GROUP = "{x}", "{y}", "{sim}", "{group}"


def num(v):
    return float(v) if v not in ("", None) else None


for name in FILES:
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or X not in rows[0] or Y not in rows[0]:
        continue
    groups = {{}}
    for r in rows:
        groups.setdefault(r.get(GROUP, ""), []).append(r)
    fig, ax = plt.subplots()
    for label, rs in groups.items():
        pts = [(num(r[X]), num(r[Y])) for r in rs if num(r[X]) is not None and num(r[Y]) is not None]
        if pts:
            line, = ax.plot(*zip(*pts), "-", label=f"{{GROUP}}={{label}}")
            if SIM and SIM in rs[0]:
                sim = [(num(r[X]), num(r[SIM])) for r in rs if num(r[X]) is not None and num(r[SIM]) is not None]
                if sim:
                    ax.plot(*zip(*sim), "o", color=line.get_color(), fillstyle="none")
    if {logx}:
        ax.set_xscale("log")
    if {logy}:
        ax.set_yscale("log")
    ax.set_xlabel(X)
    ax.set_ylabel(Y)
    ax.legend()
    fig.savefig(os.path.join(HERE, name.replace(".csv", ".png")), dpi=150)
"#,
        files = csvs.join(", "),
        logx = if logx { "True" } else { "False" },
        logy = if logy { "True" } else { "False" },
    )
}
