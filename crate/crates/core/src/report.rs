//! CSV and manifest output. Floats carry 12 significant digits; agents, tasks
//! and states are written 1-based.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::auction::{AuctionConfig, EquilibriumReport};
use crate::baselines::{BaselineAllocation, EfficiencyRow, RealizedUtility, WelfareComparison};
use crate::core_check::{Mode, SscReport};
use crate::error::Result;
use crate::scenario::{EndowmentShares, ValidatedScenario};

/// `%.12g`-style rendering; infinities as `inf`/`-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_owned()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn label(i: usize) -> String {
    (i + 1).to_string()
}

fn mode_label(mode: Mode) -> String {
    match mode {
        Mode::ExAnte => "ex_ante".into(),
        Mode::ExPost(s) => format!("ex_post_{}", s + 1),
    }
}

fn to_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn prices_csv(report: &EquilibriumReport) -> Result<String> {
    let (tasks, states) = report.prices.dims();
    let mut rows = vec![header(&["task", "state", "price", "raw_price"])];
    for s in 0..states {
        for m in 0..tasks {
            rows.push(vec![
                label(m),
                label(s),
                fmt_float(report.prices.get(m, s)),
                fmt_float(report.raw_prices.get(m, s)),
            ]);
        }
    }
    to_string(rows)
}

pub fn shares_csv(report: &EquilibriumReport, endowment: &EndowmentShares) -> Result<String> {
    let (agents, tasks, states) = report.allocation.dims();
    let mut rows = vec![header(&[
        "agent",
        "task",
        "state",
        "share",
        "demand_at_stop",
        "endowment",
    ])];
    for s in 0..states {
        for m in 0..tasks {
            for n in 0..agents {
                rows.push(vec![
                    label(n),
                    label(m),
                    label(s),
                    fmt_float(report.allocation.get(n, m, s)),
                    fmt_float(report.shares.get(n, m, s)),
                    fmt_float(endowment.get(n, m, s)),
                ]);
            }
        }
    }
    to_string(rows)
}

pub fn trace_csv(report: &EquilibriumReport) -> Result<String> {
    let (tasks, states) = report.prices.dims();
    let mut head = header(&["iteration", "max_abs_excess"]);
    for s in 0..states {
        for m in 0..tasks {
            head.push(format!("price_t{}_s{}", m + 1, s + 1));
        }
    }
    for s in 0..states {
        head.push(format!("walras_s{}", s + 1));
    }
    let mut rows = vec![head];
    for t in &report.trace {
        let mut row = vec![t.iter.to_string(), fmt_float(t.max_abs_z)];
        for s in 0..states {
            for m in 0..tasks {
                row.push(fmt_float(t.prices[m * states + s]));
            }
        }
        row.extend(t.walras.iter().map(|&x| fmt_float(x)));
        rows.push(row);
    }
    to_string(rows)
}

pub fn ssc_csv(report: &SscReport) -> Result<String> {
    let mut rows = vec![header(&[
        "coalition_mask",
        "target",
        "mode",
        "reference_utility",
        "improvement",
        "relative_improvement",
        "feasible",
        "converged",
    ])];
    for e in report.entries() {
        rows.push(vec![
            e.coalition.mask().to_string(),
            label(e.target),
            mode_label(e.mode),
            fmt_float(e.reference_utility),
            fmt_float(e.improvement.absolute),
            fmt_float(e.improvement.relative),
            e.improvement.feasible.to_string(),
            e.improvement.converged.to_string(),
        ]);
    }
    to_string(rows)
}

pub fn ssc_strong_csv(report: &SscReport) -> Result<String> {
    let mut rows = vec![header(&[
        "coalition_mask",
        "mode",
        "min_relative_gain",
        "converged",
    ])];
    for e in &report.strong {
        rows.push(vec![
            e.coalition.mask().to_string(),
            mode_label(e.mode),
            fmt_float(e.improvement.relative),
            e.improvement.converged.to_string(),
        ]);
    }
    to_string(rows)
}

/// Realized against predicted utility; the normalized columns divide by the sum over agents.
pub fn indifference_csv(rows_in: &[RealizedUtility]) -> Result<String> {
    let realized_total: f64 = rows_in.iter().map(|r| r.mean).sum();
    let predicted_total: f64 = rows_in.iter().map(|r| r.predicted).sum();
    let norm = |x: f64, total: f64| if total > 0.0 { x / total } else { 0.0 };
    let mut rows = vec![header(&[
        "agent",
        "realized_mean",
        "std_error",
        "predicted",
        "relative_gap",
        "realized_normalized",
        "predicted_normalized",
    ])];
    for r in rows_in {
        let gap = if r.predicted > 0.0 {
            (r.mean - r.predicted).abs() / r.predicted
        } else {
            0.0
        };
        rows.push(vec![
            label(r.agent),
            fmt_float(r.mean),
            fmt_float(r.std_error),
            fmt_float(r.predicted),
            fmt_float(gap),
            fmt_float(norm(r.mean, realized_total)),
            fmt_float(norm(r.predicted, predicted_total)),
        ]);
    }
    to_string(rows)
}

pub fn efficiency_csv(table: &[EfficiencyRow]) -> Result<String> {
    let mut rows = vec![header(&[
        "agent",
        "task",
        "state",
        "relative_index",
        "share",
    ])];
    for r in table {
        rows.push(vec![
            label(r.agent),
            label(r.task),
            label(r.state),
            fmt_float(r.relative_index),
            fmt_float(r.share),
        ]);
    }
    to_string(rows)
}

pub fn welfare_csv(cmp: &WelfareComparison) -> Result<String> {
    let agents = cmp.rows.first().map_or(0, |r| r.per_agent.len());
    let states = cmp.rows.first().map_or(0, |r| r.per_state.len());
    let mut head = header(&["method", "welfare"]);
    head.extend((0..agents).map(|n| format!("agent_{}", n + 1)));
    head.extend((0..states).map(|s| format!("state_{}", s + 1)));
    let mut rows = vec![head];
    for r in &cmp.rows {
        let mut row = vec![r.method.to_string(), fmt_float(r.welfare)];
        row.extend(r.per_agent.iter().map(|&x| fmt_float(x)));
        row.extend(r.per_state.iter().map(|&x| fmt_float(x)));
        rows.push(row);
    }
    to_string(rows)
}

pub fn allocations_csv(allocs: &[BaselineAllocation]) -> Result<String> {
    let mut rows = vec![header(&["method", "agent", "task", "state", "share"])];
    for a in allocs {
        let (agents, tasks, states) = a.shares.dims();
        for s in 0..states {
            for m in 0..tasks {
                for n in 0..agents {
                    rows.push(vec![
                        a.method.to_string(),
                        label(n),
                        label(m),
                        label(s),
                        fmt_float(a.shares.get(n, m, s)),
                    ]);
                }
            }
        }
    }
    to_string(rows)
}

/// Everything needed to rerun a command and get identical files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub scenario: String,
    pub scenario_seed: u64,
    pub seed: u64,
    pub auction: AuctionConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    pub output_dir: String,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        scenario: String,
        scn: &ValidatedScenario,
        seed: u64,
        auction: AuctionConfig,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            scenario,
            scenario_seed: scn.seed(),
            seed,
            auction,
            draws: None,
            output_dir: String::new(),
            files: Vec::new(),
        }
    }
}

/// Collects output files and writes them together with the manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_owned(), contents));
    }

    pub fn write(self, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        manifest.output_dir = self.dir.display().to_string();
        manifest.files = self.files.iter().map(|(n, _)| n.clone()).collect();
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}
