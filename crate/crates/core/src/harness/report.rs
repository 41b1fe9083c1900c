//! Experiment reports: per-trial rows, a summary, and byte-stable CSV/JSON output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: usize,
    pub window_min: i32,
    pub window_max: i32,
    pub input: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    /// `ratio = lhs/rhs`; `rhs = 0` gives `inf` when `lhs > 0` and `0` when both vanish.
    pub fn new(trial: usize, window_min: i32, window_max: i32, input: String, lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Row { trial, window_min, window_max, input, lhs, rhs, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Max ratio per refinement window, coarsest first.
    pub per_window_max: Vec<f64>,
    /// `per_window_max[i+1] / per_window_max[i]`.
    pub growth_factors: Vec<f64>,
    /// Every growth factor is below 2.
    pub stable: bool,
    /// Every growth factor is at least 2.
    pub monotone_growth: bool,
    pub invariant_violations: usize,
    pub extras: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub version: String,
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub provenance: Provenance,
    /// Human-readable violation messages; their count is `summary.invariant_violations`.
    pub violations: Vec<String>,
}

impl Report {
    /// Builds the summary from rows; `window_mins` fixes the refinement order.
    pub fn assemble(
        rows: Vec<Row>,
        window_mins: &[i32],
        provenance: Provenance,
        violations: Vec<String>,
        extras: BTreeMap<String, f64>,
        notes: Vec<String>,
    ) -> Self {
        let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        let median_ratio = match ratios.len() {
            0 => 0.0,
            n if n % 2 == 1 => ratios[n / 2],
            n => 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]),
        };
        let max_ratio = ratios.last().copied().unwrap_or(0.0);
        let per_window_max: Vec<f64> = window_mins
            .iter()
            .map(|&lm| {
                rows.iter().filter(|r| r.window_min == lm).map(|r| r.ratio).fold(0.0, f64::max)
            })
            .collect();
        let growth_factors: Vec<f64> = per_window_max
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 1.0 })
            .collect();
        let stable = growth_factors.iter().all(|&g| g < 2.0);
        let monotone_growth = !growth_factors.is_empty() && growth_factors.iter().all(|&g| g >= 2.0);
        let summary = Summary {
            rows: rows.len(),
            max_ratio,
            median_ratio,
            per_window_max,
            growth_factors,
            stable,
            monotone_growth,
            invariant_violations: violations.len(),
            extras,
            notes,
        };
        Report { rows, summary, provenance, violations }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = Vec::new();
        self.write_csv(&mut out)?;
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "window_min", "window_max", "input", "lhs", "rhs", "ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.trial.to_string(),
                r.window_min.to_string(),
                r.window_max.to_string(),
                r.input.clone(),
                fmt_real(r.lhs),
                fmt_real(r.rhs),
                fmt_real(r.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary, provenance and violations; non-finite numbers become strings.
    pub fn to_json(&self) -> Value {
        let s = &self.summary;
        let reals = |v: &[f64]| Value::Array(v.iter().map(|&x| real(x)).collect());
        let extras: serde_json::Map<String, Value> =
            s.extras.iter().map(|(k, &v)| (k.clone(), real(v))).collect();
        json!({
            "summary": {
                "rows": s.rows,
                "max_ratio": real(s.max_ratio),
                "median_ratio": real(s.median_ratio),
                "per_window_max": reals(&s.per_window_max),
                "growth_factors": reals(&s.growth_factors),
                "stable": s.stable,
                "monotone_growth": s.monotone_growth,
                "invariant_violations": s.invariant_violations,
                "extras": extras,
                "notes": s.notes,
            },
            "violations": self.violations,
            "provenance": {
                "experiment": self.provenance.experiment,
                "seed": self.provenance.seed,
                "trials": self.provenance.trials,
                "version": self.provenance.version,
                "config": self.provenance.config,
            },
        })
    }
}

/// Shortest round-trip decimal; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_real(x))
    }
}

fn with_suffix(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<path>.csv` and `<path>.json`; returns both paths.
pub fn emit_report(r: &Report, path: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let csv_path = with_suffix(path, "csv");
    let json_path = with_suffix(path, "json");
    r.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    let mut text = serde_json::to_string_pretty(&r.to_json())?;
    text.push('\n');
    std::fs::write(&json_path, text)?;
    Ok((csv_path, json_path))
}
