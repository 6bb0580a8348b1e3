//! Report files: CSV tables for calibrations, smiles and prices, and the
//! matching JSON documents. Floats are written in shortest round-trip form
//! so that seeded runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationReport, REPORT_SCHEMA_VERSION};
use crate::error::{Result, SabrError};
use crate::mc::PriceEstimate;
use crate::params::SabrModel;

/// Calibration report as CSV: a `key,value` header, the parameter vector,
/// then one row per quote grouped by maturity.
pub fn report_to_csv(report: &CalibrationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema_version,{}", report.schema_version);
    let kind = serde_json::to_value(report.model).expect("model kinds serialize");
    let _ = writeln!(out, "model,{}", kind.as_str().unwrap_or_default());
    let _ = writeln!(out, "technique,{}", report.technique.label());
    let _ = writeln!(out, "target,{}", report.technique.target());
    let _ = writeln!(out, "seed,{}", report.seed);
    let _ = writeln!(out, "evals,{}", report.evals);
    let _ = writeln!(out, "nan_evals,{}", report.nan_evals);
    let _ = writeln!(out, "final_cost,{}", report.final_cost);
    let _ = writeln!(out, "mean_rel_error,{}", report.mean_rel_error);
    let _ = writeln!(out, "max_rel_error,{}", report.max_rel_error);
    let names = report.model.parameter_names();
    for (name, value) in names.iter().zip(report.params.to_vector()) {
        let fixed = if report.fixed.iter().any(|f| f == name) { ",fixed" } else { "" };
        let _ = writeln!(out, "param,{name},{value}{fixed}");
    }
    out.push_str("maturity,strike,market,model,rel_error\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.maturity, r.strike, r.market, r.model, r.rel_error);
    }
    out
}

pub fn report_to_json(report: &CalibrationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`, creating it.
pub fn write_report(dir: &Path, stem: &str, report: &CalibrationReport) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&csv, report_to_csv(report))?;
    std::fs::write(&json, report_to_json(report))?;
    Ok((csv, json))
}

pub fn read_report_json(path: &Path) -> Result<CalibrationReport> {
    let text = std::fs::read_to_string(path)?;
    let report: CalibrationReport = serde_json::from_str(&text).map_err(|e| SabrError::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(SabrError::Parse {
            line: 1,
            message: format!("unsupported report schema_version {}", report.schema_version),
        });
    }
    Ok(report)
}

/// One row of a smile file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub maturity: f64,
    pub strike: f64,
    pub forward: f64,
    pub vol: f64,
    /// Black-Scholes price of `vol`, when requested.
    pub price: Option<f64>,
}

pub fn smile_to_csv(points: &[SmilePoint]) -> String {
    let with_prices = points.iter().any(|p| p.price.is_some());
    let mut out = String::from("maturity,strike,forward,vol");
    out.push_str(if with_prices { ",price\n" } else { "\n" });
    for p in points {
        let _ = write!(out, "{},{},{},{}", p.maturity, p.strike, p.forward, p.vol);
        match (with_prices, p.price) {
            (true, Some(v)) => {
                let _ = writeln!(out, ",{v}");
            }
            (true, None) => out.push_str(",\n"),
            _ => out.push('\n'),
        }
    }
    out
}

/// Output of the `price` command. Wall time is reported on the terminal
/// only, so the file depends on the inputs alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub schema_version: u32,
    pub params: SabrModel,
    pub contract: String,
    pub value: f64,
    pub std_error: f64,
    pub num_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl PriceReport {
    pub fn new(params: SabrModel, contract: impl Into<String>, estimate: &PriceEstimate, dt: f64, seed: u64) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            params,
            contract: contract.into(),
            value: estimate.value,
            std_error: estimate.std_error,
            num_paths: estimate.num_paths,
            dt,
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("price reports serialize");
        s.push('\n');
        s
    }
}
