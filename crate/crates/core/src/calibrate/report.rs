use serde::{Deserialize, Serialize};

use super::VolSurface;
use crate::error::{Result, SabrError};
use crate::params::{ModelKind, SabrModel};

/// Bumped whenever the serialized report layout changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Technique {
    /// Implied-vol formula objective, fitted in vols.
    #[serde(rename = "T_I")]
    Formula,
    /// Monte Carlo objective, fitted in prices.
    #[serde(rename = "T_II")]
    MonteCarlo,
}

impl Technique {
    pub fn label(self) -> &'static str {
        match self {
            Technique::Formula => "T_I",
            Technique::MonteCarlo => "T_II",
        }
    }

    pub fn target(self) -> &'static str {
        match self {
            Technique::Formula => "vol",
            Technique::MonteCarlo => "price",
        }
    }
}

impl std::str::FromStr for Technique {
    type Err = SabrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T_I" | "TI" | "FORMULA" => Ok(Technique::Formula),
            "T_II" | "TII" | "MONTE_CARLO" | "MC" => Ok(Technique::MonteCarlo),
            other => Err(SabrError::Config(format!("unknown technique `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub maturity: f64,
    pub strike: f64,
    pub market: f64,
    pub model: f64,
    /// `|market − model| / market`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub technique: Technique,
    pub params: SabrModel,
    /// Names of parameters held fixed during the search.
    pub fixed: Vec<String>,
    pub seed: u64,
    pub evals: usize,
    pub nan_evals: usize,
    pub final_cost: f64,
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
    pub rows: Vec<ReportRow>,
    /// Kept out of report files so that seeded runs reproduce them exactly.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Mean and max of the rows' relative errors.
pub fn aggregate(rows: &[ReportRow]) -> (f64, f64) {
    if rows.is_empty() {
        return (0.0, 0.0);
    }
    let sum: f64 = rows.iter().map(|r| r.rel_error).sum();
    let max = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    (sum / rows.len() as f64, max)
}

/// Flattens per-slice market and model values into report rows.
pub fn build_rows(surface: &VolSurface, market: &[Vec<f64>], model: &[Vec<f64>]) -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(surface.num_quotes());
    for ((s, m), v) in surface.slices.iter().zip(market).zip(model) {
        for ((q, &mk), &md) in s.quotes.iter().zip(m).zip(v) {
            rows.push(ReportRow {
                maturity: s.maturity,
                strike: q.strike,
                market: mk,
                model: md,
                rel_error: ((mk - md) / mk).abs(),
            });
        }
    }
    rows
}

impl CalibrationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        technique: Technique,
        params: SabrModel,
        fixed: Vec<String>,
        seed: u64,
        evals: usize,
        nan_evals: usize,
        final_cost: f64,
        rows: Vec<ReportRow>,
        wall_time_s: f64,
    ) -> Self {
        let (mean_rel_error, max_rel_error) = aggregate(&rows);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            model: params.kind(),
            technique,
            params,
            fixed,
            seed,
            evals,
            nan_evals,
            final_cost,
            mean_rel_error,
            max_rel_error,
            rows,
            wall_time_s,
        }
    }

    /// True when the stored aggregates match those recomputed from the rows.
    pub fn is_consistent(&self) -> bool {
        let (mean, max) = aggregate(&self.rows);
        mean == self.mean_rel_error && max == self.max_rel_error
    }
}
