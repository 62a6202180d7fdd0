//! Result rows and their CSV / JSON encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Version written in the first line of every CSV table.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The instance violates a hypothesis of the bound.
    Skipped,
    /// A count or spectrum did not fit its budget.
    BudgetExceeded,
    Error,
}

/// One instance (and, for bounds, one mode) of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub k: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub eps_geom: f64,
    pub eps_total: f64,
    pub mode: Option<String>,
    pub tau_exact: Option<String>,
    pub count_scheme: Option<String>,
    pub ln_tau_over_k: Option<f64>,
    /// `ln(tau)/k - (ln R - ln eps_geom - ln(k)/2)`.
    pub tau_residual: Option<f64>,
    pub normalized_bound: Option<f64>,
    /// `normalized_bound - (ln R - ln eps_geom - ln(k)/2)`.
    pub residual: Option<f64>,
    #[serde(rename = "C_eff")]
    pub c_eff: Option<f64>,
    /// `(k-1)/(2k) ln R - ln eps_geom`, for rows in the alternate regime.
    pub alt_shape: Option<f64>,
    pub alt_residual: Option<f64>,
    pub regime: String,
    pub dominant_term: Option<String>,
    pub bound_holds: Option<bool>,
    pub status: RowStatus,
    pub reason: Option<String>,
    pub runtime_ms: Option<f64>,
}

impl ResultRow {
    pub fn new(k: usize, r: f64, eps_geom: f64, eps_total: f64, regime: &str) -> Self {
        Self {
            k,
            r,
            eps_geom,
            eps_total,
            mode: None,
            tau_exact: None,
            count_scheme: None,
            ln_tau_over_k: None,
            tau_residual: None,
            normalized_bound: None,
            residual: None,
            c_eff: None,
            alt_shape: None,
            alt_residual: None,
            regime: regime.to_owned(),
            dominant_term: None,
            bound_holds: None,
            status: RowStatus::Ok,
            reason: None,
            runtime_ms: None,
        }
    }
}

/// Writes rows as CSV, preceded by a `# schema_version=N` line.
pub fn write_rows_csv<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(w);
    if rows.is_empty() {
        // serde-driven headers need at least one record.
        wtr.write_record(HEADER)?;
    }
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, w: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_rows_csv(rows, w),
        OutputFormat::Json => write_json(&rows, w),
    }
}

const HEADER: [&str; 20] = [
    "k",
    "R",
    "eps_geom",
    "eps_total",
    "mode",
    "tau_exact",
    "count_scheme",
    "ln_tau_over_k",
    "tau_residual",
    "normalized_bound",
    "residual",
    "C_eff",
    "alt_shape",
    "alt_residual",
    "regime",
    "dominant_term",
    "bound_holds",
    "status",
    "reason",
    "runtime_ms",
];
