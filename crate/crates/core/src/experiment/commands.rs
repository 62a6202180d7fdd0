//! The `count`, `bound` and `sweep` commands.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Instance};
use super::rows::{ResultRow, RowStatus};
use crate::bound::{
    evaluate_bound, regime_check, theorem_shape, BoundMode, BoundReport, ConstantsLedger,
    DominantTerm, Regime,
};
use crate::error::{Error, Result};
use crate::lattice::{codebook_size, CountResult};

/// Settings that affect output but not results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Fill `runtime_ms`; off by default so output is reproducible byte for byte.
    pub timings: bool,
}

fn base_row(inst: &Instance, ledger: &ConstantsLedger) -> ResultRow {
    let regime = regime_check(inst.k, inst.r, ledger).regime;
    ResultRow::new(
        inst.k,
        inst.r,
        inst.profile.eps_geom(),
        inst.profile.eps_total(),
        regime.as_str(),
    )
}

fn fill_count(row: &mut ResultRow, inst: &Instance, count: &Result<CountResult>) {
    match count {
        Ok(c) => {
            let per_k = c.ln() / inst.k as f64;
            row.tau_exact = Some(c.count.to_string());
            row.count_scheme = Some(
                match c.scheme {
                    crate::lattice::CountScheme::IntegerDp => "integer_dp",
                    crate::lattice::CountScheme::Recursive => "recursive",
                }
                .to_owned(),
            );
            row.ln_tau_over_k = Some(per_k);
            row.tau_residual = Some(per_k - theorem_shape(inst.k, inst.r, inst.profile.eps_geom()));
        }
        Err(e @ Error::BudgetExceeded { .. }) => {
            row.status = RowStatus::BudgetExceeded;
            row.reason = Some(e.to_string());
        }
        Err(e) => {
            row.status = RowStatus::Error;
            row.reason = Some(e.to_string());
        }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Exact `tau(k)` for every instance.
pub fn cmd_count(cfg: &ExperimentConfig, run: RunOptions) -> Result<Vec<ResultRow>> {
    let opts = cfg.count_options();
    let instances = cfg.instances()?;
    Ok(instances
        .par_iter()
        .map(|inst| {
            let start = Instant::now();
            let mut row = base_row(inst, &cfg.ledger);
            fill_count(&mut row, inst, &codebook_size(&inst.profile, inst.r, &opts));
            if run.timings {
                row.runtime_ms = Some(elapsed_ms(start));
            }
            row
        })
        .collect())
}

/// The ledger with an unset `c5` raised to the largest `1 + rho z / x` over
/// the instances that satisfy the hypotheses.
pub fn sweep_ledger(cfg: &ExperimentConfig, instances: &[Instance]) -> ConstantsLedger {
    let mut ledger = cfg.ledger.clone();
    if ledger.c5.is_none() {
        ledger.c5 = instances
            .iter()
            .filter(|i| i.k >= 2 && i.r >= 2.0)
            .map(|i| {
                let kf = i.k as f64;
                let x = i.r * i.r;
                let rho = (i.k / 2 + 1) as f64;
                1.0 + rho * x.powf(1.0 / (kf + 1.0)) / x
            })
            .reduce(f64::max);
    }
    ledger
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub rows: Vec<ResultRow>,
    pub reports: Vec<BoundReport>,
    /// Certified rows whose bound is below the exact count.
    pub violations: usize,
}

fn bound_rows(
    cfg: &ExperimentConfig,
    inst: &Instance,
    ledger: &ConstantsLedger,
    run: RunOptions,
) -> Vec<(ResultRow, Option<BoundReport>)> {
    let modes = cfg.mode.modes();
    if inst.k < 2 || inst.r < 2.0 {
        return modes
            .iter()
            .map(|m| {
                let mut row = base_row(inst, ledger);
                row.mode = Some(m.as_str().to_owned());
                row.status = RowStatus::Skipped;
                row.reason = Some("the bound needs k >= 2 and R >= 2".to_owned());
                (row, None)
            })
            .collect();
    }
    let start = Instant::now();
    let count = codebook_size(&inst.profile, inst.r, &cfg.count_options());
    let count_ms = elapsed_ms(start);
    modes
        .iter()
        .map(|&mode| {
            let start = Instant::now();
            let mut row = base_row(inst, ledger);
            row.mode = Some(mode.as_str().to_owned());
            fill_count(&mut row, inst, &count);
            let report =
                match evaluate_bound(inst.r, &inst.profile, ledger, mode, &cfg.eval_options()) {
                    Ok(rep) => {
                        let rep = match &count {
                            Ok(c) => rep.with_exact(c.ln()),
                            Err(_) => rep,
                        };
                        row.normalized_bound = Some(rep.normalized);
                        row.residual = Some(rep.residual);
                        row.c_eff = Some(rep.c_eff);
                        row.dominant_term = Some(rep.dominant_term.as_str().to_owned());
                        if rep.regime.regime == Regime::Alternate {
                            row.alt_shape = Some(rep.alt_shape);
                            row.alt_residual = Some(rep.normalized - rep.alt_shape);
                        }
                        if let Ok(c) = &count {
                            row.bound_holds = Some(rep.dominates(c.ln()));
                        }
                        if !rep.warnings.is_empty() && row.reason.is_none() {
                            row.reason = Some(rep.warnings.join("; "));
                        }
                        Some(rep)
                    }
                    Err(e) => {
                        row.status = match e {
                            Error::BudgetExceeded { .. } => RowStatus::BudgetExceeded,
                            _ => RowStatus::Error,
                        };
                        row.reason = Some(e.to_string());
                        None
                    }
                };
            if run.timings {
                row.runtime_ms = Some(count_ms + elapsed_ms(start));
            }
            (row, report)
        })
        .collect()
}

fn collect_bounds(cfg: &ExperimentConfig, run: RunOptions) -> Result<BoundOutput> {
    let instances = cfg.instances()?;
    let ledger = sweep_ledger(cfg, &instances);
    let pairs: Vec<_> = instances
        .par_iter()
        .map(|inst| bound_rows(cfg, inst, &ledger, run))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let violations = pairs
        .iter()
        .filter(|(row, _)| row.mode.as_deref() == Some(BoundMode::CertifiedEnvelope.as_str()))
        .filter(|(row, _)| row.bound_holds == Some(false))
        .count();
    let (rows, reports): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(BoundOutput {
        rows,
        reports: reports.into_iter().flatten().collect(),
        violations,
    })
}

/// Full bound reports with exact counts where the budget allows.
pub fn cmd_bound(cfg: &ExperimentConfig, run: RunOptions) -> Result<BoundOutput> {
    collect_bounds(cfg, run)
}

/// Where the dominant term first switches to `J3` along `k` at fixed `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    #[serde(rename = "R")]
    pub r: f64,
    pub mode: String,
    /// Smallest swept `k` with `J3` dominant.
    pub k_flip: Option<usize>,
    /// Smallest `k` with `k >= c10 R^(1+1/k)`.
    pub k_boundary: Option<usize>,
    /// `k_flip / k_boundary` lies in `[1/2, 2]`.
    pub within_factor_two: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub residual_min: Option<f64>,
    pub residual_max: Option<f64>,
    pub tau_residual_min: Option<f64>,
    pub tau_residual_max: Option<f64>,
    pub violations: usize,
    pub crossovers: Vec<Crossover>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: SweepSummary,
}

fn band(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    values.fold((None, None), |(lo, hi), v| {
        (
            Some(lo.map_or(v, |l: f64| l.min(v))),
            Some(hi.map_or(v, |h: f64| h.max(v))),
        )
    })
}

/// Bound rows for every instance plus the residual band and crossovers.
pub fn cmd_sweep(cfg: &ExperimentConfig, run: RunOptions) -> Result<SweepOutput> {
    let out = collect_bounds(cfg, run)?;
    let (residual_min, residual_max) = band(out.rows.iter().filter_map(|r| r.residual));
    let (tau_residual_min, tau_residual_max) = band(
        out.rows
            .iter()
            .filter(|r| r.mode.as_deref() != Some(BoundMode::EmpiricalSpectrum.as_str()))
            .filter_map(|r| r.tau_residual),
    );
    let mut crossovers = Vec::new();
    for &r in &cfg.r_list {
        for mode in cfg.mode.modes() {
            let mut ks: Vec<(usize, &str)> = out
                .rows
                .iter()
                .filter(|row| row.r == r && row.mode.as_deref() == Some(mode.as_str()))
                .filter_map(|row| row.dominant_term.as_deref().map(|d| (row.k, d)))
                .collect();
            if ks.is_empty() {
                continue;
            }
            ks.sort_unstable();
            let k_flip = ks
                .iter()
                .find(|(_, d)| *d == DominantTerm::J3.as_str())
                .map(|(k, _)| *k);
            let k_boundary = ks
                .iter()
                .map(|(k, _)| *k)
                .find(|&k| regime_check(k, r, &cfg.ledger).scale * cfg.ledger.c10 <= k as f64);
            let within = match (k_flip, k_boundary) {
                (Some(f), Some(b)) => Some((0.5..=2.0).contains(&(f as f64 / b as f64))),
                _ => None,
            };
            crossovers.push(Crossover {
                r,
                mode: mode.as_str().to_owned(),
                k_flip,
                k_boundary,
                within_factor_two: within,
            });
        }
    }
    Ok(SweepOutput {
        summary: SweepSummary {
            rows: out.rows.len(),
            residual_min,
            residual_max,
            tau_residual_min,
            tau_residual_max,
            violations: out.violations,
            crossovers,
        },
        rows: out.rows,
    })
}
