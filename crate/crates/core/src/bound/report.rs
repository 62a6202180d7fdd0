//! Assembly of `J1 + J2 + 1 + J3` into a [`BoundReport`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::integrals::{integrals_i, package_i4_ln, BoundMode, I4Package, Integrals};
use super::params::{
    compute_parameters, regime_check, BoundParameters, ConstantsLedger, LedgerEntry, RegimeCheck,
};
use crate::codec::PrecisionProfile;
use crate::error::Result;
use crate::lattice::DEFAULT_SPECTRUM_BUDGET;
use crate::numeric::{extended_f64, log_sum_exp};
use crate::special::log_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominantTerm {
    J1J2,
    J3,
}

impl DominantTerm {
    pub fn as_str(self) -> &'static str {
        match self {
            DominantTerm::J1J2 => "J1J2",
            DominantTerm::J3 => "J3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParameters,
    pub mode: BoundMode,
    #[serde(rename = "I1", with = "extended_f64")]
    pub i1: f64,
    #[serde(rename = "I2", with = "extended_f64")]
    pub i2: f64,
    #[serde(rename = "I3", with = "extended_f64")]
    pub i3: f64,
    #[serde(rename = "I4", with = "extended_f64")]
    pub i4: f64,
    pub integrals: Integrals,
    pub i4_package: I4Package,
    /// `ln J1`, `ln J2`, `ln J3`.
    pub ln_j1: f64,
    pub ln_j2: f64,
    #[serde(with = "extended_f64")]
    pub ln_j3: f64,
    /// `ln(J1 + J2 + 1 + J3)`.
    pub total_log_bound: f64,
    /// `ln` of the ellipsoid volume `pi^(k/2) R^k / (eps_geom^k Gamma(k/2+1))`.
    pub volume_log: f64,
    /// `total_log_bound / k`.
    pub normalized: f64,
    /// `(total_log_bound - volume_log) / k`.
    pub c_eff: f64,
    /// `normalized - (ln R - ln eps_geom - ln(k)/2)`.
    pub residual: f64,
    /// The alternate-regime shape `(k-1)/(2k) ln R - ln eps_geom`.
    pub alt_shape: f64,
    /// `normalized - ln(tau)/k`, when an exact count was supplied.
    pub residual_vs_exact: Option<f64>,
    pub regime: RegimeCheck,
    /// Main regime and `x + rho z <= c5 x`.
    pub regime_ok: bool,
    pub c5_ok: bool,
    pub dominant_term: DominantTerm,
    pub ledger: Vec<LedgerEntry>,
    pub warnings: Vec<String>,
}

impl BoundReport {
    /// Records an exact `ln tau` for comparison.
    pub fn with_exact(mut self, ln_tau: f64) -> Self {
        self.residual_vs_exact = Some(self.normalized - ln_tau / self.params.kf());
        self
    }

    /// Whether `exp(total_log_bound) >= tau`.
    pub fn dominates(&self, ln_tau: f64) -> bool {
        self.total_log_bound >= ln_tau
    }
}

/// `ln R - ln eps_geom - ln(k)/2`.
pub fn theorem_shape(k: usize, r: f64, eps_geom: f64) -> f64 {
    r.ln() - eps_geom.ln() - 0.5 * (k as f64).ln()
}

/// `(k/2) ln pi + k ln R - k ln eps_geom - ln Gamma(k/2 + 1)`.
pub fn volume_log(k: usize, r: f64, eps_geom: f64) -> Result<f64> {
    let kf = k as f64;
    Ok(kf / 2.0 * PI.ln() + kf * r.ln() - kf * eps_geom.ln() - log_gamma(kf / 2.0 + 1.0)?)
}

/// Builds the report from parameters and the packaged `I4`.
pub fn bound_terms(
    p: &BoundParameters,
    integrals: &Integrals,
    i4: &I4Package,
    ledger: &ConstantsLedger,
) -> Result<BoundReport> {
    let kf = p.kf();
    let rf = p.rho_f();
    let c5 = p.constants.c5;
    let ln_eps = p.eps_geom.ln();
    let ln_j1 = volume_log(p.k, p.r, p.eps_geom)?;
    let ln_j2 = ln_j1 + (rf * p.z * kf / 2.0).ln() + (kf / 2.0 - 1.0) * c5.ln() - p.x.ln();
    let ln_j3 = (kf - 1.0) / 4.0 * (c5.ln() + p.x.ln()) + i4.ln_i4
        - 0.5 * (2.0 * PI).ln()
        - kf * ln_eps
        - rf * PI.ln()
        - rf * p.z.ln();
    let total = log_sum_exp(&[ln_j1, ln_j2, 0.0, ln_j3]);
    let regime = regime_check(p.k, p.r, ledger);
    let c5_ok = p.c5_holds();
    let mut warnings = Vec::new();
    if !c5_ok {
        warnings.push(format!(
            "x + rho z = {} exceeds c5 x = {}",
            p.x_end(),
            c5 * p.x
        ));
    }
    if p.sigma_below_minimum() {
        warnings.push(format!(
            "sigma_c = {} is below 1.5 C = {}; the count envelope is not proven",
            p.constants.sigma_c,
            p.constants.sigma_c_minimum()
        ));
    }
    if !p.y_in_band() {
        warnings.push(format!(
            "y = {} is outside [{}, {}]",
            p.y, p.y_lower, p.y_upper
        ));
    }
    let normalized = total / kf;
    Ok(BoundReport {
        params: p.clone(),
        mode: integrals.mode,
        i1: integrals.i1(),
        i2: integrals.i2(),
        i3: integrals.i3(),
        i4: i4.i4(),
        integrals: *integrals,
        i4_package: *i4,
        ln_j1,
        ln_j2,
        ln_j3,
        total_log_bound: total,
        volume_log: ln_j1,
        normalized,
        c_eff: (total - ln_j1) / kf,
        residual: normalized - theorem_shape(p.k, p.r, p.eps_geom),
        alt_shape: (kf - 1.0) / (2.0 * kf) * p.r.ln() - ln_eps,
        residual_vs_exact: None,
        regime,
        regime_ok: regime.main && c5_ok,
        c5_ok,
        dominant_term: if log_sum_exp(&[ln_j1, ln_j2]) >= ln_j3 {
            DominantTerm::J1J2
        } else {
            DominantTerm::J3
        },
        ledger: p.constants.entries(),
        warnings,
    })
}

/// Options for [`evaluate_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Largest dual spectrum enumerated in empirical mode.
    pub spectrum_budget: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            spectrum_budget: DEFAULT_SPECTRUM_BUDGET,
        }
    }
}

/// Parameters, integrals, `I4` and the report for one instance.
pub fn evaluate_bound(
    r: f64,
    profile: &PrecisionProfile,
    ledger: &ConstantsLedger,
    mode: BoundMode,
    opts: &EvalOptions,
) -> Result<BoundReport> {
    let p = compute_parameters(profile.k(), r, profile, ledger)?;
    let integrals = integrals_i(&p, profile, mode, opts.spectrum_budget)?;
    let i4 = package_i4_ln(&p, integrals.ln_i1, integrals.ln_i2, integrals.ln_i3)?;
    bound_terms(&p, &integrals, &i4, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{codebook_size, CountOptions};
    use approx::assert_relative_eq;

    fn certified(k: usize, r: f64, eps: f64) -> BoundReport {
        let prof = PrecisionProfile::uniform(k, eps).unwrap();
        evaluate_bound(
            r,
            &prof,
            &ConstantsLedger::default(),
            BoundMode::CertifiedEnvelope,
            &EvalOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn volume_term_example() {
        let rep = certified(2, 4.0, 1.0);
        assert_relative_eq!(rep.ln_j1, 3.917318608, max_relative = 1e-9);
        assert_eq!(rep.volume_log, rep.ln_j1);
        assert_relative_eq!(rep.volume_log, (16.0 * PI).ln(), max_relative = 1e-14);
    }

    #[test]
    fn volume_identity_in_high_dimension() {
        let prof = PrecisionProfile::uniform(1000, 0.5).unwrap();
        let rep = evaluate_bound(
            50.0,
            &prof,
            &ConstantsLedger::default(),
            BoundMode::CertifiedEnvelope,
            &EvalOptions::default(),
        )
        .unwrap();
        let want =
            500.0 * PI.ln() + 1000.0 * 50f64.ln() + 1000.0 * 2f64.ln() - log_gamma(501.0).unwrap();
        assert!((rep.volume_log - want).abs() <= 1e-10 * want.abs());
        assert!(rep.total_log_bound.is_finite());
    }

    #[test]
    fn second_term_by_hand() {
        let rep = certified(2, 4.0, 1.0);
        let p = &rep.params;
        let j2 = 16.0 * PI * 2.0 * p.z * 1.0 / 16.0;
        assert_relative_eq!(rep.ln_j2, j2.ln(), max_relative = 1e-13);
    }

    #[test]
    fn third_term_by_hand() {
        let rep = certified(3, 5.0, 1.0);
        let p = &rep.params;
        let j3 = (p.constants.c5 * p.x).powf(0.5) * rep.i4
            / ((2.0 * PI).sqrt() * PI.powi(2) * p.z.powi(2));
        assert_relative_eq!(rep.ln_j3, j3.ln(), max_relative = 1e-12);
    }

    #[test]
    fn certified_bound_dominates_exact_counts() {
        for k in 2..=6 {
            for r in [2.0, 3.0, 5.0, 10.0] {
                let prof = PrecisionProfile::uniform(k, 1.0).unwrap();
                let tau = codebook_size(&prof, r, &CountOptions::default()).unwrap();
                let rep = certified(k, r, 1.0).with_exact(tau.ln());
                assert!(rep.dominates(tau.ln()), "k={k} R={r}");
                assert!(rep.residual_vs_exact.unwrap() >= 0.0);
                assert!(rep.c_eff.is_finite());
            }
        }
    }

    #[test]
    fn residual_is_scale_consistent() {
        let a = certified(3, 4.0, 1.0);
        let b = certified(3, 8.0, 2.0);
        assert_relative_eq!(a.volume_log, b.volume_log, max_relative = 1e-13);
    }

    #[test]
    fn empirical_mode_is_tighter() {
        let prof = PrecisionProfile::uniform(3, 1.0).unwrap();
        let l = ConstantsLedger::default();
        let o = EvalOptions::default();
        let c = evaluate_bound(4.0, &prof, &l, BoundMode::CertifiedEnvelope, &o).unwrap();
        let e = evaluate_bound(4.0, &prof, &l, BoundMode::EmpiricalSpectrum, &o).unwrap();
        assert!(e.total_log_bound <= c.total_log_bound);
        assert_eq!(e.mode, BoundMode::EmpiricalSpectrum);
    }

    #[test]
    fn c5_violation_is_reported() {
        let prof = PrecisionProfile::uniform(2, 1.0).unwrap();
        let l = ConstantsLedger {
            c5: Some(1.0),
            ..Default::default()
        };
        let rep = evaluate_bound(
            4.0,
            &prof,
            &l,
            BoundMode::CertifiedEnvelope,
            &EvalOptions::default(),
        )
        .unwrap();
        assert!(!rep.c5_ok);
        assert!(!rep.regime_ok);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn report_serializes_every_intermediate() {
        let rep = certified(2, 4.0, 1.0);
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        for key in [
            "I1", "I2", "I3", "I4", "ln_j1", "ln_j2", "ln_j3", "c_eff", "ledger", "params",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["mode"], "certified_envelope");
        assert_eq!(v["params"]["rho"], 2);
        assert!(v["ledger"]
            .as_array()
            .unwrap()
            .iter()
            .any(|e| e["name"] == "sigma_c"));
    }
}
