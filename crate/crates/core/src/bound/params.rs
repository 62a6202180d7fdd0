//! Derived parameters of the bound and the constants ledger.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::codec::PrecisionProfile;
use crate::error::{Error, Result};
use crate::numeric::{extended_f64, factorial};

/// User-facing constant overrides. Unset entries take their defaults when
/// resolved against an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsLedger {
    /// `c0` in the regime test `k <= c0 R^(1 + 1/k)`; may be infinite.
    #[serde(with = "extended_f64")]
    pub c0_regime: f64,
    /// Balance constant `C`; defaults to the profile's declared or minimal one.
    pub c_balance: Option<f64>,
    /// Coefficient in `sigma = sigma_c max(1, eps_total / k)`; defaults to `1.5 C`.
    pub sigma_c: Option<f64>,
    /// `c5` with `x + rho z <= c5 x`; defaults to `1 + rho z / x`.
    pub c5: Option<f64>,
    /// Lower constant of the alternate regime `c10 R^(1 + 1/k) <= k`.
    pub c10: f64,
    /// Upper constant of the alternate regime `k <= c11 R^2`.
    pub c11: f64,
}

impl Default for ConstantsLedger {
    fn default() -> Self {
        Self {
            c0_regime: 1.0,
            c_balance: None,
            sigma_c: None,
            c5: None,
            c10: 1.0,
            c11: 1.0,
        }
    }
}

/// One resolved ledger entry, as reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    #[serde(with = "extended_f64")]
    pub value: f64,
    pub note: String,
}

/// Every constant resolved to a number for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(with = "extended_f64")]
    pub c0_regime: f64,
    pub c_balance: f64,
    pub sigma_c: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c10: f64,
    pub c11: f64,
}

impl Constants {
    /// Smallest `sigma_c` for which the count envelope is proven.
    pub fn sigma_c_minimum(&self) -> f64 {
        1.5 * self.c_balance
    }

    pub fn entries(&self) -> Vec<LedgerEntry> {
        let e = |name: &str, value: f64, note: &str| LedgerEntry {
            name: name.to_owned(),
            value,
            note: note.to_owned(),
        };
        vec![
            e(
                "c0_regime",
                self.c0_regime,
                "regime k <= c0 R^(1+1/k); default 1",
            ),
            e(
                "C_balance",
                self.c_balance,
                "eps_i <= C eps_total/k; declared or minimal for the profile",
            ),
            e(
                "sigma_c",
                self.sigma_c,
                "sigma = sigma_c max(1, eps_total/k); box argument needs >= 1.5 C",
            ),
            e("c3", self.c3, "y >= c3 x^(1-2/(k+1)); exact value 4/pi^2"),
            e("c4", self.c4, "y <= c4 x^(1-2/(k+1)); 4 c5/pi^2"),
            e("c5", self.c5, "x + rho z <= c5 x; default 1 + rho z/x"),
            e(
                "c6",
                self.c6,
                "I1 <= c6 2^k sigma^k y^(k/4-1/4); closed form 4/(k-1)",
            ),
            e(
                "c7",
                self.c7,
                "I2 <= c7 2^k sigma^k y^(k/4-1/4); closed form 1",
            ),
            e(
                "c8",
                self.c8,
                "I3 <= c8 2^k sigma^k y^(k/4-rho/2-1/4); closed form 1/(rho/2+1/4-k/4)",
            ),
            e("c10", self.c10, "alternate regime lower constant"),
            e("c11", self.c11, "alternate regime upper constant"),
        ]
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ConstantsLedger {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0_regime > 0.0) {
            return Err(Error::invalid(format!(
                "c0_regime must be positive, got {}",
                self.c0_regime
            )));
        }
        if let Some(c) = self.c_balance {
            if !(c >= 1.0 && c.is_finite()) {
                return Err(Error::invalid(format!("C_balance must be >= 1, got {c}")));
            }
        }
        if let Some(s) = self.sigma_c {
            positive("sigma_c", s)?;
        }
        if let Some(c5) = self.c5 {
            if !(c5 >= 1.0 && c5.is_finite()) {
                return Err(Error::invalid(format!("c5 must be >= 1, got {c5}")));
            }
        }
        positive("c10", self.c10)?;
        positive("c11", self.c11)?;
        Ok(())
    }

    /// Fills every unset constant for the instance `(k, R, profile)`.
    pub fn resolve(&self, k: usize, r: f64, profile: &PrecisionProfile) -> Result<Constants> {
        self.validate()?;
        let needed = profile.minimal_balance_constant();
        let c_balance = match self.c_balance {
            Some(c) if c < needed * (1.0 - 1e-12) => {
                return Err(Error::invalid(format!(
                    "C_balance {c} is below the profile's minimal balance constant {needed}"
                )))
            }
            Some(c) => c,
            None => profile.effective_balance_constant(),
        };
        let kf = k as f64;
        let rho = rho_for(k);
        let rf = f64::from(rho);
        let x = r * r;
        let z = x.powf(1.0 / (kf + 1.0));
        let c5 = self.c5.unwrap_or(1.0 + rf * z / x);
        Ok(Constants {
            c0_regime: self.c0_regime,
            c_balance,
            sigma_c: self.sigma_c.unwrap_or(1.5 * c_balance),
            c3: 4.0 / (PI * PI),
            c4: 4.0 * c5 / (PI * PI),
            c5,
            c6: 4.0 / (kf - 1.0),
            c7: 1.0,
            c8: 1.0 / (rf / 2.0 + 0.25 - kf / 4.0),
            c10: self.c10,
            c11: self.c11,
        })
    }
}

/// `rho = floor(k/2 + 1)`.
pub fn rho_for(k: usize) -> u32 {
    u32::try_from(k / 2 + 1).expect("dimension fits in u32")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParameters {
    pub k: usize,
    pub r: f64,
    pub x: f64,
    pub rho: u32,
    pub z: f64,
    pub y: f64,
    pub sigma: f64,
    pub gamma_coef: f64,
    pub eta: f64,
    /// `D^(-1/2) pi^(-k/2)`; may underflow, see `ln_c_landau`.
    pub c_landau: f64,
    pub ln_c_landau: f64,
    pub zeta_zero: f64,
    pub eps_geom: f64,
    pub eps_total: f64,
    /// Both sides of `c3 x^(1-2/(k+1)) <= y <= c4 x^(1-2/(k+1))`.
    pub y_lower: f64,
    pub y_upper: f64,
    pub constants: Constants,
}

impl BoundParameters {
    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    pub fn rho_f(&self) -> f64 {
        f64::from(self.rho)
    }

    /// `x + rho z`, the right end of the difference stencil.
    pub fn x_end(&self) -> f64 {
        self.x + self.rho_f() * self.z
    }

    /// Whether `c3 x^(1-2/(k+1)) <= y <= c4 x^(1-2/(k+1))` holds.
    pub fn y_in_band(&self) -> bool {
        self.y_lower <= self.y * (1.0 + 1e-12) && self.y <= self.y_upper * (1.0 + 1e-12)
    }

    /// Whether `x + rho z <= c5 x` holds with the ledger's `c5`.
    pub fn c5_holds(&self) -> bool {
        self.x_end() <= self.constants.c5 * self.x * (1.0 + 1e-12)
    }

    pub fn sigma_below_minimum(&self) -> bool {
        self.constants.sigma_c < self.constants.sigma_c_minimum() * (1.0 - 1e-12)
    }

    /// The order `k/2 + rho` of the Bessel functions in the series.
    pub fn bessel_order(&self) -> f64 {
        self.kf() / 2.0 + self.rho_f()
    }
}

pub fn compute_parameters(
    k: usize,
    r: f64,
    profile: &PrecisionProfile,
    ledger: &ConstantsLedger,
) -> Result<BoundParameters> {
    if k < 2 {
        return Err(Error::invalid(format!("the bound needs k >= 2, got {k}")));
    }
    if !(r >= 2.0 && r.is_finite()) {
        return Err(Error::invalid(format!("the bound needs R >= 2, got {r}")));
    }
    if profile.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: profile.k(),
        });
    }
    let constants = ledger.resolve(k, r, profile)?;
    let kf = k as f64;
    let rho = rho_for(k);
    let rf = f64::from(rho);
    let x = r * r;
    let z = x.powf(1.0 / (kf + 1.0));
    let y = 4.0 * (x + rf * z) / (PI * PI * z * z);
    let eps_total = profile.eps_total();
    let eps_geom = profile.eps_geom();
    let ln_c_landau = -kf * eps_geom.ln() - kf / 2.0 * PI.ln();
    let shape = x.powf(1.0 - 2.0 / (kf + 1.0));
    Ok(BoundParameters {
        k,
        r,
        x,
        rho,
        z,
        y,
        sigma: constants.sigma_c * (eps_total / kf).max(1.0),
        gamma_coef: 1.0,
        eta: -1.0 / factorial(rho),
        c_landau: ln_c_landau.exp(),
        ln_c_landau,
        zeta_zero: -1.0,
        eps_geom,
        eps_total,
        y_lower: constants.c3 * shape,
        y_upper: constants.c4 * shape,
        constants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `k <= c0 R^(1+1/k)`: the volume terms dominate.
    Main,
    /// `c10 R^(1+1/k) <= k <= c11 R^2`, outside the main regime.
    Alternate,
    Outside,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Main => "main",
            Regime::Alternate => "alternate",
            Regime::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub main: bool,
    pub alternate: bool,
    pub regime: Regime,
    /// `R^(1 + 1/k)`.
    pub scale: f64,
}

pub fn regime_check(k: usize, r: f64, ledger: &ConstantsLedger) -> RegimeCheck {
    let kf = k as f64;
    let scale = r.powf(1.0 + 1.0 / kf);
    let main = ledger.c0_regime == f64::INFINITY || kf <= ledger.c0_regime * scale;
    let alternate = ledger.c10 * scale <= kf && kf <= ledger.c11 * r * r;
    let regime = if main {
        Regime::Main
    } else if alternate {
        Regime::Alternate
    } else {
        Regime::Outside
    };
    RegimeCheck {
        main,
        alternate,
        regime,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(k: usize) -> PrecisionProfile {
        PrecisionProfile::uniform(k, 1.0).unwrap()
    }

    #[test]
    fn parameter_examples() {
        let p = compute_parameters(2, 4.0, &unit(2), &ConstantsLedger::default()).unwrap();
        assert_eq!(p.rho, 2);
        assert_relative_eq!(p.z, 2.51984209978974632953, max_relative = 1e-12);
        assert_relative_eq!(p.y, 1.34292824357098383913, max_relative = 1e-12);
        let p = compute_parameters(2, 2.0, &unit(2), &ConstantsLedger::default()).unwrap();
        assert_relative_eq!(p.z, 1.58740105196819947475, max_relative = 1e-12);
        assert_relative_eq!(p.y, 1.15397618228702222937, max_relative = 1e-12);
        assert_eq!(rho_for(3), 2);
        assert_eq!(rho_for(4), 3);
        assert_eq!(p.eta, -0.5);
        assert_eq!(p.gamma_coef, 1.0);
        assert_eq!(p.zeta_zero, -1.0);
        assert_relative_eq!(p.c_landau, 1.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn sigma_and_defaults() {
        let p = compute_parameters(2, 4.0, &unit(2), &ConstantsLedger::default()).unwrap();
        assert_eq!(p.constants.c_balance, 1.0);
        assert_eq!(p.sigma, 1.5);
        assert!(!p.sigma_below_minimum());
        assert!(p.c5_holds());
        let skewed = PrecisionProfile::new(vec![1.0, 4.0]).unwrap();
        let p = compute_parameters(2, 4.0, &skewed, &ConstantsLedger::default()).unwrap();
        // C = 2.5, eps_total / k = 2.5.
        assert_relative_eq!(p.sigma, 1.5 * 2.5 * 2.5, max_relative = 1e-15);
        let low = ConstantsLedger {
            c_balance: Some(1.2),
            ..Default::default()
        };
        assert!(compute_parameters(2, 4.0, &skewed, &low).is_err());
        let broken = ConstantsLedger {
            sigma_c: Some(0.01),
            ..Default::default()
        };
        assert!(compute_parameters(2, 4.0, &unit(2), &broken)
            .unwrap()
            .sigma_below_minimum());
    }

    #[test]
    fn y_stays_in_band() {
        for k in 2..=30 {
            for r in [2.0, 3.5, 20.0, 1e3] {
                let p = compute_parameters(k, r, &unit(k), &ConstantsLedger::default()).unwrap();
                assert!(p.y_in_band(), "k={k} R={r}");
                assert!(p.c5_holds());
            }
        }
    }

    #[test]
    fn rejects_outside_hypotheses() {
        let l = ConstantsLedger::default();
        assert!(compute_parameters(1, 4.0, &unit(1), &l).is_err());
        assert!(compute_parameters(2, 1.5, &unit(2), &l).is_err());
        assert!(matches!(
            compute_parameters(3, 4.0, &unit(2), &l),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regime_examples() {
        let l = ConstantsLedger::default();
        assert!(regime_check(5, 20.0, &l).main);
        let c = regime_check(100, 2.0, &l);
        assert!(!c.main);
        assert_eq!(c.regime, Regime::Outside);
        let c = regime_check(20, 5.0, &l);
        assert_eq!(c.regime, Regime::Alternate);
        let inf = ConstantsLedger {
            c0_regime: f64::INFINITY,
            ..Default::default()
        };
        assert!(regime_check(1_000_000, 2.0, &inf).main);
    }

    #[test]
    fn ledger_json_round_trip() {
        let l = ConstantsLedger {
            c0_regime: f64::INFINITY,
            sigma_c: Some(2.0),
            ..Default::default()
        };
        let text = serde_json::to_string(&l).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<ConstantsLedger>(&text).unwrap(), l);
        let partial: ConstantsLedger = serde_json::from_str(r#"{"c5": 1.5}"#).unwrap();
        assert_eq!(partial.c5, Some(1.5));
        assert_eq!(partial.c0_regime, 1.0);
        assert!(serde_json::from_str::<ConstantsLedger>(r#"{"c99": 1}"#).is_err());
    }
}
