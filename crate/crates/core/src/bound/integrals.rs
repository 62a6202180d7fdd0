//! The integrals `I1`, `I2`, `I3` over the dual counting function and their
//! packaging into `I4`, all in the log domain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::abel::{lambda_at_count, power_integral, CountEnvelope};
use super::params::BoundParameters;
use crate::codec::PrecisionProfile;
use crate::error::{Error, Result};
use crate::lattice::{spectrum_with_budget, DiagonalForm, FormKind, Spectrum};
use crate::numeric::{extended_f64, log_sum_exp};
use crate::special::envelope_f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `G` replaced by its envelope everywhere.
    CertifiedEnvelope,
    /// `G` from the exact dual spectrum, envelope past its cutoff.
    EmpiricalSpectrum,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::CertifiedEnvelope => "certified_envelope",
            BoundMode::EmpiricalSpectrum => "empirical_spectrum",
        }
    }
}

/// `ln I1`, `ln I2`, `ln I3`; `-inf` encodes a zero integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    pub mode: BoundMode,
    #[serde(with = "extended_f64")]
    pub ln_i1: f64,
    #[serde(with = "extended_f64")]
    pub ln_i2: f64,
    #[serde(with = "extended_f64")]
    pub ln_i3: f64,
    /// Cutoff of the dual spectrum used in empirical mode.
    pub spectrum_cutoff: Option<f64>,
}

impl Integrals {
    pub fn i1(&self) -> f64 {
        self.ln_i1.exp()
    }

    pub fn i2(&self) -> f64 {
        self.ln_i2.exp()
    }

    pub fn i3(&self) -> f64 {
        self.ln_i3.exp()
    }
}

/// Exponent `w` in `I1` and `I2`: `k/4 + 1/4`.
pub fn lower_weight(p: &BoundParameters) -> f64 {
    p.kf() / 4.0 + 0.25
}

/// Exponent `w` in `I3`: `k/4 + rho/2 + 1/4`.
pub fn upper_weight(p: &BoundParameters) -> f64 {
    p.kf() / 4.0 + p.rho_f() / 2.0 + 0.25
}

pub fn envelope_for(p: &BoundParameters) -> CountEnvelope {
    CountEnvelope {
        k: p.k,
        sigma: p.sigma,
    }
}

/// `ln` of the closed-form bounds `c6 2^k sigma^k y^(k/4-1/4)`,
/// `c7 2^k sigma^k y^(k/4-1/4)` and `c8 2^k sigma^k y^(k/4-rho/2-1/4)`.
pub fn closed_form_bounds(p: &BoundParameters) -> [f64; 3] {
    let ln_a = envelope_for(p).ln_coefficient();
    let ln_y = p.y.ln();
    let c = &p.constants;
    let low = (p.kf() / 4.0 - 0.25) * ln_y;
    [
        ln_a + c.c6.ln() + low,
        ln_a + c.c7.ln() + low,
        ln_a + c.c8.ln() + (p.kf() / 4.0 - p.rho_f() / 2.0 - 0.25) * ln_y,
    ]
}

/// The envelope integrals, with the lower limit of `I1` taken to 0.
pub fn integrals_certified(p: &BoundParameters) -> Integrals {
    let w3 = upper_weight(p);
    let half = p.kf() / 2.0;
    assert!(
        half - w3 - 1.0 < -1.0,
        "I3 integrand is not integrable at infinity"
    );
    let [ln_i1, ln_i2, ln_i3] = closed_form_bounds(p);
    Integrals {
        mode: BoundMode::CertifiedEnvelope,
        ln_i1,
        ln_i2,
        ln_i3,
        spectrum_cutoff: None,
    }
}

/// The integrals from an exact dual spectrum complete to at least `y`.
pub fn integrals_empirical(p: &BoundParameters, s: &Spectrum) -> Result<Integrals> {
    if s.kind() != FormKind::Dual || s.k() != p.k {
        return Err(Error::invalid(
            "empirical integrals need the dual spectrum of the instance",
        ));
    }
    s.check_within(p.y)?;
    let w1 = lower_weight(p);
    let w3 = upper_weight(p);
    let i1 = match s.first() {
        Some(first) if first < p.y => power_integral(s, first, p.y, w1)?,
        _ => 0.0,
    };
    let i2 = match lambda_at_count(s, p.y) {
        Some(l) => s.counting_unchecked(p.y) as f64 * l.powf(-w1),
        None => 0.0,
    };
    let c = s.cutoff().max(p.y);
    let exact = power_integral(s, p.y, c, w3)?;
    let env = envelope_for(p);
    let ln_tail = env.ln_tail(c, w3) - w3.ln();
    Ok(Integrals {
        mode: BoundMode::EmpiricalSpectrum,
        ln_i1: i1.ln(),
        ln_i2: i2.ln(),
        ln_i3: log_sum_exp(&[exact.ln(), ln_tail]),
        spectrum_cutoff: Some(s.cutoff()),
    })
}

/// Integrals in the requested mode. Empirical mode enumerates the dual
/// spectrum to `4y`, falling back to `y` when that exceeds `budget`.
pub fn integrals_i(
    p: &BoundParameters,
    profile: &PrecisionProfile,
    mode: BoundMode,
    budget: u64,
) -> Result<Integrals> {
    match mode {
        BoundMode::CertifiedEnvelope => Ok(integrals_certified(p)),
        BoundMode::EmpiricalSpectrum => {
            let form = DiagonalForm::dual(profile);
            let s = match spectrum_with_budget(&form, 4.0 * p.y, budget) {
                Ok(s) => s,
                Err(Error::BudgetExceeded { .. }) => spectrum_with_budget(&form, p.y, budget)?,
                Err(e) => return Err(e),
            };
            integrals_empirical(p, &s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct I4Package {
    #[serde(with = "extended_f64")]
    pub ln_i4: f64,
    /// `f(k/2 + rho)`.
    pub f_value: f64,
    /// `ln I4 / k - ln sigma - rho ln x / ((k+1) k)`: the part the asymptotic
    /// estimate leaves as `ln c9 + o(1)`.
    #[serde(with = "extended_f64")]
    pub gap: f64,
}

impl I4Package {
    pub fn i4(&self) -> f64 {
        self.ln_i4.exp()
    }
}

/// `I4 = pi^rho z^rho f [(k/4+1/4) I1 + I2] + 2^rho (x+rho z)^(rho/2) f (k/4+rho/2+1/4) I3`.
pub fn package_i4(p: &BoundParameters, i1: f64, i2: f64, i3: f64) -> Result<I4Package> {
    for (name, v) in [("I1", i1), ("I2", i2), ("I3", i3)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    package_i4_ln(p, i1.ln(), i2.ln(), i3.ln())
}

pub fn package_i4_ln(p: &BoundParameters, ln_i1: f64, ln_i2: f64, ln_i3: f64) -> Result<I4Package> {
    let kf = p.kf();
    let rf = p.rho_f();
    let f = envelope_f(p.bessel_order())?.value;
    let inner = log_sum_exp(&[(kf / 4.0 + 0.25).ln() + ln_i1, ln_i2]);
    let first = rf * PI.ln() + rf * p.z.ln() + f.ln() + inner;
    let second = rf * 2f64.ln() + rf / 2.0 * p.x_end().ln() + f.ln() + upper_weight(p).ln() + ln_i3;
    let ln_i4 = log_sum_exp(&[first, second]);
    Ok(I4Package {
        ln_i4,
        f_value: f,
        gap: ln_i4 / kf - p.sigma.ln() - rf * p.x.ln() / ((kf + 1.0) * kf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::params::{compute_parameters, ConstantsLedger};
    use crate::lattice::{spectrum, DEFAULT_SPECTRUM_BUDGET};
    use approx::assert_relative_eq;

    fn setup(k: usize, r: f64) -> (BoundParameters, PrecisionProfile) {
        let prof = PrecisionProfile::uniform(k, 1.0).unwrap();
        (
            compute_parameters(k, r, &prof, &ConstantsLedger::default()).unwrap(),
            prof,
        )
    }

    #[test]
    fn upper_exponent_is_integrable() {
        for k in 2..200 {
            let (p, _) = setup(k, 2.0);
            assert!(p.kf() / 4.0 - p.rho_f() / 2.0 - 1.25 < -1.0);
        }
    }

    #[test]
    fn certified_example() {
        let (p, _) = setup(2, 4.0);
        let it = integrals_certified(&p);
        // 4 sigma^2 int_0^y u^(-3/4) du = 16 sigma^2 y^(1/4), sigma = 1.5.
        assert_relative_eq!(it.i1(), 16.0 * 2.25 * p.y.powf(0.25), max_relative = 1e-13);
        assert_relative_eq!(it.i2(), 4.0 * 2.25 * p.y.powf(0.25), max_relative = 1e-13);
        // w3 = 1/2 + 1 + 1/4: 9 int_y^inf u^(-7/4) du = 12 y^(-3/4).
        assert_relative_eq!(it.i3(), 9.0 * p.y.powf(-0.75) / 0.75, max_relative = 1e-13);
    }

    #[test]
    fn empirical_is_below_certified() {
        for (k, r) in [(2, 4.0), (2, 2.0), (3, 4.0), (4, 3.0), (2, 20.0)] {
            let (p, prof) = setup(k, r);
            let c = integrals_certified(&p);
            let e = integrals_i(
                &p,
                &prof,
                BoundMode::EmpiricalSpectrum,
                DEFAULT_SPECTRUM_BUDGET,
            )
            .unwrap();
            assert!(e.ln_i1 <= c.ln_i1, "k={k} R={r}");
            assert!(e.ln_i2 <= c.ln_i2);
            assert!(e.ln_i3 <= c.ln_i3);
            assert_eq!(e.spectrum_cutoff, Some(4.0 * p.y));
        }
    }

    #[test]
    fn empirical_by_hand() {
        // k = 2, R = 4: y ~ 1.343, so G(y) = 4 with lambda_4 = 1.
        let (p, _) = setup(2, 4.0);
        let s = spectrum(
            &DiagonalForm::dual(&PrecisionProfile::uniform(2, 1.0).unwrap()),
            4.0 * p.y,
        )
        .unwrap();
        let e = integrals_empirical(&p, &s).unwrap();
        assert_relative_eq!(
            e.i1(),
            4.0 * (1.0 - p.y.powf(-0.75)) / 0.75,
            max_relative = 1e-13
        );
        assert_relative_eq!(e.i2(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn package_examples() {
        let (p, _) = setup(2, 4.0);
        let zero = package_i4(&p, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(zero.i4(), 0.0);
        let (i1, i2, i3) = (1.3, 0.4, 2.2);
        let a = package_i4(&p, i1, i2, i3).unwrap();
        let b = package_i4(&p, 2.0 * i1, 2.0 * i2, 2.0 * i3).unwrap();
        assert_relative_eq!(b.i4(), 2.0 * a.i4(), max_relative = 1e-13);
        let f = a.f_value;
        let by_hand = PI.powi(2) * p.z.powi(2) * f * (0.75 * i1 + i2)
            + 4.0 * p.x_end() * f * (0.5 + 1.0 + 0.25) * i3;
        assert_relative_eq!(a.i4(), by_hand, max_relative = 1e-10);
        assert!(package_i4(&p, -1.0, 0.0, 0.0).is_err());
    }
}
