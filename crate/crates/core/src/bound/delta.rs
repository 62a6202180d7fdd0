//! The forward difference operator of order `rho` and step `z`, and the
//! inequalities built on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::params::BoundParameters;
use crate::error::{Error, Result};
use crate::lattice::{smoothed_count, FormKind, Spectrum};
use crate::numeric::{binomial, factorial, CompensatedSum};
use crate::special::{envelope_f, log_gamma};

/// `sum_{nu=0}^{rho} (-1)^(rho-nu) C(rho, nu) F(x + nu z)`.
pub fn delta_apply<F: Fn(f64) -> f64>(f: F, x: f64, z: f64, rho: u32) -> Result<f64> {
    try_delta_apply(|t| Ok(f(t)), x, z, rho)
}

/// [`delta_apply`] for a fallible `F`.
pub fn try_delta_apply<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    z: f64,
    rho: u32,
) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    for nu in 0..=rho {
        let t = x + f64::from(nu) * z;
        let v = f(t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "difference operand at {t} is {v}"
            )));
        }
        let sign = if (rho - nu).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sum.add(sign * binomial(rho, nu) * v);
    }
    Ok(sum.value())
}

/// Both arguments of the minimum in the bound on one difference term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselTermBound {
    pub lambda: f64,
    /// Branch `2^rho (x + rho z)^(rho/2) f`, from `|J| <= f / sqrt(arg)`.
    pub large: f64,
    /// Branch `pi^rho lambda^(rho/2) z^rho f`, from the mean value theorem.
    pub small: f64,
    pub value: f64,
}

/// Bound on `|Delta[t^(k/4 + rho/2) J_(k/2+rho)(2 pi sqrt(lambda t))]|` at `x`.
pub fn delta_bessel_bound(p: &BoundParameters, lambda: f64) -> Result<BesselTermBound> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let rf = p.rho_f();
    let f = envelope_f(p.bessel_order())?.value;
    let prefactor = p.x_end().powf(p.kf() / 4.0 - 0.25) * lambda.powf(-0.25) / (2.0 * PI).sqrt();
    let large = 2f64.powf(rf) * p.x_end().powf(rf / 2.0) * f;
    let small = PI.powf(rf) * lambda.powf(rf / 2.0) * p.z.powf(rf) * f;
    Ok(BesselTermBound {
        lambda,
        large: prefactor * large,
        small: prefactor * small,
        value: prefactor * large.min(small),
    })
}

/// `|Delta[t^(k/4 + rho/2) J_(k/2+rho)(2 pi sqrt(lambda t))]|` evaluated directly.
pub fn delta_bessel_direct(p: &BoundParameters, lambda: f64) -> Result<f64> {
    let nu = p.bessel_order();
    let power = p.kf() / 4.0 + p.rho_f() / 2.0;
    let d = try_delta_apply(
        |t| Ok(t.powf(power) * crate::special::bessel_j(nu, 2.0 * PI * (lambda * t).sqrt())?),
        p.x,
        p.z,
        p.rho,
    )?;
    Ok(d.abs())
}

/// Where `Delta(t^(k/2+rho))` falls relative to its mean-value bracket
/// `z^rho Gamma(k/2+rho+1)/Gamma(k/2+1) [x^(k/2), (x+rho z)^(k/2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn holds(&self, rtol: f64) -> bool {
        self.value >= self.lo * (1.0 - rtol) && self.value <= self.hi * (1.0 + rtol)
    }
}

/// The bracket for `Delta(t^(k/2 + rho))` at `(x, z, rho)`.
pub fn power_bracket(k: usize, x: f64, z: f64, rho: u32) -> Result<Bracket> {
    let half = k as f64 / 2.0;
    let rf = f64::from(rho);
    let value = delta_apply(|t| t.powf(half + rf), x, z, rho)?;
    let ratio = (log_gamma(half + rf + 1.0)? - log_gamma(half + 1.0)?).exp() * z.powf(rf);
    Ok(Bracket {
        value,
        lo: ratio * x.powf(half),
        hi: ratio * (x + rf * z).powf(half),
    })
}

/// Relative error of `Delta(t^rho) = rho! z^rho`.
pub fn power_identity_error(x: f64, z: f64, rho: u32) -> Result<f64> {
    let exact = factorial(rho) * z.powi(rho as i32);
    let got = delta_apply(|t| t.powi(rho as i32), x, z, rho)?;
    Ok((got - exact).abs() / exact)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub x: f64,
    pub z: f64,
    pub rho: u32,
    /// `z^rho B(x)`.
    pub lhs: f64,
    /// `Delta[B_rho](x)`.
    pub rhs: f64,
    pub holds: bool,
    /// Relative error of `Delta(t^rho) = rho! z^rho`.
    pub power_identity_error: f64,
    pub bracket: Bracket,
    pub bracket_holds: bool,
}

/// Absolute slack, relative to the larger side, allowed for rounding.
pub const SANDWICH_TOLERANCE: f64 = 1e-9;

/// Checks `z^rho B(x) <= Delta[B_rho](x)` on a primal spectrum complete to
/// `x + rho z`, together with the two power identities used alongside it.
pub fn verify_sandwich(s: &Spectrum, p: &BoundParameters) -> Result<SandwichReport> {
    if s.kind() != FormKind::Primal {
        return Err(Error::invalid(
            "the sandwich inequality is stated for the primal spectrum",
        ));
    }
    s.check_within(p.x_end())?;
    let zr = p.z.powi(p.rho as i32);
    let lhs = zr * s.counting(p.x)? as f64;
    let rhs = try_delta_apply(|t| smoothed_count(s, t, p.rho), p.x, p.z, p.rho)?;
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    let bracket = power_bracket(p.k, p.x, p.z, p.rho)?;
    Ok(SandwichReport {
        x: p.x,
        z: p.z,
        rho: p.rho,
        lhs,
        rhs,
        holds: lhs <= rhs + SANDWICH_TOLERANCE * scale,
        power_identity_error: power_identity_error(p.x, p.z, p.rho)?,
        bracket,
        bracket_holds: bracket.holds(1e-9),
    })
}
