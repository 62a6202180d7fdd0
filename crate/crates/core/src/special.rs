//! Bessel functions of the first kind, Olenko's uniform bound on
//! `sqrt(x) |J_nu(x)|`, and its monotone envelope.
//!
//! `J_nu(x)` is evaluated by whichever of three routes is accurate at the
//! given point:
//!
//! 1. the power series, while its largest term stays below `1e4` (so the
//!    alternating sum loses at most a few digits to cancellation);
//! 2. Hankel's asymptotic expansion, when its terms decay below `1e-16`
//!    without first growing past `1e3`;
//! 3. otherwise Bessel's integral
//!    `J_nu(x) = (1/pi) int_0^pi cos(nu t - x sin t) dt
//!              - (sin(nu pi)/pi) int_0^inf exp(-x sinh t - nu t) dt`,
//!    by composite Gauss-Legendre quadrature with panels short enough to
//!    resolve every oscillation.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Constants of Olenko's bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlenkoConstants {
    pub b: f64,
    pub alpha1: f64,
}

impl OlenkoConstants {
    pub const B: f64 = 0.674885;
    pub const ALPHA1: f64 = 1.855757;
}

impl Default for OlenkoConstants {
    fn default() -> Self {
        Self {
            b: Self::B,
            alpha1: Self::ALPHA1,
        }
    }
}

/// Lower end of the envelope's domain.
pub const ENVELOPE_MIN_ORDER: f64 = 3.0;
/// Upper end of the plateau interval.
const PLATEAU_END: f64 = 5.0;

const SERIES_MAX_TERM: f64 = 1e4;
const HANKEL_MAX_TERM: f64 = 1e3;
const GAUSS_POINTS: usize = 20;

pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("log_gamma argument {x}")));
    }
    if x <= 0.0 {
        return Err(Error::invalid(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `J_nu(x)` for real `nu >= 0` and `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !nu.is_finite() || !x.is_finite() {
        return Err(Error::NonFinite(format!("bessel_j({nu}, {x})")));
    }
    if nu < 0.0 {
        return Err(Error::invalid(format!(
            "negative order {nu} is not supported"
        )));
    }
    if x < 0.0 {
        return Err(Error::invalid(format!(
            "negative argument {x} is not supported"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if let Some(v) = series(nu, x) {
        return Ok(v);
    }
    if let Some(v) = hankel(nu, x) {
        return Ok(v);
    }
    Ok(integral(nu, x))
}

fn series(nu: f64, x: f64) -> Option<f64> {
    let half = x / 2.0;
    let ln_t0 = nu * half.ln() - statrs::function::gamma::ln_gamma(nu + 1.0);
    if ln_t0 > SERIES_MAX_TERM.ln() {
        return None;
    }
    if ln_t0 < -745.0 {
        // The leading term underflows; the sum is no larger than it.
        return Some(0.0);
    }
    let q = half * half;
    let mut term = ln_t0.exp();
    let mut sum = CompensatedSum::new();
    let mut max_term = term.abs();
    let mut j = 0.0;
    loop {
        sum.add(term);
        let ratio = q / ((j + 1.0) * (nu + j + 1.0));
        term *= -ratio;
        j += 1.0;
        max_term = max_term.max(term.abs());
        if max_term > SERIES_MAX_TERM {
            return None;
        }
        if ratio < 0.5 && term.abs() <= 1e-17 * sum.value().abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if term == 0.0 || j > 10_000.0 {
            break;
        }
    }
    Some(sum.value())
}

fn hankel(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = CompensatedSum::new().plus(1.0);
    let mut q = CompensatedSum::new();
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        let mag = term.abs();
        if mag > HANKEL_MAX_TERM || (mag > prev && mag > 1e-16) {
            return None;
        }
        prev = mag;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p.add(sign * term);
        } else {
            let sign = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q.add(sign * term);
        }
        if mag < 1e-17 {
            let omega = x - (nu / 2.0 + 0.25) * PI;
            return Some(
                (2.0 / (PI * x)).sqrt() * (p.value() * omega.cos() - q.value() * omega.sin()),
            );
        }
    }
    None
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_POINTS;
        let nf = n as f64;
        (0..n)
            .map(|i| {
                // Newton on P_n starting from the Chebyshev-like guess.
                let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, t);
                    for m in 2..=n {
                        let mf = m as f64;
                        (p0, p1) = (p1, ((2.0 * mf - 1.0) * t * p1 - (mf - 1.0) * p0) / mf);
                    }
                    dp = nf * (t * p1 - p0) / (t * t - 1.0);
                    let dt = p1 / dp;
                    t -= dt;
                    if dt.abs() < 1e-16 {
                        break;
                    }
                }
                (t, 2.0 / ((1.0 - t * t) * dp * dp))
            })
            .collect()
    })
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut sum = CompensatedSum::new();
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(t, w) in rule {
            sum.add(w * f(mid + 0.5 * h * t));
        }
    }
    sum.value() * 0.5 * h
}

fn integral(nu: f64, x: f64) -> f64 {
    let panels = ((x + nu) / 2.0).ceil() as usize + 4;
    let oscillatory = integrate(|t| (nu * t - x * t.sin()).cos(), 0.0, PI, panels) / PI;
    let s = (nu * PI).sin();
    if s.abs() < 1e-15 {
        return oscillatory;
    }
    // Truncate where the exponent reaches 50.
    let phase = |t: f64| x * t.sinh() + nu * t;
    let mut hi = 1.0;
    while phase(hi) < 50.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if phase(mid) < 50.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tail = integrate(|t| (-phase(t)).exp(), 0.0, hi, 64);
    oscillatory - s / PI * tail
}

/// Olenko's bound `b sqrt(nu^(1/3) + alpha1 nu^(-1/3) + 3 alpha1^2 / (10 nu))`
/// on `sup_x sqrt(x) |J_nu(x)|`.
pub fn olenko_rhs(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!(
            "Olenko's bound needs nu > 0, got {nu}"
        )));
    }
    Ok(olenko_unchecked(nu))
}

fn olenko_unchecked(nu: f64) -> f64 {
    let c = OlenkoConstants::default();
    let cube = nu.cbrt();
    c.b * (cube + c.alpha1 / cube + 3.0 * c.alpha1 * c.alpha1 / (10.0 * nu)).sqrt()
}

/// `sup_{3 <= t <= 5} olenko_rhs(t)`, by a dense scan refined with golden
/// section around the best grid point.
pub fn envelope_plateau() -> f64 {
    static PLATEAU: OnceLock<f64> = OnceLock::new();
    *PLATEAU.get_or_init(|| {
        let n = 2000;
        let step = (PLATEAU_END - ENVELOPE_MIN_ORDER) / n as f64;
        let grid = |i: usize| ENVELOPE_MIN_ORDER + i as f64 * step;
        let best = (0..=n)
            .max_by(|&a, &b| olenko_unchecked(grid(a)).total_cmp(&olenko_unchecked(grid(b))))
            .unwrap_or(0);
        let mut lo = grid(best.saturating_sub(1));
        let mut hi = grid((best + 1).min(n));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if olenko_unchecked(a) >= olenko_unchecked(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        [
            olenko_unchecked(0.5 * (lo + hi)),
            olenko_unchecked(grid(best)),
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeValue {
    pub nu: f64,
    pub value: f64,
    /// The plateau value was used (`nu` in the plateau region or clamped).
    pub on_plateau: bool,
    /// `nu` was below the envelope's domain and was clamped to 3.
    pub clamped: bool,
}

/// Non-decreasing envelope `max(plateau, olenko_rhs(nu))` for `nu >= 3`.
pub fn envelope_f(nu: f64) -> Result<EnvelopeValue> {
    if !nu.is_finite() {
        return Err(Error::NonFinite(format!("envelope order {nu}")));
    }
    if nu < ENVELOPE_MIN_ORDER {
        return Err(Error::invalid(format!(
            "envelope is defined for nu >= 3, got {nu}"
        )));
    }
    let plateau = envelope_plateau();
    let direct = olenko_unchecked(nu);
    Ok(EnvelopeValue {
        nu,
        value: plateau.max(direct),
        on_plateau: plateau >= direct,
        clamped: false,
    })
}

/// [`envelope_f`], with orders below 3 clamped to `f(3)`.
pub fn envelope_f_clamped(nu: f64) -> Result<EnvelopeValue> {
    if nu < ENVELOPE_MIN_ORDER && nu.is_finite() {
        let mut v = envelope_f(ENVELOPE_MIN_ORDER)?;
        v.nu = nu;
        v.clamped = true;
        return Ok(v);
    }
    envelope_f(nu)
}

/// `[f(rho) / f(k/2 + rho)]^(2/rho)` with `rho = floor(k/2 + 1)`.
pub fn envelope_ratio(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "envelope ratio needs k >= 2, got {k}"
        )));
    }
    let rho = k / 2 + 1;
    let low = envelope_f_clamped(f64::from(rho))?.value;
    let high = envelope_f_clamped(f64::from(k) / 2.0 + f64::from(rho))?.value;
    Ok((low / high).powf(2.0 / f64::from(rho)))
}

/// One sampled point of `sqrt(x) |J_nu(x)|` against Olenko's bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselSample {
    pub nu: f64,
    pub x: f64,
    pub scaled: f64,
    pub bound: f64,
}

impl BesselSample {
    pub fn margin(&self) -> f64 {
        self.bound - self.scaled
    }
}

/// `n` points log-spaced on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn envelope_samples(nus: &[f64], xs: &[f64]) -> Result<Vec<BesselSample>> {
    let mut out = Vec::with_capacity(nus.len() * xs.len());
    for &nu in nus {
        let bound = olenko_rhs(nu)?;
        for &x in xs {
            out.push(BesselSample {
                nu,
                x,
                scaled: x.sqrt() * bessel_j(nu, x)?.abs(),
                bound,
            });
        }
    }
    Ok(out)
}

/// Writes `nu,x,scaled,bound` rows with a header.
pub fn write_samples_csv<W: Write>(samples: &[BesselSample], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for s in samples {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn j(nu: f64, x: f64) -> f64 {
        bessel_j(nu, x).unwrap()
    }

    fn close(actual: f64, expected: f64) {
        let err = (actual - expected).abs();
        assert!(
            err <= 1e-10 * (1.0 + expected.abs()),
            "got {actual}, expected {expected}, error {err:e}"
        );
    }

    #[test]
    fn trivial_values() {
        assert_eq!(j(0.0, 0.0), 1.0);
        assert_eq!(j(2.0, 0.0), 0.0);
        close(j(0.5, PI / 2.0), 2.0 / PI);
    }

    #[test]
    fn reference_values() {
        // Reference values from a 30-digit evaluation.
        let cases = [
            (0.0, 1.0, 0.765197686557966551449717526103),
            (1.0, 1.0, 0.440050585744933515959682203719),
            (0.0, 10.0, -0.245935764451348335197760862485),
            (1.0, 10.0, 0.0434727461688614366697487680259),
            (5.0, 10.0, -0.234061528186793640443694941646),
            (0.0, 100.0, 0.0199858503042231224242283909508),
            (2.5, 7.3, -0.300849431587499808377826719864),
            (3.0, 29.0, 0.0135246900182618258783901296645),
            (17.0, 40.0, -0.118297967033171490166351731518),
            (50.0, 60.0, -0.13798273148535212047322102692),
            (50.0, 500.0, -0.0211445617275887219873260300491),
            (50.0, 3000.0, 0.0121074575215344426151058782607),
            (3.5, 1e4, -0.00759563646865110207834788493257),
            (1.0, 1e4, 0.00364745075552958034411726136723),
            (10.0, 0.001, 2.69114439430499934345899818611e-40),
        ];
        for (nu, x, expected) in cases {
            close(j(nu, x), expected);
        }
    }

    #[test]
    fn half_integer_closed_forms() {
        for i in 0..200 {
            let x = 0.1 + 19.9 * f64::from(i) / 199.0;
            let s = (2.0 / (PI * x)).sqrt();
            let j12 = s * x.sin();
            let jm12 = s * x.cos();
            let j32 = s * (x.sin() / x - x.cos());
            let j52 = s * ((3.0 / (x * x) - 1.0) * x.sin() - 3.0 * x.cos() / x);
            assert!((j(0.5, x) - j12).abs() < 1e-9, "x={x}");
            assert!((j(1.5, x) - j32).abs() < 1e-9, "x={x}");
            assert!((j(2.5, x) - j52).abs() < 1e-9, "x={x}");
            let _ = jm12;
        }
    }

    #[test]
    fn routes_agree_where_they_overlap() {
        // Integral against series and Hankel at points both can reach.
        for (nu, x) in [(0.0, 5.0), (2.5, 8.0), (7.0, 12.0), (0.5, 3.0)] {
            let s = series(nu, x).expect("series reachable");
            assert!((integral(nu, x) - s).abs() < 1e-12, "nu={nu} x={x}");
        }
        for (nu, x) in [(0.0, 60.0), (3.5, 200.0), (1.0, 40.0)] {
            let h = hankel(nu, x).expect("hankel reachable");
            assert!((integral(nu, x) - h).abs() < 1e-12, "nu={nu} x={x}");
        }
    }

    #[test]
    fn bessel_errors() {
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(1.0, f64::NAN).is_err());
        assert!(bessel_j(f64::INFINITY, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
    }

    #[test]
    fn olenko_values() {
        // 30-digit evaluations of the bound with the truncated constants.
        assert_relative_eq!(
            olenko_rhs(5.0).unwrap(),
            1.16929728012686344892,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            olenko_rhs(3.0).unwrap(),
            1.18313769885345636864,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            olenko_rhs(17.0).unwrap(),
            1.23593900709978095921,
            max_relative = 1e-12
        );
        let a = olenko_rhs(1e3).unwrap();
        let b = olenko_rhs(1e6).unwrap();
        assert!(b > a);
        // Leading term b nu^(1/6).
        assert_relative_eq!(b / (OlenkoConstants::B * 10.0), 1.0, max_relative = 1e-3);
        assert!(olenko_rhs(0.0).is_err());
        assert!(olenko_rhs(-2.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let f3 = envelope_f(3.0).unwrap();
        assert_relative_eq!(f3.value, 1.18313769885345636864, max_relative = 1e-12);
        assert!(f3.on_plateau);
        let f5 = envelope_f(5.0).unwrap();
        assert_eq!(f5.value, f3.value);
        assert!(f5.on_plateau);
        let f17 = envelope_f(17.0).unwrap();
        assert!(!f17.on_plateau);
        assert_relative_eq!(f17.value, 1.23593900709978095921, max_relative = 1e-12);
        assert!(envelope_f(2.9).is_err());
        let c = envelope_f_clamped(2.0).unwrap();
        assert!(c.clamped);
        assert_eq!(c.value, f3.value);
    }

    #[test]
    fn envelope_is_monotone_and_dominates() {
        let mut prev = 0.0;
        for i in 0..2000 {
            let nu = 3.0 + f64::from(i) * 0.05;
            let f = envelope_f(nu).unwrap().value;
            assert!(f >= prev);
            assert!(f >= olenko_rhs(nu).unwrap());
            prev = f;
        }
    }

    #[test]
    fn envelope_ratio_examples() {
        assert_eq!(envelope_ratio(4).unwrap(), 1.0);
        assert_eq!(envelope_ratio(2).unwrap(), 1.0);
        let r = envelope_ratio(40).unwrap();
        assert_relative_eq!(r, 0.993263825452461899389, max_relative = 1e-12);
        assert!(envelope_ratio(1).is_err());
    }

    #[test]
    fn log_gamma_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(log_gamma(6.0).unwrap(), 120f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(
            log_gamma(3.5).unwrap(),
            1.20097360234707422482,
            max_relative = 1e-12
        );
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn grid_and_csv() {
        let g = log_grid(1e-3, 1e4, 8);
        assert_eq!(g.len(), 8);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-14);
        assert_relative_eq!(g[7], 1e4, max_relative = 1e-14);
        let s = envelope_samples(&[1.0], &[1.0]).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("nu,x,scaled,bound\n1.0,1.0,0.44005"));
    }
}
