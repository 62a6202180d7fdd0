//! Abel summation against the counting function `G` of a dual spectrum.
//!
//! `G` is piecewise constant, so every integral `int G(u) u^(-w-1) du` is a
//! finite sum over the intervals between consecutive spectrum values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Spectrum;
use crate::numeric::{tie_threshold, CompensatedSum};

/// The count envelope `G(u) <= (2 sigma)^k u^(k/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountEnvelope {
    pub k: usize,
    pub sigma: f64,
}

impl CountEnvelope {
    pub fn new(k: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "envelope sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { k, sigma })
    }

    fn half_k(&self) -> f64 {
        self.k as f64 / 2.0
    }

    /// `ln((2 sigma)^k)`.
    pub fn ln_coefficient(&self) -> f64 {
        self.k as f64 * (2.0 * self.sigma).ln()
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.ln_coefficient() + self.half_k() * u.ln()).exp()
    }

    /// `ln(w int_c^inf (2 sigma)^k u^(k/2 - w - 1) du)`; needs `w > k/2`.
    pub fn ln_tail(&self, c: f64, w: f64) -> f64 {
        let gap = w - self.half_k();
        debug_assert!(gap > 0.0);
        self.ln_coefficient() + (self.half_k() - w) * c.ln() + w.ln() - gap.ln()
    }

    pub fn tail(&self, c: f64, w: f64) -> f64 {
        self.ln_tail(c, w).exp()
    }
}

/// `int_a^b G(u) u^(-w-1) du` for the counting function of `s`, exactly.
pub fn power_integral(s: &Spectrum, a: f64, b: f64, w: f64) -> Result<f64> {
    s.check_within(b)?;
    let mut sum = CompensatedSum::new();
    if !(b > a) {
        return Ok(0.0);
    }
    let levels = s.levels();
    let mut g = 0u64;
    for (j, l) in levels.iter().enumerate() {
        g += l.multiplicity;
        let next = levels.get(j + 1).map_or(f64::INFINITY, |n| n.value);
        let lo = l.value.max(a);
        let hi = next.min(b);
        if hi <= lo {
            if l.value >= b {
                break;
            }
            continue;
        }
        let piece = if w == 0.0 {
            (hi / lo).ln()
        } else {
            (lo.powf(-w) - hi.powf(-w)) / w
        };
        sum.add(g as f64 * piece);
    }
    Ok(sum.value())
}

/// `w int_a^b G(u) u^(-w-1) du`, which vanishes for `w = 0`.
fn weighted_integral(s: &Spectrum, a: f64, b: f64, w: f64) -> Result<f64> {
    if w == 0.0 {
        s.check_within(b)?;
        return Ok(0.0);
    }
    Ok(w * power_integral(s, a, b, w)?)
}

/// Largest spectrum value `<= y`, i.e. `lambda_(G(y))`.
pub fn lambda_at_count(s: &Spectrum, y: f64) -> Option<f64> {
    let t = tie_threshold(y);
    s.levels()
        .iter()
        .take_while(|l| l.value <= t)
        .last()
        .map(|l| l.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelCheck {
    pub y: f64,
    pub w: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lambda_(G(y))`, absent when `G(y) = 0`.
    pub lambda_g: Option<f64>,
    /// `lambda_(G(y)) <= y`.
    pub lambda_g_within: bool,
}

impl AbelCheck {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// `lhs <= rhs` up to four ulps of `rhs`.
    pub fn holds(&self) -> bool {
        self.lhs <= tie_threshold(self.rhs) && self.lambda_g_within
    }
}

/// `sum_{lambda <= y} lambda^(-w)` against
/// `w int_(lambda_1)^y G(u) u^(-w-1) du + G(y) / lambda_(G(y))^w`.
pub fn abel_lower(s: &Spectrum, y: f64, w: f64) -> Result<AbelCheck> {
    let half_k = s.k() as f64 / 2.0;
    if !(w >= 0.0 && w < half_k) {
        return Err(Error::invalid(format!(
            "abel_lower needs 0 <= w < k/2 = {half_k}, got {w}"
        )));
    }
    s.check_within(y)?;
    let t = tie_threshold(y);
    let lhs: CompensatedSum = s
        .levels()
        .iter()
        .take_while(|l| l.value <= t)
        .map(|l| l.multiplicity as f64 * l.value.powf(-w))
        .collect();
    let lambda_g = lambda_at_count(s, y);
    let rhs = match (s.first(), lambda_g) {
        (Some(first), Some(lg)) => {
            let g = s.counting_unchecked(y) as f64;
            weighted_integral(s, first, y, w)? + g * lg.powf(-w)
        }
        _ => 0.0,
    };
    Ok(AbelCheck {
        y,
        w,
        lhs: lhs.value(),
        rhs,
        lambda_g,
        lambda_g_within: lambda_g.is_none_or(|l| l <= t),
    })
}

/// `sum_{lambda > y} lambda^(-w)` against `w int_y^inf G(u) u^(-w-1) du`.
///
/// Past the spectrum's cutoff `c` both sides use the envelope: the tail sum
/// is bounded by `w int_c^inf env u^(-w-1) du - G(c) c^(-w)` and the same
/// envelope integral replaces `G` in the right-hand side.
pub fn abel_upper(s: &Spectrum, y: f64, w: f64, env: &CountEnvelope) -> Result<AbelCheck> {
    let half_k = s.k() as f64 / 2.0;
    if !(w > half_k) {
        return Err(Error::invalid(format!(
            "abel_upper needs w > k/2 = {half_k}, got {w}"
        )));
    }
    if env.k != s.k() {
        return Err(Error::DimensionMismatch {
            expected: s.k(),
            actual: env.k,
        });
    }
    let c = s.cutoff();
    if y >= c {
        let tail = env.tail(y, w);
        return Ok(AbelCheck {
            y,
            w,
            lhs: tail,
            rhs: tail,
            lambda_g: None,
            lambda_g_within: true,
        });
    }
    let t = tie_threshold(y);
    let exact: CompensatedSum = s
        .levels()
        .iter()
        .skip_while(|l| l.value <= t)
        .map(|l| l.multiplicity as f64 * l.value.powf(-w))
        .collect();
    let env_tail = env.tail(c, w);
    let g_c = s.counting_unchecked(c) as f64;
    let lhs = exact.plus(env_tail).plus(-g_c * c.powf(-w)).value();
    let rhs = weighted_integral(s, y, c, w)? + env_tail;
    let lambda_g = lambda_at_count(s, y);
    Ok(AbelCheck {
        y,
        w,
        lhs,
        rhs,
        lambda_g,
        lambda_g_within: lambda_g.is_none_or(|l| l <= t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{spectrum, DiagonalForm, FormKind};
    use approx::assert_relative_eq;

    fn dual(diag: &[f64], cutoff: f64) -> Spectrum {
        spectrum(
            &DiagonalForm::new(diag.to_vec(), FormKind::Dual).unwrap(),
            cutoff,
        )
        .unwrap()
    }

    #[test]
    fn lower_example() {
        let s = dual(&[1.0, 1.0], 2.0);
        let c = abel_lower(&s, 2.0, 0.5).unwrap();
        assert_relative_eq!(c.lhs, 4.0 + 4.0 / 2f64.sqrt(), max_relative = 1e-14);
        assert!(c.holds());
        assert_eq!(c.lambda_g, Some(2.0));
        // Abel summation is exact when y is a spectrum value.
        assert_relative_eq!(c.rhs, c.lhs, max_relative = 1e-13);
    }

    #[test]
    fn lower_below_first_value() {
        let s = dual(&[1.0, 1.0], 2.0);
        let c = abel_lower(&s, 0.5, 0.5).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert_eq!(c.lambda_g, None);
        assert!(c.holds());
    }

    #[test]
    fn lower_with_zero_weight() {
        let s = dual(&[1.0], 1.5);
        let c = abel_lower(&s, 1.5, 0.0).unwrap();
        assert_eq!(c.lhs, 2.0);
        assert_eq!(c.rhs, 2.0);
        assert!(c.holds());
    }

    #[test]
    fn lower_strict_between_values() {
        let s = dual(&[1.0, 1.0, 1.0], 10.0);
        for y in [1.3, 2.7, 5.5, 9.99] {
            let c = abel_lower(&s, y, 1.0).unwrap();
            assert!(c.margin() > 0.0, "y={y}: {c:?}");
            assert!(c.lambda_g.unwrap() <= y);
        }
        assert!(abel_lower(&s, 11.0, 1.0).is_err());
        assert!(abel_lower(&s, 2.0, 1.5).is_err());
    }

    #[test]
    fn upper_example() {
        let s = dual(&[1.0, 1.0], 100.0);
        let env = CountEnvelope::new(2, 1.5).unwrap();
        let c = abel_upper(&s, 1.5, 2.0, &env).unwrap();
        assert!(c.holds());
        // The margin is G(y) / y^w exactly.
        assert_relative_eq!(c.margin(), 4.0 / 1.5f64.powi(2), max_relative = 1e-9);
        assert!(abel_upper(&s, 1.5, 1.0, &env).is_err());
    }

    #[test]
    fn upper_past_cutoff_is_envelope_only() {
        let s = dual(&[1.0, 1.0], 4.0);
        let env = CountEnvelope::new(2, 1.5).unwrap();
        let c = abel_upper(&s, 10.0, 2.0, &env).unwrap();
        assert_eq!(c.lhs, c.rhs);
        assert_relative_eq!(c.lhs, env.tail(10.0, 2.0), max_relative = 1e-15);
        assert!(c.holds());
    }

    #[test]
    fn upper_large_weight_is_led_by_first_term() {
        let s = dual(&[1.0, 1.0], 100.0);
        let env = CountEnvelope::new(2, 1.5).unwrap();
        let c = abel_upper(&s, 0.5, 40.0, &env).unwrap();
        assert!(c.holds());
        assert!((c.lhs / 4.0 - 1.0).abs() < 1e-6);
        assert!(c.rhs / c.lhs < 1.0 + 1e-6 + 4.0 * 0.5f64.powi(-40) / c.lhs);
    }

    #[test]
    fn power_integral_matches_closed_forms() {
        let s = dual(&[1.0], 10.0);
        // G = 2 on [1, 4), 4 on [4, 9), 6 on [9, 10].
        let want = 2.0 * (1.0 - 0.25) + 4.0 * (0.25 - 1.0 / 9.0) + 6.0 * (1.0 / 9.0 - 0.1);
        assert_relative_eq!(
            power_integral(&s, 0.5, 10.0, 1.0).unwrap(),
            want,
            max_relative = 1e-14
        );
        let log = 2.0 * 4f64.ln() + 4.0 * (9.0f64 / 4.0).ln() + 6.0 * (10.0f64 / 9.0).ln();
        assert_relative_eq!(
            power_integral(&s, 1.0, 10.0, 0.0).unwrap(),
            log,
            max_relative = 1e-14
        );
        assert_eq!(power_integral(&s, 5.0, 5.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_dominates_counts() {
        for diag in [[1.0, 1.0], [0.25, 4.0]] {
            let s = dual(&diag, 50.0);
            let eps: Vec<f64> = diag.iter().map(|d: &f64| d.sqrt().recip()).collect();
            let p = crate::codec::PrecisionProfile::new(eps).unwrap();
            let sigma = 1.5 * p.minimal_balance_constant() * (p.eps_total() / 2.0).max(1.0);
            let env = CountEnvelope::new(2, sigma).unwrap();
            for l in s.levels() {
                assert!(s.counting(l.value).unwrap() as f64 <= env.value(l.value));
            }
        }
    }
}
