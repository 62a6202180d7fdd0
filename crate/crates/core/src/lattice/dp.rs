//! Exact counting by dynamic programming over integerized budgets.
//!
//! When every `d_i` and `x` are rationals `p/q` with small `q`, scaling by the
//! common denominator `L` turns the problem into `sum a_i u_i^2 <= N` with
//! integer `a_i, N`. Cell `n` of the table then holds the number of vectors
//! over the coordinates processed so far with `sum a_i u_i^2 = n`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest denominator tried when recognising a float as a rational.
const MAX_DENOMINATOR: u64 = 1 << 20;
/// Largest scaled threshold `N`; the table has `N + 1` cells.
const MAX_SCALED_THRESHOLD: u64 = 1 << 22;

/// Best rational approximation `p/q` with `q <= max_den` that reproduces `v`
/// to within four ulps, from the continued-fraction convergents of `v`.
pub(super) fn small_rational(v: f64, max_den: u64) -> Option<(u64, u64)> {
    if !(v >= 0.0 && v.is_finite()) || v >= 2f64.powi(62) {
        return None;
    }
    let tol = 4.0 * f64::EPSILON * v;
    let (mut h_prev, mut h) = (0u128, 1u128);
    let (mut k_prev, mut k) = (1u128, 0u128);
    let mut r = v;
    for _ in 0..64 {
        let a = r.floor();
        let a_int = a as u128;
        (h_prev, h) = (h, a_int * h + h_prev);
        (k_prev, k) = (k, a_int * k + k_prev);
        if k > u128::from(max_den) || h > u128::from(u64::MAX) {
            return None;
        }
        if (v - h as f64 / k as f64).abs() <= tol {
            return Some((h as u64, k as u64));
        }
        let frac = r - a;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct IntegerProblem {
    weights: Vec<u64>,
    threshold: u64,
}

impl IntegerProblem {
    /// Integerizes `sum d_i u_i^2 <= x`, or returns `None` when the inputs
    /// are not commensurate rationals with a manageable common denominator.
    pub(super) fn from_form(diag: &[f64], x: f64) -> Option<Self> {
        let fracs = diag
            .iter()
            .chain(std::iter::once(&x))
            .map(|&v| small_rational(v, MAX_DENOMINATOR))
            .collect::<Option<Vec<_>>>()?;
        let mut lcm: u64 = 1;
        for &(_, q) in &fracs {
            let g = lcm.gcd(&q);
            lcm = lcm.checked_mul(q / g).filter(|l| *l <= 1 << 63)?;
        }
        let scale = |(p, q): (u64, u64)| p.checked_mul(lcm / q);
        let (weights, threshold) = fracs.split_at(diag.len());
        let weights = weights
            .iter()
            .map(|&f| scale(f))
            .collect::<Option<Vec<_>>>()?;
        let threshold = scale(threshold[0]).filter(|n| *n <= MAX_SCALED_THRESHOLD)?;
        Some(Self { weights, threshold })
    }

    fn max_abs(&self, weight: u64) -> u64 {
        let mut m = (self.threshold as f64 / weight as f64).sqrt() as u64;
        while (m + 1)
            .checked_mul(m + 1)
            .and_then(|s| s.checked_mul(weight))
            .is_some_and(|v| v <= self.threshold)
        {
            m += 1;
        }
        while m > 0
            && m.checked_mul(m)
                .and_then(|s| s.checked_mul(weight))
                .is_none_or(|v| v > self.threshold)
        {
            m -= 1;
        }
        m
    }

    /// Cell updates the table fill would perform.
    pub(super) fn work(&self) -> u64 {
        let cells = self.threshold.saturating_add(1);
        self.weights
            .iter()
            .map(|&w| cells.saturating_mul(self.max_abs(w) + 1))
            .fold(0u64, u64::saturating_add)
    }

    /// Upper bound on the final count: the integer points of the bounding box.
    fn box_count_bits(&self) -> f64 {
        self.weights
            .iter()
            .map(|&w| ((2 * self.max_abs(w) + 1) as f64).log2())
            .sum()
    }

    pub(super) fn count(&self, budget: u64) -> Result<BigUint> {
        let work = self.work();
        if work > budget {
            return Err(Error::BudgetExceeded {
                what: "dynamic-programming cell updates",
                needed: work,
                budget,
            });
        }
        if self.box_count_bits() < 126.0 {
            Ok(BigUint::from(self.fill::<u128>().into_iter().sum::<u128>()))
        } else {
            Ok(self.fill::<BigUint>().into_iter().sum())
        }
    }

    fn fill<T>(&self) -> Vec<T>
    where
        T: Clone + Zero + One + for<'a> std::ops::AddAssign<&'a T>,
    {
        let n = self.threshold as usize;
        let mut table = vec![T::zero(); n + 1];
        table[0] = T::one();
        let mut next = vec![T::zero(); n + 1];
        for &w in &self.weights {
            let w = w as usize;
            next.iter_mut().for_each(|c| c.set_zero());
            for s in 0..=n {
                if table[s].is_zero() {
                    continue;
                }
                let src = table[s].clone();
                next[s] += &src;
                let mut u = 1usize;
                while let Some(t) = u
                    .checked_mul(u)
                    .and_then(|q| q.checked_mul(w))
                    .and_then(|q| q.checked_add(s))
                    .filter(|t| *t <= n)
                {
                    // +u and -u.
                    next[t] += &src;
                    next[t] += &src;
                    u += 1;
                }
            }
            std::mem::swap(&mut table, &mut next);
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognises_simple_rationals() {
        assert_eq!(small_rational(0.25, MAX_DENOMINATOR), Some((1, 4)));
        assert_eq!(small_rational(4.0, MAX_DENOMINATOR), Some((4, 1)));
        assert_eq!(small_rational(0.0, MAX_DENOMINATOR), Some((0, 1)));
        assert_eq!(small_rational(0.3 * 0.3, MAX_DENOMINATOR), Some((9, 100)));
        assert_eq!(small_rational(1.0 / 9.0, MAX_DENOMINATOR), Some((1, 9)));
        assert_eq!(small_rational(std::f64::consts::PI, MAX_DENOMINATOR), None);
        assert_eq!(small_rational(2f64.sqrt(), MAX_DENOMINATOR), None);
    }

    #[test]
    fn integerizes_with_common_denominator() {
        let p = IntegerProblem::from_form(&[0.25, 1.0 / 3.0], 2.5).unwrap();
        assert_eq!(p.weights, vec![3, 4]);
        assert_eq!(p.threshold, 30);
        assert!(IntegerProblem::from_form(&[std::f64::consts::E], 1.0).is_none());
    }

    #[test]
    fn gauss_circle_by_table() {
        let p = IntegerProblem::from_form(&[1.0, 1.0], 400.0).unwrap();
        assert_eq!(p.count(u64::MAX).unwrap(), BigUint::from(1257u32));
    }

    #[test]
    fn budget_rejects_large_tables() {
        let p = IntegerProblem::from_form(&[1.0; 3], 10_000.0).unwrap();
        assert!(p.count(1000).is_err());
    }
}
