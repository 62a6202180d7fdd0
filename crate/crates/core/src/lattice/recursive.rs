//! Pruned coordinate recursion.
//!
//! Coordinates are visited in order of decreasing `d_i`, so the narrowest
//! ranges sit at the top of the tree. The last (widest) coordinate is never
//! enumerated: for a partial sum `s` it contributes `2 m + 1` points where
//! `m` is the largest integer with `s + d m^2 <= x`. Only non-negative values
//! of each enumerated coordinate are visited; nonzero ones count twice.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use rayon::prelude::*;

use super::max_abs_coordinate;
use crate::error::{Error, Result};
use crate::numeric::{tie_threshold, CompensatedSum};

struct Walker<'a> {
    diag: &'a [f64],
    threshold: f64,
    nodes: &'a AtomicU64,
    budget: u64,
}

impl Walker<'_> {
    fn visit(&self) -> Result<()> {
        let seen = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if seen > self.budget {
            return Err(Error::BudgetExceeded {
                what: "enumeration nodes",
                needed: seen,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn count_from(&self, level: usize, partial: CompensatedSum) -> Result<u128> {
        let d = self.diag[level];
        let Some(m) = max_abs_coordinate(d, partial, self.threshold) else {
            return Ok(0);
        };
        if level + 1 == self.diag.len() {
            return Ok(2 * u128::from(m) + 1);
        }
        self.visit()?;
        let mut total = self.count_from(level + 1, partial)?;
        for u in 1..=m {
            let uf = u as f64;
            total += 2 * self.count_from(level + 1, partial.plus(d * uf * uf))?;
        }
        Ok(total)
    }
}

/// Counts `u` with `sum diag_i u_i^2 <= x` (origin included). The top-level
/// coordinate's range is split across the rayon pool.
pub(super) fn count(diag: &[f64], x: f64, budget: u64) -> Result<BigUint> {
    let mut sorted = diag.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let nodes = AtomicU64::new(0);
    let walker = Walker {
        diag: &sorted,
        threshold: tie_threshold(x),
        nodes: &nodes,
        budget,
    };
    let top = sorted[0];
    if sorted.len() == 1 {
        return walker
            .count_from(0, CompensatedSum::new())
            .map(BigUint::from);
    }
    let m = max_abs_coordinate(top, CompensatedSum::new(), walker.threshold).unwrap_or(0);
    let total = (0..=m)
        .into_par_iter()
        .map(|u| {
            let uf = u as f64;
            let weight = if u == 0 { 1 } else { 2 };
            walker
                .count_from(1, CompensatedSum::new().plus(top * uf * uf))
                .map(|c| weight * c)
        })
        .try_reduce(|| 0u128, |a, b| Ok(a + b))?;
    Ok(BigUint::from(total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_circle_small_radii() {
        for (r2, expected) in [(0.0, 1u32), (1.0, 5), (2.0, 9), (4.0, 13), (25.0, 81)] {
            assert_eq!(
                count(&[1.0, 1.0], r2, u64::MAX).unwrap(),
                BigUint::from(expected)
            );
        }
    }

    #[test]
    fn one_dimension() {
        assert_eq!(count(&[0.25], 1.0, u64::MAX).unwrap(), BigUint::from(5u32));
        assert_eq!(count(&[4.0], 3.9, u64::MAX).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn ties_count_as_inside() {
        // 0.1^2 * 3^2 evaluates to 0.09000000000000002 > 0.09 in binary.
        let d = 0.1_f64 * 0.1;
        assert!(d * 9.0 > 0.09);
        assert_eq!(count(&[d], 0.09, u64::MAX).unwrap(), BigUint::from(7u32));
    }
}
