//! Naive full-box counter, kept deliberately free of pruning so it can serve
//! as an independent check on the production counters.

use super::DiagonalForm;
use crate::error::{Error, Result};

/// Counts `u` with `Q(u) <= x` (origin included) by testing every integer
/// point of the bounding box `|u_i| <= sqrt(x / d_i) + 1`. Fails when the box
/// has more than `max_points` points.
pub fn brute_force_count(form: &DiagonalForm, x: f64, max_points: u64) -> Result<u64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "threshold must be non-negative, got {x}"
        )));
    }
    let half: Vec<i64> = form
        .diag()
        .iter()
        .map(|d| (x / d).sqrt().floor() as i64 + 1)
        .collect();
    let points = half
        .iter()
        .try_fold(1u64, |acc, h| acc.checked_mul(2 * *h as u64 + 1))
        .unwrap_or(u64::MAX);
    if points > max_points {
        return Err(Error::BudgetExceeded {
            what: "brute-force box points",
            needed: points,
            budget: max_points,
        });
    }
    let mut u: Vec<i64> = half.iter().map(|h| -h).collect();
    let mut count = 0u64;
    loop {
        if form.contains(&u, x) {
            count += 1;
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == u.len() {
                return Ok(count);
            }
            if u[i] < half[i] {
                u[i] += 1;
                break;
            }
            u[i] = -half[i];
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FormKind;

    #[test]
    fn matches_hand_counts() {
        let f = DiagonalForm::new(vec![1.0, 1.0], FormKind::Primal).unwrap();
        assert_eq!(brute_force_count(&f, 4.0, 1_000).unwrap(), 13);
        let f = DiagonalForm::new(vec![1.0; 3], FormKind::Primal).unwrap();
        assert_eq!(brute_force_count(&f, 1.0, 1_000).unwrap(), 7);
        assert!(brute_force_count(&f, 100.0, 10).is_err());
    }
}
