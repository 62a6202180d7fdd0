//! Materialized spectra: the positive values of a form on `Z^k`, with
//! multiplicity, up to a cutoff.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{count_points, max_abs_coordinate, DiagonalForm, FormKind, DEFAULT_SPECTRUM_BUDGET};
use crate::error::{Error, Result};
use crate::numeric::{factorial, tie_threshold, CompensatedSum};

/// Values are grouped on a grid of this spacing.
const KEY_SCALE: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub value: f64,
    pub multiplicity: u64,
}

/// Sorted distinct positive values `<= cutoff` with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    k: usize,
    kind: FormKind,
    cutoff: f64,
    levels: Vec<SpectrumLevel>,
}

impl Spectrum {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn levels(&self) -> &[SpectrumLevel] {
        &self.levels
    }

    /// Number of values counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Smallest positive value, if any lies below the cutoff.
    pub fn first(&self) -> Option<f64> {
        self.levels.first().map(|l| l.value)
    }

    /// All values in non-decreasing order, repeated by multiplicity.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.value, l.multiplicity as usize))
    }

    pub(crate) fn check_within(&self, x: f64) -> Result<()> {
        if x > tie_threshold(self.cutoff) {
            return Err(Error::IncompleteSpectrum {
                cutoff: self.cutoff,
                requested: x,
            });
        }
        Ok(())
    }

    /// The counting function at `x`: number of values `<= x`, origin excluded.
    pub fn counting(&self, x: f64) -> Result<u64> {
        self.check_within(x)?;
        Ok(self.counting_unchecked(x))
    }

    pub(crate) fn counting_unchecked(&self, x: f64) -> u64 {
        let t = tie_threshold(x);
        self.levels
            .iter()
            .take_while(|l| l.value <= t)
            .map(|l| l.multiplicity)
            .sum()
    }

    /// The `n`-th value (one-based, with multiplicity).
    pub fn nth(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return None;
        }
        let mut seen = 0;
        for l in &self.levels {
            seen += l.multiplicity;
            if seen >= n {
                return Some(l.value);
            }
        }
        None
    }

    /// Writes `value,multiplicity` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["value", "multiplicity"])?;
        for l in &self.levels {
            wtr.write_record([l.value.to_string(), l.multiplicity.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Spectrum of `form` up to `cutoff`, with the default point budget.
pub fn spectrum(form: &DiagonalForm, cutoff: f64) -> Result<Spectrum> {
    spectrum_with_budget(form, cutoff, DEFAULT_SPECTRUM_BUDGET)
}

pub fn spectrum_with_budget(form: &DiagonalForm, cutoff: f64, budget: u64) -> Result<Spectrum> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::invalid(format!(
            "spectrum cutoff must be positive, got {cutoff}"
        )));
    }
    let points = count_points(form, cutoff, false)?;
    let needed = points.count.to_u64().unwrap_or(u64::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what: "spectrum points",
            needed,
            budget,
        });
    }
    let mut diag = form.diag().to_vec();
    diag.sort_by(|a, b| b.total_cmp(a));
    let mut groups = BTreeMap::new();
    collect(
        &diag,
        tie_threshold(cutoff),
        CompensatedSum::new(),
        1,
        &mut groups,
    );
    groups.remove(&0);
    let levels = groups
        .into_iter()
        .map(|(key, multiplicity)| SpectrumLevel {
            value: key as f64 / KEY_SCALE,
            multiplicity,
        })
        .collect();
    Ok(Spectrum {
        k: form.k(),
        kind: form.kind(),
        cutoff,
        levels,
    })
}

fn collect(
    diag: &[f64],
    threshold: f64,
    partial: CompensatedSum,
    weight: u64,
    out: &mut BTreeMap<i128, u64>,
) {
    let Some((&d, rest)) = diag.split_first() else {
        let key = (partial.value() * KEY_SCALE).round() as i128;
        *out.entry(key).or_insert(0) += weight;
        return;
    };
    let Some(m) = max_abs_coordinate(d, partial, threshold) else {
        return;
    };
    collect(rest, threshold, partial, weight, out);
    for u in 1..=m {
        let uf = u as f64;
        collect(rest, threshold, partial.plus(d * uf * uf), 2 * weight, out);
    }
}

/// The smoothed count `(1/rho!) sum_{l_n <= x} (x - l_n)^rho`; for `rho = 0`
/// this is the counting function.
pub fn smoothed_count(s: &Spectrum, x: f64, rho: u32) -> Result<f64> {
    s.check_within(x)?;
    let t = tie_threshold(x);
    let exponent = i32::try_from(rho).map_err(|_| Error::invalid("smoothing order too large"))?;
    let sum: CompensatedSum = s
        .levels
        .iter()
        .take_while(|l| l.value <= t)
        .map(|l| l.multiplicity as f64 * (x - l.value).max(0.0).powi(exponent))
        .collect();
    Ok(sum.value() / factorial(rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(diag: &[f64]) -> DiagonalForm {
        DiagonalForm::new(diag.to_vec(), FormKind::Dual).unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let s = spectrum(&form(&[1.0, 1.0]), 2.0).unwrap();
        assert_eq!(
            s.values().collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]
        );
        let s = spectrum(&form(&[1.0, 4.0]), 1.0).unwrap();
        assert_eq!(s.values().collect::<Vec<_>>(), vec![1.0, 1.0]);
        let s = spectrum(&form(&[1.0, 1.0]), 0.5).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.first(), None);
    }

    #[test]
    fn smoothed_count_examples() {
        let s = spectrum(&form(&[1.0, 1.0]), 4.0).unwrap();
        assert_eq!(smoothed_count(&s, 1.0, 0).unwrap(), 4.0);
        assert!((smoothed_count(&s, 1.5, 1).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(smoothed_count(&s, 0.5, 3).unwrap(), 0.0);
        // rho = 2 at x = 2: four values at 1 contribute (2-1)^2 / 2 each.
        assert!((smoothed_count(&s, 2.0, 2).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_queries_past_cutoff() {
        let s = spectrum(&form(&[1.0, 1.0]), 2.0).unwrap();
        assert!(matches!(
            smoothed_count(&s, 2.5, 0),
            Err(Error::IncompleteSpectrum { .. })
        ));
        assert!(s.counting(3.0).is_err());
        assert!(spectrum(&form(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            spectrum_with_budget(&form(&[1.0, 1.0]), 100.0, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn nth_and_counting() {
        let s = spectrum(&form(&[1.0, 1.0]), 5.0).unwrap();
        assert_eq!(s.nth(1), Some(1.0));
        assert_eq!(s.nth(4), Some(1.0));
        assert_eq!(s.nth(5), Some(2.0));
        assert_eq!(s.nth(0), None);
        assert_eq!(s.counting(4.0).unwrap(), 12);
        assert_eq!(s.len(), 20);
    }

    #[test]
    fn csv_export() {
        let s = spectrum(&form(&[1.0, 1.0]), 2.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "value,multiplicity\n1,4\n2,4\n"
        );
    }
}
