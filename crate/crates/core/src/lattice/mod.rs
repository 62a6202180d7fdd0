//! Exact lattice-point counting for diagonal ellipsoids.
//!
//! For a diagonal form `Q(u) = sum d_i u_i^2` on `Z^k` this module counts
//! `#{u : Q(u) <= x}`, both for the primal form (`d_i = eps_i^2`, whose count
//! at `x = R^2` is the codebook size) and for the dual form
//! (`d_i = eps_i^-2`). Two schemes are available:
//!
//! * an integer dynamic program over `sum a_i u_i^2 = n`, used when every
//!   `d_i` and `x` are rationals with a small common denominator, and
//! * a pruned recursion over coordinates that only ever materializes the
//!   first `k - 1` coordinates (the last one is counted in closed form).
//!
//! Membership `Q(u) <= x` is evaluated with compensated summation; sums within
//! four ulps above `x` count as inside.

mod dp;
mod oracle;
mod recursive;
mod spectrum;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::codec::PrecisionProfile;
use crate::error::{Error, Result};
use crate::numeric::{tie_threshold, CompensatedSum};

pub use oracle::brute_force_count;
pub use spectrum::{smoothed_count, spectrum, spectrum_with_budget, Spectrum, SpectrumLevel};

/// Default cap on recursion nodes (partial vectors visited).
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Default cap on dynamic-programming work (cell updates).
pub const DEFAULT_DP_BUDGET: u64 = 100_000_000;
/// Default cap on the number of points materialized into a spectrum.
pub const DEFAULT_SPECTRUM_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Primal,
    Dual,
}

/// A positive-definite diagonal quadratic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalForm {
    diag: Vec<f64>,
    kind: FormKind,
}

impl DiagonalForm {
    pub fn new(diag: Vec<f64>, kind: FormKind) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("a form needs at least one coordinate"));
        }
        if let Some(d) = diag.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid(format!(
                "diagonal entries must be positive, got {d}"
            )));
        }
        Ok(Self { diag, kind })
    }

    /// `diag_i = eps_i^2`.
    pub fn primal(p: &PrecisionProfile) -> Self {
        Self {
            diag: p.eps().iter().map(|e| e * e).collect(),
            kind: FormKind::Primal,
        }
    }

    /// `diag_i = eps_i^-2`, the inverse of the primal matrix.
    pub fn dual(p: &PrecisionProfile) -> Self {
        Self {
            diag: p.eps().iter().map(|e| 1.0 / (e * e)).collect(),
            kind: FormKind::Dual,
        }
    }

    /// The form with inverted diagonal and the opposite kind.
    pub fn inverse(&self) -> Self {
        Self {
            diag: self.diag.iter().map(|d| 1.0 / d).collect(),
            kind: match self.kind {
                FormKind::Primal => FormKind::Dual,
                FormKind::Dual => FormKind::Primal,
            },
        }
    }

    pub fn k(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    /// Determinant `prod diag_i`. Overflows to infinity for large `k`; see
    /// [`Self::ln_det`].
    pub fn det(&self) -> f64 {
        self.diag.iter().product()
    }

    pub fn ln_det(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum()
    }

    /// `Q(u)`, compensated.
    pub fn value(&self, u: &[i64]) -> f64 {
        self.diag
            .iter()
            .zip(u)
            .map(|(&d, &v)| {
                let v = v as f64;
                d * v * v
            })
            .collect::<CompensatedSum>()
            .value()
    }

    /// Whether `Q(u) <= x` under the tie convention.
    pub fn contains(&self, u: &[i64], x: f64) -> bool {
        self.value(u) <= tie_threshold(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountScheme {
    IntegerDp,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Auto,
    IntegerDp,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountOptions {
    pub node_budget: u64,
    pub dp_budget: u64,
    pub scheme: SchemeChoice,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
            dp_budget: DEFAULT_DP_BUDGET,
            scheme: SchemeChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    #[serde(with = "decimal")]
    pub count: BigUint,
    pub includes_origin: bool,
    pub scheme: CountScheme,
}

impl CountResult {
    /// Natural log of the count (`-inf` for zero).
    pub fn ln(&self) -> f64 {
        ln_biguint(&self.count)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.count.to_u64()
    }
}

pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    if let Some(v) = n.to_f64().filter(|v| v.is_finite()) {
        return v.ln();
    }
    // Keep the top 64 bits.
    let bits = n.bits();
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Counts `u` in `Z^k` with `Q(u) <= x`, with default budgets.
pub fn count_points(form: &DiagonalForm, x: f64, include_origin: bool) -> Result<CountResult> {
    count_points_with(form, x, include_origin, &CountOptions::default())
}

pub fn count_points_with(
    form: &DiagonalForm,
    x: f64,
    include_origin: bool,
    opts: &CountOptions,
) -> Result<CountResult> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("threshold {x}")));
    }
    if x < 0.0 {
        return Err(Error::invalid(format!(
            "threshold must be non-negative, got {x}"
        )));
    }
    let (total, scheme) = match opts.scheme {
        SchemeChoice::Recursive => (
            recursive::count(form.diag(), x, opts.node_budget)?,
            CountScheme::Recursive,
        ),
        SchemeChoice::IntegerDp => {
            let problem = dp::IntegerProblem::from_form(form.diag(), x).ok_or_else(|| {
                Error::invalid("form and threshold are not commensurate rationals")
            })?;
            (problem.count(opts.dp_budget)?, CountScheme::IntegerDp)
        }
        SchemeChoice::Auto => match dp::IntegerProblem::from_form(form.diag(), x) {
            Some(problem) if problem.work() <= opts.dp_budget => {
                (problem.count(opts.dp_budget)?, CountScheme::IntegerDp)
            }
            _ => (
                recursive::count(form.diag(), x, opts.node_budget)?,
                CountScheme::Recursive,
            ),
        },
    };
    let count = if include_origin {
        total
    } else {
        total - BigUint::one()
    };
    Ok(CountResult {
        count,
        includes_origin: include_origin,
        scheme,
    })
}

/// `tau(k)`: the number of codes `u` with `sum (u_i eps_i)^2 <= R^2`,
/// origin included.
pub fn codebook_size(
    p: &PrecisionProfile,
    radius: f64,
    opts: &CountOptions,
) -> Result<CountResult> {
    count_points_with(&DiagonalForm::primal(p), radius * radius, true, opts)
}

/// Largest `m >= 0` with `partial + d m^2 <= x` under the tie convention, or
/// `None` when `partial` alone already exceeds `x`.
pub(crate) fn max_abs_coordinate(d: f64, partial: CompensatedSum, threshold: f64) -> Option<u64> {
    let base = partial.value();
    if base > threshold {
        return None;
    }
    let fits = |m: u64| {
        let mf = m as f64;
        partial.plus(d * mf * mf).value() <= threshold
    };
    let mut m = ((threshold - base) / d).sqrt().floor() as u64;
    while fits(m + 1) {
        m += 1;
    }
    while m > 0 && !fits(m) {
        m -= 1;
    }
    Some(m)
}

/// Integer points of the dual ellipsoid's bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBound {
    /// `prod (2 floor(sqrt(x) eps_i) + 1)`.
    #[serde(with = "decimal")]
    pub exact: BigUint,
    /// `prod (2 sqrt(x) eps_i + 1)`; may be infinite for large `k`.
    pub relaxed: f64,
    pub ln_relaxed: f64,
}

/// Counts integer points of the box `prod [-sqrt(x) eps_i, sqrt(x) eps_i]`,
/// which contains the dual ellipsoid `sum eps_i^-2 u_i^2 <= x`.
pub fn box_bound(p: &PrecisionProfile, x: f64) -> Result<BoxBound> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "threshold must be non-negative, got {x}"
        )));
    }
    let threshold = tie_threshold(x);
    let mut exact = BigUint::one();
    let mut ln_relaxed = 0.0;
    for &e in p.eps() {
        let m = max_abs_coordinate(1.0 / (e * e), CompensatedSum::new(), threshold).unwrap_or(0);
        exact *= BigUint::from(2 * m + 1);
        ln_relaxed += (2.0 * x.sqrt() * e + 1.0).ln();
    }
    Ok(BoxBound {
        exact,
        relaxed: ln_relaxed.exp(),
        ln_relaxed,
    })
}

pub(crate) mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| D::Error::custom("invalid decimal integer"))
    }
}
