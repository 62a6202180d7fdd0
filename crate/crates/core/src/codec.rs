//! Coordinate-wise quantization of energy-bounded signals.
//!
//! A signal `f` on `{1, ..., k}` is recorded coordinate by coordinate at
//! precision `eps_i`, rounding toward zero in units of `eps_i`. The integer
//! code `u` then satisfies `sum (u_i eps_i)^2 <= sum f(i)^2`, so every signal
//! of energy at most `R^2` lands on a lattice point of the ellipsoid
//! `sum eps_i^2 u_i^2 <= R^2`.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing derived profile statistics.
const PROFILE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a signal needs at least one coordinate"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("signal value {v}")));
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        energy(self)
    }

    /// Membership in the class of signals with energy at most `radius^2`.
    pub fn is_admissible(&self, radius: f64) -> bool {
        self.energy() <= radius * radius
    }
}

/// Builds `f(i) = g(i+1) - g(i)` from a signal `g` rooted at zero.
///
/// `g` is indexed `0..=k` with `g[0] == 0`; the returned signal holds the `k`
/// forward differences, re-indexed so that `f[0]` (the first coordinate,
/// `f(1)` in one-based notation) is `g[1] - g[0]`.
pub fn forward_difference(g: &[f64]) -> Result<Signal> {
    match g.first() {
        None => Err(Error::invalid("rooted signal is empty")),
        Some(&g0) if g0 != 0.0 => Err(Error::invalid(format!(
            "rooted signal must start at 0, got {g0}"
        ))),
        Some(_) if g.len() < 2 => Err(Error::invalid(
            "rooted signal needs at least two samples to produce a difference",
        )),
        Some(_) => Signal::new(g.windows(2).map(|w| w[1] - w[0]).collect()),
    }
}

pub fn energy(f: &Signal) -> f64 {
    f.values.iter().map(|v| v * v).sum()
}

/// Precisions `eps_1..eps_k` together with their total and geometric mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionProfile {
    eps: Vec<f64>,
    eps_total: f64,
    eps_geom: f64,
    balance_c: Option<f64>,
}

impl PrecisionProfile {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::invalid("precision profile is empty"));
        }
        if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::invalid(format!(
                "precision must be positive and finite, got {e}"
            )));
        }
        let eps_total = eps.iter().sum();
        let mean_ln = eps.iter().map(|e| e.ln()).sum::<f64>() / eps.len() as f64;
        Ok(Self {
            eps,
            eps_total,
            eps_geom: mean_ln.exp(),
            balance_c: None,
        })
    }

    pub fn uniform(k: usize, eps: f64) -> Result<Self> {
        Self::new(vec![eps; k])
    }

    /// Declares a balance constant `c`; fails if some precision is not within
    /// a factor `c` of `eps_total / k`.
    pub fn with_balance(mut self, c: f64) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "balance constant must be >= 1, got {c}"
            )));
        }
        let needed = self.minimal_balance_constant();
        if needed > c * (1.0 + PROFILE_RTOL) {
            return Err(Error::invalid(format!(
                "profile is not balanced with C = {c} (needs C >= {needed})"
            )));
        }
        self.balance_c = Some(c);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn eps_total(&self) -> f64 {
        self.eps_total
    }

    pub fn eps_geom(&self) -> f64 {
        self.eps_geom
    }

    pub fn balance_c(&self) -> Option<f64> {
        self.balance_c
    }

    /// Smallest `C >= 1` for which the profile is balanced.
    pub fn minimal_balance_constant(&self) -> f64 {
        let mean = self.eps_total / self.k() as f64;
        self.eps
            .iter()
            .map(|&e| (e / mean).max(mean / e))
            .fold(1.0, f64::max)
    }

    /// The declared balance constant, or the minimal one when none was declared.
    pub fn effective_balance_constant(&self) -> f64 {
        self.balance_c
            .unwrap_or_else(|| self.minimal_balance_constant())
    }

    /// Returns the profile with every precision multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut p = Self::new(self.eps.iter().map(|e| e * s).collect())?;
        p.balance_c = self.balance_c;
        Ok(p)
    }
}

/// Integer code of a signal, tied to the profile that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeVector<'p> {
    codes: Vec<i64>,
    profile: &'p PrecisionProfile,
}

impl<'p> CodeVector<'p> {
    pub fn new(codes: Vec<i64>, profile: &'p PrecisionProfile) -> Result<Self> {
        if codes.len() != profile.k() {
            return Err(Error::DimensionMismatch {
                expected: profile.k(),
                actual: codes.len(),
            });
        }
        Ok(Self { codes, profile })
    }

    pub fn codes(&self) -> &[i64] {
        &self.codes
    }

    pub fn profile(&self) -> &'p PrecisionProfile {
        self.profile
    }

    /// `sum (u_i eps_i)^2`, the primal quadratic form at the code.
    pub fn scaled_energy(&self) -> f64 {
        self.codes
            .iter()
            .zip(&self.profile.eps)
            .map(|(&u, &e)| {
                let v = u as f64 * e;
                v * v
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.codes).expect("integer vector serializes")
    }
}

fn quantize_coord(value: f64, eps: f64) -> Result<i64> {
    let mut q = value / eps;
    let r = q.round();
    if (q - r).abs() < 4.0 * f64::EPSILON * q.abs() {
        q = r;
    }
    // -0.0 >= 0.0 holds, so negative zero takes the floor branch.
    let u = if value >= 0.0 { q.floor() } else { q.ceil() };
    if u.abs() >= 2f64.powi(62) {
        return Err(Error::invalid(format!(
            "code {u} for value {value} at precision {eps} does not fit in i64"
        )));
    }
    Ok(u as i64)
}

/// Rounds each coordinate toward zero in units of its precision.
pub fn quantize<'p>(f: &Signal, p: &'p PrecisionProfile) -> Result<CodeVector<'p>> {
    if f.k() != p.k() {
        return Err(Error::DimensionMismatch {
            expected: p.k(),
            actual: f.k(),
        });
    }
    let codes = f
        .values
        .iter()
        .zip(&p.eps)
        .map(|(&v, &e)| quantize_coord(v, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(CodeVector { codes, profile: p })
}

/// Which endpoints of a recovery cell are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// `u > 0`: `[u eps, (u+1) eps)`.
    Positive,
    /// `u < 0`: `((u-1) eps, u eps]`.
    Negative,
    /// `u = 0`: `(-eps, eps)`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub kind: CellKind,
}

impl Cell {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Membership, with a few ulps of slack on the closed endpoint to absorb
    /// the snapping done by the quantizer.
    pub fn contains(&self, v: f64) -> bool {
        let slack = |b: f64| 8.0 * f64::EPSILON * b.abs();
        match self.kind {
            CellKind::Positive => v >= self.lo - slack(self.lo) && v < self.hi,
            CellKind::Negative => v > self.lo && v <= self.hi + slack(self.hi),
            CellKind::Zero => v > self.lo && v < self.hi,
        }
    }
}

/// Set of signals sharing one code: a product of per-coordinate cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBox {
    cells: Vec<Cell>,
}

impl RecoveryBox {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn lo(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.lo).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.hi).collect()
    }

    pub fn contains(&self, f: &Signal) -> bool {
        f.k() == self.cells.len()
            && self
                .cells
                .iter()
                .zip(&f.values)
                .all(|(c, &v)| c.contains(v))
    }
}

/// The exact preimage of a code under [`quantize`].
///
/// Nonzero codes get a cell of width `eps_i`, closed on the side nearest
/// zero. A zero code collects both `[0, eps)` and `(-eps, 0)`, so its cell is
/// `(-eps, eps)`.
pub fn recovery_box(u: &CodeVector<'_>) -> RecoveryBox {
    let cells = u
        .codes
        .iter()
        .zip(&u.profile.eps)
        .map(|(&code, &e)| {
            let c = code as f64;
            match code.signum() {
                1 => Cell {
                    lo: c * e,
                    hi: (c + 1.0) * e,
                    kind: CellKind::Positive,
                },
                -1 => Cell {
                    lo: (c - 1.0) * e,
                    hi: c * e,
                    kind: CellKind::Negative,
                },
                _ => Cell {
                    lo: -e,
                    hi: e,
                    kind: CellKind::Zero,
                },
            }
        })
        .collect();
    RecoveryBox { cells }
}

/// Invariants of one quantize-and-recover round trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrip {
    /// The signal lies in the recovery box of its code.
    pub contained: bool,
    /// The code lies in the ellipsoid `sum (u_i eps_i)^2 <= R^2`.
    pub feasible: bool,
}

impl RoundTrip {
    pub fn ok(&self) -> bool {
        self.contained && self.feasible
    }
}

/// Quantizes an admissible signal and checks containment and feasibility.
pub fn round_trip(f: &Signal, p: &PrecisionProfile, radius: f64) -> Result<RoundTrip> {
    if !f.is_admissible(radius) {
        return Err(Error::invalid(format!(
            "signal energy {} exceeds R^2 = {}",
            f.energy(),
            radius * radius
        )));
    }
    let u = quantize(f, p)?;
    let x = radius * radius;
    Ok(RoundTrip {
        contained: recovery_box(&u).contains(f),
        feasible: u.scaled_energy() <= crate::numeric::tie_threshold(x),
    })
}

/// Reads a signal with one value per line. Blank lines and `#` comments are
/// skipped.
pub fn read_signal_csv<R: Read>(reader: R) -> Result<Signal> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("");
        if field.is_empty() {
            continue;
        }
        let v = field
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("line {}: {field:?}: {e}", line + 1)))?;
        values.push(v);
    }
    Signal::new(values)
}

pub fn read_signal_json<R: Read>(reader: R) -> Result<Signal> {
    let values: Vec<f64> = serde_json::from_reader(reader)?;
    Signal::new(values)
}

/// Reads a signal from a `.json` file (array of numbers) or any other file as
/// one-value-per-line CSV.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_signal_json(file),
        _ => read_signal_csv(file),
    }
}
