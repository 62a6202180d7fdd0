//! The verification suites behind `ellipsoid-entropy verify`.
//!
//! Each suite stops at its first counterexample and records it as JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{instance_seed, ExperimentConfig};
use crate::bound::integrals::envelope_for;
use crate::bound::{
    abel_lower, abel_upper, compute_parameters, delta_bessel_bound, evaluate_bound, integrals,
    power_bracket, verify_sandwich, BoundMode, BoundParameters,
};
use crate::codec::{round_trip, PrecisionProfile, Signal};
use crate::error::{Error, Result};
use crate::lattice::{brute_force_count, codebook_size, spectrum_with_budget, DiagonalForm};
use crate::special::{envelope_samples, log_grid};

/// Orders sampled by the Bessel suite.
pub const BESSEL_ORDERS: [f64; 7] = [1.0, 2.0, 3.5, 5.0, 10.0, 17.0, 50.0];
/// Smallest allowed `olenko_rhs - sqrt(x)|J|`.
pub const BESSEL_MARGIN: f64 = -1e-9;
pub const DELTA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub skipped: u64,
    pub counterexample: Option<Value>,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            passed: true,
            checks: 0,
            skipped: 0,
            counterexample: None,
            notes: Vec::new(),
        }
    }

    /// Records one check; returns `false` once the suite has failed.
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> Value) -> bool {
        self.checks += 1;
        if !ok && self.passed {
            self.passed = false;
            self.counterexample = Some(detail());
        }
        self.passed
    }

    fn skip(&mut self, why: String) {
        self.skipped += 1;
        if self.notes.len() < 8 {
            self.notes.push(why);
        }
    }

    fn fail_with(&mut self, e: &Error, context: Value) {
        self.passed = false;
        if self.counterexample.is_none() {
            self.counterexample = Some(json!({ "context": context, "error": e.to_string() }));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub warnings: Vec<String>,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| !s.passed)
    }
}

/// A random signal of energy at most `radius^2`: uniform in the ball, on its
/// boundary sphere, or truncated onto the precision grid, by turns.
pub fn random_signal<R: Rng>(
    rng: &mut R,
    p: &PrecisionProfile,
    radius: f64,
    variant: usize,
) -> Signal {
    let k = p.k();
    let g: Vec<f64> = (0..k)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let norm = g
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let scale = match variant % 3 {
        1 => radius / norm,
        _ => radius * rng.random::<f64>().powf(1.0 / k as f64) / norm,
    };
    let mut values: Vec<f64> = g.iter().map(|v| v * scale).collect();
    if variant % 3 == 2 {
        for (v, e) in values.iter_mut().zip(p.eps()) {
            *v = (*v / e).trunc() * e;
        }
    }
    // Rounding in the rescale can push the energy a hair above R^2.
    let mut f = Signal::new(values).expect("finite values");
    while !f.is_admissible(radius) {
        f = Signal::new(f.values().iter().map(|v| v * (1.0 - 1e-15)).collect())
            .expect("finite values");
    }
    f
}

fn codec_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("codec_round_trip");
    for inst in cfg.instances()? {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, inst.k) ^ inst.r.to_bits());
        for i in 0..cfg.verify.codec_samples {
            let f = random_signal(&mut rng, &inst.profile, inst.r, i);
            let rt = round_trip(&f, &inst.profile, inst.r)?;
            if !s.check(rt.ok(), || json!({ "k": inst.k, "R": inst.r, "eps": inst.profile.eps(), "signal": f, "outcome": rt })) {
                return Ok(s);
            }
        }
    }
    Ok(s)
}

fn oracle_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("oracle_equivalence");
    for inst in cfg.instances()? {
        let form = DiagonalForm::primal(&inst.profile);
        let x = inst.r * inst.r;
        let naive = match brute_force_count(&form, x, cfg.verify.oracle_max_points) {
            Ok(n) => n,
            Err(Error::BudgetExceeded { needed, .. }) => {
                s.skip(format!("k={} R={}: box of {needed} points", inst.k, inst.r));
                continue;
            }
            Err(e) => return Err(e),
        };
        let fast = codebook_size(&inst.profile, inst.r, &cfg.count_options())?;
        let got = fast.to_u64();
        if !s.check(got == Some(naive), || json!({ "k": inst.k, "R": inst.r, "eps": inst.profile.eps(), "count": got, "oracle": naive })) {
            break;
        }
    }
    Ok(s)
}

fn bessel_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("bessel_envelope");
    let xs = log_grid(1e-3, 1e4, cfg.verify.bessel_grid.max(2));
    for sample in envelope_samples(&BESSEL_ORDERS, &xs)? {
        if !s.check(sample.margin() >= BESSEL_MARGIN, || json!(sample)) {
            break;
        }
    }
    Ok(s)
}

fn unit_params(
    k: usize,
    r: f64,
    cfg: &ExperimentConfig,
) -> Result<(BoundParameters, PrecisionProfile)> {
    let profile = cfg.profile_for(k)?;
    Ok((compute_parameters(k, r, &profile, &cfg.ledger)?, profile))
}

fn delta_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("delta_identities");
    for rho in 1..=4u32 {
        for z in [0.5, 1.0, 2.5198] {
            for x in [1.0, 4.0, 16.0] {
                let err = crate::bound::delta::power_identity_error(x, z, rho)?;
                if !s.check(
                    err <= DELTA_TOLERANCE,
                    || json!({ "rho": rho, "z": z, "x": x, "relative_error": err }),
                ) {
                    return Ok(s);
                }
            }
        }
    }
    for &k in cfg.k_list.iter().filter(|k| **k >= 2) {
        for x in [4.0f64, 16.0] {
            let (p, _) = unit_params(k, x.sqrt(), cfg)?;
            let b = power_bracket(k, x, p.z, p.rho)?;
            if !s.check(
                b.holds(DELTA_TOLERANCE),
                || json!({ "k": k, "x": x, "bracket": b }),
            ) {
                return Ok(s);
            }
            let t = delta_bessel_bound(&p, p.y)?;
            let gap = (t.large - t.small).abs() / t.large;
            if !s.check(gap <= 1e-10, || json!({ "k": k, "x": x, "crossover": t })) {
                return Ok(s);
            }
        }
    }
    Ok(s)
}

fn abel_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("abel_inequalities");
    let cutoff = cfg.verify.abel_cutoff;
    for &k in cfg.k_list.iter().filter(|k| **k >= 2) {
        let profile = cfg.profile_for(k)?;
        let spec = match spectrum_with_budget(
            &DiagonalForm::dual(&profile),
            cutoff,
            cfg.spectrum_budget,
        ) {
            Ok(sp) => sp,
            Err(Error::BudgetExceeded { needed, .. }) => {
                s.skip(format!(
                    "k={k}: dual spectrum to {cutoff} has {needed} points"
                ));
                continue;
            }
            Err(e) => return Err(e),
        };
        for x in [4.0f64, 16.0, 100.0] {
            let (p, _) = unit_params(k, x.sqrt(), cfg)?;
            if p.y > cutoff {
                s.skip(format!("k={k} x={x}: y = {} is past the cutoff", p.y));
                continue;
            }
            let lower = abel_lower(&spec, p.y, integrals::lower_weight(&p))?;
            if !s.check(
                lower.holds(),
                || json!({ "k": k, "x": x, "side": "lower", "check": lower }),
            ) {
                return Ok(s);
            }
            let upper = abel_upper(&spec, p.y, integrals::upper_weight(&p), &envelope_for(&p))?;
            if !s.check(
                upper.holds(),
                || json!({ "k": k, "x": x, "side": "upper", "check": upper }),
            ) {
                return Ok(s);
            }
        }
    }
    Ok(s)
}

fn sandwich_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("sandwich");
    for &k in cfg.k_list.iter().filter(|k| **k >= 2) {
        for x in [4.0f64, 16.0] {
            let (p, profile) = unit_params(k, x.sqrt(), cfg)?;
            let spec = match spectrum_with_budget(
                &DiagonalForm::primal(&profile),
                p.x_end(),
                cfg.spectrum_budget,
            ) {
                Ok(sp) => sp,
                Err(Error::BudgetExceeded { needed, .. }) => {
                    s.skip(format!("k={k} x={x}: primal spectrum has {needed} points"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let rep = verify_sandwich(&spec, &p)?;
            let ok = rep.holds && rep.bracket_holds && rep.power_identity_error <= DELTA_TOLERANCE;
            if !s.check(ok, || json!({ "k": k, "x": x, "report": rep })) {
                return Ok(s);
            }
        }
    }
    Ok(s)
}

fn certified_suite(cfg: &ExperimentConfig) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("certified_bound");
    let instances = cfg.instances()?;
    let ledger = super::commands::sweep_ledger(cfg, &instances);
    for inst in &instances {
        if inst.k < 2 || inst.r < 2.0 {
            s.skip(format!("k={} R={}: outside k >= 2, R >= 2", inst.k, inst.r));
            continue;
        }
        let p = compute_parameters(inst.k, inst.r, &inst.profile, &ledger)?;
        let env = envelope_for(&p);
        // The envelope must dominate the dual counting function.
        match spectrum_with_budget(
            &DiagonalForm::dual(&inst.profile),
            4.0 * p.y,
            cfg.spectrum_budget,
        ) {
            Ok(spec) => {
                let mut g = 0u64;
                for l in spec.levels() {
                    g += l.multiplicity;
                    let bound = env.value(l.value);
                    if !s.check(g as f64 <= bound, || json!({ "k": inst.k, "R": inst.r, "u": l.value, "G": g, "envelope": bound, "sigma": p.sigma })) {
                        return Ok(s);
                    }
                }
            }
            Err(Error::BudgetExceeded { needed, .. }) => {
                s.skip(format!(
                    "k={} R={}: dual spectrum has {needed} points",
                    inst.k, inst.r
                ));
            }
            Err(e) => return Err(e),
        }
        let tau = match codebook_size(&inst.profile, inst.r, &cfg.count_options()) {
            Ok(t) => t,
            Err(Error::BudgetExceeded { .. }) => {
                s.skip(format!("k={} R={}: count over budget", inst.k, inst.r));
                continue;
            }
            Err(e) => return Err(e),
        };
        let rep = evaluate_bound(
            inst.r,
            &inst.profile,
            &ledger,
            BoundMode::CertifiedEnvelope,
            &cfg.eval_options(),
        )?;
        let ln_tau = tau.ln();
        if !s.check(rep.dominates(ln_tau), || {
            json!({ "k": inst.k, "R": inst.r, "tau": tau.count.to_string(), "ln_tau": ln_tau, "total_log_bound": rep.total_log_bound, "sigma": p.sigma })
        }) {
            return Ok(s);
        }
    }
    Ok(s)
}

/// Runs every suite. Errors inside a suite count as a failure of that suite.
pub fn cmd_verify(cfg: &ExperimentConfig) -> VerifyReport {
    let mut warnings = Vec::new();
    if cfg.k_list.is_empty() {
        warnings.push("k_list is empty: instance-driven suites are vacuous".to_owned());
    }
    if cfg.r_list.is_empty() {
        warnings.push("R_list is empty: instance-driven suites are vacuous".to_owned());
    }
    type Suite = fn(&ExperimentConfig) -> Result<SuiteResult>;
    let suites: [(&str, Suite); 7] = [
        ("codec_round_trip", codec_suite),
        ("oracle_equivalence", oracle_suite),
        ("bessel_envelope", bessel_suite),
        ("delta_identities", delta_suite),
        ("abel_inequalities", abel_suite),
        ("sandwich", sandwich_suite),
        ("certified_bound", certified_suite),
    ];
    let results: Vec<SuiteResult> = suites
        .iter()
        .map(|(name, run)| {
            run(cfg).unwrap_or_else(|e| {
                let mut s = SuiteResult::new(name);
                s.fail_with(&e, json!({ "suite": name }));
                s
            })
        })
        .collect();
    VerifyReport {
        passed: results.iter().all(|s| s.passed),
        warnings,
        suites: results,
    }
}
