//! Experiment configuration and instance expansion.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bound::{BoundMode, ConstantsLedger, EvalOptions};
use crate::codec::PrecisionProfile;
use crate::error::{Error, Result};
use crate::lattice::{
    CountOptions, SchemeChoice, DEFAULT_DP_BUDGET, DEFAULT_NODE_BUDGET, DEFAULT_SPECTRUM_BUDGET,
};

/// How the precision profile of each instance is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `eps_i = eps` for every coordinate.
    Uniform { eps: f64 },
    /// A fixed list; its length must match every `k`.
    Explicit { eps: Vec<f64> },
    /// `eps_i = (eps_total/k) exp(U_i)`, `U_i` uniform on
    /// `[-ln sqrt(C), ln sqrt(C)]`, renormalised to `eps_total` (default `k`).
    BalancedRandom {
        c: f64,
        #[serde(default)]
        eps_total: Option<f64>,
    },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Uniform { eps: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    #[default]
    Certified,
    Empirical,
    Both,
}

impl ModeChoice {
    pub fn modes(self) -> Vec<BoundMode> {
        match self {
            ModeChoice::Certified => vec![BoundMode::CertifiedEnvelope],
            ModeChoice::Empirical => vec![BoundMode::EmpiricalSpectrum],
            ModeChoice::Both => vec![BoundMode::CertifiedEnvelope, BoundMode::EmpiricalSpectrum],
        }
    }
}

/// Sizes of the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Random signals per `(k, profile)` in the codec suite.
    pub codec_samples: usize,
    /// Grid points per order in the Bessel suite.
    pub bessel_grid: usize,
    /// Largest box the brute-force oracle may scan.
    pub oracle_max_points: u64,
    /// Dual spectrum cutoff in the Abel suite.
    pub abel_cutoff: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            codec_samples: 10_000,
            bessel_grid: 1_000,
            oracle_max_points: 1_000_000,
            abel_cutoff: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_list: Vec<usize>,
    #[serde(rename = "R_list", alias = "r_list")]
    pub r_list: Vec<f64>,
    pub profile: ProfileSpec,
    pub ledger: ConstantsLedger,
    pub mode: ModeChoice,
    /// Node budget of the recursive counter.
    pub count_budget: u64,
    pub dp_budget: u64,
    pub spectrum_budget: u64,
    pub seed: u64,
    pub verify: VerifySettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_list: vec![2, 3, 4],
            r_list: vec![2.0, 4.0, 8.0],
            profile: ProfileSpec::default(),
            ledger: ConstantsLedger::default(),
            mode: ModeChoice::default(),
            count_budget: DEFAULT_NODE_BUDGET,
            dp_budget: DEFAULT_DP_BUDGET,
            spectrum_budget: DEFAULT_SPECTRUM_BUDGET,
            seed: 0,
            verify: VerifySettings::default(),
        }
    }
}

/// One `(k, R, profile)` point of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub k: usize,
    pub r: f64,
    pub profile: PrecisionProfile,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k_list.iter().find(|k| **k == 0) {
            return Err(Error::invalid(format!("k must be positive, got {k}")));
        }
        if let Some(r) = self.r_list.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!(
                "R must be positive and finite, got {r}"
            )));
        }
        if self.count_budget == 0 || self.dp_budget == 0 || self.spectrum_budget == 0 {
            return Err(Error::invalid("budgets must be positive"));
        }
        self.ledger.validate()?;
        match &self.profile {
            ProfileSpec::Uniform { eps } if !(eps.is_finite() && *eps > 0.0) => {
                return Err(Error::invalid(format!(
                    "uniform eps must be positive, got {eps}"
                )))
            }
            ProfileSpec::Explicit { eps } => {
                if let Some(k) = self.k_list.iter().find(|k| **k != eps.len()) {
                    return Err(Error::invalid(format!(
                        "explicit profile has {} entries but k = {k} was requested",
                        eps.len()
                    )));
                }
            }
            ProfileSpec::BalancedRandom { c, eps_total } => {
                if !(c.is_finite() && *c >= 1.0) {
                    return Err(Error::invalid(format!(
                        "balance constant must be >= 1, got {c}"
                    )));
                }
                if let Some(t) = eps_total.filter(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(Error::invalid(format!(
                        "eps_total must be positive, got {t}"
                    )));
                }
            }
            ProfileSpec::Uniform { .. } => {}
        }
        for &k in &self.k_list {
            self.profile_for(k)?;
        }
        Ok(())
    }

    pub fn count_options(&self) -> CountOptions {
        CountOptions {
            node_budget: self.count_budget,
            dp_budget: self.dp_budget,
            scheme: SchemeChoice::Auto,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            spectrum_budget: self.spectrum_budget,
        }
    }

    /// The profile for dimension `k`; random profiles depend on `(seed, k)`
    /// only, so every `R` of a sweep sees the same profile.
    pub fn profile_for(&self, k: usize) -> Result<PrecisionProfile> {
        let p = match &self.profile {
            ProfileSpec::Uniform { eps } => PrecisionProfile::uniform(k, *eps)?,
            ProfileSpec::Explicit { eps } => {
                if eps.len() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        actual: eps.len(),
                    });
                }
                PrecisionProfile::new(eps.clone())?
            }
            ProfileSpec::BalancedRandom { c, eps_total } => {
                let total = eps_total.unwrap_or(k as f64);
                let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(self.seed, k));
                let half = c.sqrt().ln();
                let raw: Vec<f64> = (0..k)
                    .map(|_| {
                        if half > 0.0 {
                            rng.random_range(-half..=half).exp()
                        } else {
                            1.0
                        }
                    })
                    .collect();
                let s: f64 = raw.iter().sum();
                PrecisionProfile::new(raw.iter().map(|v| v * total / s).collect())?
                    .with_balance(*c)?
            }
        };
        match self.ledger.c_balance {
            Some(c) if p.balance_c().is_none() => p.with_balance(c),
            _ => Ok(p),
        }
    }

    /// Every `(k, R)` pair, ordered by `k` then `R`.
    pub fn instances(&self) -> Result<Vec<Instance>> {
        let mut out = Vec::with_capacity(self.k_list.len() * self.r_list.len());
        for &k in &self.k_list {
            let profile = self.profile_for(k)?;
            for &r in &self.r_list {
                out.push(Instance {
                    k,
                    r,
                    profile: profile.clone(),
                });
            }
        }
        Ok(out)
    }
}

/// Mixes the run seed with the dimension (splitmix64 finalizer).
pub fn instance_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
