//! The explicit upper bound on the codebook size and the inequalities it is
//! assembled from.
//!
//! [`params`] holds the derived quantities `rho`, `z`, `y`, `sigma` and the
//! constants ledger; [`delta`] the difference operator; [`abel`] the Abel
//! summation bounds; [`integrals`] the integrals `I1..I4`; and [`report`]
//! combines them into `J1 + J2 + 1 + J3`.

pub mod abel;
pub mod delta;
pub mod integrals;
pub mod params;
pub mod report;

pub use abel::{abel_lower, abel_upper, AbelCheck, CountEnvelope};
pub use delta::{delta_apply, delta_bessel_bound, power_bracket, verify_sandwich, SandwichReport};
pub use integrals::{integrals_i, package_i4, BoundMode, I4Package, Integrals};
pub use params::{
    compute_parameters, regime_check, BoundParameters, Constants, ConstantsLedger, LedgerEntry,
    Regime, RegimeCheck,
};
pub use report::{
    bound_terms, evaluate_bound, theorem_shape, volume_log, BoundReport, DominantTerm, EvalOptions,
};
