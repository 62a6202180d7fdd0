//! Worst-case compression of energy-bounded signals under coordinate-wise
//! quantization, exact lattice-point counts in diagonal ellipsoids, and a
//! dimension-explicit upper bound on the logarithmic codebook size.
//!
//! The crate is organised bottom-up:
//!
//! * [`codec`] quantizes a signal to an integer code and recovers its cell.
//! * [`lattice`] counts integer points of diagonal quadratic forms exactly,
//!   and materializes their spectra for smoothed counts.
//! * [`special`] evaluates Bessel functions and the uniform envelope used to
//!   control them.
//! * [`bound`] evaluates every ingredient of the entropy bound and verifies
//!   the intermediate inequalities on exact spectra.
//! * [`experiment`] wires the above into reproducible sweeps and the
//!   verification suite driven by the `ellipsoid-entropy` binary.

pub mod bound;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod numeric;
pub mod special;

pub use error::{Error, Result};
