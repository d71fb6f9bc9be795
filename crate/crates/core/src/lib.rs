//! Statistics of black-body radiation, checked from several directions at once.
//!
//! The crate is organised by subject:
//!
//! * [`spectral`]: constants, the Planck law and its limits, Stefan–Boltzmann,
//!   Wien displacement and mode counting.
//! * [`distributions`]: the occupation and energy laws (Bose, Poisson, binary,
//!   exponential) with exact moments and seeded samplers.
//! * [`decomposition`]: the infinite divisibility of the Bose law into Poisson
//!   photo-multiplets and binary (Fermi-like) components.
//! * [`fluctuation`]: the two-term energy-fluctuation formula by independent
//!   routes, mirror momentum fluctuation and the A/B rate split.
//! * [`wavefield`]: classical random-wave models (Gaussian quadratures, pulse
//!   trains, vibrating-string ensembles).
//! * [`quantized_string`]: truncated Fock-space numerics for the quantized string.
//! * [`combinatorics`]: exact counting of collocations and associations.
//! * [`kinetics`]: Gillespie simulation of matter-mediated equilibration.
//! * [`verify`]: the battery of cross-checks behind `bbfluct verify-all`.
//!
//! All quantities are CGS unless a function says it works in reduced units.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod decomposition;
pub mod distributions;
mod error;
pub mod fluctuation;
pub mod kinetics;
pub mod numerics;
pub mod quantized_string;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod verify;
pub mod wavefield;

pub use error::{Error, Result};
pub use spectral::{ModePoint, PhysicalConstants, SpectralBand};
pub use stats::EnsembleStats;
