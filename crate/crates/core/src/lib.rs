//! Pseudo-spectral toolkit for the dispersively regularized Euler system with
//! a Van der Waals type pressure law on the one-dimensional torus.
//!
//! * [`spectral`]: Fourier fields, the multiplier `m`, norms, dealiased products.
//! * [`model`]: pressure laws, energies, right-hand sides.
//! * [`normalform`]: the near-identity change of variables and reduced system.
//! * [`jets`]: Taylor jets of `u' = (Id - Π0) u³` and the integration-by-parts tower.
//! * [`integrate`]: exponential integrators, blow-up detection, Picard iteration.
//! * [`experiments`]: data construction, sweeps and verification suites.

// `!(x > 0.0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod integrate;
pub mod jets;
pub mod model;
pub mod normalform;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{EnergyReport, PressureLaw, State, SystemKind, SystemSpec};
pub use spectral::{Grid, Norm, SpectralField, C64};
