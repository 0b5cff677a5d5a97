//! Transmission coefficients and stationary-phase tunneling times for
//! one-dimensional piecewise-constant potentials and their N-fold periodic
//! repetitions.
//!
//! Units throughout: 2m = ħ = c = 1, so E = k² and lengths are measured in
//! inverse-wavevector units. Times come out in units of 1/energy.
//!
//! The building blocks are layered:
//!
//! * [`potential`] — unit-cell data model and Cantor / Smith–Volterra–Cantor generators.
//! * [`transfer`] — log-scaled 2×2 transfer matrices, transmission and reflection.
//! * [`periodic`] — Chebyshev closed form for N cells separated by gaps, plus the
//!   explicit-array construction used to cross-check it.
//! * [`spm`] — phase differentiation, single-cell and periodic tunneling times,
//!   the rectangular analytic time and thickness saturation scans.
//! * [`sweep`] — configuration, grid sweeps and CSV/JSON output behind the `hartman` CLI.

pub mod error;
pub mod periodic;
pub mod potential;
pub mod spm;
pub mod sweep;
pub mod transfer;

pub use error::{Error, Result};
pub use periodic::{PeriodicSpec, PeriodicTransmission};
pub use potential::{CantorVariant, PiecewiseConstantPotential, Segment};
pub use spm::{Step, TimeMethod, TunnelingTimeResult};
pub use transfer::{ScaledMatrix2, TransmissionCoefficient};
