//! Finite-dimensional quantum measurement and dynamics toolkit.
//!
//! The crate is organised around a handful of value types:
//!
//! * [`DensityOperator`] and [`HermitianQuantity`] for states and measurable quantities,
//! * [`Povm`] and [`KrausFilter`] for event-based instruments and filters,
//! * [`stokes`] types for the classical-optics picture of a qubit,
//! * [`dynamics::HybridState`] for mixed quantum-classical motion,
//! * [`stochastic`] models for Lindblad evolution and its jump unraveling.
//!
//! Every operation is a pure function of its inputs (plus an explicit seed where
//! randomness enters), so results are reproducible and safe to compute concurrently.

pub mod dynamics;
mod error;
pub mod io;
pub mod linalg;
pub mod measure;
mod par;
pub mod qcore;
pub mod rng;
pub mod stochastic;
pub mod stokes;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use measure::{EventSample, KrausFilter, OutcomeLabel, Povm};
pub use qcore::{DensityOperator, GibbsState, HermitianQuantity, Tolerances};
