//! Multiphoton resonance in three-level Γ systems driven by a strong
//! linearly polarized field.
//!
//! The crate integrates the amplitude equations numerically, evaluates the
//! analytic multiphoton solution with its Stark and near-degeneracy
//! corrections, solves for resonant drive parameters and computes harmonic
//! emission spectra. Everything is generic over the scalar ([`Real`]); the
//! `*64` aliases fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod resonance;
pub mod scalar;
pub mod specfun;
pub mod spectrum;
pub mod units;

pub use analytic::{Corrections, Parity, ResonanceParams};
pub use dynamics::{integrate, IntegrateOptions, Method, TimeGrid, Trajectory};
pub use error::{Error, Result};
pub use model::{DriveField, Envelope, Preset, ThreeLevelSystem};
pub use resonance::{solve_resonance, ResonanceSolution};
pub use scalar::Real;
pub use spectrum::{coherent_spectrum, find_peaks, PeakList, PeakOptions, Spectrum};

pub type System64 = ThreeLevelSystem<f64>;
pub type System32 = ThreeLevelSystem<f32>;
pub type Field64 = DriveField<f64>;
pub type Field32 = DriveField<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type Params64 = ResonanceParams<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type Solution64 = ResonanceSolution<f64>;
