//! Discrete-time quantum walks on a one-dimensional lattice whose two-valued
//! coin operation is distributed in space or in time according to
//! deterministic sequences (two-periodic, Fibonacci, Thue-Morse,
//! Rudin-Shapiro) or a seeded random reference.
//!
//! The crate is organized around the pipeline used to characterize such
//! walks:
//!
//! - [`sequences`]: letter strings over {A, B} and their ±1 weight functions;
//! - [`walk`]: the walker state and the coin-then-shift step evolution;
//! - [`spectral`]: dense evolution operators, quasi-energy spectra, densities
//!   of states, and diffraction amplitudes of the coin arrangement;
//! - [`observables`]: probability distributions, spreading moments, survival
//!   amplitude, Cesàro averages, and their Fourier views;
//! - [`fitting`]: power-law and stretched-exponential decay fits for Cesàro
//!   series.
//!
//! All computations are deterministic: identical inputs produce identical
//! outputs, including the seeded random sequence generator.

pub mod error;
pub mod fitting;
pub mod observables;
pub mod sequences;
pub mod spectral;
pub mod walk;

pub use error::{Error, Result};
