//! Packing-dimension toolkit for Gaussian random fields with drift.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: Gaussian CDF, PSD Cholesky with jitter, log-domain magnitudes, seeded streams.
//! * [`measures`]: finitely supported probability measures.
//! * [`fractals`]: nested-interval Cantor systems, symbolic Talagrand–Xiao sets, covering counts.
//! * [`fields`]: fractional Brownian motion sampling, drifts, graph maps.
//! * [`kernels`]: I_d, F_β, G_d and the Gaussian product kernel H.
//! * [`estimators`]: scaling exponents, kernel dimension estimators, box counting.
//! * [`theory`]: closed-form dimension predictions.
//! * [`verify`]: brute-force property checkers for the measure-theoretic inequalities.
//! * [`experiment`]: JSON-configured experiments and suites.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod fields;
pub mod fractals;
pub mod kernels;
pub mod measures;
pub mod numerics;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
