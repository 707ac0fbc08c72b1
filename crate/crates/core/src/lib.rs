//! Sparse signal recovery by heavy-ball accelerated hard thresholding.
//!
//! The crate provides:
//!
//! * [`solvers`] — HBHT and HBHTP (hard thresholding driven by a
//!   heavy-ball search direction, optionally with a least-squares
//!   pursuit step) together with the IHT, HTP, OMP, SP, and CoSaMP
//!   baselines, all behind one traced interface.
//! * [`theory`] — the closed-form convergence constants (contraction
//!   factors, error envelopes, finite-iteration counts, stability
//!   estimates) attached to those solvers, plus a brute-force
//!   restricted-isometry oracle for small matrices.
//! * [`instances`] — seeded Gaussian problem generation in the
//!   unnormalized N(0,1) and normalized N(0,1/m) regimes.
//! * [`experiments`] — success-rate sweeps, 50%-success phase-transition
//!   fits, and algorithm selection maps at configurable scale.
//!
//! Everything is deterministic given the seeds in play; see [`rng`] for
//! the pinned generator.

pub mod error;
pub mod experiments;
pub mod instances;
pub mod linalg;
pub mod rng;
pub mod solvers;
pub mod sparsity;
pub mod theory;

pub use error::{Error, Result};
