//! Koopman-based model identification and predictive control for a
//! two-turbine wind farm.
//!
//! The crate is organised around five building blocks:
//!
//! * [`numerics`] — dense row-major matrices, an SVD-based pseudoinverse and
//!   a box-constrained QP solver,
//! * [`plant`] — a surrogate farm simulator (first-order turbine dynamics
//!   plus a delayed wake) and excitation-signal generation,
//! * [`koopman`] — lifted linear predictors fitted with EDMD, multi-step
//!   rollout and the VAF metric,
//! * [`autoencoder`] — from-scratch feedforward networks with manual
//!   backpropagation and the single-level / bi-level Koopman trainers,
//! * [`mpc`] — Toeplitz prediction matrices, QP condensation and the
//!   receding-horizon controllers closed around the plant.
//!
//! Everything here is `no_std`-compatible (with `alloc`); IO, file formats
//! and the command line live in the companion `koopfarm` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autoencoder;
pub(crate) mod fmath;
pub mod koopman;
pub mod mpc;
pub mod numerics;
pub mod plant;
pub mod rng;
