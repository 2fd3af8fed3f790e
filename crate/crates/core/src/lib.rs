//! Learned multi-layer VAMP for recovering a narrowband signal observed
//! through a saturating, noisy and optionally quantized receiver front-end
//! in the presence of a strong out-of-band interferer.
//!
//! The crate is organized bottom-up:
//!
//! * [`spectrum`]: unitary DFT, band layouts, Gaussian spectral priors.
//! * [`frontend`]: tanh soft saturation, receiver noise, uniform quantizer.
//! * [`vamp`]: Bayesian ML-VAMP with the closed-form spectral denoiser and a
//!   quadrature reference for the nonlinear MMSE denoiser.
//! * [`neural`]: small sigmoid MLPs, a vector reverse-mode tape and the
//!   unrolled model with its file format.
//! * [`learned`]: the unrolled inference recursion, its loss and Adam training.
//! * [`baselines`] and [`metrics`]: Wiener and oracle estimators, correlation,
//!   rate bound and NMSE.
//! * [`scenario`]: Monte Carlo trial draws for a physical setup.
//! * [`harness`]: scenario configs, Monte Carlo sweeps, CSV and plot output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod learned;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod scenario;
pub mod spectrum;
pub mod vamp;

pub use error::{Error, Result};
pub use num_complex::Complex64;
