//! Core library for a cyclic-prefix filter-bank multiple-access (CP-FBMA) uplink.
//!
//! The crate models an `M`-user uplink in which each user's length-`N` symbol
//! block is cyclic-prefix extended, upsampled by `P`, and shaped by a private
//! length-`N_f` synthesis filter before all users superimpose on a multipath
//! channel. Everything downstream of that model — detection, sum-rate
//! evaluation, and the two optimizers — lives here:
//!
//! * [`numerics`] — dense complex linear-algebra kernels (unitary DFT,
//!   Hermitian EVD, PSD inverse square root, GSVD, water-filling, rank-one
//!   inverse updates).
//! * [`model`] — system configuration, channel/filter/covariance containers,
//!   the structured matrices of the circular transmission model, and the
//!   sum-rate evaluators (dense and interleaved-block forms).
//! * [`receiver`] — frequency-domain LMMSE multi-user detection with the
//!   fast per-tone block inversion, QAM mapping, and a BER Monte-Carlo
//!   harness.
//! * [`manifold_opt`] — full-band waveform optimization by block-coordinate
//!   ascent, each user solved by Riemannian gradient ascent on the unit
//!   sphere.
//! * [`sdp`] — a small dense primal-dual interior-point solver for the lifted
//!   filter subproblem, plus rank-one extraction.
//! * [`joint_opt`] — joint waveform and covariance optimization under
//!   stopband energy masks, alternating a semidefinite filter step with a
//!   GSVD/water-filling covariance step.
//! * [`par`] — order-preserving batch map with an optional rayon backend
//!   (feature `parallel`, on by default).
//!
//! All randomized constructions are deterministic functions of an explicit
//! 64-bit seed.

pub mod model;
pub mod numerics;
pub mod par;
pub mod receiver;
pub mod tol;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = DVector<C64>;
/// Dense real column vector.
pub type RVec = DVector<f64>;

/// Convenience constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}
