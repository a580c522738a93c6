//! Low-rank computation of one-dimensional Feynman–Kac path integrals.
//!
//! The discretized path integral for
//!
//! ```text
//! u_t = σ u_xx − V(x, t) u,    u(x, 0) = f(x),    x ∈ ℝ
//! ```
//!
//! is evaluated as a backward sequence of one-dimensional Gaussian
//! convolutions on nested meshes whose extent shrinks by one window per
//! step. Each intermediate array is reshaped into an `M × (k+1)` matrix that
//! is compressed by adaptive cross approximation, so every step costs a
//! handful of length-`M` FFT convolutions instead of one convolution over the
//! whole extended domain.
//!
//! Module map:
//!
//! * [`mesh`]: time grid, nested spatial meshes and the weighted Gaussian kernel.
//! * [`convolution`]: FFT convolution, Hankel generators, basis convolutions.
//! * [`cross`]: maxvol, cross approximation and QR/SVD recompression.
//! * [`solver`]: the low-rank iteration and the dense FFT reference.
//! * [`problems`]: benchmark potentials and closed-form solutions.
//! * [`monte_carlo`]: single-point path sampling estimator.
//! * [`analysis`]: error norms, Runge order, Richardson, Hermite diagnostics.
//! * [`expr`]: arithmetic expressions for user supplied `V(x, t)` and `f(x)`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod convolution;
pub mod cross;
pub mod error;
pub mod exec;
pub mod expr;
pub mod mesh;
pub mod monte_carlo;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Exec;
