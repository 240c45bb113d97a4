//! Numerical laboratory for time-dependent graphon consensus dynamics.
//!
//! The library simulates the nonlocal consensus model
//!
//! ```text
//! ∂ₜ x(t,i) = ∫₀¹ a(t,i,j) φ(|x(t,i) − x(t,j)|) (x(t,j) − x(t,i)) dj
//! ```
//!
//! at a configurable discretization level N and computes the connectivity
//! functionals that govern its long-time behaviour: scrambling coefficients,
//! graph-Laplacian spectra, algebraic connectivity, Perron weights and
//! sliding-window persistence estimates. Decay theorems are checked as
//! runtime envelopes on computed trajectories.
//!
//! Module map:
//! - [`kernel`] — time-varying interaction kernels a(t,i,j) and nonlinear
//!   communication kernels φ(r)
//! - [`discretize`] — cell-average semi-discretization and piecewise-constant
//!   lifting between graphons and N×N matrices
//! - [`dynamics`] — fixed-step RK4 integration with switch alignment and
//!   per-step diagnostics
//! - [`spectral`] — scrambling, Laplacians, λ₂, SCC decomposition, Perron
//!   vectors, window averages and persistence checks
//! - [`diagnostics`] — theorem envelopes, consensus estimation, decay-rate
//!   fitting
//! - [`experiment`] — configuration parsing and the CLI experiment runner

// `!(x > 0.0)` is the NaN-rejecting form of the positivity guards; the
// suggested `x <= 0.0` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod discretize;
pub mod dynamics;
pub mod experiment;
pub mod kernel;
pub mod rng;
pub mod spectral;

mod error;

pub use error::Error;

/// Formats a float with 17 significant digits, the precision used by every
/// text output of the crate so that files round-trip bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}
