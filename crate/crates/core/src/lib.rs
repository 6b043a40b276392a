//! Deterministic and Markov semigroups compatible with a scalar ODE
//! `x' = f(x)` whose right-hand side is bounded, regulated and possibly
//! discontinuous.
//!
//! The crate is organized around the data that pins such a semigroup down:
//!
//! - [`regulated`] — piecewise closed-form right-hand sides `f` with exact
//!   one-sided limits, validation of the no-jamming condition, and
//!   reciprocal integrals `∫ dy/f±`;
//! - [`zeroes`] — the zero set of `f`, split into isolated points, flat
//!   intervals and self-similar (Cantor-type) components, with reachability
//!   flags for increasing/decreasing escape;
//! - [`measure`] — atomless measures supported on the zero set, as
//!   absolutely continuous densities plus iterated-function-system parts;
//! - [`flow`] — the deterministic semigroup: maximal domains of monotone
//!   dynamics, the time functional and its inversion;
//! - [`hypoexp`], [`kernel`] — transition kernels of the Markov semigroup
//!   obtained by adding exponential waiting times and branch probabilities;
//! - [`sampler`] — seeded Monte Carlo sample paths and empirical kernels;
//! - [`verify`] — executable checks: Chapman-Kolmogorov consistency, the
//!   semigroup law, closure of the solution set and degenerate-rate limits.
//!
//! The crate is `no_std`-compatible (`default-features = false,
//! features = ["libm"]`); everything allocates through `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("discflow-core needs either the `std` or the `libm` feature");

pub mod cantor;
pub mod error;
pub mod flow;
pub mod hypoexp;
pub mod kernel;
pub(crate) mod math;
pub mod measure;
pub mod poly;
pub mod quad;
pub mod regulated;
pub mod sampler;
pub mod verify;
pub mod zeroes;

pub use error::{Error, Result};
pub use flow::{DetFlow, Dir, FlowSpec, MonotoneDomains};
pub use kernel::{MarkovProcess, MarkovSpec, TransitionKernel};
pub use measure::AtomlessMeasure;
pub use regulated::{PieceForm, RegulatedFn, ValidationReport};
pub use sampler::SamplePath;
pub use zeroes::ZeroStructure;

/// Absolute tolerance for adaptive quadrature of reciprocal integrals.
pub const QUAD_ABS_TOL: f64 = 1e-10;

/// Default absolute tolerance for measure mass/cdf queries.
pub const MASS_TOL: f64 = 1e-10;

/// Kernel smooth-cdf grids are refined until adjacent increments fall
/// below this mass.
pub const KERNEL_GRID_TOL: f64 = 1e-3;

/// Bisection stops once the bracket shrinks to this fraction of its
/// initial length (effectively the float floor: restarting a trajectory
/// near a zero amplifies any inversion slack by the ratio of the final to
/// the local speed, so the inversion itself must be as sharp as the
/// representation allows).
pub const INVERT_REL_TOL: f64 = 1e-15;

/// Passage times beyond this are treated as infinite.
pub const TIME_CAP: f64 = 1e9;

/// Values of `f` within this of zero count as exact zeros (breakpoint
/// values and one-sided limits are closed-form, so this only absorbs
/// float noise in user input).
pub const ZERO_TOL: f64 = 1e-12;

/// Partial reciprocal integrals beyond this are classified as divergent.
pub const DIVERGENCE_CAP: f64 = 1e6;
