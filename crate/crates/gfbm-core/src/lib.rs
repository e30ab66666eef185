//! Numerical toolkit for the generalized fractional Brownian motion (GFBM)
//!
//! The GFBM is the centered Gaussian self-similar process
//!
//! ```text
//! X(t) = ∫_ℝ ((t−u)₊^α − (−u)₊^α) |u|^{−γ} B(du),   γ ∈ (0, 1/2),  α ∈ (−1/2+γ, 1/2),
//! ```
//!
//! self-similar with index `H = α − γ + 1/2`. The factor `|u|^{−γ}` makes the
//! increments non-stationary, so none of the stationary fast samplers apply;
//! everything here is covariance-based.
//!
//! The crate provides, in dependency order:
//!
//! * [`params`] — parameter validation and pointwise kernel evaluation,
//! * [`quadrature`] — tanh-sinh integration with algebraic endpoint singularities,
//! * [`covariance`] — exact second moments of the process and its history /
//!   Riemann–Liouville parts, closed-form cross-oracles, Lamperti autocovariance,
//! * [`simulate`] — Cholesky path sampling on grids with seeded substreams,
//! * [`smallball`] — Monte Carlo estimation of the small-ball probability
//!   `φ(θ) = P(sup_{[0,1]}|X| ≤ θ)` and the `ψ = −log φ` toolkit,
//! * [`lowerclass`] — integral criteria for lower-class membership of test
//!   functions, the associated recursive sequence constructions, and Chung-type
//!   law-of-the-iterated-logarithm statistics.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature (on
//! by default) adds multi-threaded covariance assembly and sampling. Results
//! are bit-identical for any worker count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod covariance;
pub mod lowerclass;
pub(crate) mod math;
pub mod params;
pub mod quadrature;
pub(crate) mod rng;
pub mod simulate;
pub mod smallball;

pub use covariance::{CovarianceOracle, FbmOracle};
pub use params::{GfbmParams, ProcessTag};
pub use quadrature::{integrate_singular, IntegrandSpec, QuadResult};
pub use simulate::{build_grid, sample_ensemble, Grid, GridKind, PathEnsemble};
pub use smallball::{SmallBallEstimate, SmallBallModel};
pub use lowerclass::{CriterionVerdict, Direction, TestFunction};
