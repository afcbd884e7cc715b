//! Outer estimates for the domain of dependence and the support of entropy
//! solutions to scalar conservation laws
//!
//! ```text
//! ∂_t u + div f(t, x, u) = 0,    u(0, ·) = u₀,    x ∈ ℝⁿ (n ≤ 2)
//! ```
//!
//! The estimates are reachable sets (integral funnels) of the differential
//! inclusion `ẏ ∈ co ∂_u f(t, y, [a(t), b(t)])`, where `[a, b]` bounds the
//! solution. The crate is organised bottom-up:
//!
//! - [`geometry`]: uniform rasters, closed sets as cell masks, exact Euclidean
//!   distance transforms, dilation/erosion, Hausdorff distance, measures and
//!   outer Minkowski content.
//! - [`inclusion`]: flux families, velocity sets and Hamiltonians, solution
//!   envelopes, and forward/backward funnel propagation.
//! - [`conservation`]: a monotone finite-volume solver (local Lax–Friedrichs)
//!   used as the numerical stand-in for the entropy solution.
//! - [`estimates`]: the L¹ contraction check on funnels, domain-of-dependence
//!   estimates, perturbation probes, and support envelopes.
//! - [`confinement`]: the integral confinement condition and controlled
//!   funnels for `f = ψ(|x − ξ|)(x − ξ)u + G(u)`.
//! - [`io`]: the binary raster format and directory layouts for funnels and
//!   trajectories.

pub mod confinement;
pub mod conservation;
mod edt;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod inclusion;
pub mod io;

pub use error::{Error, Result};
pub use geometry::{Grid, GridSet, Raster};

/// Planar point; 1D problems use the first coordinate only.
pub type Point = [f64; 2];

/// Evaluates `f` on `0..n`, in parallel when the `parallel` feature is on.
/// Output order is the index order either way.
#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}
