//! # cdlab
//!
//! Numerical laboratory for singular metric measure strips under the
//! l-infinity distance.
//!
//! The spaces under study are regions
//! `X_f = { (x, y) : x in [-1, 1], 0 <= y <= f(x) }` for a thin profile
//! function `f`, carrying the distance `max(|dx|, |dy|)` and a fiber-Gaussian
//! reference measure whose horizontal marginal is exactly constant. The crate
//! provides:
//!
//! - [`profiles`]: a small expression language for profile functions with
//!   exact symbolic derivatives, plus admissibility audits for the bound class
//!   `0 < f < 3k, |f'| <= k, |f''| <= 1` and its closure (`f` touching zero).
//! - [`geometry`]: the sup-distance, the four-way classification of point
//!   pairs, the explicit region-dependent midpoint interpolation map, dyadic
//!   geodesic refinement, and forced-segment branching witnesses.
//! - [`measure`]: the weighted density, grids in fiber coordinates with exact
//!   per-column marginals, segment atoms for collapsed columns, and the Renyi
//!   and Boltzmann entropy functionals.
//! - [`convexity`]: numerical (K,N)-convexity certificates, the exponential
//!   characterization, additivity and reparametrization checks, the
//!   constructive near-affine bump, line-restriction estimates, and the three
//!   interpolation case profiles.
//! - [`transport`]: monotone rearrangement couplings, a deterministic exact
//!   transportation simplex with dual certificates, structured monotone maps
//!   for horizontally separated marginals, and finite-difference Jacobians.
//! - [`cdcheck`]: the pointwise Jacobian entropy-convexity criterion, midpoint
//!   entropy tests, a measured-convergence harness, box-counting dimension
//!   estimates, and the branching / no-map / restriction-search demonstrations.

pub mod cdcheck;
pub mod convexity;
pub mod defaults;
pub mod geometry;
pub mod measure;
pub mod profiles;
pub mod transport;

pub use geometry::Point2;
