//! Default parameters for desk-scale runs.
//!
//! The verification bundle is `k = 2^-15`, `K = 16`, `N' = 32K + 3 = 515`.
//! `k = 2^-15` is the largest power of two with `2k^2 + 4k < 2^-12`, the
//! inequality the steep-horizontal interpolation case needs, with a factor-two
//! margin.

/// Profile scale bound `k` (`2^-15`).
pub const PROFILE_SCALE: f64 = 3.0517578125e-5;

/// Fiber concentration `K` of the reference density.
pub const CONCENTRATION: f64 = 16.0;

/// Dimension parameter `N' = 32K + 3` used by the pointwise criterion.
pub const N_PRIME: f64 = 515.0;

/// Samples for profile bound audits.
pub const AUDIT_SAMPLES: usize = 4096;

/// Default grid resolution.
pub const GRID_NX: usize = 128;
pub const GRID_NU: usize = 32;

/// Default dyadic refinement depth for sampled geodesics.
pub const GEODESIC_DEPTH: u32 = 8;

/// Truncation radius for the non-compact wedge space.
pub const WEDGE_RADIUS: f64 = 4.0;

/// Probability-mass bookkeeping tolerance.
pub const MASS_TOL: f64 = 1e-12;

/// Per-column marginal identity tolerance.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Absolute slack allowed on `y <= f(x)` membership checks.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Relative tolerance for the midpoint property check inside `midpoint`.
/// Absorbs the profile's slope wobble for every admissible scale in use.
pub const MIDPOINT_REL_TOL: f64 = 1e-3;

/// Pointwise entropy-convexity slack tolerance.
pub const CD_SLACK_TOL: f64 = 1e-4;

/// Relative duality-gap bound certified by the exact solver.
pub const DUALITY_REL_TOL: f64 = 1e-9;

/// Maximal mass loss tolerated when re-binning a pushforward.
pub const REBIN_MASS_TOL: f64 = 1e-8;

/// Profile scale used by measured-convergence runs; the shift list
/// `2^-4 .. 2^-9` must stay inside the height bound `3k`.
pub const MGH_PROFILE_SCALE: f64 = 0.0625;
