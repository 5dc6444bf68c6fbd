//! Measured-convergence harness: vertical shifts of a closure profile give
//! admissible spaces collapsing onto the singular one; the trace records the
//! Hausdorff distance of supports and the exact first-order transport
//! distance of the normalized reference measures per shift.

use serde::Serialize;

use super::CdError;
use crate::measure::{build_grid, SpaceParams};
use crate::profiles::{validate_membership, ProfileClass, ProfileFn};
use crate::transport::quantile_coupling_1d;

#[derive(Clone, Debug, Serialize)]
pub struct MghTrace {
    pub epsilons: Vec<f64>,
    pub hausdorff: Vec<f64>,
    pub w1: Vec<f64>,
    /// Linear extrapolation of the transport trace to zero shift.
    pub w1_extrapolated: f64,
}

impl MghTrace {
    pub fn hausdorff_within_shift(&self) -> bool {
        self.epsilons
            .iter()
            .zip(&self.hausdorff)
            .all(|(e, h)| *h <= *e + 1e-12)
    }

    pub fn w1_strictly_decreasing(&self) -> bool {
        self.w1.windows(2).all(|w| w[1] < w[0])
    }
}

/// Directed Hausdorff gap from the shifted strip to the base strip. Points
/// below the base boundary are shared; the supremum is attained on the upper
/// boundary of the shifted strip and is probed by a windowed scan.
fn hausdorff_upper_boundary(base: &ProfileFn, eps: f64, n_samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..=n_samples {
        let x = -1.0 + 2.0 * i as f64 / n_samples as f64;
        let y = base.eval(x) + eps;
        // distance of (x, y) to the base strip, searched over a window
        let mut best = eps; // vertical drop is always available
        let w = 1.2 * eps;
        let steps = 256;
        for s in 0..=steps {
            let xp = (x - w + 2.0 * w * s as f64 / steps as f64).clamp(-1.0, 1.0);
            let dy = (y - base.eval(xp)).max(0.0);
            let d = (x - xp).abs().max(dy);
            best = best.min(d);
        }
        worst = worst.max(best);
    }
    worst
}

/// Exact first-order transport distance between the normalized reference
/// measures of the base and shifted grids. Both share the same constant
/// horizontal marginal, so the optimal coupling works column by column
/// (every move is a vertical drop, and the vertical cost already matches the
/// mean-height lower bound).
fn w1_columnwise(
    base: &SpaceParams,
    shifted: &SpaceParams,
    nx: usize,
    nu: usize,
) -> Result<f64, CdError> {
    let g0 = build_grid(shifted, nx, nu)?;
    let g1 = build_grid(base, nx, nu)?;
    let total = g0.total_mass();
    let mut acc = 0.0;
    for col in 0..nx {
        let c0 = &g0.columns[col];
        let c1 = &g1.columns[col];
        let atoms = |grid: &crate::measure::Grid, c: &crate::measure::Column| {
            (0..c.n_cells)
                .map(|j| {
                    let cell = &grid.cells[c.cell_start + j];
                    (cell.center.y, cell.weight / total)
                })
                .collect::<Vec<_>>()
        };
        let a0 = atoms(&g0, c0);
        let a1 = atoms(&g1, c1);
        let coupling = quantile_coupling_1d(&a0, &a1)?;
        acc += coupling.cost(&a0, &a1, 1);
    }
    Ok(acc)
}

/// Run the convergence trace for a closure profile under a decreasing list
/// of vertical shifts. Every shifted profile must be admissible at scale `k`.
pub fn mgh_harness(
    base_profile: &ProfileFn,
    k: f64,
    big_k: f64,
    eps_list: &[f64],
    nx: usize,
    nu: usize,
    audit_n: usize,
) -> Result<MghTrace, CdError> {
    if eps_list.len() < 3 {
        return Err(CdError::TooFewScales(eps_list.len()));
    }
    let base_report = validate_membership(base_profile, k, audit_n)?;
    if base_report.class == ProfileClass::Rejected {
        return Err(CdError::NotClosureProfile);
    }
    let base_params = SpaceParams::compact(base_profile.clone(), k, big_k, true);

    let mut hausdorff = Vec::with_capacity(eps_list.len());
    let mut w1 = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let shifted_profile = base_profile.shifted(eps);
        let report = validate_membership(&shifted_profile, k, audit_n)?;
        if report.class != ProfileClass::Admissible {
            return Err(CdError::ShiftTooLarge(eps));
        }
        let shifted_params = SpaceParams::compact(shifted_profile, k, big_k, false);
        hausdorff.push(hausdorff_upper_boundary(base_profile, eps, 2048));
        w1.push(w1_columnwise(&base_params, &shifted_params, nx, nu)?);
    }

    // least-squares line w1(eps): the intercept estimates the limit
    let n = eps_list.len() as f64;
    let mean_e: f64 = eps_list.iter().sum::<f64>() / n;
    let mean_w: f64 = w1.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (e, v) in eps_list.iter().zip(&w1) {
        cov += (e - mean_e) * (v - mean_w);
        var += (e - mean_e) * (e - mean_e);
    }
    let slope = cov / var;
    let w1_extrapolated = mean_w - slope * mean_e;

    Ok(MghTrace {
        epsilons: eps_list.to_vec(),
        hausdorff,
        w1,
        w1_extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::measure::DiscreteMeasure;
    use crate::transport::{solve_discrete_ot, CostKind};

    #[test]
    fn trace_on_the_smoothed_ramp() {
        let k = defaults::MGH_PROFILE_SCALE;
        let ramp = ProfileFn::preset("ramp-smoothed", k).unwrap();
        let eps: Vec<f64> = (4..=9).map(|j| 2f64.powi(-j)).collect();
        let trace = mgh_harness(&ramp, k, 16.0, &eps, 64, 8, 2048).unwrap();
        assert!(trace.hausdorff_within_shift());
        assert!(trace.w1_strictly_decreasing());
        assert!(
            trace.w1_extrapolated.abs() < 1e-3,
            "extrapolated {}",
            trace.w1_extrapolated
        );
    }

    #[test]
    fn shift_too_large_is_rejected() {
        let k = defaults::MGH_PROFILE_SCALE;
        let ramp = ProfileFn::preset("ramp-smoothed", k).unwrap();
        // shift crosses the 3k height bound
        let err = mgh_harness(&ramp, k, 16.0, &[0.5, 0.25, 0.125], 16, 4, 2048).unwrap_err();
        assert!(matches!(err, CdError::ShiftTooLarge(_)));
    }

    #[test]
    fn columnwise_w1_matches_exact_solver_on_coarse_grid() {
        // dual-route check of the decomposition against the full solver
        let k = defaults::MGH_PROFILE_SCALE;
        let ramp = ProfileFn::preset("ramp-smoothed", k).unwrap();
        let eps = 2f64.powi(-5);
        let base = SpaceParams::compact(ramp.clone(), k, 16.0, true);
        let shifted = SpaceParams::compact(ramp.shifted(eps), k, 16.0, false);
        let (nx, nu) = (12, 4);
        let decomposed = w1_columnwise(&base, &shifted, nx, nu).unwrap();

        let g0 = build_grid(&shifted, nx, nu).unwrap();
        let g1 = build_grid(&base, nx, nu).unwrap();
        let uniform = |grid: &crate::measure::Grid| {
            let total = grid.total_mass();
            let rho = vec![1.0 / total; grid.cells.len()];
            DiscreteMeasure { rho }
        };
        let atoms = |grid: &crate::measure::Grid, mu: &DiscreteMeasure| {
            mu.atoms(grid)
                .into_iter()
                .map(|(i, q)| (grid.cells[i].center, q))
                .collect::<Vec<_>>()
        };
        let src = atoms(&g0, &uniform(&g0));
        let dst = atoms(&g1, &uniform(&g1));
        let plan = solve_discrete_ot(&src, &dst, CostKind::InfNorm).unwrap();
        assert!(
            (decomposed - plan.cost).abs() <= 1e-9 * plan.cost.max(1e-12),
            "decomposed {decomposed} vs exact {}",
            plan.cost
        );
    }
}
