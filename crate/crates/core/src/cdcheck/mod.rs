//! Verification layer: the pointwise Jacobian criterion for entropy
//! convexity, midpoint entropy tests with exact interval re-binning, the
//! measured-convergence harness, box-counting dimension estimates, and the
//! branching / no-map / restriction-search demonstrations.

pub mod demos;
pub mod dimension;
pub mod mgh;

use serde::Serialize;
use thiserror::Error;

use crate::defaults;
use crate::geometry::{self, classify_pair, midpoint, PairClass, Point2};
use crate::measure::{
    boltzmann_entropy, density, renyi_entropy, DiscreteMeasure, Grid, MeasureError, SpaceParams,
};
use crate::profiles::MembershipError;
use crate::transport::{MonotoneMapGrid, TransportError};

#[derive(Debug, Error)]
pub enum CdError {
    #[error("measure: {0}")]
    Measure(#[from] MeasureError),
    #[error("geometry: {0}")]
    Geometry(#[from] geometry::GeometryError),
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("membership: {0}")]
    Membership(#[from] MembershipError),
    #[error("re-binning lost mass {0}, beyond tolerance")]
    RebinMassLoss(f64),
    #[error("shift {0} pushes the profile outside the admissible class")]
    ShiftTooLarge(f64),
    #[error("profile is not in the closure class")]
    NotClosureProfile,
    #[error("need at least 3 scales, got {0}")]
    TooFewScales(usize),
    #[error("region precondition failed: {0}")]
    RegionPrecondition(String),
    #[error("target fiber height {height} not below the horizontal gap {gap}")]
    FiberTallerThanGap { height: f64, gap: f64 },
    #[error("no source split found in the optimal plan")]
    NoSplitSource,
    #[error("demo precondition failed: {0}")]
    DemoPrecondition(String),
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct CaseHistogram {
    pub vertical: usize,
    pub diagonal: usize,
    pub flat: usize,
    pub steep: usize,
}

impl CaseHistogram {
    fn bump(&mut self, class: PairClass) {
        match class {
            PairClass::Vertical => self.vertical += 1,
            PairClass::Diagonal => self.diagonal += 1,
            PairClass::HorizontalFlat => self.flat += 1,
            PairClass::HorizontalSteep => self.steep += 1,
        }
    }
}

/// Outcome of the pointwise criterion
/// `(m(M) J_M)^(1/N') >= (m(T) J_T)^(1/N') / 2 + m^(1/N') / 2`
/// over the source support.
#[derive(Clone, Debug, Serialize)]
pub struct CdReport {
    pub n_prime: f64,
    pub tol: f64,
    pub min_slack: f64,
    /// (column, fiber) attaining the minimum.
    pub argmin_cell: Option<(usize, usize)>,
    pub passed: bool,
    pub checked: usize,
    /// Cells excluded for degenerate (non-positive) Jacobians.
    pub excluded_degenerate: usize,
    pub histogram: CaseHistogram,
    /// Per-cell slack samples `(x, y, slack)` for heatmap export.
    pub slack_cells: Vec<(f64, f64, f64)>,
}

/// Midpoints of every source support cell against its image, for stencil
/// reuse. The midpoint x is fiber independent.
struct MidpointField {
    mx: Vec<f64>,
    my: Vec<Vec<f64>>,
}

fn midpoint_field(
    params: &SpaceParams,
    grid: &Grid,
    map: &MonotoneMapGrid,
) -> Result<MidpointField, CdError> {
    let mut mx = Vec::with_capacity(map.n_support());
    let mut my = Vec::with_capacity(map.n_support());
    for (pos, &col) in map.support_cols.iter().enumerate() {
        let c = &grid.columns[col];
        let mut row = Vec::with_capacity(map.fibers);
        let mut mx_here = f64::NAN;
        for j in 0..map.fibers {
            let z = grid.cells[c.cell_start + j].center;
            let w = map.image_point(pos, j);
            let m = midpoint(z, w, &params.profile)?;
            mx_here = m.x;
            row.push(m.y);
        }
        mx.push(mx_here);
        my.push(row);
    }
    Ok(MidpointField { mx, my })
}

fn stencil_1d(vals: &[f64], i: usize, h: f64) -> f64 {
    let n = vals.len();
    if n < 3 {
        return if n == 2 { (vals[1] - vals[0]) / h } else { 0.0 };
    }
    if i == 0 {
        (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * vals[n - 1] - 4.0 * vals[n - 2] + vals[n - 3]) / (2.0 * h)
    } else {
        (vals[i + 1] - vals[i - 1]) / (2.0 * h)
    }
}

/// Evaluate the pointwise entropy-convexity criterion at every source
/// support cell. Jacobians of the interpolated map come from neighbor
/// stencils in `(x, u)` coordinates; non-positive Jacobian cells are
/// excluded and counted.
pub fn pointwise_cd_check(
    params: &SpaceParams,
    grid: &Grid,
    mu0: &DiscreteMeasure,
    map: &MonotoneMapGrid,
    n_prime: f64,
    tol: f64,
) -> Result<CdReport, CdError> {
    let field = midpoint_field(params, grid, map)?;
    let inv_n = 1.0 / n_prime;

    let mut report = CdReport {
        n_prime,
        tol,
        min_slack: f64::INFINITY,
        argmin_cell: None,
        passed: false,
        checked: 0,
        excluded_degenerate: 0,
        histogram: CaseHistogram::default(),
        slack_cells: Vec::new(),
    };

    for (pos, &col) in map.support_cols.iter().enumerate() {
        let c = &grid.columns[col];
        let ds1_dx = stencil_1d(&field.mx, pos, grid.dx);
        for j in 0..map.fibers {
            let idx = c.cell_start + j;
            if mu0.rho[idx] <= 0.0 {
                continue;
            }
            let z = grid.cells[idx].center;
            let w = map.image_point(pos, j);
            report.histogram.bump(classify_pair(z, w));

            let (j_t, _) = map.jacobian(pos, j);
            let ds2_dy = stencil_1d(&field.my[pos], j, grid.du * c.height);
            let j_m = ds1_dx * ds2_dy;
            if j_t <= 0.0 || j_m <= 0.0 {
                report.excluded_degenerate += 1;
                continue;
            }
            let m_z = density(params, z)?;
            let m_t = density(params, w)?;
            let mid = Point2::new(field.mx[pos], field.my[pos][j]);
            let m_m = density(params, mid)?;

            let slack = (m_m * j_m).powf(inv_n)
                - 0.5 * (m_t * j_t).powf(inv_n)
                - 0.5 * m_z.powf(inv_n);
            report.checked += 1;
            report.slack_cells.push((z.x, z.y, slack));
            if slack < report.min_slack {
                report.min_slack = slack;
                report.argmin_cell = Some((col, j));
            }
        }
    }
    report.passed = report.min_slack >= -tol;
    Ok(report)
}

/// Push the source measure through the midpoint interpolation and re-bin it
/// onto the grid by interval overlap in `(x, u)` coordinates. Exact for
/// cellwise-affine maps; returns the measure and the mass lost to clamping.
pub fn pushforward_midpoint(
    params: &SpaceParams,
    grid: &Grid,
    mu0: &DiscreteMeasure,
    map: &MonotoneMapGrid,
) -> Result<(DiscreteMeasure, f64), CdError> {
    let mut acc = vec![0.0_f64; grid.cells.len()];
    let mut lost = 0.0;
    let f = &params.profile;

    for (pos, &col) in map.support_cols.iter().enumerate() {
        let c = &grid.columns[col];
        let (xl, xr) = grid.column_edges(col);
        let sxl = 0.5 * (xl + map.eval_t1(xl));
        let sxr = 0.5 * (xr + map.eval_t1(xr));
        let x_c = c.x;
        let t1_c = map.t1[pos];
        let height_t1 = params.height(t1_c);

        // image of the fiber edges through the midpoint map at this column
        let mut su_edges = Vec::with_capacity(map.fibers + 1);
        for e in 0..=map.fibers {
            let u_e = e as f64 * grid.du;
            let p_e = Point2::new(x_c, u_e * c.height);
            let u_img = map.eval_u_map(pos, t1_c, u_e)?;
            let q_e = Point2::new(t1_c, u_img * height_t1);
            let m_e = midpoint(p_e, q_e, f)?;
            let h_m = params.height(m_e.x);
            su_edges.push(if h_m > 0.0 { m_e.y / h_m } else { 0.0 });
        }

        for j in 0..map.fibers {
            let idx = c.cell_start + j;
            let mass = mu0.rho[idx] * grid.cells[idx].weight;
            if mass <= 0.0 {
                continue;
            }
            let (su_l, su_r) = (
                su_edges[j].min(su_edges[j + 1]),
                su_edges[j].max(su_edges[j + 1]),
            );
            let mut deposited = 0.0;
            let x_span = sxr - sxl;

            let col_lo = grid.locate_col(sxl.max(grid.x_min)).unwrap_or(0);
            let col_hi = grid.locate_col(sxr.min(grid.x_max)).unwrap_or(grid.nx - 1);
            for tc in col_lo..=col_hi {
                let (cl, cr) = grid.column_edges(tc);
                let ox = (sxr.min(cr) - sxl.max(cl)).max(0.0);
                let frac_x = if x_span > 1e-300 { ox / x_span } else { 1.0 };
                if frac_x <= 0.0 {
                    continue;
                }
                let target = &grid.columns[tc];
                if target.singular {
                    acc[target.cell_start] += mass * frac_x;
                    deposited += mass * frac_x;
                    continue;
                }
                let u_span = su_r - su_l;
                if u_span <= 1e-15 {
                    let fiber = grid.locate_fiber(0.5 * (su_l + su_r));
                    acc[target.cell_start + fiber] += mass * frac_x;
                    deposited += mass * frac_x;
                } else {
                    for fj in 0..grid.nu {
                        let (ul, ur) = (fj as f64 * grid.du, (fj + 1) as f64 * grid.du);
                        let ou = (su_r.min(ur) - su_l.max(ul)).max(0.0);
                        if ou > 0.0 {
                            let q = mass * frac_x * ou / u_span;
                            acc[target.cell_start + fj] += q;
                            deposited += q;
                        }
                    }
                }
            }
            lost += mass - deposited;
        }
    }

    let mut rho = vec![0.0; grid.cells.len()];
    for (i, cell) in grid.cells.iter().enumerate() {
        rho[i] = acc[i] / cell.weight;
    }
    Ok((DiscreteMeasure { rho }, lost))
}

#[derive(Clone, Debug, Serialize)]
pub struct MidpointEntropyEntry {
    pub n_prime: f64,
    pub midpoint_entropy: f64,
    pub endpoint_average: f64,
    /// `average - midpoint`: nonnegative means convexity holds.
    pub slack: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MidpointEntropyReport {
    pub per_n: Vec<MidpointEntropyEntry>,
    pub boltzmann: MidpointEntropyEntry,
    pub rebin_loss: f64,
}

impl MidpointEntropyReport {
    pub fn all_passed(&self) -> bool {
        self.per_n.iter().all(|e| e.passed) && self.boltzmann.passed
    }
}

/// Midpoint convexity of the entropies: push the source through the midpoint
/// interpolation and compare `S(mid)` with the endpoint average, for each
/// dimension parameter and for the Boltzmann entropy.
pub fn midpoint_entropy_test(
    params: &SpaceParams,
    grid: &Grid,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    map: &MonotoneMapGrid,
    n_list: &[f64],
    tol: f64,
) -> Result<MidpointEntropyReport, CdError> {
    let (mid, lost) = pushforward_midpoint(params, grid, mu0, map)?;
    if lost.abs() > defaults::REBIN_MASS_TOL {
        return Err(CdError::RebinMassLoss(lost));
    }
    let mut per_n = Vec::with_capacity(n_list.len());
    for &np in n_list {
        let s_mid = renyi_entropy(&mid, grid, np)?;
        let s0 = renyi_entropy(mu0, grid, np)?;
        let s1 = renyi_entropy(mu1, grid, np)?;
        let avg = 0.5 * s0 + 0.5 * s1;
        per_n.push(MidpointEntropyEntry {
            n_prime: np,
            midpoint_entropy: s_mid,
            endpoint_average: avg,
            slack: avg - s_mid,
            passed: s_mid <= avg + tol,
        });
    }
    let e_mid = boltzmann_entropy(&mid, grid);
    let e_avg = 0.5 * boltzmann_entropy(mu0, grid) + 0.5 * boltzmann_entropy(mu1, grid);
    let boltzmann = MidpointEntropyEntry {
        n_prime: f64::INFINITY,
        midpoint_entropy: e_mid,
        endpoint_average: e_avg,
        slack: e_avg - e_mid,
        passed: e_mid <= e_avg + tol,
    };
    Ok(MidpointEntropyReport {
        per_n,
        boltzmann,
        rebin_loss: lost,
    })
}
