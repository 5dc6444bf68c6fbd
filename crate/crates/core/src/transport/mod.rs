//! Couplings: exact discrete optimal transport under the sup distance,
//! monotone rearrangement in one dimension, and the structured monotone maps
//! used for horizontally separated marginals.
//!
//! The structured map sends the horizontal marginal through the monotone
//! (CDF-inversion) rearrangement, independently of the fiber, and couples
//! conditional fiber distributions through their normalized CDFs in the
//! fiber coordinate; with matching conditionals it reduces to the identity
//! in `u`. Partial derivatives come from centered differences over grid
//! neighbors, with second-order one-sided stencils at support boundaries.

mod simplex;

use serde::Serialize;
use thiserror::Error;

pub use simplex::SimplexError;

use crate::geometry::{classify_pair, dist_inf, PairClass, Point2};
use crate::measure::{density, DiscreteMeasure, Grid, SpaceParams};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("solver: {0}")]
    Simplex(#[from] SimplexError),
    #[error("marginal masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("structured map needs a regular (non-collapsed) support column, got column {0}")]
    SingularSupport(usize),
    #[error("structured map needs contiguous support columns")]
    NonContiguousSupport,
    #[error("structured map needs full fiber support on source column {0}")]
    SourceFibersIncomplete(usize),
    #[error("coupled pair left the horizontal regime: source col {src}, class {class:?}")]
    ClassAuditFailed { src: usize, class: PairClass },
    #[error("image point x = {0} has no mass in the target")]
    TargetLookupFailed(f64),
    #[error("empty support")]
    EmptySupport,
}

// --- one-dimensional monotone coupling ---------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Coupling1d {
    /// (source index, target index, mass) in the original atom order.
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling1d {
    /// True when every source atom has a single target.
    pub fn is_map(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, _, _) in &self.entries {
            if !seen.insert(i) {
                return false;
            }
        }
        true
    }

    pub fn cost(&self, src: &[(f64, f64)], dst: &[(f64, f64)], power: i32) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, q)| q * (src[i].0 - dst[j].0).abs().powi(power))
            .sum()
    }
}

/// The unique monotone (CDF-inversion) coupling of two discrete measures on
/// the line, given as (position, mass) atoms.
pub fn quantile_coupling_1d(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
) -> Result<Coupling1d, TransportError> {
    let sum_a: f64 = src.iter().map(|a| a.1).sum();
    let sum_b: f64 = dst.iter().map(|a| a.1).sum();
    if (sum_a - sum_b).abs() > 1e-9 * sum_a.abs().max(1.0) {
        return Err(TransportError::MassMismatch(sum_a, sum_b));
    }
    let mut ord_a: Vec<usize> = (0..src.len()).collect();
    let mut ord_b: Vec<usize> = (0..dst.len()).collect();
    ord_a.sort_by(|&x, &y| src[x].0.partial_cmp(&src[y].0).unwrap());
    ord_b.sort_by(|&x, &y| dst[x].0.partial_cmp(&dst[y].0).unwrap());

    let mut entries = Vec::new();
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut rem_a = if src.is_empty() { 0.0 } else { src[ord_a[0]].1 };
    let mut rem_b = if dst.is_empty() { 0.0 } else { dst[ord_b[0]].1 * sum_a / sum_b };
    while ia < ord_a.len() && ib < ord_b.len() {
        let q = rem_a.min(rem_b);
        if q > 1e-15 {
            entries.push((ord_a[ia], ord_b[ib], q));
        }
        rem_a -= q;
        rem_b -= q;
        if rem_a <= 1e-15 {
            ia += 1;
            if ia < ord_a.len() {
                rem_a = src[ord_a[ia]].1;
            }
        }
        if rem_b <= 1e-15 && ib < ord_b.len() {
            ib += 1;
            if ib < ord_b.len() {
                rem_b = dst[ord_b[ib]].1 * sum_a / sum_b;
            }
        }
    }
    Ok(Coupling1d { entries })
}

// --- exact discrete optimal transport ----------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CostKind {
    /// Squared sup distance (the quadratic transport cost).
    InfNormSq,
    /// Plain sup distance (first-order transport).
    InfNorm,
}

impl CostKind {
    pub fn eval(self, p: Point2, q: Point2) -> f64 {
        let d = dist_inf(p, q);
        match self {
            CostKind::InfNormSq => d * d,
            CostKind::InfNorm => d,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportPlan {
    /// Sparse entries (source atom, target atom, mass).
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub cost_kind: CostKind,
    /// Dual objective at the certified optimum.
    pub dual_objective: f64,
    /// Most negative reduced cost at termination.
    pub min_reduced_cost: f64,
    /// Largest marginal deviation of the returned plan.
    pub marginal_error: f64,
    pub pivots: usize,
}

impl TransportPlan {
    pub fn duality_gap(&self) -> f64 {
        (self.cost - self.dual_objective).abs()
    }

    pub fn duality_gap_relative(&self) -> f64 {
        self.duality_gap() / self.cost.abs().max(1e-12)
    }

    /// Masses grouped by source atom.
    pub fn by_source(&self, n_src: usize) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); n_src];
        for &(i, j, q) in &self.entries {
            out[i].push((j, q));
        }
        out
    }
}

/// Exact optimal plan between weighted atom clouds; deterministic under the
/// solver's lexicographic pivoting.
pub fn solve_discrete_ot(
    src: &[(Point2, f64)],
    dst: &[(Point2, f64)],
    kind: CostKind,
) -> Result<TransportPlan, TransportError> {
    let a: Vec<f64> = src.iter().map(|x| x.1).collect();
    let b: Vec<f64> = dst.iter().map(|x| x.1).collect();
    let cost = |i: usize, j: usize| kind.eval(src[i].0, dst[j].0);
    let sol = simplex::transportation_simplex(&a, &b, &cost)?;

    let mut row = vec![0.0; src.len()];
    let mut col = vec![0.0; dst.len()];
    for &(i, j, q) in &sol.flows {
        row[i] += q;
        col[j] += q;
    }
    let mut marginal_error: f64 = 0.0;
    for i in 0..src.len() {
        marginal_error = marginal_error.max((row[i] - a[i]).abs());
    }
    for j in 0..dst.len() {
        marginal_error = marginal_error.max((col[j] - b[j]).abs());
    }
    let dual: f64 = a
        .iter()
        .zip(&sol.potentials_u)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        + b.iter()
            .zip(&sol.potentials_v)
            .map(|(x, y)| x * y)
            .sum::<f64>();
    Ok(TransportPlan {
        entries: sol.flows,
        cost: sol.cost,
        cost_kind: kind,
        dual_objective: dual,
        min_reduced_cost: sol.min_reduced_cost,
        marginal_error,
        pivots: sol.pivots,
    })
}

/// Exact first-order transport distance under the sup metric.
pub fn w1_distance(
    src: &[(Point2, f64)],
    dst: &[(Point2, f64)],
) -> Result<f64, TransportError> {
    Ok(solve_discrete_ot(src, dst, CostKind::InfNorm)?.cost)
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitWitness {
    pub source: usize,
    pub targets: usize,
    /// Mass share of the second-largest target.
    pub second_share: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MapVerdict {
    pub is_map: bool,
    pub splitters: Vec<SplitWitness>,
}

/// A plan is map-induced when every source sends essentially all its mass to
/// one target.
pub fn is_map_induced(plan: &TransportPlan, n_src: usize, tol: f64) -> MapVerdict {
    let mut splitters = Vec::new();
    for (i, targets) in plan.by_source(n_src).iter().enumerate() {
        if targets.len() < 2 {
            continue;
        }
        let total: f64 = targets.iter().map(|t| t.1).sum();
        let mut shares: Vec<f64> = targets.iter().map(|t| t.1 / total).collect();
        shares.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let significant = shares.iter().filter(|s| **s > tol).count();
        if significant > 1 {
            splitters.push(SplitWitness {
                source: i,
                targets: significant,
                second_share: shares[1],
            });
        }
    }
    splitters.sort_by(|a, b| b.second_share.partial_cmp(&a.second_share).unwrap());
    MapVerdict {
        is_map: splitters.is_empty(),
        splitters,
    }
}

// --- structured monotone map --------------------------------------------------

/// Piecewise-linear CDF on uniform segments.
#[derive(Clone, Debug)]
struct PiecewiseCdf {
    x0: f64,
    dx: f64,
    /// Cumulative values at segment edges; `cum[0] = 0`.
    cum: Vec<f64>,
}

impl PiecewiseCdf {
    fn from_masses(x0: f64, dx: f64, masses: &[f64]) -> Self {
        let mut cum = Vec::with_capacity(masses.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for &m in masses {
            acc += m;
            cum.push(acc);
        }
        PiecewiseCdf { x0, dx, cum }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn normalized(mut self) -> Self {
        let t = self.total();
        if t > 0.0 {
            for c in self.cum.iter_mut() {
                *c /= t;
            }
        }
        self
    }

    fn value(&self, x: f64) -> f64 {
        let n = self.cum.len() - 1;
        let pos = (x - self.x0) / self.dx;
        if pos <= 0.0 {
            return 0.0;
        }
        if pos >= n as f64 {
            return self.total();
        }
        let i = (pos as usize).min(n - 1);
        let frac = pos - i as f64;
        self.cum[i] + frac * (self.cum[i + 1] - self.cum[i])
    }

    /// Quantile: smallest x in the support with `cdf(x) >= p`; `p = 0` maps
    /// to the left end of the first segment carrying mass.
    fn inverse(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, self.total());
        // first edge with cum >= p
        let mut lo = 0usize;
        let mut hi = self.cum.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cum[mid] >= p {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == 0 {
            let mut i = 0;
            while i + 1 < self.cum.len() && self.cum[i + 1] <= 0.0 {
                i += 1;
            }
            return self.x0 + self.dx * i as f64;
        }
        let (c0, c1) = (self.cum[lo - 1], self.cum[lo]);
        let frac = if c1 > c0 { (p - c0) / (c1 - c0) } else { 1.0 };
        self.x0 + self.dx * ((lo - 1) as f64 + frac)
    }
}

/// Monotone map sampled on the source grid cells, with CDF machinery for
/// evaluation at arbitrary points (cell edges during pushforward).
#[derive(Clone, Debug)]
pub struct MonotoneMapGrid {
    /// Grid columns carrying source mass, ascending and contiguous.
    pub support_cols: Vec<usize>,
    pub fibers: usize,
    /// Horizontal image at source column centers.
    pub t1: Vec<f64>,
    /// Vertical image at cell centers, `[support position][fiber]`.
    pub t2: Vec<Vec<f64>>,
    /// Fiber-coordinate image at cell centers.
    pub u_image: Vec<Vec<f64>>,
    src_x_cdf: PiecewiseCdf,
    dst_x_cdf: PiecewiseCdf,
    src_cond: Vec<PiecewiseCdf>,
    dst_cond: Vec<Option<PiecewiseCdf>>,
    src_heights: Vec<f64>,
    dst_heights: Vec<f64>,
    grid_x_min: f64,
    grid_dx: f64,
    grid_nx: usize,
    du: f64,
}

impl MonotoneMapGrid {
    /// Horizontal image of any point in the source support.
    pub fn eval_t1(&self, x: f64) -> f64 {
        self.dst_x_cdf.inverse(self.src_x_cdf.value(x))
    }

    fn dst_col_of(&self, x: f64) -> Result<usize, TransportError> {
        let raw = ((x - self.grid_x_min) / self.grid_dx) as isize;
        let col = raw.clamp(0, self.grid_nx as isize - 1) as usize;
        for c in [col, col.saturating_sub(1), (col + 1).min(self.grid_nx - 1)] {
            if self.dst_cond[c].is_some() {
                return Ok(c);
            }
        }
        Err(TransportError::TargetLookupFailed(x))
    }

    /// Fiber-coordinate image of `u` for a source point with horizontal
    /// image `t1`.
    pub fn eval_u_map(&self, pos: usize, t1: f64, u: f64) -> Result<f64, TransportError> {
        let col = self.dst_col_of(t1)?;
        let p = self.src_cond[pos].value(u);
        Ok(self.dst_cond[col].as_ref().unwrap().inverse(p))
    }

    pub fn n_support(&self) -> usize {
        self.support_cols.len()
    }

    pub fn source_height(&self, pos: usize) -> f64 {
        self.src_heights[pos]
    }

    pub fn image_point(&self, pos: usize, fiber: usize) -> Point2 {
        Point2::new(self.t1[pos], self.t2[pos][fiber])
    }

    /// `dT1/dx` at a support position; centered inside, second-order
    /// one-sided at the ends.
    pub fn dt1_dx(&self, pos: usize) -> f64 {
        let n = self.t1.len();
        let h = self.grid_dx;
        if n < 3 {
            return if n == 2 {
                (self.t1[1] - self.t1[0]) / h
            } else {
                1.0
            };
        }
        if pos == 0 {
            (-3.0 * self.t1[0] + 4.0 * self.t1[1] - self.t1[2]) / (2.0 * h)
        } else if pos == n - 1 {
            (3.0 * self.t1[n - 1] - 4.0 * self.t1[n - 2] + self.t1[n - 3]) / (2.0 * h)
        } else {
            (self.t1[pos + 1] - self.t1[pos - 1]) / (2.0 * h)
        }
    }

    /// `dT2/dy` at a cell; fiber differences divided by the source height.
    pub fn dt2_dy(&self, pos: usize, fiber: usize) -> f64 {
        let row = &self.t2[pos];
        let n = row.len();
        let hy = self.du * self.src_heights[pos];
        if pos >= self.t2.len() || n < 3 {
            return 1.0;
        }
        if fiber == 0 {
            (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * hy)
        } else if fiber == n - 1 {
            (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * hy)
        } else {
            (row[fiber + 1] - row[fiber - 1]) / (2.0 * hy)
        }
    }

    /// Jacobian `dT1/dx * dT2/dy`; `one_sided` marks boundary stencils.
    pub fn jacobian(&self, pos: usize, fiber: usize) -> (f64, bool) {
        let one_sided =
            pos == 0 || pos + 1 == self.t1.len() || fiber == 0 || fiber + 1 == self.fibers;
        (self.dt1_dx(pos) * self.dt2_dy(pos, fiber), one_sided)
    }

    /// Minimal observed partial derivatives, for the monotonicity audit.
    pub fn monotonicity_min(&self) -> (f64, f64) {
        let mut m1 = f64::INFINITY;
        let mut m2 = f64::INFINITY;
        for pos in 0..self.n_support() {
            m1 = m1.min(self.dt1_dx(pos));
            for j in 0..self.fibers {
                m2 = m2.min(self.dt2_dy(pos, j));
            }
        }
        (m1, m2)
    }

    /// Cost of the plan induced by the map on the source measure.
    pub fn plan_cost(
        &self,
        grid: &Grid,
        mu0: &DiscreteMeasure,
        kind: CostKind,
    ) -> f64 {
        let mut acc = 0.0;
        for (pos, &col) in self.support_cols.iter().enumerate() {
            let c = &grid.columns[col];
            for j in 0..self.fibers {
                let idx = c.cell_start + j;
                let mass = mu0.rho[idx] * grid.cells[idx].weight;
                if mass > 0.0 {
                    acc += mass * kind.eval(grid.cells[idx].center, self.image_point(pos, j));
                }
            }
        }
        acc
    }
}

/// Build the structured monotone map between two grid measures with
/// horizontally separated supports. The horizontal factor is the monotone
/// rearrangement of the x-marginals (independent of the fiber); the vertical
/// factor couples conditional fiber distributions per column. Every coupled
/// pair must land in the horizontal regime; anything else is an audit error.
pub fn build_structured_map(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    grid: &Grid,
    params: &SpaceParams,
) -> Result<MonotoneMapGrid, TransportError> {
    let nu = grid.nu;
    let col_mass = |mu: &DiscreteMeasure, col: usize| -> f64 {
        let c = &grid.columns[col];
        (0..c.n_cells)
            .map(|j| mu.rho[c.cell_start + j] * grid.cells[c.cell_start + j].weight)
            .sum()
    };

    let mut src_masses = vec![0.0; grid.nx];
    let mut dst_masses = vec![0.0; grid.nx];
    for col in 0..grid.nx {
        src_masses[col] = col_mass(mu0, col);
        dst_masses[col] = col_mass(mu1, col);
    }
    let support_cols: Vec<usize> = (0..grid.nx).filter(|&c| src_masses[c] > 0.0).collect();
    if support_cols.is_empty() {
        return Err(TransportError::EmptySupport);
    }
    for w in support_cols.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(TransportError::NonContiguousSupport);
        }
    }
    for &col in &support_cols {
        if grid.columns[col].singular {
            return Err(TransportError::SingularSupport(col));
        }
        let c = &grid.columns[col];
        for j in 0..nu {
            if mu0.rho[c.cell_start + j] <= 0.0 {
                return Err(TransportError::SourceFibersIncomplete(col));
            }
        }
    }
    for col in 0..grid.nx {
        if dst_masses[col] > 0.0 && grid.columns[col].singular {
            return Err(TransportError::SingularSupport(col));
        }
    }

    let src_x_cdf = PiecewiseCdf::from_masses(grid.x_min, grid.dx, &src_masses);
    let dst_x_cdf = PiecewiseCdf::from_masses(grid.x_min, grid.dx, &dst_masses);

    let cond_cdf = |mu: &DiscreteMeasure, col: usize| -> PiecewiseCdf {
        let c = &grid.columns[col];
        let masses: Vec<f64> = (0..nu)
            .map(|j| mu.rho[c.cell_start + j] * grid.cells[c.cell_start + j].weight)
            .collect();
        PiecewiseCdf::from_masses(0.0, grid.du, &masses).normalized()
    };
    let src_cond: Vec<PiecewiseCdf> = support_cols.iter().map(|&c| cond_cdf(mu0, c)).collect();
    let dst_cond: Vec<Option<PiecewiseCdf>> = (0..grid.nx)
        .map(|c| {
            if dst_masses[c] > 0.0 {
                Some(cond_cdf(mu1, c))
            } else {
                None
            }
        })
        .collect();

    let src_heights: Vec<f64> = support_cols.iter().map(|&c| grid.columns[c].height).collect();
    let dst_heights: Vec<f64> = (0..grid.nx).map(|c| grid.columns[c].height).collect();

    let mut map = MonotoneMapGrid {
        support_cols: support_cols.clone(),
        fibers: nu,
        t1: Vec::new(),
        t2: Vec::new(),
        u_image: Vec::new(),
        src_x_cdf,
        dst_x_cdf,
        src_cond,
        dst_cond,
        src_heights,
        dst_heights,
        grid_x_min: grid.x_min,
        grid_dx: grid.dx,
        grid_nx: grid.nx,
        du: grid.du,
    };

    for (pos, &col) in support_cols.iter().enumerate() {
        let x = grid.columns[col].x;
        let t1 = map.eval_t1(x);
        let mut t2_row = Vec::with_capacity(nu);
        let mut u_row = Vec::with_capacity(nu);
        let dst_col = map.dst_col_of(t1)?;
        let height_at_t1 = {
            // height of the target strip at the exact image point
            let h = params.height(t1);
            if h > 0.0 {
                h
            } else {
                map.dst_heights[dst_col]
            }
        };
        for j in 0..nu {
            let u = grid.u_centers[j];
            let u_img = map.eval_u_map(pos, t1, u)?;
            u_row.push(u_img);
            t2_row.push(u_img * height_at_t1);
        }
        map.t1.push(t1);
        map.t2.push(t2_row);
        map.u_image.push(u_row);

        // class audit at cell centers: every moved pair must stay horizontal
        for j in 0..nu {
            let src_pt = grid.cells[grid.columns[col].cell_start + j].center;
            let dst_pt = Point2::new(map.t1[pos], map.t2[pos][j]);
            let class = classify_pair(src_pt, dst_pt);
            if !class.is_horizontal() && dist_inf(src_pt, dst_pt) > 1e-12 {
                return Err(TransportError::ClassAuditFailed { src: col, class });
            }
        }
    }

    Ok(map)
}

/// Pushforward-density audit: at interior support cells compare
/// `rho1(T) m(T) J_T` with `rho0 m`, relatively.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiResidualReport {
    pub max_rel: f64,
    pub cells: usize,
    pub skipped_boundary: usize,
}

pub fn jacobi_residual(
    map: &MonotoneMapGrid,
    grid: &Grid,
    params: &SpaceParams,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
) -> Result<JacobiResidualReport, TransportError> {
    let mut max_rel: f64 = 0.0;
    let mut cells = 0;
    let mut skipped = 0;
    for (pos, &col) in map.support_cols.iter().enumerate() {
        let c = &grid.columns[col];
        for j in 0..map.fibers {
            let idx = c.cell_start + j;
            if mu0.rho[idx] <= 0.0 {
                continue;
            }
            let (jac, one_sided) = map.jacobian(pos, j);
            if one_sided {
                skipped += 1;
                continue;
            }
            let z = grid.cells[idx].center;
            let t = map.image_point(pos, j);
            let m_z = density(params, z).map_err(|_| TransportError::SingularSupport(col))?;
            let m_t = density(params, t).map_err(|_| TransportError::SingularSupport(col))?;
            let rho1 = grid
                .locate(t)
                .map(|tidx| mu1.rho[tidx])
                .unwrap_or(0.0);
            let lhs = rho1 * m_t * jac;
            let rhs = mu0.rho[idx] * m_z;
            max_rel = max_rel.max((lhs - rhs).abs() / rhs);
            cells += 1;
        }
    }
    Ok(JacobiResidualReport {
        max_rel,
        cells,
        skipped_boundary: skipped,
    })
}
