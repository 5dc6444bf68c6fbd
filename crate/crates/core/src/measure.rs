//! Reference measures on the strip spaces and their entropies.
//!
//! The weighted density over a profile `f` at concentration `K >= 1` is
//! `m(x, y) = (1/f(x)) exp(-K (y/f(x))^2)`, whose horizontal marginal is the
//! constant `C_K = int_0^1 exp(-K u^2) du` on every column. Grids discretize
//! in the fiber coordinate `u = y/f(x)`, so per-column marginals are exact by
//! construction; columns where `f` vanishes carry a single segment atom of
//! the full column mass `C_K dx`.

use serde::Serialize;
use thiserror::Error;

use crate::defaults;
use crate::geometry::Point2;
use crate::profiles::ProfileFn;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("density undefined on a collapsed column at x = {0}")]
    SingularColumn(f64),
    #[error("Renyi entropy needs N > 1, got {0}")]
    BadDimensionParameter(f64),
    #[error("measure mass {0} is not 1 within {1}")]
    NotProbability(f64, f64),
    #[error("grid needs nx, nu >= 2, got {0}, {1}")]
    GridTooSmall(usize, usize),
    #[error("empty support for the requested block")]
    EmptyBlock,
}

/// Which ambient region the grid covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpaceVariant {
    /// `x in [-1, 1]`, fiber height `f(x)`.
    Compact,
    /// Truncated non-compact space: collapsed half-line glued to a wedge,
    /// `x in [-radius, radius]` with height `k * max(x, 0)`.
    Wedge { radius: f64 },
}

/// Space data: profile, scale, concentration, region.
#[derive(Clone, Debug)]
pub struct SpaceParams {
    pub profile: ProfileFn,
    pub k: f64,
    pub big_k: f64,
    pub variant: SpaceVariant,
    /// Set when the profile is allowed to touch zero.
    pub singular: bool,
}

impl SpaceParams {
    pub fn compact(profile: ProfileFn, k: f64, big_k: f64, singular: bool) -> Self {
        SpaceParams {
            profile,
            k,
            big_k,
            variant: SpaceVariant::Compact,
            singular,
        }
    }

    /// The non-compact wedge space, truncated at `radius`.
    pub fn wedge(k: f64, big_k: f64, radius: f64) -> Self {
        SpaceParams {
            profile: ProfileFn::wedge(k),
            k,
            big_k,
            variant: SpaceVariant::Wedge { radius },
            singular: true,
        }
    }

    pub fn height(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    pub fn x_range(&self) -> (f64, f64) {
        match self.variant {
            SpaceVariant::Compact => (-1.0, 1.0),
            SpaceVariant::Wedge { radius } => (-radius, radius),
        }
    }
}

/// `(1/f(x)) exp(-K (y/f(x))^2)`; errors on collapsed columns, whose mass
/// lives on segment atoms instead.
pub fn density(params: &SpaceParams, p: Point2) -> Result<f64, MeasureError> {
    let h = params.height(p.x);
    if h <= 0.0 {
        return Err(MeasureError::SingularColumn(p.x));
    }
    let u = p.y / h;
    Ok((-params.big_k * u * u).exp() / h)
}

/// `-log m(x, z)` together with first and second derivatives in `x`, for a
/// C^2 height `z(x)` given by value and derivatives at the same point. Uses
/// the exact profile derivatives.
pub fn neg_log_density_c2(
    f: &ProfileFn,
    big_k: f64,
    x: f64,
    z: f64,
    dz: f64,
    ddz: f64,
) -> (f64, f64, f64) {
    let fx = f.eval(x);
    let f1 = f.eval_d1(x);
    let f2 = f.eval_d2(x);
    let u = z / fx;
    let du = dz / fx - z * f1 / (fx * fx);
    let ddu = ddz / fx - 2.0 * dz * f1 / (fx * fx) - z * f2 / (fx * fx)
        + 2.0 * z * f1 * f1 / (fx * fx * fx);
    let g = fx.ln() + big_k * u * u;
    let g1 = f1 / fx + 2.0 * big_k * u * du;
    let g2 = f2 / fx - (f1 / fx) * (f1 / fx) + 2.0 * big_k * (du * du + u * ddu);
    (g, g1, g2)
}

/// Adaptive Simpson quadrature with absolute error control.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Column mass constant `C_K = int_0^1 exp(-K u^2) du`, to absolute error
/// `1e-12`.
pub fn marginal_constant(big_k: f64) -> f64 {
    adaptive_simpson(&|u| (-big_k * u * u).exp(), 0.0, 1.0, 1e-13)
}

#[derive(Clone, Debug, Serialize)]
pub struct Column {
    pub x: f64,
    pub height: f64,
    pub singular: bool,
    pub cell_start: usize,
    pub n_cells: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub col: usize,
    /// Fiber index; `None` marks a segment atom on a collapsed column.
    pub fiber: Option<usize>,
    pub center: Point2,
    pub weight: f64,
}

/// Discretization of a strip space in `(x, u)` coordinates.
#[derive(Clone, Debug)]
pub struct Grid {
    pub nx: usize,
    pub nu: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub du: f64,
    pub columns: Vec<Column>,
    pub cells: Vec<Cell>,
    pub u_centers: Vec<f64>,
    /// Exact mass of each fiber cell per unit column width:
    /// `int over the u-cell of exp(-K u^2) du`.
    pub u_weights: Vec<f64>,
    pub marginal: f64,
    pub big_k: f64,
}

/// Build the fiber-coordinate grid. Per-column mass is `C_K dx` for both
/// regular and collapsed columns.
pub fn build_grid(params: &SpaceParams, nx: usize, nu: usize) -> Result<Grid, MeasureError> {
    if nx < 2 || nu < 2 {
        return Err(MeasureError::GridTooSmall(nx, nu));
    }
    let (x_min, x_max) = params.x_range();
    let dx = (x_max - x_min) / nx as f64;
    let du = 1.0 / nu as f64;
    let big_k = params.big_k;

    let u_weights: Vec<f64> = (0..nu)
        .map(|j| {
            let a = j as f64 * du;
            let b = (j + 1) as f64 * du;
            adaptive_simpson(&|u| (-big_k * u * u).exp(), a, b, 1e-14)
        })
        .collect();
    let u_centers: Vec<f64> = (0..nu).map(|j| (j as f64 + 0.5) * du).collect();
    let marginal = marginal_constant(big_k);

    let mut columns = Vec::with_capacity(nx);
    let mut cells = Vec::new();
    for i in 0..nx {
        let x = x_min + (i as f64 + 0.5) * dx;
        let height = params.height(x);
        let singular = height <= 0.0;
        let cell_start = cells.len();
        if singular {
            cells.push(Cell {
                col: i,
                fiber: None,
                center: Point2::new(x, 0.0),
                weight: marginal * dx,
            });
        } else {
            for j in 0..nu {
                cells.push(Cell {
                    col: i,
                    fiber: Some(j),
                    center: Point2::new(x, u_centers[j] * height),
                    weight: u_weights[j] * dx,
                });
            }
        }
        columns.push(Column {
            x,
            height,
            singular,
            cell_start,
            n_cells: cells.len() - cell_start,
        });
    }

    Ok(Grid {
        nx,
        nu,
        x_min,
        x_max,
        dx,
        du,
        columns,
        cells,
        u_centers,
        u_weights,
        marginal,
        big_k,
    })
}

impl Grid {
    pub fn cell_index(&self, col: usize, fiber: Option<usize>) -> usize {
        let c = &self.columns[col];
        match fiber {
            None => c.cell_start,
            Some(j) => c.cell_start + j.min(c.n_cells - 1),
        }
    }

    pub fn locate_col(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let i = ((x - self.x_min) / self.dx) as usize;
        Some(i.min(self.nx - 1))
    }

    pub fn locate_fiber(&self, u: f64) -> usize {
        if u <= 0.0 {
            0
        } else {
            ((u / self.du) as usize).min(self.nu - 1)
        }
    }

    /// Cell containing a point, fiber resolved through the column height.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let col = self.locate_col(p.x)?;
        let c = &self.columns[col];
        if c.singular {
            Some(c.cell_start)
        } else {
            let u = p.y / c.height;
            Some(c.cell_start + self.locate_fiber(u))
        }
    }

    pub fn column_mass(&self, col: usize) -> f64 {
        let c = &self.columns[col];
        self.cells[c.cell_start..c.cell_start + c.n_cells]
            .iter()
            .map(|cell| cell.weight)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.weight).sum()
    }

    pub fn column_edges(&self, col: usize) -> (f64, f64) {
        let left = self.x_min + col as f64 * self.dx;
        (left, left + self.dx)
    }
}

/// A measure given by a density relative to the grid weights.
#[derive(Clone, Debug, Serialize)]
pub struct DiscreteMeasure {
    pub rho: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn zero(grid: &Grid) -> Self {
        DiscreteMeasure {
            rho: vec![0.0; grid.cells.len()],
        }
    }

    /// Normalized restriction of the reference measure to a block in
    /// `(x, u)` coordinates: columns whose center lies in `[x0, x1]`, fibers
    /// whose center lies in `[u0, u1]`. Collapsed columns contribute their
    /// atom when the block reaches `u = 0`.
    pub fn uniform_block(
        grid: &Grid,
        x0: f64,
        x1: f64,
        u0: f64,
        u1: f64,
    ) -> Result<Self, MeasureError> {
        let mut rho = vec![0.0; grid.cells.len()];
        let mut mass = 0.0;
        for (idx, cell) in grid.cells.iter().enumerate() {
            let cx = grid.columns[cell.col].x;
            if cx < x0 || cx > x1 {
                continue;
            }
            let inside = match cell.fiber {
                Some(j) => grid.u_centers[j] >= u0 && grid.u_centers[j] <= u1,
                None => u0 <= 0.0,
            };
            if inside {
                rho[idx] = 1.0;
                mass += cell.weight;
            }
        }
        if mass <= 0.0 {
            return Err(MeasureError::EmptyBlock);
        }
        for r in rho.iter_mut() {
            *r /= mass;
        }
        Ok(DiscreteMeasure { rho })
    }

    /// Density from per-cell weights (probability masses per cell),
    /// normalized.
    pub fn from_masses(grid: &Grid, masses: &[(usize, f64)]) -> Result<Self, MeasureError> {
        let mut rho = vec![0.0; grid.cells.len()];
        let total: f64 = masses.iter().map(|(_, m)| m).sum();
        if total <= 0.0 {
            return Err(MeasureError::EmptyBlock);
        }
        for &(idx, m) in masses {
            rho[idx] += m / total / grid.cells[idx].weight;
        }
        Ok(DiscreteMeasure { rho })
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        self.rho
            .iter()
            .zip(&grid.cells)
            .map(|(r, c)| r * c.weight)
            .sum()
    }

    pub fn check_probability(&self, grid: &Grid) -> Result<(), MeasureError> {
        let m = self.mass(grid);
        if (m - 1.0).abs() > defaults::MASS_TOL {
            return Err(MeasureError::NotProbability(m, defaults::MASS_TOL));
        }
        Ok(())
    }

    /// Support as (cell index, probability mass) atoms.
    pub fn atoms(&self, grid: &Grid) -> Vec<(usize, f64)> {
        self.rho
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 0.0)
            .map(|(i, r)| (i, r * grid.cells[i].weight))
            .collect()
    }
}

/// Renyi entropy `-sum rho^(1 - 1/N) w`; cells with zero density contribute
/// nothing.
pub fn renyi_entropy(mu: &DiscreteMeasure, grid: &Grid, n: f64) -> Result<f64, MeasureError> {
    if n <= 1.0 {
        return Err(MeasureError::BadDimensionParameter(n));
    }
    let e = 1.0 - 1.0 / n;
    let mut acc = 0.0;
    for (r, c) in mu.rho.iter().zip(&grid.cells) {
        if *r > 0.0 {
            acc += r.powf(e) * c.weight;
        }
    }
    Ok(-acc)
}

/// Boltzmann entropy `sum rho log(rho) w` with `0 log 0 = 0`.
pub fn boltzmann_entropy(mu: &DiscreteMeasure, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for (r, c) in mu.rho.iter().zip(&grid.cells) {
        if *r > 0.0 {
            acc += r * r.ln() * c.weight;
        }
    }
    acc
}
