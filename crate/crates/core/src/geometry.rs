//! Metric side of the strip spaces: the sup distance, the four-way pair
//! classification, the explicit region-dependent midpoint interpolation map,
//! dyadic geodesic refinement, and forced-segment branching witnesses.
//!
//! The midpoint of a pair depends on how horizontal the pair is:
//!
//! - vertical or diagonal pairs take the Euclidean midpoint;
//! - flat horizontal pairs (`|dy| <= |dx|/2`) take the fiber-proportional
//!   midpoint `y = (y0/f(x0) + y1/f(x1))/2 * f(mid)`;
//! - steep horizontal pairs (`|dx|/2 < |dy| < |dx|`) take the corrected
//!   formula built from the fiber midpoint offset below.
//!
//! On columns where the profile vanishes, points live on the segment `y = 0`
//! and their fiber coordinate is taken to be zero, which keeps the flat
//! formula total on singular spaces.

use serde::Serialize;
use thiserror::Error;

use crate::defaults;
use crate::profiles::ProfileFn;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// `max(|dx|, |dy|)`.
pub fn dist_inf(p: Point2, q: Point2) -> f64 {
    (p.x - q.x).abs().max((p.y - q.y).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PairClass {
    /// `|dx| < |dy|`
    Vertical,
    /// `|dx| = |dy|` (includes coincident pairs)
    Diagonal,
    /// `|dy| <= |dx|/2`
    HorizontalFlat,
    /// `|dx|/2 < |dy| < |dx|`
    HorizontalSteep,
}

impl PairClass {
    pub fn is_horizontal(self) -> bool {
        matches!(self, PairClass::HorizontalFlat | PairClass::HorizontalSteep)
    }

    pub fn label(self) -> &'static str {
        match self {
            PairClass::Vertical => "V",
            PairClass::Diagonal => "D",
            PairClass::HorizontalFlat => "H0",
            PairClass::HorizontalSteep => "H1",
        }
    }
}

/// Exhaustive and exclusive classification; symmetric in the pair.
pub fn classify_pair(p: Point2, q: Point2) -> PairClass {
    let dx = (p.x - q.x).abs();
    let dy = (p.y - q.y).abs();
    if dx < dy {
        PairClass::Vertical
    } else if dx == dy {
        PairClass::Diagonal
    } else if 0.5 * dx >= dy {
        PairClass::HorizontalFlat
    } else {
        PairClass::HorizontalSteep
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point ({x}, {y}) outside the space: fiber height {height}")]
    OutOfSpace { x: f64, y: f64, height: f64 },
    #[error("profile vanishes at x = {0}; fiber formula undefined there")]
    SingularColumn(f64),
    #[error("fiber offset requires x0 < x1, got {0} and {1}")]
    BadOrder(f64, f64),
    #[error("midpoint property violated: |d(m,p) - d/2| = {defect}, d = {dist}")]
    MidpointProperty { defect: f64, dist: f64 },
    #[error("midpoint ({x}, {y}) escapes the space (height {height})")]
    MidpointOutOfSpace { x: f64, y: f64, height: f64 },
    #[error("refinement depth {0} exceeds 12")]
    DepthTooLarge(u32),
    #[error("branching witness needs two distinct targets")]
    DegenerateTargets,
    #[error("branching witness precondition failed: {0}")]
    WitnessPrecondition(String),
}

/// Fiber coordinate `y / f(x)`, extended by zero on collapsed columns.
pub fn fiber_coord(y: f64, height: f64) -> Result<f64, GeometryError> {
    if height > 0.0 {
        Ok(y / height)
    } else if y.abs() <= defaults::MEMBERSHIP_SLACK {
        Ok(0.0)
    } else {
        Err(GeometryError::OutOfSpace {
            x: f64::NAN,
            y,
            height,
        })
    }
}

/// Offset above `y0` of the fiber-proportional midpoint for a steep pair with
/// `x0 < x1` and increasing `y`:
/// `((y0/f(x0) + (y0 + (x1-x0)/2)/f(x1)) / 2) * f((x0+x1)/2) - y0`.
///
/// For constant profiles this collapses to `(x1 - x0) / 4`.
pub fn fiber_midpoint_offset(
    x0: f64,
    x1: f64,
    y0: f64,
    f: &ProfileFn,
) -> Result<f64, GeometryError> {
    if x0 >= x1 || x0.is_nan() {
        return Err(GeometryError::BadOrder(x0, x1));
    }
    let f0 = f.eval(x0);
    let f1 = f.eval(x1);
    let fm = f.eval(0.5 * (x0 + x1));
    if f0 <= 0.0 {
        return Err(GeometryError::SingularColumn(x0));
    }
    if f1 <= 0.0 {
        return Err(GeometryError::SingularColumn(x1));
    }
    Ok(0.5 * (y0 / f0 + (y0 + 0.5 * (x1 - x0)) / f1) * fm - y0)
}

fn check_in_space(p: Point2, f: &ProfileFn) -> Result<(), GeometryError> {
    let h = f.eval(p.x);
    if p.y < -defaults::MEMBERSHIP_SLACK || p.y > h + defaults::MEMBERSHIP_SLACK {
        return Err(GeometryError::OutOfSpace {
            x: p.x,
            y: p.y,
            height: h,
        });
    }
    Ok(())
}

/// Steep-pair midpoint height for the canonical orientation `x0 < x1`,
/// `y0 < y1`, expressed through the profile values at the two ends and the
/// midpoint so reflected orientations can reuse it.
fn steep_mid_y(x0: f64, x1: f64, y0: f64, y1: f64, f0: f64, f1: f64, fm: f64) -> f64 {
    let dx = x1 - x0;
    let offset = 0.5 * (y0 / f0 + (y0 + 0.5 * dx) / f1) * fm - y0;
    y0 + offset + (0.5 * dx - offset) * (2.0 * (y1 - y0) / dx - 1.0)
}

/// The selected midpoint of a pair in the strip space over `f`.
pub fn midpoint(p: Point2, q: Point2, f: &ProfileFn) -> Result<Point2, GeometryError> {
    check_in_space(p, f)?;
    check_in_space(q, f)?;
    let class = classify_pair(p, q);
    let mx = 0.5 * (p.x + q.x);
    let m = match class {
        PairClass::Vertical | PairClass::Diagonal => Point2::new(mx, 0.5 * (p.y + q.y)),
        PairClass::HorizontalFlat => {
            let u0 = fiber_coord(p.y, f.eval(p.x))
                .map_err(|_| GeometryError::SingularColumn(p.x))?;
            let u1 = fiber_coord(q.y, f.eval(q.x))
                .map_err(|_| GeometryError::SingularColumn(q.x))?;
            Point2::new(mx, 0.5 * (u0 + u1) * f.eval(mx))
        }
        PairClass::HorizontalSteep => {
            // canonical order: left point first
            let (a, b) = if p.x < q.x { (p, q) } else { (q, p) };
            let fa = f.eval(a.x);
            let fb = f.eval(b.x);
            let fm = f.eval(mx);
            if fa <= 0.0 {
                return Err(GeometryError::SingularColumn(a.x));
            }
            if fb <= 0.0 {
                return Err(GeometryError::SingularColumn(b.x));
            }
            let my = if a.y < b.y {
                steep_mid_y(a.x, b.x, a.y, b.y, fa, fb, fm)
            } else {
                // reflect x -> -x; the reflected pair ((-b.x, b.y), (-a.x, a.y))
                // is canonical and sees the profile values swapped.
                steep_mid_y(-b.x, -a.x, b.y, a.y, fb, fa, fm)
            };
            Point2::new(mx, my)
        }
    };

    let d = dist_inf(p, q);
    let tol = defaults::MIDPOINT_REL_TOL * d + defaults::MEMBERSHIP_SLACK;
    let defect = (dist_inf(m, p) - 0.5 * d)
        .abs()
        .max((dist_inf(m, q) - 0.5 * d).abs());
    if defect > tol {
        return Err(GeometryError::MidpointProperty { defect, dist: d });
    }
    let hm = f.eval(m.x);
    if m.y < -defaults::MEMBERSHIP_SLACK || m.y > hm + defaults::MEMBERSHIP_SLACK {
        return Err(GeometryError::MidpointOutOfSpace {
            x: m.x,
            y: m.y,
            height: hm,
        });
    }
    Ok(m)
}

/// A curve sampled at dyadic times of `[0, 1]`.
#[derive(Clone, Debug, Serialize)]
pub struct SampledCurve {
    pub times: Vec<f64>,
    pub points: Vec<Point2>,
}

impl SampledCurve {
    pub fn endpoint_distance(&self) -> f64 {
        dist_inf(self.points[0], *self.points.last().unwrap())
    }

    /// Largest deviation from constant speed over all stored pairs, relative
    /// to the endpoint distance.
    pub fn constant_speed_defect(&self) -> f64 {
        let total = self.endpoint_distance();
        if total == 0.0 {
            return self
                .points
                .iter()
                .map(|&p| dist_inf(p, self.points[0]))
                .fold(0.0, f64::max);
        }
        let n = self.points.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let expect = (self.times[j] - self.times[i]) * total;
                let got = dist_inf(self.points[i], self.points[j]);
                worst = worst.max((got - expect).abs() / total);
            }
        }
        worst
    }

    /// Value at a stored dyadic time, if present.
    pub fn at_time(&self, t: f64) -> Option<Point2> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() < 1e-12)
            .map(|i| self.points[i])
    }
}

/// Build a sampled curve at `2^depth + 1` dyadic times by recursive midpoint
/// selection.
pub fn geodesic_refine(
    p: Point2,
    q: Point2,
    f: &ProfileFn,
    depth: u32,
) -> Result<SampledCurve, GeometryError> {
    if depth > 12 {
        return Err(GeometryError::DepthTooLarge(depth));
    }
    let n = 1usize << depth;
    let mut points = vec![Point2::new(f64::NAN, f64::NAN); n + 1];
    points[0] = p;
    points[n] = q;
    fill(&mut points, 0, n, f)?;
    let times = (0..=n).map(|i| i as f64 / n as f64).collect();
    Ok(SampledCurve { times, points })
}

fn fill(points: &mut [Point2], lo: usize, hi: usize, f: &ProfileFn) -> Result<(), GeometryError> {
    if hi - lo < 2 {
        return Ok(());
    }
    let mid = (lo + hi) / 2;
    points[mid] = midpoint(points[lo], points[hi], f)?;
    fill(points, lo, mid, f)?;
    fill(points, mid, hi, f)
}

/// A pair of geodesics that agree on an initial segment and split: the
/// signature of forced branching out of a collapsed region.
#[derive(Clone, Debug, Serialize)]
pub struct BranchingWitness {
    pub curve_a: SampledCurve,
    pub curve_b: SampledCurve,
    /// Time at which the collapsed region ends; both curves are pinned to
    /// `y = 0` up to here.
    pub t_star: f64,
    /// Largest disagreement over stored times `<= t_star`.
    pub common_segment_defect: f64,
    /// `d_inf` separation of the two endpoints.
    pub endpoint_separation: f64,
}

/// Construct and verify a forced-segment branching witness.
///
/// `p` lies in the collapsed one-dimensional part (`f(p.x) = 0`, `y = 0`);
/// `q1 != q2` share an `x`-coordinate in the two-dimensional part, with both
/// pairs horizontal. Any constant-speed geodesic from `p` to `q_i` moves `x`
/// affinely, so while `x(t)` stays in the collapsed region the constraint
/// `0 <= y <= f(x) = 0` pins `y(t) = 0`: the two curves must share that
/// segment and still reach distinct endpoints.
pub fn forced_segment_witness(
    f: &ProfileFn,
    p: Point2,
    q1: Point2,
    q2: Point2,
    depth: u32,
) -> Result<BranchingWitness, GeometryError> {
    let pre = |msg: &str| GeometryError::WitnessPrecondition(msg.to_string());
    if q1 == q2 {
        return Err(GeometryError::DegenerateTargets);
    }
    if f.eval(p.x) != 0.0 || p.y.abs() > defaults::MEMBERSHIP_SLACK {
        return Err(pre("source must lie on the collapsed segment"));
    }
    if (q1.x - q2.x).abs() > 1e-12 {
        return Err(pre("targets must share an x-coordinate"));
    }
    if f.eval(q1.x) <= 0.0 {
        return Err(pre("targets must lie in the two-dimensional part"));
    }
    for q in [q1, q2] {
        check_in_space(q, f)?;
        if !classify_pair(p, q).is_horizontal() {
            return Err(pre("pairs must be horizontal"));
        }
    }

    let dist = (q1.x - p.x).abs();

    // Rightmost edge of the collapsed component reached from p, by bisection.
    let (mut lo, mut hi) = (p.x, q1.x);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f.eval(mid) == 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zero_edge = lo;
    let t_star = (zero_edge - p.x).abs() / dist;

    // The constraint is active on the whole forced segment.
    let steps = 1usize << depth;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        if t <= t_star {
            let x = p.x + (q1.x - p.x) * t;
            if f.eval(x) > 0.0 {
                return Err(pre("collapsed region is not an interval"));
            }
        }
    }

    let curve_a = geodesic_refine(p, q1, f, depth)?;
    let curve_b = geodesic_refine(p, q2, f, depth)?;
    let mut common_defect: f64 = 0.0;
    for (i, &t) in curve_a.times.iter().enumerate() {
        if t <= t_star {
            common_defect = common_defect.max(dist_inf(curve_a.points[i], curve_b.points[i]));
        }
    }
    Ok(BranchingWitness {
        endpoint_separation: dist_inf(q1, q2),
        common_segment_defect: common_defect,
        t_star,
        curve_a,
        curve_b,
    })
}

/// A weighted family of sampled curves standing in for a geodesic plan.
#[derive(Clone, Debug)]
pub struct GeodesicFamily {
    pub curves: Vec<SampledCurve>,
    pub weights: Vec<f64>,
}

impl GeodesicFamily {
    pub fn new(curves: Vec<SampledCurve>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(curves.len(), weights.len());
        GeodesicFamily { curves, weights }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Worst constant-speed defect across the family.
    pub fn speed_defect(&self) -> f64 {
        self.curves
            .iter()
            .map(|c| c.constant_speed_defect())
            .fold(0.0, f64::max)
    }
}
