//! Numerical (K,N)-convexity calculus.
//!
//! A C^2 function `g` is (K,N)-convex when `g'' >= K + (g')^2 / N` on its
//! interval; equivalently `e^{-g/N}` satisfies `(e^{-g/N})'' <= -(K/N)
//! e^{-g/N}`. Certificates here evaluate the slack `g'' - K - (g')^2 / N` at
//! every sample, using analytic derivatives when available and centered
//! second differences otherwise.
//!
//! The module also builds the constructive near-affine bump `h` (endpoint
//! values `1` and `A`, midpoint nudged by `delta`, `-log h` convex at
//! `(-2^21 delta^2, 2)`), the line-restriction estimate for `-log m(x, y(x))`
//! along steep curves, and the three interpolation case profiles whose
//! convexity drives the pointwise entropy criterion.

use std::sync::Arc;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, PairClass};
use crate::measure::{neg_log_density_c2, SpaceParams};

#[derive(Debug, Error)]
pub enum ConvexityError {
    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("finite differences need uniform spacing; sample {0} deviates")]
    NonUniformSpacing(usize),
    #[error("dimension parameter must be positive, got {0}")]
    BadDimension(f64),
    #[error("sample grids do not match")]
    GridMismatch,
    #[error("reparametrized domain escapes [{0}, {1}]")]
    DomainEscape(f64, f64),
    #[error("midpoint nudge {0} outside (-2^-11, 2^-11)")]
    NudgeOutOfRange(f64),
    #[error("analytic derivative arrays required here")]
    MissingDerivatives,
    #[error("non-positive value {value} at t = {t}; cannot take -log")]
    NonPositiveValue { t: f64, value: f64 },
    #[error("slope precondition failed at x = {x}: y' = {slope} < 1/4")]
    SlopeTooSmall { x: f64, slope: f64 },
    #[error("curvature precondition failed at x = {x}: y'' = {curv} > bound {bound}")]
    CurvatureTooLarge { x: f64, curv: f64, bound: f64 },
    #[error("curve leaves the strip at x = {x}: y = {y}, height = {height}")]
    CurveOutOfStrip { x: f64, y: f64, height: f64 },
    #[error("interpolation data needs positive derivative entries, got {0}")]
    NonPositiveJacobianData(f64),
    #[error("steep case expects x < T1 and y < T2")]
    UnsupportedOrientation,
    #[error("geometry: {0}")]
    Geometry(#[from] geometry::GeometryError),
}

/// A scalar C^2 function with analytic derivatives, shareable across workers.
#[derive(Clone)]
pub struct C2Fn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl C2Fn {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        C2Fn {
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn eval_d1(&self, t: f64) -> f64 {
        (self.d1)(t)
    }

    pub fn eval_d2(&self, t: f64) -> f64 {
        (self.d2)(t)
    }

    /// `t -> g(alpha + beta t)` with chain-rule derivatives.
    pub fn precompose_affine(&self, alpha: f64, beta: f64) -> C2Fn {
        let (f, d1, d2) = (self.f.clone(), self.d1.clone(), self.d2.clone());
        C2Fn {
            f: Arc::new(move |t| f(alpha + beta * t)),
            d1: Arc::new(move |t| beta * d1(alpha + beta * t)),
            d2: Arc::new(move |t| beta * beta * d2(alpha + beta * t)),
        }
    }
}

/// Function samples on a strictly increasing grid, with optional analytic
/// derivative arrays. Without them, certificates fall back to centered
/// differences and require uniform spacing.
#[derive(Clone, Debug, Serialize)]
pub struct SampledFunction {
    pub ts: Vec<f64>,
    pub gs: Vec<f64>,
    pub d1: Option<Vec<f64>>,
    pub d2: Option<Vec<f64>>,
}

impl SampledFunction {
    pub fn from_values(ts: Vec<f64>, gs: Vec<f64>) -> Self {
        debug_assert_eq!(ts.len(), gs.len());
        SampledFunction {
            ts,
            gs,
            d1: None,
            d2: None,
        }
    }

    pub fn sample(f: &C2Fn, a: f64, b: f64, n_points: usize) -> Self {
        let n = n_points.max(2);
        let ts: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let gs = ts.iter().map(|&t| f.eval(t)).collect();
        let d1 = ts.iter().map(|&t| f.eval_d1(t)).collect();
        let d2 = ts.iter().map(|&t| f.eval_d2(t)).collect();
        SampledFunction {
            ts,
            gs,
            d1: Some(d1),
            d2: Some(d2),
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.ts[self.ts.len() - 1] - self.ts[0]) / (self.ts.len() - 1) as f64
    }

    fn check_uniform(&self) -> Result<(), ConvexityError> {
        let h = self.spacing();
        for i in 1..self.ts.len() {
            if ((self.ts[i] - self.ts[i - 1]) - h).abs() > 1e-9 * h.abs().max(1e-12) {
                return Err(ConvexityError::NonUniformSpacing(i));
            }
        }
        Ok(())
    }

    pub fn has_derivatives(&self) -> bool {
        self.d1.is_some() && self.d2.is_some()
    }

    /// Pointwise `-log` of a positive sampled function, derivatives by chain
    /// rule. Requires analytic arrays.
    pub fn neg_log(&self) -> Result<SampledFunction, ConvexityError> {
        let (d1, d2) = match (&self.d1, &self.d2) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(ConvexityError::MissingDerivatives),
        };
        let mut gs = Vec::with_capacity(self.gs.len());
        let mut nd1 = Vec::with_capacity(self.gs.len());
        let mut nd2 = Vec::with_capacity(self.gs.len());
        for i in 0..self.gs.len() {
            let v = self.gs[i];
            if v <= 0.0 {
                return Err(ConvexityError::NonPositiveValue {
                    t: self.ts[i],
                    value: v,
                });
            }
            gs.push(-v.ln());
            nd1.push(-d1[i] / v);
            nd2.push((d1[i] / v) * (d1[i] / v) - d2[i] / v);
        }
        Ok(SampledFunction {
            ts: self.ts.clone(),
            gs,
            d1: Some(nd1),
            d2: Some(nd2),
        })
    }

    /// Pointwise sum on a shared grid; derivative arrays sum when both sides
    /// carry them.
    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction, ConvexityError> {
        if self.ts.len() != other.ts.len()
            || self
                .ts
                .iter()
                .zip(&other.ts)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(ConvexityError::GridMismatch);
        }
        let zip_sum = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| match (a, b) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Ok(SampledFunction {
            ts: self.ts.clone(),
            gs: self.gs.iter().zip(&other.gs).map(|(a, b)| a + b).collect(),
            d1: zip_sum(&self.d1, &other.d1),
            d2: zip_sum(&self.d2, &other.d2),
        })
    }
}

/// Default certificate tolerance: a fixed floor plus the second-difference
/// truncation budget for the sample spacing and value scale at hand.
pub fn default_tolerance(spacing: f64, scale: f64) -> f64 {
    1e-6 + 1e2 * spacing * spacing * scale.abs().max(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityCertificate {
    pub k_param: f64,
    pub n_param: f64,
    pub min_slack: f64,
    /// Sample index attaining the minimum slack.
    pub argmin: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Certify `g'' >= K + (g')^2 / N` by sampling the slack. With analytic
/// derivatives every sample is checked; with finite differences only interior
/// samples are.
pub fn kn_certificate(
    g: &SampledFunction,
    k_param: f64,
    n_param: f64,
    tol: f64,
) -> Result<ConvexityCertificate, ConvexityError> {
    if g.ts.len() < 5 {
        return Err(ConvexityError::TooFewSamples(g.ts.len()));
    }
    if n_param <= 0.0 {
        return Err(ConvexityError::BadDimension(n_param));
    }
    let n = g.ts.len();
    let mut min_slack = f64::INFINITY;
    let mut argmin = 0;
    if g.has_derivatives() {
        let d1 = g.d1.as_ref().unwrap();
        let d2 = g.d2.as_ref().unwrap();
        for i in 0..n {
            let slack = d2[i] - k_param - d1[i] * d1[i] / n_param;
            if slack < min_slack {
                min_slack = slack;
                argmin = i;
            }
        }
    } else {
        g.check_uniform()?;
        let h = g.spacing();
        for i in 1..n - 1 {
            let d1 = (g.gs[i + 1] - g.gs[i - 1]) / (2.0 * h);
            let d2 = (g.gs[i + 1] - 2.0 * g.gs[i] + g.gs[i - 1]) / (h * h);
            let slack = d2 - k_param - d1 * d1 / n_param;
            if slack < min_slack {
                min_slack = slack;
                argmin = i;
            }
        }
    }
    Ok(ConvexityCertificate {
        k_param,
        n_param,
        min_slack,
        argmin,
        tol,
        passed: min_slack >= -tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterizationReport {
    pub direct: ConvexityCertificate,
    pub exponential: ConvexityCertificate,
    pub agree: bool,
}

/// Check the same inequality through `g_N = e^{-g/N}`: (K,N)-convexity of `g`
/// is `g_N'' <= -(K/N) g_N`. Slacks are rescaled by `N / g_N` so both routes
/// share a tolerance class.
pub fn gn_characterization_check(
    g: &SampledFunction,
    k_param: f64,
    n_param: f64,
    tol: f64,
) -> Result<CharacterizationReport, ConvexityError> {
    if g.ts.len() < 5 {
        return Err(ConvexityError::TooFewSamples(g.ts.len()));
    }
    if n_param <= 0.0 {
        return Err(ConvexityError::BadDimension(n_param));
    }
    let direct = kn_certificate(g, k_param, n_param, tol)?;

    let n = g.ts.len();
    let gn: Vec<f64> = g.gs.iter().map(|v| (-v / n_param).exp()).collect();
    let mut min_slack = f64::INFINITY;
    let mut argmin = 0;
    if g.has_derivatives() {
        let d1 = g.d1.as_ref().unwrap();
        let d2 = g.d2.as_ref().unwrap();
        for i in 0..n {
            let gn2 = (-d2[i] / n_param + (d1[i] / n_param) * (d1[i] / n_param)) * gn[i];
            let slack = n_param * (-gn2 - (k_param / n_param) * gn[i]) / gn[i];
            if slack < min_slack {
                min_slack = slack;
                argmin = i;
            }
        }
    } else {
        g.check_uniform()?;
        let h = g.spacing();
        for i in 1..n - 1 {
            let gn2 = (gn[i + 1] - 2.0 * gn[i] + gn[i - 1]) / (h * h);
            let slack = n_param * (-gn2 - (k_param / n_param) * gn[i]) / gn[i];
            if slack < min_slack {
                min_slack = slack;
                argmin = i;
            }
        }
    }
    let exponential = ConvexityCertificate {
        k_param,
        n_param,
        min_slack,
        argmin,
        tol,
        passed: min_slack >= -tol,
    };
    let agree = direct.passed == exponential.passed;
    Ok(CharacterizationReport {
        direct,
        exponential,
        agree,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReparametrizationReport {
    pub direct: ConvexityCertificate,
    pub mapped: ConvexityCertificate,
    pub agree: bool,
}

/// Certify `g` at `(K, N)` on the affine image and `t -> g(alpha + beta t)`
/// at `(beta^2 K, N)` on `[0, 1]`, at matched sample sets.
#[allow(clippy::too_many_arguments)]
pub fn reparametrize_check(
    g: &C2Fn,
    domain: (f64, f64),
    alpha: f64,
    beta: f64,
    k_param: f64,
    n_param: f64,
    n_points: usize,
    tol: f64,
) -> Result<ReparametrizationReport, ConvexityError> {
    let (lo, hi) = domain;
    for t in [0.0, 1.0] {
        let s = alpha + beta * t;
        if s < lo.min(hi) - 1e-12 || s > lo.max(hi) + 1e-12 {
            return Err(ConvexityError::DomainEscape(lo, hi));
        }
    }
    let (a, b) = (alpha, alpha + beta);
    let direct = kn_certificate(
        &SampledFunction::sample(g, a.min(b), a.max(b), n_points),
        k_param,
        n_param,
        tol,
    )?;
    let mapped_fn = g.precompose_affine(alpha, beta);
    let mapped = kn_certificate(
        &SampledFunction::sample(&mapped_fn, 0.0, 1.0, n_points),
        beta * beta * k_param,
        n_param,
        tol * (beta * beta).max(1.0),
    )?;
    let agree = direct.passed == mapped.passed;
    Ok(ReparametrizationReport {
        direct,
        mapped,
        agree,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    pub first: ConvexityCertificate,
    pub second: ConvexityCertificate,
    pub sum: ConvexityCertificate,
    /// Sum certifies whenever both inputs do.
    pub implied_holds: bool,
}

/// Additivity of the parameters: (K1,N1)-convex plus (K2,N2)-convex is
/// (K1+K2, N1+N2)-convex.
pub fn additivity_check(
    g: &SampledFunction,
    h: &SampledFunction,
    k1: f64,
    n1: f64,
    k2: f64,
    n2: f64,
    tol: f64,
) -> Result<AdditivityReport, ConvexityError> {
    let sum_fn = g.add(h)?;
    let first = kn_certificate(g, k1, n1, tol)?;
    let second = kn_certificate(h, k2, n2, tol)?;
    let sum = kn_certificate(&sum_fn, k1 + k2, n1 + n2, tol)?;
    let implied_holds = !(first.passed && second.passed) || sum.passed;
    Ok(AdditivityReport {
        first,
        second,
        sum,
        implied_holds,
    })
}

// --- the fixed C^2 bump ----------------------------------------------------

fn smoothstep(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

fn smoothstep_d1(u: f64) -> f64 {
    u * u * (30.0 + u * (-60.0 + 30.0 * u))
}

fn smoothstep_d2(u: f64) -> f64 {
    u * (60.0 + u * (-180.0 + 120.0 * u))
}

/// C^2 bump: `phi(1/2) = 1`, `phi = 0` on `[0, 1/4] U [3/4, 1]`,
/// `|phi'| <= 16` and `|phi''| <= 128`.
pub fn bump(t: f64) -> f64 {
    let a = (4.0 * (t - 0.25)).clamp(0.0, 1.0);
    let b = (4.0 * (0.75 - t)).clamp(0.0, 1.0);
    smoothstep(a) * smoothstep(b)
}

pub fn bump_d1(t: f64) -> f64 {
    let ra = 4.0 * (t - 0.25);
    let rb = 4.0 * (0.75 - t);
    let a = ra.clamp(0.0, 1.0);
    let b = rb.clamp(0.0, 1.0);
    let da = if ra > 0.0 && ra < 1.0 { 4.0 } else { 0.0 };
    let db = if rb > 0.0 && rb < 1.0 { -4.0 } else { 0.0 };
    smoothstep_d1(a) * da * smoothstep(b) + smoothstep(a) * smoothstep_d1(b) * db
}

pub fn bump_d2(t: f64) -> f64 {
    let ra = 4.0 * (t - 0.25);
    let rb = 4.0 * (0.75 - t);
    let a = ra.clamp(0.0, 1.0);
    let b = rb.clamp(0.0, 1.0);
    let da = if ra > 0.0 && ra < 1.0 { 4.0 } else { 0.0 };
    let db = if rb > 0.0 && rb < 1.0 { -4.0 } else { 0.0 };
    smoothstep_d2(a) * da * da * smoothstep(b)
        + 2.0 * smoothstep_d1(a) * smoothstep_d1(b) * da * db
        + smoothstep(a) * smoothstep_d2(b) * db * db
}

/// Grid maxima of `|phi'|` and `|phi''|`, asserted against the bounds the
/// constructions rely on. Runs once.
pub fn bump_derivative_bounds() -> (f64, f64) {
    static BOUNDS: OnceLock<(f64, f64)> = OnceLock::new();
    *BOUNDS.get_or_init(|| {
        let n = 4096;
        let mut m1: f64 = 0.0;
        let mut m2: f64 = 0.0;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            m1 = m1.max(bump_d1(t).abs());
            m2 = m2.max(bump_d2(t).abs());
        }
        assert!(m1 <= 16.0 && m2 <= 128.0, "bump bounds violated: {m1}, {m2}");
        (m1, m2)
    })
}

fn bump_h_eval(a_end: f64, delta: f64, t: f64) -> (f64, f64, f64) {
    let c = a_end - 1.0;
    (
        (1.0 - t) + t * a_end + delta * bump(t) * c,
        c * (1.0 + delta * bump_d1(t)),
        delta * bump_d2(t) * c,
    )
}

/// The constructive interpolation factor of the steep case:
/// `h(t) = 1 + t(A-1) + delta phi(t) (A-1)` sampled on `[0, 1]` with exact
/// endpoint and midpoint values. `-log h` is `(-2^21 delta^2, 2)`-convex
/// wherever `h > 0`.
pub fn build_h(
    a_end: f64,
    delta: f64,
    n_points: usize,
) -> Result<SampledFunction, ConvexityError> {
    if delta.abs() >= 2f64.powi(-11) {
        return Err(ConvexityError::NudgeOutOfRange(delta));
    }
    bump_derivative_bounds();
    let n = if n_points % 2 == 0 {
        n_points + 1
    } else {
        n_points
    }
    .max(5);
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut gs = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &t in &ts {
        let (v, v1, v2) = bump_h_eval(a_end, delta, t);
        gs.push(v);
        d1.push(v1);
        d2.push(v2);
    }
    Ok(SampledFunction {
        ts,
        gs,
        d1: Some(d1),
        d2: Some(d2),
    })
}

/// Certify `(-2^21 delta^2, 2)`-convexity of `-log h`. When the right
/// endpoint value vanishes (`A = 0`), the domain stops at `1 - 1e-3`.
pub fn bump_certificate(
    a_end: f64,
    delta: f64,
    n_points: usize,
    tol: f64,
) -> Result<ConvexityCertificate, ConvexityError> {
    if delta.abs() >= 2f64.powi(-11) {
        return Err(ConvexityError::NudgeOutOfRange(delta));
    }
    bump_derivative_bounds();
    let t_end = if a_end == 0.0 { 1.0 - 1e-3 } else { 1.0 };
    let n = n_points.max(5);
    let ts: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
    let mut gs = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &t in &ts {
        let (v, v1, v2) = bump_h_eval(a_end, delta, t);
        gs.push(v);
        d1.push(v1);
        d2.push(v2);
    }
    let h = SampledFunction {
        ts,
        gs,
        d1: Some(d1),
        d2: Some(d2),
    };
    let neg_log_h = h.neg_log()?;
    kn_certificate(&neg_log_h, -(2f64.powi(21)) * delta * delta, 2.0, tol)
}

// --- line restriction estimate ---------------------------------------------

/// Certify the line estimate: along a curve `y(x)` with `y' >= 1/4` and
/// `y'' <= H k / f`, the function `-log m(x, y(x))` is
/// `(K / (32 f_I^2), 32 K)`-convex, `f_I` the profile maximum on the
/// interval. Uses analytic profile derivatives throughout.
pub fn line_profile_check(
    params: &SpaceParams,
    y: &SampledFunction,
    h_bound: f64,
    tol: f64,
) -> Result<ConvexityCertificate, ConvexityError> {
    let (yd1, yd2) = match (&y.d1, &y.d2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(ConvexityError::MissingDerivatives),
    };
    if y.ts.len() < 5 {
        return Err(ConvexityError::TooFewSamples(y.ts.len()));
    }
    let f = &params.profile;
    let big_k = params.big_k;
    let n = y.ts.len();

    let mut gs = Vec::with_capacity(n);
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for i in 0..n {
        let x = y.ts[i];
        let fx = f.eval(x);
        if yd1[i] < 0.25 - 1e-12 {
            return Err(ConvexityError::SlopeTooSmall { x, slope: yd1[i] });
        }
        let bound = h_bound * params.k / fx;
        if yd2[i] > bound + 1e-15 {
            return Err(ConvexityError::CurvatureTooLarge {
                x,
                curv: yd2[i],
                bound,
            });
        }
        if y.gs[i] < -1e-12 || y.gs[i] > fx + 1e-12 {
            return Err(ConvexityError::CurveOutOfStrip {
                x,
                y: y.gs[i],
                height: fx,
            });
        }
        let (g, gd1, gd2) = neg_log_density_c2(f, big_k, x, y.gs[i], yd1[i], yd2[i]);
        gs.push(g);
        g1.push(gd1);
        g2.push(gd2);
    }
    let f_max = f.max_on(y.ts[0], y.ts[n - 1], 4 * n);
    let profile = SampledFunction {
        ts: y.ts.clone(),
        gs,
        d1: Some(g1),
        d2: Some(g2),
    };
    kn_certificate(
        &profile,
        big_k / (32.0 * f_max * f_max),
        32.0 * big_k,
        tol,
    )
}

// --- interpolation case profiles -------------------------------------------

/// Endpoint and derivative data for one transported point: position, image,
/// and the two monotone partial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct CaseData {
    pub x: f64,
    pub y: f64,
    pub t1: f64,
    pub t2: f64,
    pub dt1_dx: f64,
    pub dt2_dy: f64,
}

struct ProfileAccum {
    gs: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl ProfileAccum {
    fn new(n: usize) -> Self {
        ProfileAccum {
            gs: vec![0.0; n],
            g1: vec![0.0; n],
            g2: vec![0.0; n],
        }
    }

    fn push(&mut self, i: usize, v: (f64, f64, f64)) {
        self.gs[i] += v.0;
        self.g1[i] += v.1;
        self.g2[i] += v.2;
    }
}

// -log of an affine positive factor c0 + t (c1 - c0), with derivatives
fn neg_log_affine(c0: f64, c1: f64, t: f64) -> (f64, f64, f64) {
    let l = c0 + t * (c1 - c0);
    let r = (c1 - c0) / l;
    (-l.ln(), -r, r * r)
}

/// The `t`-profile on `[0, 1]` interpolating `-log(m J)` between the source,
/// the selected midpoint, and the image, per pair class. Its (0, N)-convexity
/// at the class dimension is what the pointwise criterion rides on.
pub fn case_profile(
    case: PairClass,
    data: &CaseData,
    params: &SpaceParams,
    n_points: usize,
) -> Result<SampledFunction, ConvexityError> {
    let a = data.dt1_dx;
    let b = data.dt2_dy;
    if a <= 0.0 {
        return Err(ConvexityError::NonPositiveJacobianData(a));
    }
    if b <= 0.0 {
        return Err(ConvexityError::NonPositiveJacobianData(b));
    }
    let n = if n_points % 2 == 0 {
        n_points + 1
    } else {
        n_points
    }
    .max(5);
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let f = &params.profile;
    let big_k = params.big_k;
    let mut acc = ProfileAccum::new(n);

    match case {
        PairClass::HorizontalFlat => {
            let fx = f.eval(data.x);
            let ft = f.eval(data.t1);
            if fx <= 0.0 || ft <= 0.0 {
                return Err(ConvexityError::NonPositiveValue {
                    t: data.x,
                    value: fx.min(ft),
                });
            }
            let u0 = data.y / fx;
            let u1 = data.t2 / ft;
            for (i, &t) in ts.iter().enumerate() {
                acc.push(i, neg_log_affine(1.0, a, t));
                acc.push(i, neg_log_affine(1.0 / fx, b / ft, t));
                let v = u0 + t * (u1 - u0);
                acc.push(
                    i,
                    (
                        big_k * v * v,
                        2.0 * big_k * v * (u1 - u0),
                        2.0 * big_k * (u1 - u0) * (u1 - u0),
                    ),
                );
            }
        }
        PairClass::Vertical | PairClass::Diagonal => {
            let dx = data.t1 - data.x;
            for (i, &t) in ts.iter().enumerate() {
                acc.push(i, neg_log_affine(1.0, a, t));
                acc.push(i, neg_log_affine(1.0, b, t));
                if dx == 0.0 {
                    let fx = f.eval(data.x);
                    let u0 = data.y / fx;
                    let u1 = data.t2 / fx;
                    let v = u0 + t * (u1 - u0);
                    acc.push(
                        i,
                        (
                            fx.ln() + big_k * v * v,
                            2.0 * big_k * v * (u1 - u0),
                            2.0 * big_k * (u1 - u0) * (u1 - u0),
                        ),
                    );
                } else {
                    // straight segment toward the image, chain rule in t
                    let x_t = data.x + t * dx;
                    let z = data.y + t * (data.t2 - data.y);
                    let dz_dx = (data.t2 - data.y) / dx;
                    let (g, gx, gxx) = neg_log_density_c2(f, big_k, x_t, z, dz_dx, 0.0);
                    acc.push(i, (g, dx * gx, dx * dx * gxx));
                }
            }
        }
        PairClass::HorizontalSteep => {
            if !(data.x < data.t1 && data.y < data.t2) {
                return Err(ConvexityError::UnsupportedOrientation);
            }
            let dx = data.t1 - data.x;
            let offset = geometry::fiber_midpoint_offset(data.x, data.t1, data.y, f)?;
            let delta = -(offset - 0.25 * dx) / (0.5 * dx);
            if delta.abs() >= 2f64.powi(-11) {
                return Err(ConvexityError::NudgeOutOfRange(delta));
            }
            bump_derivative_bounds();
            let mid_y =
                data.y + offset + (0.5 * dx - offset) * (2.0 * (data.t2 - data.y) / dx - 1.0);
            // quadratic through source, midpoint, image
            let c1 = (4.0 * mid_y - 3.0 * data.y - data.t2) / dx;
            let c2 = 2.0 * (data.y + data.t2 - 2.0 * mid_y) / (dx * dx);
            for (slope, at) in [(c1, data.x), (c1 + 2.0 * c2 * dx, data.t1)] {
                if slope < 0.25 - 1e-12 {
                    return Err(ConvexityError::SlopeTooSmall { x: at, slope });
                }
            }
            for (i, &t) in ts.iter().enumerate() {
                acc.push(i, neg_log_affine(1.0, a, t));
                let (h, h1, h2) = bump_h_eval(b, delta, t);
                if h <= 0.0 {
                    return Err(ConvexityError::NonPositiveValue { t, value: h });
                }
                let r = h1 / h;
                acc.push(i, (-h.ln(), -r, r * r - h2 / h));
                let xi = t * dx;
                let z = data.y + c1 * xi + c2 * xi * xi;
                let dz = c1 + 2.0 * c2 * xi;
                let (g, gx, gxx) =
                    neg_log_density_c2(f, big_k, data.x + xi, z, dz, 2.0 * c2);
                acc.push(i, (g, dx * gx, dx * dx * gxx));
            }
        }
    }

    Ok(SampledFunction {
        ts,
        gs: acc.gs,
        d1: Some(acc.g1),
        d2: Some(acc.g2),
    })
}

/// Dimension parameter each case certifies at `K = params.big_k`:
/// flat `2K + 2`, vertical/diagonal `32K + 2`, steep `32K + 3`.
pub fn case_dimension(case: PairClass, big_k: f64) -> f64 {
    match case {
        PairClass::HorizontalFlat => 2.0 * big_k + 2.0,
        PairClass::Vertical | PairClass::Diagonal => 32.0 * big_k + 2.0,
        PairClass::HorizontalSteep => 32.0 * big_k + 3.0,
    }
}

/// Build the case profile and certify it at `(0, case dimension)`.
pub fn case_profile_certificate(
    case: PairClass,
    data: &CaseData,
    params: &SpaceParams,
    n_points: usize,
    tol: f64,
) -> Result<ConvexityCertificate, ConvexityError> {
    let profile = case_profile(case, data, params, n_points)?;
    kn_certificate(&profile, 0.0, case_dimension(case, params.big_k), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::profiles::ProfileFn;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: f64 = defaults::PROFILE_SCALE;

    fn neg_log_fn() -> C2Fn {
        C2Fn::new(|x| -x.ln(), |x| -1.0 / x, |x| 1.0 / (x * x))
    }

    fn quadratic_fn(kq: f64) -> C2Fn {
        C2Fn::new(
            move |x| kq * x * x,
            move |x| 2.0 * kq * x,
            move |_| 2.0 * kq,
        )
    }

    #[test]
    fn neg_log_is_zero_one_convex() {
        let g = SampledFunction::sample(&neg_log_fn(), 1.0, 2.0, 201);
        let cert = kn_certificate(&g, 0.0, 1.0, 1e-9).unwrap();
        assert!(cert.passed);
        // g'' = (g')^2 exactly: slack vanishes
        assert!(cert.min_slack.abs() < 1e-12, "{}", cert.min_slack);
    }

    #[test]
    fn scaled_square_is_zero_2k_convex() {
        let kq = 16.0;
        let g = SampledFunction::sample(&quadratic_fn(kq), 0.0, 1.0, 201);
        let cert = kn_certificate(&g, 0.0, 2.0 * kq, 1e-9).unwrap();
        assert!(cert.passed);
        // slack 2K(1 - x^2): zero at the right boundary, positive inside
        assert!(cert.min_slack.abs() < 1e-12);
        assert_eq!(cert.argmin, 200);
    }

    #[test]
    fn concave_cubic_fails() {
        let g = SampledFunction::sample(
            &C2Fn::new(|x| x * x * x, |x| 3.0 * x * x, |x| 6.0 * x),
            -1.0,
            -0.1,
            101,
        );
        let cert = kn_certificate(&g, 0.0, 1.0, 1e-9).unwrap();
        assert!(!cert.passed);
    }

    #[test]
    fn finite_difference_path_matches_analytic() {
        let g_analytic = SampledFunction::sample(&neg_log_fn(), 1.0, 2.0, 401);
        let g_values = SampledFunction::from_values(g_analytic.ts.clone(), g_analytic.gs.clone());
        let tol = default_tolerance(g_values.spacing(), 1.0);
        let cert = kn_certificate(&g_values, 0.0, 1.0, tol).unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);
    }

    #[test]
    fn rejects_too_few_samples_and_bad_dimension() {
        let g = SampledFunction::sample(&neg_log_fn(), 1.0, 2.0, 4);
        assert!(matches!(
            kn_certificate(&g, 0.0, 1.0, 1e-9),
            Err(ConvexityError::TooFewSamples(4))
        ));
        let g = SampledFunction::sample(&neg_log_fn(), 1.0, 2.0, 11);
        assert!(matches!(
            kn_certificate(&g, 0.0, -1.0, 1e-9),
            Err(ConvexityError::BadDimension(_))
        ));
    }

    #[test]
    fn characterization_agrees_on_examples() {
        let cases: Vec<(SampledFunction, f64, f64)> = vec![
            (
                SampledFunction::sample(&neg_log_fn(), 1.0, 2.0, 101),
                0.0,
                1.0,
            ),
            (
                SampledFunction::sample(&quadratic_fn(16.0), 0.0, 1.0, 101),
                0.0,
                32.0,
            ),
            (
                SampledFunction::sample(
                    &C2Fn::new(|x| x * x * x, |x| 3.0 * x * x, |x| 6.0 * x),
                    -1.0,
                    -0.1,
                    101,
                ),
                0.0,
                1.0,
            ),
        ];
        for (g, kp, np) in cases {
            let rep = gn_characterization_check(&g, kp, np, 1e-9).unwrap();
            assert!(rep.agree);
        }
        // constant function: both pass with zero slack at K = 0
        let c = SampledFunction::sample(&C2Fn::new(|_| 2.0, |_| 0.0, |_| 0.0), 0.0, 1.0, 11);
        let rep = gn_characterization_check(&c, 0.0, 3.0, 1e-12).unwrap();
        assert!(rep.agree && rep.direct.passed);
        assert!(rep.direct.min_slack.abs() < 1e-15);
        assert!(rep.exponential.min_slack.abs() < 1e-12);
    }

    #[test]
    fn characterization_agrees_on_random_cubics() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let g = SampledFunction::sample(
                &C2Fn::new(
                    move |x| a * x * x * x + b * x * x + c * x,
                    move |x| 3.0 * a * x * x + 2.0 * b * x + c,
                    move |x| 6.0 * a * x + 2.0 * b,
                ),
                0.0,
                1.0,
                101,
            );
            let rep = gn_characterization_check(&g, 0.0, 2.0, 1e-9).unwrap();
            assert!(rep.agree, "disagreement for cubic ({a}, {b}, {c})");
        }
    }

    #[test]
    fn reparametrization_examples() {
        // identity
        let rep =
            reparametrize_check(&neg_log_fn(), (1.0, 2.0), 1.0, 1.0, 0.0, 1.0, 101, 1e-9).unwrap();
        assert!(rep.agree && rep.direct.passed && rep.mapped.passed);

        // half interval of the passing quadratic
        let rep = reparametrize_check(
            &quadratic_fn(16.0),
            (0.0, 1.0),
            0.0,
            0.5,
            0.0,
            32.0,
            101,
            1e-9,
        )
        .unwrap();
        assert!(rep.agree && rep.mapped.passed);

        // -log under t -> 1 + 2t at K = 0
        let rep =
            reparametrize_check(&neg_log_fn(), (1.0, 3.0), 1.0, 2.0, 0.0, 1.0, 101, 1e-9).unwrap();
        assert!(rep.agree && rep.direct.passed && rep.mapped.passed);

        // domain escape
        assert!(matches!(
            reparametrize_check(&neg_log_fn(), (1.0, 2.0), 0.0, 4.0, 0.0, 1.0, 11, 1e-9),
            Err(ConvexityError::DomainEscape(_, _))
        ));
    }

    #[test]
    fn additivity_example_and_trivial() {
        // common grid inside both certifying domains: -log needs x > 0,
        // 16 x^2 is (0, 32)-convex up to x = 1
        let g = SampledFunction::sample(&neg_log_fn(), 0.5, 1.0, 201);
        let h = SampledFunction::sample(&quadratic_fn(16.0), 0.5, 1.0, 201);
        let rep = additivity_check(&g, &h, 0.0, 1.0, 0.0, 32.0, 1e-9).unwrap();
        assert!(rep.first.passed && rep.sum.passed && rep.implied_holds);
        assert_eq!(rep.sum.n_param, 33.0);

        let z = SampledFunction::sample(&C2Fn::new(|_| 0.0, |_| 0.0, |_| 0.0), 0.0, 1.0, 11);
        let rep = additivity_check(&z, &z, 0.0, 5.0, 0.0, 7.0, 1e-12).unwrap();
        assert!(rep.sum.passed);

        // mismatched grids error
        let short = SampledFunction::sample(&quadratic_fn(1.0), 0.0, 0.25, 201);
        assert!(matches!(
            additivity_check(&g, &short, 0.0, 1.0, 0.0, 2.0, 1e-9),
            Err(ConvexityError::GridMismatch)
        ));
    }

    #[test]
    fn additivity_on_random_certified_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for trial in 0..200 {
            // two random convex quadratics on [0, 1], certified by
            // construction at parameters computed from their own slack
            let make = |rng: &mut ChaCha8Rng| {
                let gamma: f64 = rng.gen_range(0.3..2.0);
                let beta: f64 = rng.gen_range(-1.0..1.0);
                let npar: f64 = rng.gen_range(2.0..50.0);
                let g = SampledFunction::sample(
                    &C2Fn::new(
                        move |x| gamma * x * x + beta * x,
                        move |x| 2.0 * gamma * x + beta,
                        move |_| 2.0 * gamma,
                    ),
                    0.0,
                    1.0,
                    101,
                );
                let slack0 = kn_certificate(&g, 0.0, npar, 0.0).unwrap().min_slack;
                let kpar = slack0 - 1e-9;
                (g, kpar, npar)
            };
            let (g, k1, n1) = make(&mut rng);
            let (h, k2, n2) = make(&mut rng);
            let rep = additivity_check(&g, &h, k1, n1, k2, n2, 1e-12).unwrap();
            assert!(rep.first.passed && rep.second.passed, "trial {trial}");
            assert!(rep.implied_holds, "trial {trial}: additivity failed");
        }
    }

    #[test]
    fn bump_shape_and_bounds() {
        assert_eq!(bump(0.2), 0.0);
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(0.8), 0.0);
        let (m1, m2) = bump_derivative_bounds();
        // grid maxima land near the closed forms 7.5 and 92.3
        assert!((m1 - 7.5).abs() < 0.01, "{m1}");
        assert!(m2 > 90.0 && m2 < 93.0, "{m2}");
    }

    #[test]
    fn build_h_identities() {
        let delta = 2f64.powi(-12);
        for a_end in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let h = build_h(a_end, delta, 129).unwrap();
            assert_eq!(h.gs[0], 1.0);
            assert_eq!(*h.gs.last().unwrap(), a_end);
            let mid = h.gs[h.gs.len() / 2];
            let expect = 1.0 + (0.5 + delta) * (a_end - 1.0);
            assert!((mid - expect).abs() < 4e-16, "{mid} vs {expect}");
        }
        // A = 1 collapses to the constant function
        let h = build_h(1.0, delta, 65).unwrap();
        assert!(h.gs.iter().all(|&v| v == 1.0));
        // out-of-range nudge
        assert!(build_h(2.0, 1e-3, 65).is_err());
    }

    #[test]
    fn bump_certificate_examples() {
        // delta = 0: -log of an affine positive function is (0, 2)-convex
        let cert = bump_certificate(2.0, 0.0, 201, 1e-9).unwrap();
        assert!(cert.passed && cert.min_slack >= -1e-12);

        // stated example: A = 2, delta = 2^-12, parameters (-2^-3, 2)
        let delta = 2f64.powi(-12);
        let cert = bump_certificate(2.0, delta, 201, 1e-9).unwrap();
        assert!((cert.k_param + 0.125).abs() < 1e-15);
        assert!(cert.passed, "min_slack = {}", cert.min_slack);

        // vanishing endpoint: domain stops short of 1
        let cert = bump_certificate(0.0, delta, 201, 1e-6).unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);
    }

    #[test]
    fn bump_certificate_over_parameter_grid() {
        // 20 x 20 grid in (A, delta), |delta| <= 0.9 * 2^-11
        let dmax = 0.9 * 2f64.powi(-11);
        for ia in 0..20 {
            let a_end = 4.0 * ia as f64 / 19.0;
            for id in 0..20 {
                let delta = dmax * (2.0 * id as f64 / 19.0 - 1.0);
                let cert = bump_certificate(a_end, delta, 257, 1e-6).unwrap();
                assert!(
                    cert.passed,
                    "A = {a_end}, delta = {delta}: min_slack = {}",
                    cert.min_slack
                );
            }
        }
    }

    fn valley_space() -> SpaceParams {
        SpaceParams::compact(
            ProfileFn::preset("valley", K).unwrap(),
            K,
            defaults::CONCENTRATION,
            false,
        )
    }

    #[test]
    fn line_estimate_constant_profile_hand_check() {
        // f constant = k, y = x/2 on [0, 1.8k]: g'' = K/(2k^2) clears the
        // certificate threshold by hand
        let c = K;
        let params =
            SpaceParams::compact(ProfileFn::preset("constant", c).unwrap(), c, 16.0, false);
        let y = SampledFunction::sample(
            &C2Fn::new(|x| 0.5 * x, |_| 0.5, |_| 0.0),
            0.0,
            1.8 * c,
            101,
        );
        let cert = line_profile_check(&params, &y, 1.0, 1e-6).unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);
        assert!((cert.n_param - 512.0).abs() < 1e-12);

        // slope exactly 1/4 still passes
        let y = SampledFunction::sample(
            &C2Fn::new(|x| 0.25 * x, |_| 0.25, |_| 0.0),
            0.0,
            1.8 * c,
            101,
        );
        assert!(line_profile_check(&params, &y, 1.0, 1e-6).unwrap().passed);

        // slope below 1/4 is a precondition error
        let y = SampledFunction::sample(
            &C2Fn::new(|x| 0.2 * x, |_| 0.2, |_| 0.0),
            0.0,
            1.8 * c,
            101,
        );
        assert!(matches!(
            line_profile_check(&params, &y, 1.0, 1e-6),
            Err(ConvexityError::SlopeTooSmall { .. })
        ));
    }

    #[test]
    fn case_profile_identity_is_flat() {
        let params = valley_space();
        let f0 = params.height(0.3);
        let data = CaseData {
            x: 0.3,
            y: 0.4 * f0,
            t1: 0.3,
            t2: 0.4 * f0,
            dt1_dx: 1.0,
            dt2_dy: 1.0,
        };
        let g = case_profile(PairClass::HorizontalFlat, &data, &params, 65).unwrap();
        let spread = g.gs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - g.gs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-12);
        let cert = kn_certificate(&g, 0.0, 2.0 * params.big_k + 2.0, 1e-9).unwrap();
        assert!(cert.passed && cert.min_slack.abs() < 1e-10);
    }

    #[test]
    fn case_profile_flat_generic_and_monotone_in_dimension() {
        let params = valley_space();
        let fx = params.height(-0.5);
        let ft = params.height(0.5);
        let data = CaseData {
            x: -0.5,
            y: 0.3 * fx,
            t1: 0.5,
            t2: 0.7 * ft,
            dt1_dx: 0.8,
            dt2_dy: 1.4,
        };
        let cert =
            case_profile_certificate(PairClass::HorizontalFlat, &data, &params, 201, 1e-9).unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);
        // passing at 2K + 2 extends to any larger dimension parameter
        let g = case_profile(PairClass::HorizontalFlat, &data, &params, 201).unwrap();
        for np in [40.0, 515.0, 1030.0] {
            assert!(kn_certificate(&g, 0.0, np, 1e-9).unwrap().passed);
        }
    }

    #[test]
    fn case_profile_vertical_certifies() {
        let params = valley_space();
        let fx = params.height(0.1);
        let data = CaseData {
            x: 0.1,
            y: 0.2 * fx,
            t1: 0.1 + 0.3 * K,
            t2: 0.2 * fx + 0.9 * K,
            dt1_dx: 1.2,
            dt2_dy: 0.9,
        };
        let cert = case_profile_certificate(PairClass::Vertical, &data, &params, 201, 1e-9).unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);

        // purely vertical pair (dx = 0)
        let data = CaseData {
            x: 0.1,
            y: 0.2 * fx,
            t1: 0.1,
            t2: 0.8 * fx,
            dt1_dx: 1.0,
            dt2_dy: 1.1,
        };
        let cert = case_profile_certificate(PairClass::Vertical, &data, &params, 201, 1e-9).unwrap();
        assert!(cert.passed);
    }

    #[test]
    fn case_profile_steep_constant_profile() {
        // constant profile: the fiber offset collapses, delta = 0, h affine
        let c = 16.0 * K;
        let params = SpaceParams::compact(
            ProfileFn::preset("constant", c).unwrap(),
            16.0 * K,
            16.0,
            false,
        );
        let data = CaseData {
            x: 0.0,
            y: 0.1 * c,
            t1: 8.0 * K,
            t2: 0.1 * c + 6.0 * K,
            dt1_dx: 1.0,
            dt2_dy: 1.3,
        };
        let cert =
            case_profile_certificate(PairClass::HorizontalSteep, &data, &params, 201, 1e-9)
                .unwrap();
        assert!(cert.passed, "min_slack = {}", cert.min_slack);
        assert!((cert.n_param - (32.0 * 16.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn case_profile_steep_varying_profile() {
        let params = valley_space();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut tested = 0;
        while tested < 50 {
            let x: f64 = rng.gen_range(-0.8..0.8);
            let dx: f64 = rng.gen_range(K..2.0 * K);
            let r: f64 = rng.gen_range(0.55..0.95);
            let y: f64 = rng.gen_range(0.0..0.25) * params.height(x);
            let t2 = y + r * dx;
            if t2 > params.height(x + dx) {
                continue;
            }
            let data = CaseData {
                x,
                y,
                t1: x + dx,
                t2,
                dt1_dx: rng.gen_range(0.5..2.0),
                dt2_dy: rng.gen_range(0.5..2.0),
            };
            let cert =
                case_profile_certificate(PairClass::HorizontalSteep, &data, &params, 129, 1e-9)
                    .unwrap();
            assert!(
                cert.passed,
                "steep data {data:?}: min_slack = {}",
                cert.min_slack
            );
            tested += 1;
        }
    }

    #[test]
    fn steep_interval_maximum_bounded_by_twice_endpoint() {
        // steep data with t2 <= f(t1): the profile maximum on [x, t1] stays
        // within twice the right-endpoint value
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for src in ["k", "k*(2+x^2)/2", "k*(2+sin(x))/2", "k*(2+cos(2*x))/2"] {
            let f = ProfileFn::parse_with_k(src, K).unwrap();
            let mut done = 0;
            while done < 50 {
                let x: f64 = rng.gen_range(-0.8..0.8);
                let dx: f64 = rng.gen_range(K..2.0 * K);
                let r: f64 = rng.gen_range(0.55..0.95);
                let y: f64 = rng.gen_range(0.0..0.25) * f.eval(x);
                let t1 = x + dx;
                if y + r * dx > f.eval(t1) || y + 0.5 * dx > f.eval(t1) {
                    continue;
                }
                let f_max = f.max_on(x, t1, 256);
                assert!(
                    f_max <= 2.0 * f.eval(t1),
                    "{src}: max {f_max} vs 2 f(t1) = {}",
                    2.0 * f.eval(t1)
                );
                done += 1;
            }
        }
    }

    #[test]
    fn case_profile_rejects_bad_data() {
        let params = valley_space();
        let data = CaseData {
            x: 0.0,
            y: 0.0,
            t1: 0.5,
            t2: 0.0,
            dt1_dx: -1.0,
            dt2_dy: 1.0,
        };
        assert!(matches!(
            case_profile(PairClass::HorizontalFlat, &data, &params, 33),
            Err(ConvexityError::NonPositiveJacobianData(_))
        ));
    }
}
