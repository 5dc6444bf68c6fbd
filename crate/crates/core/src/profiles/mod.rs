//! Profile functions `f` on `[-1, 1]` and admissibility audits.
//!
//! A profile is admissible at scale `k` when `0 < f < 3k`, `|f'| <= k` and
//! `|f''| <= 1` hold on the whole interval; the closure class relaxes strict
//! positivity and lets `f` touch zero, collapsing fibers to segment atoms.
//! Profiles carry exact first and second derivatives obtained by symbolic
//! differentiation of the parsed tree, or closed forms for the built-in
//! piecewise presets.

mod expr;

use serde::Serialize;
use thiserror::Error;

pub use expr::ParseError;
use expr::{Expr, Parser};

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error("scale k = {0} outside (0, 1/4)")]
    ScaleOutOfRange(f64),
    #[error("audit needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
}

/// Source text plus named constants; the raw, serializable form of a profile.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileSpec {
    pub source: String,
    pub params: Vec<(String, f64)>,
}

impl ProfileSpec {
    pub fn new(source: impl Into<String>, params: Vec<(String, f64)>) -> Self {
        ProfileSpec {
            source: source.into(),
            params,
        }
    }

    pub fn compile(&self) -> Result<ProfileFn, ParseError> {
        ProfileFn::parse(&self.source, self.params.clone())
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Parsed {
        source: String,
        values: Vec<f64>,
        f: Expr,
        d1: Expr,
        d2: Expr,
    },
    /// Zero on `[-1, 0]`, quintic rise to `k/2` at `x = 1`. C^2 everywhere,
    /// slope bounded by `15k/16`, curvature by `2.9k`.
    Ramp { k: f64 },
    /// Half-line wedge `f(x) = k * max(x, 0)`; the boundary profile of the
    /// non-compact space. Lipschitz but not C^2 at the origin.
    Wedge { k: f64 },
    /// Base profile plus a constant vertical shift.
    Shifted { base: Box<Kind>, offset: f64 },
}

impl Kind {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Kind::Parsed { f, values, .. } => f.eval(x, values),
            Kind::Ramp { k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let t = x.min(1.0);
                    0.5 * k * (t * t * t * (10.0 + t * (-15.0 + 6.0 * t)))
                }
            }
            Kind::Wedge { k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    k * x
                }
            }
            Kind::Shifted { base, offset } => base.eval(x) + offset,
        }
    }

    fn eval_d1(&self, x: f64) -> f64 {
        match self {
            Kind::Parsed { d1, values, .. } => d1.eval(x, values),
            Kind::Ramp { k } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    0.5 * k * (x * x * (30.0 + x * (-60.0 + 30.0 * x)))
                }
            }
            Kind::Wedge { k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    *k
                }
            }
            Kind::Shifted { base, .. } => base.eval_d1(x),
        }
    }

    fn eval_d2(&self, x: f64) -> f64 {
        match self {
            Kind::Parsed { d2, values, .. } => d2.eval(x, values),
            Kind::Ramp { k } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    0.5 * k * (x * (60.0 + x * (-180.0 + 120.0 * x)))
                }
            }
            Kind::Wedge { .. } => 0.0,
            Kind::Shifted { base, .. } => base.eval_d2(x),
        }
    }

    fn describe(&self) -> String {
        match self {
            Kind::Parsed { source, .. } => source.clone(),
            Kind::Ramp { k } => format!("ramp-smoothed(k={k})"),
            Kind::Wedge { k } => format!("wedge(k={k})"),
            Kind::Shifted { base, offset } => format!("{} + {offset}", base.describe()),
        }
    }
}

/// A profile with exact first and second derivatives.
#[derive(Clone, Debug)]
pub struct ProfileFn {
    kind: Kind,
}

impl ProfileFn {
    /// Parse a source expression over `x` with the given named constants.
    pub fn parse(source: &str, params: Vec<(String, f64)>) -> Result<Self, ParseError> {
        let f = Parser::parse(source, &params)?;
        let d1 = f.derivative();
        let d2 = d1.derivative();
        let values = params.iter().map(|(_, v)| *v).collect();
        Ok(ProfileFn {
            kind: Kind::Parsed {
                source: source.to_string(),
                values,
                f,
                d1,
                d2,
            },
        })
    }

    /// Parse with the single conventional parameter `k`.
    pub fn parse_with_k(source: &str, k: f64) -> Result<Self, ParseError> {
        Self::parse(source, vec![("k".to_string(), k)])
    }

    /// Named families so command-line runs need no expression authoring.
    ///
    /// `constant`: `f = k`. `valley`: `f = k (2 + x^2) / 2`, range `[k, 1.5k]`.
    /// `ramp-smoothed`: closure-class profile, zero exactly on `[-1, 0]`.
    pub fn preset(name: &str, k: f64) -> Option<Self> {
        match name {
            "constant" => Self::parse_with_k("k", k).ok(),
            "valley" => Self::parse_with_k("k*(2+x^2)/2", k).ok(),
            "ramp-smoothed" => Some(ProfileFn {
                kind: Kind::Ramp { k },
            }),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["constant", "valley", "ramp-smoothed"]
    }

    /// Half-line wedge profile of the non-compact space.
    pub fn wedge(k: f64) -> Self {
        ProfileFn {
            kind: Kind::Wedge { k },
        }
    }

    /// The profile shifted up by a constant.
    pub fn shifted(&self, offset: f64) -> Self {
        ProfileFn {
            kind: Kind::Shifted {
                base: Box::new(self.kind.clone()),
                offset,
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    pub fn eval_d1(&self, x: f64) -> f64 {
        self.kind.eval_d1(x)
    }

    pub fn eval_d2(&self, x: f64) -> f64 {
        self.kind.eval_d2(x)
    }

    pub fn describe(&self) -> String {
        self.kind.describe()
    }

    /// Maximum of `f` over `[a, b]` by dense sampling.
    pub fn max_on(&self, a: f64, b: f64, samples: usize) -> f64 {
        let n = samples.max(2);
        let mut m = f64::NEG_INFINITY;
        for i in 0..=n {
            let x = a + (b - a) * (i as f64) / (n as f64);
            m = m.max(self.eval(x));
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileClass {
    /// Strictly positive and inside every bound.
    Admissible,
    /// Bounds hold with `f >= 0` and `f` touching zero somewhere.
    ClosureOnly,
    Rejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundViolation {
    NonFinite,
    Positivity,
    Height,
    Slope,
    Curvature,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub class: ProfileClass,
    /// First violated bound and the sample where it failed.
    pub violated: Option<(BoundViolation, f64)>,
    pub sample_count: usize,
}

/// Audit the three bounds on a uniform grid of `[-1, 1]` including both
/// endpoints. Dense sampling only; no interval-arithmetic guarantee.
pub fn validate_membership(
    f: &ProfileFn,
    k: f64,
    audit_n: usize,
) -> Result<MembershipReport, MembershipError> {
    if !(k > 0.0 && k < 0.25) {
        return Err(MembershipError::ScaleOutOfRange(k));
    }
    if audit_n < 1000 {
        return Err(MembershipError::TooFewSamples(audit_n));
    }

    // Non-strict derivative bounds get a tiny relative slack against rounding
    // in the symbolic evaluators.
    let slope_bound = k * (1.0 + 1e-12);
    let curv_bound = 1.0 + 1e-12;
    let height_bound = 3.0 * k;

    let mut touched_zero = false;
    for i in 0..=audit_n {
        let x = -1.0 + 2.0 * (i as f64) / (audit_n as f64);
        let v = f.eval(x);
        let d1 = f.eval_d1(x);
        let d2 = f.eval_d2(x);
        let reject = |b, x| {
            Ok(MembershipReport {
                class: ProfileClass::Rejected,
                violated: Some((b, x)),
                sample_count: audit_n + 1,
            })
        };
        if !v.is_finite() || !d1.is_finite() || !d2.is_finite() {
            return reject(BoundViolation::NonFinite, x);
        }
        if v < 0.0 {
            return reject(BoundViolation::Positivity, x);
        }
        if v == 0.0 {
            touched_zero = true;
        }
        if v >= height_bound {
            return reject(BoundViolation::Height, x);
        }
        if d1.abs() > slope_bound {
            return reject(BoundViolation::Slope, x);
        }
        if d2.abs() > curv_bound {
            return reject(BoundViolation::Curvature, x);
        }
    }

    Ok(MembershipReport {
        class: if touched_zero {
            ProfileClass::ClosureOnly
        } else {
            ProfileClass::Admissible
        },
        violated: None,
        sample_count: audit_n + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: f64 = defaults::PROFILE_SCALE;

    fn central_d1(f: &ProfileFn, x: f64, h: f64) -> f64 {
        (f.eval(x + h) - f.eval(x - h)) / (2.0 * h)
    }

    fn central_d2_from_d1(f: &ProfileFn, x: f64, h: f64) -> f64 {
        (f.eval_d1(x + h) - f.eval_d1(x - h)) / (2.0 * h)
    }

    #[test]
    fn constant_preset_derivatives_vanish() {
        let f = ProfileFn::preset("constant", 0.001).unwrap();
        for &x in &[-1.0, 0.0, 0.5] {
            assert_eq!(f.eval(x), 0.001);
            assert_eq!(f.eval_d1(x), 0.0);
            assert_eq!(f.eval_d2(x), 0.0);
        }
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let sources = [
            "k*(2+x^2)/2",
            "k*(2+sin(x))/2",
            "k*(2+cos(2*x))/2",
            "k*(2.5+x^3/2)/2",
            "k*(2+tanh(x)/2)/2",
            "k*sqrt(4+x^2)",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for src in sources {
            let f = ProfileFn::parse_with_k(src, K).unwrap();
            // relative tolerance with a floor where cancellation noise in the
            // h = 1e-6 stencil exceeds the derivative itself
            let floor = 1e-8;
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-0.99..0.99);
                let sym = f.eval_d1(x);
                let fd = central_d1(&f, x, h);
                assert!(
                    (sym - fd).abs() <= 1e-6 * sym.abs().max(floor),
                    "{src}: d1 mismatch at {x}: {sym} vs {fd}"
                );
                let sym2 = f.eval_d2(x);
                let fd2 = central_d2_from_d1(&f, x, h);
                assert!(
                    (sym2 - fd2).abs() <= 1e-6 * sym2.abs().max(floor),
                    "{src}: d2 mismatch at {x}: {sym2} vs {fd2}"
                );
            }
        }
    }

    #[test]
    fn ramp_is_c2_and_touches_zero() {
        let f = ProfileFn::preset("ramp-smoothed", K).unwrap();
        assert_eq!(f.eval(-0.5), 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!(f.eval(0.5) > 0.0);
        // continuity of the derivatives across the junction
        for &h in &[1e-4, 1e-5] {
            assert!(f.eval_d1(h).abs() < 2.0 * K * h * h * 40.0 + 1e-18);
            assert!(f.eval_d2(h).abs() < K * h * 40.0 + 1e-18);
        }
        let report = validate_membership(&f, K, 4096).unwrap();
        assert_eq!(report.class, ProfileClass::ClosureOnly);
    }

    #[test]
    fn membership_examples() {
        let constant = ProfileFn::preset("constant", K).unwrap();
        assert_eq!(
            validate_membership(&constant, K, 2000).unwrap().class,
            ProfileClass::Admissible
        );

        let linear = ProfileFn::parse_with_k("k*x", K).unwrap();
        let report = validate_membership(&linear, K, 2000).unwrap();
        assert_eq!(report.class, ProfileClass::Rejected);
        let (bound, at) = report.violated.unwrap();
        assert_eq!(bound, BoundViolation::Positivity);
        assert_eq!(at, -1.0);

        let valley = ProfileFn::preset("valley", K).unwrap();
        let report = validate_membership(&valley, K, 4096).unwrap();
        assert_eq!(report.class, ProfileClass::Admissible);
    }

    #[test]
    fn membership_monotone_in_scale() {
        // The same profile stays admissible when the scale bound grows.
        let valley = ProfileFn::preset("valley", K).unwrap();
        for k_larger in [2.0 * K, 16.0 * K, 0.2] {
            assert_eq!(
                validate_membership(&valley, k_larger, 2000).unwrap().class,
                ProfileClass::Admissible
            );
        }
    }

    #[test]
    fn membership_rejects_bad_scale() {
        let f = ProfileFn::preset("constant", K).unwrap();
        assert!(validate_membership(&f, 0.0, 2000).is_err());
        assert!(validate_membership(&f, 0.3, 2000).is_err());
    }

    #[test]
    fn evaluations_bit_identical_across_parses() {
        let a = ProfileFn::parse_with_k("k*(2+sin(3*x))/2", K).unwrap();
        let b = ProfileFn::parse_with_k("k*(2+sin(3*x))/2", K).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            assert_eq!(a.eval(x).to_bits(), b.eval(x).to_bits());
            assert_eq!(a.eval_d2(x).to_bits(), b.eval_d2(x).to_bits());
        }
    }

    #[test]
    fn default_scale_satisfies_steep_case_inequality() {
        let k = K;
        assert!(2.0 * k * k + 4.0 * k < 2_f64.powi(-12));
        // the next power of two up does not
        let k2 = 2.0 * K;
        assert!(2.0 * k2 * k2 + 4.0 * k2 >= 2_f64.powi(-12));
    }
}
