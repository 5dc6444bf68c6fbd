//! Box-counting dimension estimates on the singular strip: the collapsed
//! half is one-dimensional, the positive-height half two-dimensional once
//! the boxes resolve the profile height.

use serde::Serialize;

use super::CdError;
use crate::profiles::ProfileFn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Collapsed segment `x in [-1, 0]`, `y = 0`.
    LeftOfZero,
    /// Positive-height part `x in [0, 1]`, `0 <= y <= f(x)`.
    RightOfZero,
    /// `[0, 1]^2` control case with known dimension 2.
    UnitSquare,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCountTrace {
    pub region: Region,
    pub epsilons: Vec<f64>,
    pub counts: Vec<u64>,
    /// Least-squares slope of `log N` against `log(1/eps)`.
    pub slope: f64,
}

/// Count grid-aligned boxes of side `eps` meeting the region, one strip of
/// columns at a time: a strip contributes `floor(h/eps) + 1` boxes for its
/// height maximum `h`.
fn count_boxes(x0: f64, x1: f64, height: &dyn Fn(f64) -> f64, eps: f64) -> u64 {
    let n_strips = ((x1 - x0) / eps - 1e-9).ceil().max(1.0) as u64;
    let mut total = 0u64;
    for s in 0..n_strips {
        let a = x0 + s as f64 * eps;
        let b = (a + eps).min(x1);
        let h = height(a).max(height(0.5 * (a + b))).max(height(b)).max(0.0);
        total += (h / eps * (1.0 + 1e-12)).floor() as u64 + 1;
    }
    total
}

/// Estimate the box dimension of a region over a list of scales. For the
/// split regions the profile must be singular exactly on `[-1, 0]`.
pub fn box_dimension(
    profile: &ProfileFn,
    region: Region,
    eps_list: &[f64],
) -> Result<BoxCountTrace, CdError> {
    if eps_list.len() < 3 {
        return Err(CdError::TooFewScales(eps_list.len()));
    }
    if region != Region::UnitSquare {
        for x in [-0.999, -0.5, -1e-3] {
            if profile.eval(x) != 0.0 {
                return Err(CdError::RegionPrecondition(format!(
                    "profile must vanish on [-1, 0], got f({x}) = {}",
                    profile.eval(x)
                )));
            }
        }
        if profile.eval(0.5) <= 0.0 {
            return Err(CdError::RegionPrecondition(
                "profile must be positive on the right half".into(),
            ));
        }
    }

    let counts: Vec<u64> = eps_list
        .iter()
        .map(|&eps| match region {
            Region::LeftOfZero => count_boxes(-1.0, 0.0, &|_| 0.0, eps),
            Region::RightOfZero => count_boxes(0.0, 1.0, &|x| profile.eval(x), eps),
            Region::UnitSquare => count_boxes(0.0, 1.0, &|_| 1.0, eps),
        })
        .collect();

    // least squares of ln N against ln(1/eps)
    let xs: Vec<f64> = eps_list.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    Ok(BoxCountTrace {
        region,
        epsilons: eps_list.to_vec(),
        counts,
        slope: cov / var,
    })
}

/// Dyadic scales `k / 4 .. k / 64` where the wedge transitions to
/// two-dimensional scaling.
pub fn default_scales(k: f64) -> Vec<f64> {
    (2..=6).map(|j| k * 2f64.powi(-j)).collect()
}
