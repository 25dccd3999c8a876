//! Log-log least squares and the discretization floor rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_c: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

impl PowerLawFit {
    pub fn constant(&self) -> f64 {
        self.log_c.exp()
    }

    pub fn predict(&self, x: f64) -> f64 {
        (self.log_c + self.exponent * x.ln()).exp()
    }
}

/// Fit `d = C δ^ν` by least squares on `(log δ, log d)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositiveData);
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all abscissae coincide".into()));
    }
    let exponent = sxy / sxx;
    let log_c = my - exponent * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - log_c - exponent * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(PowerLawFit {
        exponent,
        log_c,
        r_squared,
        points_used: points.len(),
    })
}

pub const FLOOR_FACTOR: f64 = 10.0;

/// Smallest discrepancy resolvable in double precision for an `n × n`
/// operator of norm `norm`.
pub fn roundoff_floor(n: usize, norm: f64) -> f64 {
    n as f64 * f64::EPSILON * norm
}

/// Keep `(δ, signal)` for rows whose signal reaches `FLOOR_FACTOR` times their
/// grid-doubling error.
pub fn apply_floor(rows: &[(f64, f64, f64)]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|(_, s, e)| *s >= FLOOR_FACTOR * e && *s > 0.0)
        .map(|&(d, s, _)| (d, s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `Ĉ = d(δ_max) / δ_max^ν`
    pub c_hat: f64,
    /// `max_δ d(δ) / (Ĉ δ^ν)`
    pub worst_ratio: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `d(δ) ≤ slack · Ĉ δ^ν` with `Ĉ` fitted at the largest `δ`.
pub fn bound_check(points: &[(f64, f64)], exponent: f64, slack: f64) -> Result<BoundCheck> {
    let &(dmax, ymax) = points
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::TooFewPoints(0))?;
    let c_hat = ymax / dmax.powf(exponent);
    let worst_ratio = points
        .iter()
        .map(|&(d, y)| y / (c_hat * d.powf(exponent)))
        .fold(0.0, f64::max);
    Ok(BoundCheck {
        c_hat,
        worst_ratio,
        slack,
        holds: worst_ratio <= slack,
    })
}
