//! Post-processing of recorded series: power-law decay fits in log-log
//! space, convergence-order estimation, envelope compliance, and
//! trapping-persistence halftimes.

use crate::evolve::Snapshot;
use serde::Serialize;
use thiserror::Error;

/// Values at or below this are treated as numerical floor, not physics, and
/// are dropped before fitting.
pub const SERIES_FLOOR: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("fit window [{t_lo}, {t_hi}] is invalid")]
    BadWindow { t_lo: f64, t_hi: f64 },
    #[error("fit window [{t_lo}, {t_hi}] spans less than one decade")]
    SubDecadeWindow { t_lo: f64, t_hi: f64 },
    #[error("need at least 8 points in the window, found {found}")]
    TooFewPoints { found: usize },
    #[error("series value {value} at t = {t} is not positive")]
    NonPositiveValue { t: f64, value: f64 },
    #[error("convergence errors must be positive, got {value}")]
    NonPositiveError { value: f64 },
    #[error("series is empty")]
    EmptySeries,
    #[error("drop factor must exceed 1, got {factor}")]
    BadDropFactor { factor: f64 },
}

/// Least-squares power law v = amplitude * t^exponent over a time window.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
}

/// Drop floor-level and non-positive samples, clamping nothing: points at or
/// below `SERIES_FLOOR` are round-off, and fits must not see them.
pub fn prepare_decay_series(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    series
        .iter()
        .copied()
        .filter(|&(_, v)| v > SERIES_FLOOR)
        .collect()
}

/// Fit a straight line to (ln t, ln v) over the window; the slope is the
/// decay exponent.
pub fn fit_power_law(
    series: &[(f64, f64)],
    window: (f64, f64),
) -> Result<DecayFit, AnalysisError> {
    let (t_lo, t_hi) = window;
    if !(t_lo > 0.0 && t_lo < t_hi) {
        return Err(AnalysisError::BadWindow { t_lo, t_hi });
    }
    if t_hi / t_lo < 10.0 * (1.0 - 1e-12) {
        return Err(AnalysisError::SubDecadeWindow { t_lo, t_hi });
    }
    let mut pts = Vec::new();
    for &(t, v) in series {
        if t < t_lo || t > t_hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(AnalysisError::NonPositiveValue { t, value: v });
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < 8 {
        return Err(AnalysisError::TooFewPoints { found: pts.len() });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    Ok(DecayFit {
        exponent: slope,
        amplitude: intercept.exp(),
        residual_rms: (ss_res / n).sqrt(),
        window,
    })
}

/// Observed orders from three errors at dx, dx/2, dx/4.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceOrder {
    pub pair_orders: [f64; 2],
    pub headline: f64,
}

pub fn convergence_order(errors: [f64; 3]) -> Result<ConvergenceOrder, AnalysisError> {
    for &e in &errors {
        if !(e > 0.0) {
            return Err(AnalysisError::NonPositiveError { value: e });
        }
    }
    let pair_orders = [
        (errors[0] / errors[1]).log2(),
        (errors[1] / errors[2]).log2(),
    ];
    Ok(ConvergenceOrder {
        pair_orders,
        headline: 0.5 * (pair_orders[0] + pair_orders[1]),
    })
}

/// Worst |field| / envelope over all snapshots and nodes. The envelope
/// closure gets (t, node index) and returns `None` to exclude a node (the
/// trivial cap region); fields below the 1e-14 noise floor are skipped.
pub fn envelope_compliance(
    snapshots: &[Snapshot],
    envelope: impl Fn(f64, usize) -> Option<f64>,
) -> f64 {
    let mut worst = 0.0f64;
    for snap in snapshots {
        for (i, &v) in snap.psi.iter().enumerate() {
            let a = v.abs();
            if a < 1e-14 {
                continue;
            }
            if let Some(env) = envelope(snap.t, i) {
                worst = worst.max(a / env);
            }
        }
    }
    worst
}

/// First time the series drops below its initial value divided by `factor`,
/// by linear interpolation between samples; +infinity when it never does.
pub fn trapping_halftime(series: &[(f64, f64)], factor: f64) -> Result<f64, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    if !(factor > 1.0) {
        return Err(AnalysisError::BadDropFactor { factor });
    }
    let threshold = series[0].1 / factor;
    for w in series.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        if v0 > threshold && v1 <= threshold {
            let frac = (v0 - threshold) / (v0 - v1);
            return Ok(t0 + frac * (t1 - t0));
        }
    }
    if series[0].1 <= threshold {
        return Ok(series[0].0);
    }
    Ok(f64::INFINITY)
}
