//! Schwarzschild exterior coordinates: the tortoise map r <-> r*, the metric
//! factor f = 1 - 2M/r, and uniform tortoise-coordinate grids.
//!
//! Geometric units G = c = 1 throughout; all lengths scale with the mass M.
//! The horizon r = 2M sits at r* = -infinity, so near-horizon quantities are
//! carried through the metric factor f (which underflows gracefully) rather
//! than through the difference r - 2M.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("mass must be positive, got {mass}")]
    NonPositiveMass { mass: f64 },
    #[error("radius {r} is at or inside the horizon 2M = {horizon}")]
    InsideHorizon { r: f64, horizon: f64 },
    #[error("tortoise coordinate must be finite, got {x}")]
    NonFiniteTortoise { x: f64 },
    #[error("tortoise inversion did not converge for x = {x}")]
    NoConvergence { x: f64 },
    #[error("invalid grid bounds: x_min = {x_min} must be below x_max = {x_max}")]
    InvalidBounds { x_min: f64, x_max: f64 },
    #[error("grid needs at least 3 nodes, got {n}")]
    TooFewNodes { n: usize },
}

/// Black-hole mass in geometric units; seeds every formula in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzschildParams {
    mass: f64,
}

impl SchwarzschildParams {
    pub fn new(mass: f64) -> Result<Self, GeometryError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(GeometryError::NonPositiveMass { mass });
        }
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Horizon radius 2M.
    pub fn horizon_radius(&self) -> f64 {
        2.0 * self.mass
    }

    /// Photon-sphere radius 3M, the limit of the critical-point curve.
    pub fn photon_sphere_radius(&self) -> f64 {
        3.0 * self.mass
    }

    /// Tortoise coordinate of the photon sphere, r*(3M) = 3M + 2M ln M.
    pub fn photon_sphere_tortoise(&self) -> f64 {
        tortoise_from_radius(self.photon_sphere_radius(), self)
            .expect("3M is outside the horizon")
    }
}

/// r* = r + 2M ln(r - 2M). Strictly increasing, -infinity at the horizon.
pub fn tortoise_from_radius(r: f64, params: &SchwarzschildParams) -> Result<f64, GeometryError> {
    let horizon = params.horizon_radius();
    if !(r > horizon) {
        return Err(GeometryError::InsideHorizon { r, horizon });
    }
    Ok(r + horizon * (r - horizon).ln())
}

/// Areal radius and metric factor at a tortoise coordinate, computed together.
///
/// For x <= 4M the Newton iteration runs in the horizon gap d = r - 2M, so the
/// metric factor f = d / (2M + d) keeps full relative precision even where
/// r - 2M is far below the floating-point granularity of r itself. For larger
/// x the iteration runs directly in r. Both branches fall back to bisection on
/// a bracketing interval whenever a Newton step leaves it, so convergence is
/// guaranteed for every finite x.
pub fn radius_and_factor_from_tortoise(
    x: f64,
    params: &SchwarzschildParams,
) -> Result<(f64, f64), GeometryError> {
    if !x.is_finite() {
        return Err(GeometryError::NonFiniteTortoise { x });
    }
    let m2 = params.horizon_radius();

    if x <= 2.0 * m2 {
        // Horizon branch: solve d + 2M ln d = x - 2M for the gap d = r - 2M.
        let target = x - m2;
        let mut d = (target / m2).exp();
        if d == 0.0 {
            // Gap below the subnormal range; f underflows to zero with it.
            return Ok((m2, 0.0));
        }
        // h(d) = d + 2M ln d - target is concave and increasing, and the seed
        // sits at h = d > 0, so plain Newton converges monotonically.
        let mut converged = false;
        for _ in 0..64 {
            let h = d + m2 * d.ln() - target;
            let step = h * d / (d + m2);
            d -= step;
            if step.abs() <= 1e-16 * d.abs() || h.abs() <= 1e-14 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GeometryError::NoConvergence { x });
        }
        return Ok((m2 + d, d / (m2 + d)));
    }

    // Outer branch: safeguarded Newton on g(r) = r + 2M ln(r - 2M) - x.
    let mut lo = m2 * (1.0 + 1e-15);
    let mut hi = x + m2 + 1.0;
    let mut r = (x + m2 - m2 * x.max(1.0).ln()).clamp(lo, hi);
    let mut converged = false;
    for _ in 0..64 {
        let g = r + m2 * (r - m2).ln() - x;
        if g.abs() <= 1e-14 * x.abs().max(1.0) {
            converged = true;
            break;
        }
        if g > 0.0 {
            hi = hi.min(r);
        } else {
            lo = lo.max(r);
        }
        // g'(r) = r / (r - 2M)
        let next = r - g * (r - m2) / r;
        r = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    if !converged {
        return Err(GeometryError::NoConvergence { x });
    }
    Ok((r, (r - m2) / r))
}

/// Numerical inverse of the tortoise map; unique r > 2M with r*(r) = x.
pub fn radius_from_tortoise(x: f64, params: &SchwarzschildParams) -> Result<f64, GeometryError> {
    radius_and_factor_from_tortoise(x, params).map(|(r, _)| r)
}

/// Uniform grid in the tortoise coordinate with precomputed r(x) and f(x).
///
/// Immutable after construction; shared read-only across mode evolutions.
#[derive(Debug, Clone)]
pub struct TortoiseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
    pub xs: Vec<f64>,
    pub r_of_x: Vec<f64>,
    pub f_of_x: Vec<f64>,
    mass: f64,
}

impl TortoiseGrid {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn params(&self) -> SchwarzschildParams {
        SchwarzschildParams::new(self.mass).expect("grid mass validated at construction")
    }

    /// Index of the node closest to the tortoise coordinate x.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        (i.max(0.0) as usize).min(self.n - 1)
    }
}

/// Build a uniform tortoise grid on [x_min, x_max] with n nodes.
pub fn build_grid(
    x_min: f64,
    x_max: f64,
    n: usize,
    params: &SchwarzschildParams,
) -> Result<TortoiseGrid, GeometryError> {
    if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(GeometryError::InvalidBounds { x_min, x_max });
    }
    if n < 3 {
        return Err(GeometryError::TooFewNodes { n });
    }
    let dx = (x_max - x_min) / (n - 1) as f64;
    let mut xs = Vec::with_capacity(n);
    let mut r_of_x = Vec::with_capacity(n);
    let mut f_of_x = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == n - 1 {
            x_max
        } else {
            x_min + i as f64 * dx
        };
        let (r, f) = radius_and_factor_from_tortoise(x, params)?;
        xs.push(x);
        r_of_x.push(r);
        f_of_x.push(f);
    }
    Ok(TortoiseGrid {
        x_min,
        x_max,
        n,
        dx,
        xs,
        r_of_x,
        f_of_x,
        mass: params.mass(),
    })
}
