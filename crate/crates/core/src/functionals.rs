//! Energy and diagnostic functionals: basic and Morawetz (conformal)
//! energies, the K0 momentum density, windowed local energy, the trapping
//! integral, the Soffer-Morawetz multiplier weight, and the pointwise decay
//! envelopes.
//!
//! Null derivatives are L = d_t + d_x and Lbar = d_t - d_x in the tortoise
//! coordinate x, with the null weights u = t - x and ubar = t + x taken in
//! the unshifted coordinate. Only the trapping diagnostic works in the
//! shifted coordinate y = x - x0(lambda).

use crate::geometry::{radius_and_factor_from_tortoise, SchwarzschildParams, TortoiseGrid};
use crate::potential::PotentialTable;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalsError {
    #[error("multiplier weight needs k > 1, got {k}")]
    BadWeightExponent { k: f64 },
    #[error("window radius must be positive, got {radius}")]
    BadWindowRadius { radius: f64 },
}

/// All functionals measured at one instant.
#[derive(Debug, Clone)]
pub struct EnergyBreakdown {
    pub t: f64,
    pub e_basic: f64,
    pub e_morawetz: f64,
    pub mor_ubar_flux: f64,
    pub mor_u_flux: f64,
    pub mor_potential: f64,
    pub e_local: f64,
    pub trapping_integral: f64,
    pub max_abs_psi: f64,
    /// Worst |psi| / sobolev_envelope over the grid (0 when nothing qualifies).
    pub max_abs_rphi_weighted: f64,
}

/// Morawetz energy with its per-term split.
#[derive(Debug, Clone, Copy)]
pub struct MorawetzEnergy {
    pub total: f64,
    pub ubar_flux: f64,
    pub u_flux: f64,
    pub potential_term: f64,
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        0.5
    } else {
        1.0
    }
}

/// Centred spatial derivative, one-sided at the edges.
fn spatial_derivative(psi: &[f64], dx: f64) -> Vec<f64> {
    let n = psi.len();
    let mut d = vec![0.0; n];
    d[0] = (psi[1] - psi[0]) / dx;
    d[n - 1] = (psi[n - 1] - psi[n - 2]) / dx;
    for i in 1..n - 1 {
        d[i] = (psi[i + 1] - psi[i - 1]) / (2.0 * dx);
    }
    d
}

/// Basic energy: trapezoid of (L psi)^2 + (Lbar psi)^2 + Q psi^2.
pub fn basic_energy(psi: &[f64], dpsi_dt: &[f64], q: &[f64], grid: &TortoiseGrid) -> f64 {
    let dpsi_dx = spatial_derivative(psi, grid.dx);
    let n = grid.n;
    let mut acc = 0.0;
    for i in 0..n {
        let l = dpsi_dt[i] + dpsi_dx[i];
        let lb = dpsi_dt[i] - dpsi_dx[i];
        acc += trapezoid_weight(i, n) * (l * l + lb * lb + q[i] * psi[i] * psi[i]);
    }
    acc * grid.dx
}

/// Morawetz energy: trapezoid of
/// (1 + ubar^2)(L psi)^2 + (1 + u^2)(Lbar psi)^2 + (1 + ubar^2 + u^2) Q psi^2.
pub fn morawetz_energy(
    psi: &[f64],
    dpsi_dt: &[f64],
    q: &[f64],
    grid: &TortoiseGrid,
    t: f64,
) -> MorawetzEnergy {
    let dpsi_dx = spatial_derivative(psi, grid.dx);
    let n = grid.n;
    let (mut ubar_flux, mut u_flux, mut potential_term) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let x = grid.xs[i];
        let ubar = t + x;
        let u = t - x;
        let l = dpsi_dt[i] + dpsi_dx[i];
        let lb = dpsi_dt[i] - dpsi_dx[i];
        let w = trapezoid_weight(i, n);
        ubar_flux += w * (1.0 + ubar * ubar) * l * l;
        u_flux += w * (1.0 + u * u) * lb * lb;
        potential_term += w * (1.0 + ubar * ubar + u * u) * q[i] * psi[i] * psi[i];
    }
    ubar_flux *= grid.dx;
    u_flux *= grid.dx;
    potential_term *= grid.dx;
    MorawetzEnergy {
        total: ubar_flux + u_flux + potential_term,
        ubar_flux,
        u_flux,
        potential_term,
    }
}

/// Conformal momentum density at the node nearest x:
/// 1/4 ubar^2 (L psi)^2 + 1/4 u^2 (Lbar psi)^2 + 1/4 (ubar^2 + u^2) Q psi^2.
pub fn k0_density(
    psi: &[f64],
    dpsi_dt: &[f64],
    q: &[f64],
    grid: &TortoiseGrid,
    x: f64,
    t: f64,
) -> f64 {
    let i = grid.nearest_index(x);
    let n = grid.n;
    let dpsi_dx = if i == 0 {
        (psi[1] - psi[0]) / grid.dx
    } else if i == n - 1 {
        (psi[n - 1] - psi[n - 2]) / grid.dx
    } else {
        (psi[i + 1] - psi[i - 1]) / (2.0 * grid.dx)
    };
    let xi = grid.xs[i];
    let ubar = t + xi;
    let u = t - xi;
    let l = dpsi_dt[i] + dpsi_dx;
    let lb = dpsi_dt[i] - dpsi_dx;
    0.25 * (ubar * ubar * l * l + u * u * lb * lb + (ubar * ubar + u * u) * q[i] * psi[i] * psi[i])
}

/// Basic-energy integrand restricted to |x - r*(3M)| <= radius (clipped to
/// the grid).
pub fn local_energy(
    psi: &[f64],
    dpsi_dt: &[f64],
    q: &[f64],
    grid: &TortoiseGrid,
    radius: f64,
) -> Result<f64, FunctionalsError> {
    if !(radius > 0.0) {
        return Err(FunctionalsError::BadWindowRadius { radius });
    }
    let center = grid.params().photon_sphere_tortoise();
    let dpsi_dx = spatial_derivative(psi, grid.dx);
    let n = grid.n;
    let mut acc = 0.0;
    for i in 0..n {
        if (grid.xs[i] - center).abs() > radius {
            continue;
        }
        let l = dpsi_dt[i] + dpsi_dx[i];
        let lb = dpsi_dt[i] - dpsi_dx[i];
        acc += trapezoid_weight(i, n) * (l * l + lb * lb + q[i] * psi[i] * psi[i]);
    }
    Ok(acc * grid.dx)
}

/// Trapping integral in the shifted coordinate y = x - x0(lambda):
/// trapezoid of [y dQ/dy + 2Q] psi^2. Sign-indefinite by design.
pub fn trapping_integral(psi: &[f64], table: &PotentialTable, grid: &TortoiseGrid) -> f64 {
    let n = grid.n;
    let mut acc = 0.0;
    for i in 0..n {
        let y = grid.xs[i] - table.x0;
        let term = y * table.dq[i] + 2.0 * table.q[i];
        acc += trapezoid_weight(i, n) * term * psi[i] * psi[i];
    }
    acc * grid.dx
}

/// Soffer-Morawetz multiplier weight, in closed form:
/// phi(x) = int_0^x (1 + |y|)^{-k} dy = sgn(x)(1 - (1 + |x|)^{1-k})/(k - 1).
/// Odd, bounded by 1/(k - 1).
pub fn multiplier_weight(x: f64, k: f64) -> Result<f64, FunctionalsError> {
    if !(k > 1.0) {
        return Err(FunctionalsError::BadWeightExponent { k });
    }
    Ok(x.signum() * (1.0 - (1.0 + x.abs()).powf(1.0 - k)) / (k - 1.0))
}

fn envelope_from_parts(t: f64, x: f64, r: f64, f: f64) -> f64 {
    let gap = (t - x.abs()).abs();
    // Singular branches act as +infinity on the light cone t = |x|.
    let refined = r.sqrt() * f.powf(-0.25) / gap;
    let flat = 1.0 / gap.sqrt();
    1.0f64.min(refined).min(flat)
}

/// Global Sobolev decay envelope for |r phi|:
/// min{ 1, r^{1/2}(1 - 2M/r)^{-1/4} |t - |x||^{-1}, |t - |x||^{-1/2} }.
pub fn sobolev_envelope(t: f64, x: f64, params: &SchwarzschildParams) -> f64 {
    let (r, f) = radius_and_factor_from_tortoise(x, params)
        .expect("envelope evaluated at finite tortoise coordinate");
    envelope_from_parts(t, x, r, f)
}

/// Pointwise decay target for |phi| at amplitude epsilon:
/// epsilon min{1, |t - |x||^{-1/2}} / r.
pub fn pointwise_target(t: f64, x: f64, params: &SchwarzschildParams, epsilon: f64) -> f64 {
    let (r, _) = radius_and_factor_from_tortoise(x, params)
        .expect("target evaluated at finite tortoise coordinate");
    epsilon * 1.0f64.min(1.0 / (t - x.abs()).abs().sqrt()) / r
}

/// Worst |psi(t, x)| / sobolev_envelope(t, x) over the grid, skipping nodes
/// where the envelope sits at its trivial cap of 1 and nodes where the field
/// is below the 1e-14 noise floor. Returns 0 when no node qualifies.
pub fn envelope_ratio_max(psi: &[f64], grid: &TortoiseGrid, t: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..grid.n {
        let a = psi[i].abs();
        if a < 1e-14 {
            continue;
        }
        let env = envelope_from_parts(t, grid.xs[i], grid.r_of_x[i], grid.f_of_x[i]);
        if env >= 1.0 {
            continue;
        }
        worst = worst.max(a / env);
    }
    worst
}

/// Ratio of int psi^2 dx to the weighted Poincare right-hand side
/// int ubar^2 (L psi)^2 + u^2 (Lbar psi)^2 + (1 + ubar^2 + u^2) f psi^2 / r^3 dx.
/// The lemma promises a single constant bounding this across all states.
pub fn poincare_ratio(psi: &[f64], dpsi_dt: &[f64], grid: &TortoiseGrid, t: f64) -> f64 {
    let dpsi_dx = spatial_derivative(psi, grid.dx);
    let n = grid.n;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        let w = trapezoid_weight(i, n);
        let x = grid.xs[i];
        let ubar = t + x;
        let u = t - x;
        let l = dpsi_dt[i] + dpsi_dx[i];
        let lb = dpsi_dt[i] - dpsi_dx[i];
        let r = grid.r_of_x[i];
        lhs += w * psi[i] * psi[i];
        rhs += w
            * (ubar * ubar * l * l
                + u * u * lb * lb
                + (1.0 + ubar * ubar + u * u) * grid.f_of_x[i] * psi[i] * psi[i] / (r * r * r));
    }
    if rhs == 0.0 {
        return 0.0;
    }
    lhs / rhs
}

/// The leapfrog-compatible discrete energy, staggered between the two stored
/// levels:
///
/// ```text
/// E = dx/2 sum_i ((curr - prev)/dt)^2
///   + dx/2 sum_cells D+curr D+prev
///   + dx/2 sum_i q curr prev
/// ```
///
/// Exactly conserved by the interior stencil while the field stays clear of
/// the boundaries, which makes it the conservation oracle for the scheme.
pub fn discrete_energy(prev: &[f64], curr: &[f64], q: &[f64], dt: f64, dx: f64) -> f64 {
    let n = curr.len();
    let mut kinetic = 0.0;
    let mut flux = 0.0;
    let mut potential = 0.0;
    for i in 0..n {
        let v = (curr[i] - prev[i]) / dt;
        kinetic += v * v;
        potential += q[i] * curr[i] * prev[i];
        if i + 1 < n {
            flux += (curr[i + 1] - curr[i]) * (prev[i + 1] - prev[i]) / (dx * dx);
        }
    }
    0.5 * dx * (kinetic + flux + potential)
}

/// Evaluate the full breakdown at one instant; the evolution driver calls
/// this at every recording stride.
pub fn measure_breakdown(
    psi: &[f64],
    dpsi_dt: &[f64],
    table: &PotentialTable,
    grid: &TortoiseGrid,
    t: f64,
    local_window_radius: f64,
) -> EnergyBreakdown {
    measure_breakdown_weighted(psi, dpsi_dt, table, &table.q, grid, t, local_window_radius)
}

/// Same breakdown with the energy functionals taken against an explicit
/// potential weight (e.g. the solid-angle assembly weight) while the
/// trapping diagnostic keeps the mode's own table.
pub fn measure_breakdown_weighted(
    psi: &[f64],
    dpsi_dt: &[f64],
    table: &PotentialTable,
    energy_weight: &[f64],
    grid: &TortoiseGrid,
    t: f64,
    local_window_radius: f64,
) -> EnergyBreakdown {
    let mor = morawetz_energy(psi, dpsi_dt, energy_weight, grid, t);
    EnergyBreakdown {
        t,
        e_basic: basic_energy(psi, dpsi_dt, energy_weight, grid),
        e_morawetz: mor.total,
        mor_ubar_flux: mor.ubar_flux,
        mor_u_flux: mor.u_flux,
        mor_potential: mor.potential_term,
        e_local: local_energy(psi, dpsi_dt, energy_weight, grid, local_window_radius)
            .expect("driver passes a positive window radius"),
        trapping_integral: trapping_integral(psi, table, grid),
        max_abs_psi: psi.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        max_abs_rphi_weighted: envelope_ratio_max(psi, grid, t),
    }
}

/// Potential weight f (lambda^2/r^2 + M/r^3) used when assembling per-mode
/// energies into the full solid-angle report (the angular-gradient plus
/// curvature weight, which carries M rather than 2M on the 1/r^3 term).
pub fn assembly_potential_weight(
    lambda: f64,
    grid: &TortoiseGrid,
    params: &SchwarzschildParams,
) -> Vec<f64> {
    let m = params.mass();
    let l2 = lambda * lambda;
    (0..grid.n)
        .map(|i| {
            let r = grid.r_of_x[i];
            grid.f_of_x[i] * (l2 / (r * r) + m / (r * r * r))
        })
        .collect()
}
