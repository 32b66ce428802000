//! Manufactured-solution fixture for scheme verification: a travelling sine
//! under a Gaussian envelope, with the forcing that makes it solve
//! -d_t^2 psi + d_x^2 psi - Q psi = H exactly. Evolving with this forcing and
//! comparing against the closed form measures the scheme's convergence order.

use crate::evolve::{evolve, Dynamics, EvolveConfig, EvolveError, SourceField};
use crate::geometry::{build_grid, GeometryError, SchwarzschildParams, TortoiseGrid};
use crate::potential::{PotentialError, PotentialTable};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

/// psi_exact(t, x) = sin(x - t) * exp(-((x - center)/width)^2).
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub center: f64,
    pub width: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self {
            center: 0.0,
            width: 4.0,
        }
    }
}

impl ManufacturedSolution {
    fn envelope(&self, x: f64) -> (f64, f64, f64) {
        let s = (x - self.center) / (self.width * self.width);
        let g = (-(x - self.center) * s).exp();
        let g1 = -2.0 * s * g;
        let g2 = (4.0 * s * s - 2.0 / (self.width * self.width)) * g;
        (g, g1, g2)
    }

    pub fn psi(&self, t: f64, x: f64) -> f64 {
        let (g, _, _) = self.envelope(x);
        (x - t).sin() * g
    }

    pub fn dpsi_dt(&self, t: f64, x: f64) -> f64 {
        let (g, _, _) = self.envelope(x);
        -(x - t).cos() * g
    }

    /// (-d_t^2 + d_x^2) psi_exact = 2 cos(x - t) g'(x) + sin(x - t) g''(x).
    pub fn dalembertian(&self, t: f64, x: f64) -> f64 {
        let (_, g1, g2) = self.envelope(x);
        2.0 * (x - t).cos() * g1 + (x - t).sin() * g2
    }
}

/// Forcing that turns the manufactured field into an exact solution of the
/// potential equation: H = (-d_t^2 + d_x^2) psi_exact - Q psi_exact.
pub struct MmsSource<'a> {
    pub solution: ManufacturedSolution,
    pub q: &'a [f64],
    pub grid: &'a TortoiseGrid,
}

impl SourceField for MmsSource<'_> {
    fn value(&self, t: f64, x: f64) -> f64 {
        let i = self.grid.nearest_index(x);
        self.solution.dalembertian(t, x) - self.q[i] * self.solution.psi(t, x)
    }
}

/// Max-norm error against the manufactured solution at t_final for one
/// resolution. Errors shrink at O(dx^2) for the leapfrog scheme.
pub fn mms_max_error(
    params: &SchwarzschildParams,
    x_min: f64,
    x_max: f64,
    n: usize,
    lambda: f64,
    t_final: f64,
    courant: f64,
    solution: ManufacturedSolution,
) -> Result<f64, MmsError> {
    let grid = build_grid(x_min, x_max, n, params)?;
    let table = PotentialTable::for_mode(lambda, &grid, params)?;
    let source = MmsSource {
        solution,
        q: &table.q,
        grid: &grid,
    };
    let psi0: Vec<f64> = grid.xs.iter().map(|&x| solution.psi(0.0, x)).collect();
    let dpsi0: Vec<f64> = grid.xs.iter().map(|&x| solution.dpsi_dt(0.0, x)).collect();
    let cfg = EvolveConfig {
        t_final,
        courant,
        energy_every: 0,
        snapshot_every: 0,
        ..Default::default()
    };
    let traj = evolve(
        &psi0,
        &dpsi0,
        &Dynamics::Linear { table: &table },
        &source,
        &grid,
        &cfg,
    )?;
    let last = traj.snapshots.last().expect("final snapshot always recorded");
    let mut worst = 0.0f64;
    for (i, &x) in grid.xs.iter().enumerate() {
        worst = worst.max((last.psi[i] - solution.psi(last.t, x)).abs());
    }
    Ok(worst)
}
