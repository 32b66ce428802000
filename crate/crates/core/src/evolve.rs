//! Time evolution: explicit three-level leapfrog for the per-mode linear 1+1
//! wave equation with potential, the spherically symmetric semilinear
//! equation, first-order Sommerfeld outgoing boundaries, and the run driver
//! that records energy diagnostics and snapshots.
//!
//! The update for -d_t^2 psi + d_x^2 psi - Q psi = H is
//!
//! ```text
//! psi[n+1][i] = 2 psi[n][i] - psi[n-1][i]
//!             + dt^2 ( (psi[n][i+1] - 2 psi[n][i] + psi[n][i-1]) / dx^2
//!                      - Q[i] psi[n][i] - H[n][i] )
//! ```
//!
//! with the potential and any source evaluated at the current level. At unit
//! Courant number the free stencil translates data exactly; the default 0.9
//! leaves headroom for the potential term.

use crate::functionals::{self, EnergyBreakdown};
use crate::geometry::TortoiseGrid;
use crate::potential::PotentialTable;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("timestep dt = {dt} violates the Courant bound dx = {dx}")]
    CourantViolation { dt: f64, dx: f64 },
    #[error("field is not finite at step {step}, node {node}")]
    NonFinite { step: usize, node: usize },
    #[error("initial profile has {got} samples, grid has {expected} nodes")]
    BadProfileLength { got: usize, expected: usize },
    #[error("initial profile contains a non-finite value at node {node}")]
    NonFiniteProfile { node: usize },
    #[error("potential table has {got} samples, grid has {expected} nodes")]
    BadPotentialLength { got: usize, expected: usize },
    #[error("semilinear power must exceed 2, got {p}")]
    BadPower { p: f64 },
    #[error("courant number must lie in (0, 1], got {courant}")]
    BadCourant { courant: f64 },
    #[error("final time must be nonnegative, got {t_final}")]
    BadFinalTime { t_final: f64 },
}

/// Two time levels of the discrete field plus the current time.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub dt: f64,
    pub psi_prev: Vec<f64>,
    pub psi_curr: Vec<f64>,
}

/// Space-time source profile H(t, x) for the linear equation.
pub trait SourceField {
    fn value(&self, t: f64, x: f64) -> f64;
}

/// No forcing; the homogeneous equation.
pub struct NoSource;

impl SourceField for NoSource {
    fn value(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
}

impl<F: Fn(f64, f64) -> f64> SourceField for F {
    fn value(&self, t: f64, x: f64) -> f64 {
        self(t, x)
    }
}

/// Separable Gaussian pulse A exp(-(x-x0)^2/wx^2) exp(-(t-t0)^2/wt^2).
#[derive(Debug, Clone)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub center_x: f64,
    pub width_x: f64,
    pub center_t: f64,
    pub width_t: f64,
}

impl SourceField for GaussianPulse {
    fn value(&self, t: f64, x: f64) -> f64 {
        let sx = (x - self.center_x) / self.width_x;
        let st = (t - self.center_t) / self.width_t;
        self.amplitude * (-sx * sx).exp() * (-st * st).exp()
    }
}

/// Tabulated H(t, x) with bilinear interpolation, zero outside the table.
#[derive(Debug, Clone)]
pub struct TableSource {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Row-major over t: values[it * x.len() + ix].
    pub values: Vec<f64>,
}

impl SourceField for TableSource {
    fn value(&self, t: f64, x: f64) -> f64 {
        let (nt, nx) = (self.t.len(), self.x.len());
        if nt < 2 || nx < 2 {
            return 0.0;
        }
        if t < self.t[0] || t > self.t[nt - 1] || x < self.x[0] || x > self.x[nx - 1] {
            return 0.0;
        }
        let it = match self.t.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(nt - 2),
        };
        let ix = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            k => (k - 1).min(nx - 2),
        };
        let ft = (t - self.t[it]) / (self.t[it + 1] - self.t[it]);
        let fx = (x - self.x[ix]) / (self.x[ix + 1] - self.x[ix]);
        let v00 = self.values[it * nx + ix];
        let v01 = self.values[it * nx + ix + 1];
        let v10 = self.values[(it + 1) * nx + ix];
        let v11 = self.values[(it + 1) * nx + ix + 1];
        (1.0 - ft) * ((1.0 - fx) * v00 + fx * v01) + ft * ((1.0 - fx) * v10 + fx * v11)
    }
}

/// Semilinear coupling: source f kappa |psi|^p psi / r^p on the l = 0 mode.
///
/// `kappa` is the nonlinearity coefficient (the coupling constant in front of
/// |phi|^p phi); positive kappa is defocusing here, negative focusing.
#[derive(Debug, Clone, Copy)]
pub struct SemilinearSpec {
    pub p: f64,
    pub kappa: f64,
}

impl SemilinearSpec {
    pub fn new(p: f64, kappa: f64) -> Result<Self, EvolveError> {
        if !(p > 2.0) {
            return Err(EvolveError::BadPower { p });
        }
        Ok(Self { p, kappa })
    }
}

fn check_profiles(
    psi0: &[f64],
    dpsi0: &[f64],
    table: &PotentialTable,
    grid: &TortoiseGrid,
) -> Result<(), EvolveError> {
    for arr in [psi0, dpsi0] {
        if arr.len() != grid.n {
            return Err(EvolveError::BadProfileLength {
                got: arr.len(),
                expected: grid.n,
            });
        }
        if let Some(node) = arr.iter().position(|v| !v.is_finite()) {
            return Err(EvolveError::NonFiniteProfile { node });
        }
    }
    if table.q.len() != grid.n {
        return Err(EvolveError::BadPotentialLength {
            got: table.q.len(),
            expected: grid.n,
        });
    }
    Ok(())
}

/// Second-order Taylor bootstrap: given psi(0) and d_t psi(0), fill the
/// fictitious earlier level
///
/// psi_prev = psi - dt d_t psi + dt^2/2 (D2 psi - Q psi - H(0)),
///
/// which starts the three-level scheme with O(dt^3) local error. Edge nodes
/// use the first-order start; they are overwritten by the boundary condition
/// on the first step anyway.
pub fn initialize_state(
    psi0: &[f64],
    dpsi0: &[f64],
    grid: &TortoiseGrid,
    table: &PotentialTable,
    source: &impl SourceField,
    dt: f64,
) -> Result<WaveState, EvolveError> {
    check_profiles(psi0, dpsi0, table, grid)?;
    if !(dt > 0.0) || dt > grid.dx {
        return Err(EvolveError::CourantViolation { dt, dx: grid.dx });
    }
    let n = grid.n;
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let mut psi_prev = vec![0.0; n];
    for i in 0..n {
        psi_prev[i] = psi0[i] - dt * dpsi0[i];
        if i > 0 && i + 1 < n {
            let lap = (psi0[i + 1] - 2.0 * psi0[i] + psi0[i - 1]) * inv_dx2;
            let accel = lap - table.q[i] * psi0[i] - source.value(0.0, grid.xs[i]);
            psi_prev[i] += 0.5 * dt * dt * accel;
        }
    }
    Ok(WaveState {
        t: 0.0,
        dt,
        psi_prev,
        psi_curr: psi0.to_vec(),
    })
}

/// Overwrite the boundary rows of the next level with first-order Sommerfeld
/// outgoing conditions: d_t psi = d_x psi on the left (left-mover exits),
/// d_t psi = -d_x psi on the right.
pub fn apply_boundary(next: &mut [f64], curr: &[f64], dt: f64, dx: f64) {
    let n = curr.len();
    let c = dt / dx;
    next[0] = curr[0] + c * (curr[1] - curr[0]);
    next[n - 1] = curr[n - 1] - c * (curr[n - 1] - curr[n - 2]);
}

/// One leapfrog update into a fresh level. The per-node source closure
/// receives the node index and the current field value there.
fn advance(
    prev: &[f64],
    curr: &[f64],
    q: &[f64],
    dt: f64,
    dx: f64,
    source_at: impl Fn(usize, f64) -> f64,
) -> Vec<f64> {
    let n = curr.len();
    let dt2 = dt * dt;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut next = vec![0.0; n];
    for i in 1..n - 1 {
        let lap = (curr[i + 1] - 2.0 * curr[i] + curr[i - 1]) * inv_dx2;
        next[i] = 2.0 * curr[i] - prev[i] + dt2 * (lap - q[i] * curr[i] - source_at(i, curr[i]));
    }
    apply_boundary(&mut next, curr, dt, dx);
    next
}

fn rotate(state: &mut WaveState, next: Vec<f64>) {
    state.psi_prev = std::mem::replace(&mut state.psi_curr, next);
    state.t += state.dt;
}

/// Advance the linear per-mode equation by one step.
pub fn step_linear(
    state: &mut WaveState,
    table: &PotentialTable,
    source: &impl SourceField,
    grid: &TortoiseGrid,
) -> Result<(), EvolveError> {
    let t = state.t;
    let next = advance(
        &state.psi_prev,
        &state.psi_curr,
        &table.q,
        state.dt,
        grid.dx,
        |i, _| source.value(t, grid.xs[i]),
    );
    rotate(state, next);
    Ok(())
}

/// Advance the spherically symmetric semilinear equation by one step: the
/// same stencil with H = f kappa |psi|^p psi / r^p at the current level.
/// With kappa = 0 the source closure returns the literal zero the linear
/// path uses, so the two agree bit for bit.
pub fn step_semilinear(
    state: &mut WaveState,
    q0: &PotentialTable,
    spec: &SemilinearSpec,
    grid: &TortoiseGrid,
) -> Result<(), EvolveError> {
    let kappa = spec.kappa;
    let p = spec.p;
    let next = advance(
        &state.psi_prev,
        &state.psi_curr,
        &q0.q,
        state.dt,
        grid.dx,
        |i, psi| {
            if kappa == 0.0 {
                0.0
            } else {
                kappa * grid.f_of_x[i] * psi.abs().powf(p) * psi / grid.r_of_x[i].powf(p)
            }
        },
    );
    rotate(state, next);
    Ok(())
}

/// What to evolve: a linear mode with its potential, or the semilinear l = 0
/// problem on top of the lambda = 0 potential.
pub enum Dynamics<'a> {
    Linear {
        table: &'a PotentialTable,
    },
    Semilinear {
        q0: &'a PotentialTable,
        spec: SemilinearSpec,
    },
}

impl Dynamics<'_> {
    fn table(&self) -> &PotentialTable {
        match self {
            Dynamics::Linear { table } => table,
            Dynamics::Semilinear { q0, .. } => q0,
        }
    }
}

/// Driver knobs. `energy_every` / `snapshot_every` are step strides; zero
/// disables the corresponding record (the initial state is always measured).
#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub courant: f64,
    pub energy_every: usize,
    pub snapshot_every: usize,
    /// Blow-up ceiling on |psi|; crossing it ends the run with a report.
    pub blowup_ceiling: Option<f64>,
    /// Half-width of the local-energy window around r*(3M).
    pub local_window_radius: f64,
    /// Optional second potential weight; when set, a parallel energy series
    /// is recorded with it (the solid-angle assembly convention).
    pub assembly_weight: Option<Vec<f64>>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_final: 100.0,
            courant: 0.9,
            energy_every: 10,
            snapshot_every: 0,
            blowup_ceiling: None,
            local_window_radius: 20.0,
            assembly_weight: None,
        }
    }
}

/// Field snapshot at one recorded instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub psi: Vec<f64>,
    pub dpsi_dt: Vec<f64>,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    /// Reached t_final with finite fields.
    Global,
    /// |psi| crossed the configured ceiling; a legitimate scientific outcome.
    BlowUp { t: f64, step: usize },
}

/// Recorded output of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub status: RunStatus,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub energies: Vec<EnergyBreakdown>,
    /// Parallel series under `EvolveConfig::assembly_weight`, when set.
    pub assembly_energies: Vec<EnergyBreakdown>,
}

/// Run an evolution to t_final with dt = courant * dx, recording energy
/// functionals and snapshots on the configured strides.
///
/// Time derivatives at a recorded instant are centred over the stored levels,
/// so the measurement at step n peeks at the provisional level n + 1 before
/// committing it. Deterministic for a fixed configuration.
pub fn evolve(
    psi0: &[f64],
    dpsi0: &[f64],
    dynamics: &Dynamics,
    source: &impl SourceField,
    grid: &TortoiseGrid,
    cfg: &EvolveConfig,
) -> Result<Trajectory, EvolveError> {
    if !(cfg.courant > 0.0 && cfg.courant <= 1.0) {
        return Err(EvolveError::BadCourant {
            courant: cfg.courant,
        });
    }
    if !(cfg.t_final >= 0.0) {
        return Err(EvolveError::BadFinalTime {
            t_final: cfg.t_final,
        });
    }
    let dt = cfg.courant * grid.dx;
    let mut state = initialize_state(psi0, dpsi0, grid, dynamics.table(), source, dt)?;
    let n_steps = ((cfg.t_final / dt) - 1e-9).ceil().max(0.0) as usize;

    let mut traj = Trajectory {
        status: RunStatus::Global,
        dt,
        snapshots: Vec::new(),
        energies: Vec::new(),
        assembly_energies: Vec::new(),
    };

    let next_level = |state: &WaveState| -> Vec<f64> {
        let t = state.t;
        match dynamics {
            Dynamics::Linear { table } => advance(
                &state.psi_prev,
                &state.psi_curr,
                &table.q,
                state.dt,
                grid.dx,
                |i, _| source.value(t, grid.xs[i]),
            ),
            Dynamics::Semilinear { q0, spec } => advance(
                &state.psi_prev,
                &state.psi_curr,
                &q0.q,
                state.dt,
                grid.dx,
                |i, psi| {
                    if spec.kappa == 0.0 {
                        0.0
                    } else {
                        spec.kappa * grid.f_of_x[i] * psi.abs().powf(spec.p) * psi
                            / grid.r_of_x[i].powf(spec.p)
                    }
                },
            ),
        }
    };

    let mut step = 0usize;
    loop {
        let next = next_level(&state);

        // Finiteness and ceiling scan on the committed level.
        let mut max_abs = 0.0f64;
        for (node, &v) in state.psi_curr.iter().enumerate() {
            if !v.is_finite() {
                return Err(EvolveError::NonFinite { step, node });
            }
            max_abs = max_abs.max(v.abs());
        }

        let record_energy = cfg.energy_every != 0 && step % cfg.energy_every == 0;
        let record_snapshot = cfg.snapshot_every != 0 && step % cfg.snapshot_every == 0;
        let last = step == n_steps;
        if record_energy || record_snapshot || last || step == 0 {
            let dpsi_dt: Vec<f64> = next
                .iter()
                .zip(&state.psi_prev)
                .map(|(&a, &b)| (a - b) / (2.0 * dt))
                .collect();
            if record_energy || last || step == 0 {
                traj.energies.push(functionals::measure_breakdown(
                    &state.psi_curr,
                    &dpsi_dt,
                    dynamics.table(),
                    grid,
                    state.t,
                    cfg.local_window_radius,
                ));
                if let Some(weight) = &cfg.assembly_weight {
                    traj.assembly_energies.push(functionals::measure_breakdown_weighted(
                        &state.psi_curr,
                        &dpsi_dt,
                        dynamics.table(),
                        weight,
                        grid,
                        state.t,
                        cfg.local_window_radius,
                    ));
                }
            }
            if record_snapshot || last || step == 0 {
                traj.snapshots.push(Snapshot {
                    t: state.t,
                    psi: state.psi_curr.clone(),
                    dpsi_dt,
                });
            }
        }

        if let Some(ceiling) = cfg.blowup_ceiling {
            if max_abs > ceiling {
                traj.status = RunStatus::BlowUp { t: state.t, step };
                break;
            }
        }
        if last {
            break;
        }
        rotate(&mut state, next);
        step += 1;
    }

    Ok(traj)
}
