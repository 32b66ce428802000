//! Deterministic file output: 15-significant-digit decimal formatting,
//! energy/snapshot CSV writers, and JSON reports. Identical configurations
//! must produce byte-identical files.

use rwlab_core::evolve::{Snapshot, Trajectory};
use rwlab_core::functionals::EnergyBreakdown;
use rwlab_core::geometry::TortoiseGrid;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Shortest plain-decimal form with 15 significant digits; e-notation only
/// far outside the tabulated range.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let mut s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        format!("{v:.14e}")
    }
}

pub const ENERGY_HEADER: &str = "t,e_basic,e_morawetz,mor_ubar_flux,mor_u_flux,mor_potential,\
e_local,trapping_integral,max_abs_psi,envelope_ratio";

pub fn energy_row(e: &EnergyBreakdown) -> String {
    let mut row = String::new();
    for (k, v) in [
        e.t,
        e.e_basic,
        e.e_morawetz,
        e.mor_ubar_flux,
        e.mor_u_flux,
        e.mor_potential,
        e.e_local,
        e.trapping_integral,
        e.max_abs_psi,
        e.max_abs_rphi_weighted,
    ]
    .iter()
    .enumerate()
    {
        if k > 0 {
            row.push(',');
        }
        row.push_str(&fmt_sig(*v));
    }
    row
}

pub fn write_energy_csv(path: &Path, series: &[EnergyBreakdown]) -> io::Result<()> {
    let mut text = String::with_capacity(series.len() * 120 + 128);
    text.push_str(ENERGY_HEADER);
    text.push('\n');
    for e in series {
        text.push_str(&energy_row(e));
        text.push('\n');
    }
    fs::write(path, text)
}

pub fn write_snapshot_csv(path: &Path, snap: &Snapshot, grid: &TortoiseGrid) -> io::Result<()> {
    let mut text = String::with_capacity(grid.n * 60 + 32);
    text.push_str("x,r,psi,dpsi_dt\n");
    for i in 0..grid.n {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_sig(grid.xs[i]),
            fmt_sig(grid.r_of_x[i]),
            fmt_sig(snap.psi[i]),
            fmt_sig(snap.dpsi_dt[i])
        );
    }
    fs::write(path, text)
}

pub fn write_snapshots(
    dir: &Path,
    tag: &str,
    traj: &Trajectory,
    grid: &TortoiseGrid,
    stride: usize,
) -> io::Result<()> {
    if stride == 0 {
        return Ok(());
    }
    for (k, snap) in traj.snapshots.iter().enumerate() {
        write_snapshot_csv(&dir.join(format!("snapshot_{tag}_{k:05}.csv")), snap, grid)?;
    }
    Ok(())
}

/// Elementwise sum used when assembling per-mode series; max columns take
/// the max instead.
pub fn assemble_series(per_mode: &[Vec<EnergyBreakdown>]) -> Vec<EnergyBreakdown> {
    let Some(first) = per_mode.first() else {
        return Vec::new();
    };
    let len = per_mode.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = EnergyBreakdown {
            t: first[k].t,
            e_basic: 0.0,
            e_morawetz: 0.0,
            mor_ubar_flux: 0.0,
            mor_u_flux: 0.0,
            mor_potential: 0.0,
            e_local: 0.0,
            trapping_integral: 0.0,
            max_abs_psi: 0.0,
            max_abs_rphi_weighted: 0.0,
        };
        for series in per_mode {
            let e = &series[k];
            acc.e_basic += e.e_basic;
            acc.e_morawetz += e.e_morawetz;
            acc.mor_ubar_flux += e.mor_ubar_flux;
            acc.mor_u_flux += e.mor_u_flux;
            acc.mor_potential += e.mor_potential;
            acc.e_local += e.e_local;
            acc.trapping_integral += e.trapping_integral;
            acc.max_abs_psi = acc.max_abs_psi.max(e.max_abs_psi);
            acc.max_abs_rphi_weighted = acc.max_abs_rphi_weighted.max(e.max_abs_rphi_weighted);
        }
        out.push(acc);
    }
    out
}
