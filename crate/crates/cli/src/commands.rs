//! Subcommand implementations. Every command takes the parsed configuration
//! plus the resolved output directory and returns the process exit code:
//! 0 success (including a reported blow-up), 1 scientific infeasibility from
//! the verifier, anything else surfaces as an error and exits 2.

use crate::config::{
    FixtureKind, ModeInitialData, ProfileConfig, RunConfig, SourceConfig, VerificationConfig,
};
use crate::output::{assemble_series, fmt_sig, write_energy_csv, write_snapshots};
use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use rwlab_core::analysis::{
    convergence_order, envelope_compliance, fit_power_law, prepare_decay_series,
    trapping_halftime, DecayFit,
};
use rwlab_core::evolve::{
    evolve, Dynamics, EvolveConfig, GaussianPulse, RunStatus, SemilinearSpec, SourceField,
    TableSource, Trajectory,
};
use rwlab_core::functionals::{assembly_potential_weight, pointwise_target};
use rwlab_core::geometry::{build_grid, SchwarzschildParams, TortoiseGrid};
use rwlab_core::mms::{mms_max_error, ManufacturedSolution};
use rwlab_core::potential::{
    critical_radius, critical_tortoise, potential_value, search_constants,
    second_derivative_at_critical, verify_conditions, ModeSpec, PotentialTable, SearchGrid,
};
use serde_json::json;
use std::fs;
use std::path::Path;

fn setup(cfg: &RunConfig) -> anyhow::Result<(SchwarzschildParams, TortoiseGrid)> {
    let params = SchwarzschildParams::new(cfg.mass)?;
    let grid = build_grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n, &params)?;
    Ok((params, grid))
}

enum RuntimeSource {
    None,
    Pulse(GaussianPulse),
    Table(TableSource),
}

impl SourceField for RuntimeSource {
    fn value(&self, t: f64, x: f64) -> f64 {
        match self {
            RuntimeSource::None => 0.0,
            RuntimeSource::Pulse(p) => p.value(t, x),
            RuntimeSource::Table(tbl) => tbl.value(t, x),
        }
    }
}

fn runtime_source(cfg: &RunConfig) -> RuntimeSource {
    match &cfg.source {
        None => RuntimeSource::None,
        Some(SourceConfig::GaussianPulse {
            amplitude,
            center_x,
            width_x,
            center_t,
            width_t,
        }) => RuntimeSource::Pulse(GaussianPulse {
            amplitude: *amplitude,
            center_x: *center_x,
            width_x: *width_x,
            center_t: *center_t,
            width_t: *width_t,
        }),
        Some(SourceConfig::Table { t, x, values }) => RuntimeSource::Table(TableSource {
            t: t.clone(),
            x: x.clone(),
            values: values.iter().flatten().copied().collect(),
        }),
    }
}

/// Initial radial profile for one mode: the matching initial_data entry, the
/// default photon-sphere-adjacent Gaussian when no list is given, or zero
/// data for listed-but-unmatched modes.
fn initial_profile(
    cfg: &RunConfig,
    mode: &ModeSpec,
    grid: &TortoiseGrid,
) -> anyhow::Result<Vec<f64>> {
    let default_gaussian = |center: f64, width: f64, amplitude: f64| -> Vec<f64> {
        grid.xs
            .iter()
            .map(|&x| amplitude * (-((x - center) / width).powi(2)).exp())
            .collect()
    };
    match &cfg.initial_data {
        None => Ok(default_gaussian(10.0 * cfg.mass, 2.0 * cfg.mass, 1.0)),
        Some(entries) => {
            let found: Vec<&ModeInitialData> = entries
                .iter()
                .filter(|e| e.l == mode.l && e.m == mode.m)
                .collect();
            match found.as_slice() {
                [] => Ok(vec![0.0; grid.n]),
                [entry] => {
                    let ProfileConfig::Gaussian {
                        center,
                        width,
                        amplitude,
                    } = &entry.profile;
                    Ok(default_gaussian(*center, *width, *amplitude))
                }
                _ => bail!(
                    "config error: initial_data: duplicate entry for mode (l = {}, m = {})",
                    mode.l,
                    mode.m
                ),
            }
        }
    }
}

fn check_initial_data_targets(cfg: &RunConfig, modes: &[ModeSpec]) -> anyhow::Result<()> {
    if let Some(entries) = &cfg.initial_data {
        for e in entries {
            if !modes.iter().any(|m| m.l == e.l && m.m == e.m) {
                bail!(
                    "config error: initial_data: entry for mode (l = {}, m = {}) is not in modes",
                    e.l,
                    e.m
                );
            }
        }
    }
    Ok(())
}

fn search_grid_from(vcfg: &VerificationConfig) -> SearchGrid {
    let mut grid = SearchGrid::default();
    if let Some(c) = &vcfg.c_grid {
        let mut cs = Vec::new();
        let mut v = c.min;
        while v <= c.max {
            cs.push(v);
            v *= c.factor;
        }
        grid.c_candidates = cs;
    }
    if let Some(b) = &vcfg.b_grid {
        grid.b1_candidates = b.b1.clone();
        grid.b2_candidates = b.b2.clone();
    }
    grid
}

fn fixture_family(kind: FixtureKind, grid: &TortoiseGrid) -> Vec<PotentialTable> {
    match kind {
        FixtureKind::YSquared => {
            let q: Vec<f64> = grid.xs.iter().map(|&x| x * x).collect();
            let dq: Vec<f64> = grid.xs.iter().map(|&x| 2.0 * x).collect();
            vec![PotentialTable::synthetic(0.0, q, dq, 0.0, f64::NAN)]
        }
        FixtureKind::NegativeConstant => vec![PotentialTable::synthetic(
            0.0,
            vec![-1.0; grid.n],
            vec![0.0; grid.n],
            0.0,
            f64::NAN,
        )],
    }
}

pub fn cmd_verify_potential(cfg: &RunConfig, out: &Path) -> anyhow::Result<u8> {
    let vcfg = cfg
        .verification
        .as_ref()
        .ok_or_else(|| anyhow!("config error: verification: block required for verify-potential"))?;
    let (params, grid) = setup(cfg)?;
    // The potentials vary on the scale M; 20 nodes per M resolves every sign
    // structure the conditions probe.
    if grid.dx > 0.05 * cfg.mass * (1.0 + 1e-12) {
        bail!(
            "config error: grid.n: verification needs dx <= 0.05 M, got dx = {}",
            grid.dx
        );
    }
    let family = match vcfg.fixture {
        Some(kind) => fixture_family(kind, &grid),
        None => cfg
            .lambda_family()
            .iter()
            .map(|&lambda| PotentialTable::for_mode(lambda, &grid, &params))
            .collect::<Result<_, _>>()?,
    };
    let search = search_grid_from(vcfg);

    let found = search_constants(&family, &grid, &search)?;
    let (feasible, constants) = match found {
        Some(c) => (true, c),
        None => {
            // Diagnose with the most lenient C and the first admissible
            // intervals so the fundamental sign violations surface.
            let span = grid.x_max - grid.x_min;
            let c = search
                .c_candidates
                .last()
                .copied()
                .ok_or_else(|| anyhow!("config error: verification.c_grid: empty"))?;
            let (b1, b2) = search
                .b1_candidates
                .iter()
                .flat_map(|&b1| search.b2_candidates.iter().map(move |&b2| (b1, b2)))
                .find(|&(b1, b2)| b1 < b2 && b2 < span / 4.0)
                .ok_or_else(|| {
                    anyhow!("config error: verification.b_grid: no admissible (b1, b2) for this grid")
                })?;
            (
                false,
                rwlab_core::potential::Constants { c, b1, b2 },
            )
        }
    };

    let report = verify_conditions(&family, constants.c, constants.b1, constants.b2, &grid)?;
    let doc = json!({
        "feasible": feasible,
        "constants": report.constants,
        "reports": report.modes,
    });
    fs::create_dir_all(out)?;
    fs::write(
        out.join("condition_report.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;

    if feasible {
        println!(
            "feasible: C = {}, b1 = {}, b2 = {}",
            fmt_sig(constants.c),
            fmt_sig(constants.b1),
            fmt_sig(constants.b2)
        );
        Ok(0)
    } else {
        let (mode, check) = report
            .first_failing()
            .expect("infeasible search leaves at least one failing condition");
        eprintln!(
            "infeasible: condition {} fails for lambda = {} (worst margin {} at y = {})",
            check.name,
            fmt_sig(mode.lambda),
            fmt_sig(check.worst_margin),
            fmt_sig(check.worst_location)
        );
        Ok(1)
    }
}

pub fn cmd_critical_curve(cfg: &RunConfig, out: &Path) -> anyhow::Result<u8> {
    let params = SchwarzschildParams::new(cfg.mass)?;
    let lambdas = cfg.lambda_family();
    let mut text = String::from("lambda,r_crit,x0,q_at_crit,q2_at_crit\n");
    for &lambda in &lambdas {
        let r = critical_radius(lambda, &params)?;
        let x0 = critical_tortoise(lambda, &params)?;
        let q = potential_value(lambda, r, &params)?;
        let q2 = second_derivative_at_critical(lambda, &params)?;
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(lambda),
            fmt_sig(r),
            fmt_sig(x0),
            fmt_sig(q),
            fmt_sig(q2)
        ));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("critical_curve.csv"), text)?;
    println!("critical curve written for {} lambda values", lambdas.len());
    Ok(0)
}

struct ModeRun {
    mode: ModeSpec,
    traj: Trajectory,
    fit: Result<DecayFit, String>,
    halftime: Option<f64>,
}

fn fit_window(t_final: f64) -> (f64, f64) {
    (t_final / 10.0, t_final)
}

pub fn cmd_evolve_linear(cfg: &RunConfig, out: &Path) -> anyhow::Result<u8> {
    let modes = cfg.mode_list().map_err(|e| anyhow!("{e}"))?;
    check_initial_data_targets(cfg, &modes)?;
    let (params, grid) = setup(cfg)?;
    let source = runtime_source(cfg);
    let window = fit_window(cfg.t_final);

    let runs: Vec<anyhow::Result<ModeRun>> = modes
        .par_iter()
        .map(|mode| {
            let table = PotentialTable::for_mode(mode.lambda, &grid, &params)?;
            let psi0 = initial_profile(cfg, mode, &grid)?;
            let zeros = vec![0.0; grid.n];
            let evolve_cfg = EvolveConfig {
                t_final: cfg.t_final,
                courant: cfg.courant,
                energy_every: cfg.outputs.energy_every,
                snapshot_every: cfg.outputs.snapshot_every,
                blowup_ceiling: None,
                local_window_radius: 20.0 * cfg.mass,
                assembly_weight: Some(assembly_potential_weight(mode.lambda, &grid, &params)),
            };
            let traj = evolve(
                &psi0,
                &zeros,
                &Dynamics::Linear { table: &table },
                &source,
                &grid,
                &evolve_cfg,
            )
            .with_context(|| format!("mode (l = {}, m = {})", mode.l, mode.m))?;
            let series: Vec<(f64, f64)> =
                traj.energies.iter().map(|e| (e.t, e.e_local)).collect();
            let cleaned = prepare_decay_series(&series);
            let fit = fit_power_law(&cleaned, window).map_err(|e| e.to_string());
            let halftime = trapping_halftime(&cleaned, 100.0).ok();
            Ok(ModeRun {
                mode: *mode,
                traj,
                fit,
                halftime,
            })
        })
        .collect();

    fs::create_dir_all(out)?;
    let mut assembly = Vec::new();
    let mut mode_docs = Vec::new();
    for run in runs {
        let run = run?;
        let tag = format!("l{}_m{}", run.mode.l, run.mode.m);
        write_energy_csv(&out.join(format!("energy_{tag}.csv")), &run.traj.energies)?;
        write_snapshots(out, &tag, &run.traj, &grid, cfg.outputs.snapshot_every)?;
        mode_docs.push(json!({
            "l": run.mode.l,
            "m": run.mode.m,
            "fit": run.fit.as_ref().ok(),
            "fit_error": run.fit.as_ref().err(),
            "halftime_100": run.halftime.filter(|t| t.is_finite()),
        }));
        assembly.push(run.traj.assembly_energies);
    }
    let total = assemble_series(&assembly);
    write_energy_csv(&out.join("energy_total.csv"), &total)?;

    let doc = json!({
        "experiment": "evolve-linear",
        "window": [window.0, window.1],
        "modes": mode_docs,
    });
    fs::write(
        out.join("decay_report.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    println!("evolved {} mode(s) to t = {}", modes.len(), fmt_sig(cfg.t_final));
    Ok(0)
}

pub fn cmd_evolve_semilinear(cfg: &RunConfig, out: &Path) -> anyhow::Result<u8> {
    let scfg = cfg
        .semilinear
        .as_ref()
        .ok_or_else(|| anyhow!("config error: semilinear: block required for evolve-semilinear"))?;
    let modes = cfg.mode_list().map_err(|e| anyhow!("{e}"))?;
    if modes.len() != 1 || modes[0].l != 0 || modes[0].m != 0 {
        bail!("config error: modes: evolve-semilinear runs the single mode (l = 0, m = 0)");
    }
    if cfg.outputs.snapshot_every == 0 {
        bail!(
            "config error: outputs.snapshot_every: must be positive for evolve-semilinear \
             (the field trace and envelope compliance need snapshots)"
        );
    }
    check_initial_data_targets(cfg, &modes)?;
    let (params, grid) = setup(cfg)?;
    let q0 = PotentialTable::for_mode(0.0, &grid, &params)?;
    let psi0 = initial_profile(cfg, &modes[0], &grid)?;
    let zeros = vec![0.0; grid.n];
    let epsilon = psi0.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let spec = SemilinearSpec::new(scfg.p, scfg.kappa)?;

    let evolve_cfg = EvolveConfig {
        t_final: cfg.t_final,
        courant: cfg.courant,
        energy_every: cfg.outputs.energy_every,
        snapshot_every: cfg.outputs.snapshot_every,
        blowup_ceiling: (epsilon > 0.0).then_some(scfg.ceiling_factor * epsilon),
        local_window_radius: 20.0 * cfg.mass,
        assembly_weight: None,
    };
    let traj = evolve(
        &psi0,
        &zeros,
        &Dynamics::Semilinear { q0: &q0, spec },
        &runtime_source(cfg),
        &grid,
        &evolve_cfg,
    )?;

    fs::create_dir_all(out)?;
    write_energy_csv(&out.join("energy_l0_m0.csv"), &traj.energies)?;
    write_snapshots(out, "l0_m0", &traj, &grid, cfg.outputs.snapshot_every)?;

    // Field trace at the photon sphere: phi = psi / r at the nearest node.
    let i3 = grid.nearest_index(params.photon_sphere_tortoise());
    let mut trace = String::from("t,abs_phi\n");
    let phi_series: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (s.t, (s.psi[i3] / grid.r_of_x[i3]).abs()))
        .collect();
    for &(t, v) in &phi_series {
        trace.push_str(&format!("{},{}\n", fmt_sig(t), fmt_sig(v)));
    }
    fs::write(out.join("phi_trace.csv"), trace)?;

    let window = fit_window(cfg.t_final);
    let fit = fit_power_law(&prepare_decay_series(&phi_series), window);
    // Compliance of |phi| against the pointwise target, outside the trivial
    // cap region of the min.
    let max_ratio = envelope_compliance(&traj.snapshots, |t, i| {
        let x = grid.xs[i];
        if (t - x.abs()).abs() <= 1.0 {
            return None;
        }
        Some(pointwise_target(t, x, &params, epsilon) * grid.r_of_x[i])
    });

    let (status, blowup_time) = match traj.status {
        RunStatus::Global => ("global", None),
        RunStatus::BlowUp { t, .. } => ("blowup", Some(t)),
    };
    let doc = json!({
        "experiment": "evolve-semilinear",
        "status": status,
        "blowup_time": blowup_time,
        "epsilon": epsilon,
        "window": [window.0, window.1],
        "phi_fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "compliance": { "max_ratio": max_ratio },
    });
    fs::write(
        out.join("semilinear_report.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    match traj.status {
        RunStatus::Global => println!("status global: reached t = {}", fmt_sig(cfg.t_final)),
        RunStatus::BlowUp { t, step } => {
            println!("status blowup: |psi| crossed the ceiling at t = {} (step {step})", fmt_sig(t))
        }
    }
    Ok(0)
}

pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> anyhow::Result<u8> {
    let ccfg = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| anyhow!("config error: convergence: block required for convergence"))?;
    if !(cfg.t_final > 0.0) {
        bail!("config error: t_final: must be positive for convergence runs");
    }
    let params = SchwarzschildParams::new(cfg.mass)?;
    let solution = ManufacturedSolution::default();
    let lambda = 6.0f64.sqrt();
    let mut errors = Vec::new();
    for &n in &ccfg.resolutions {
        errors.push(mms_max_error(
            &params,
            cfg.grid.x_min,
            cfg.grid.x_max,
            n,
            lambda,
            cfg.t_final,
            cfg.courant,
            solution,
        )?);
    }
    let order = convergence_order([errors[0], errors[1], errors[2]])?;
    let doc = json!({
        "experiment": "convergence",
        "fixture": "manufactured-sine",
        "resolutions": ccfg.resolutions,
        "errors": errors,
        "orders": order.pair_orders,
        "headline": order.headline,
    });
    fs::create_dir_all(out)?;
    fs::write(
        out.join("convergence.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    println!(
        "orders {} and {} (headline {})",
        fmt_sig(order.pair_orders[0]),
        fmt_sig(order.pair_orders[1]),
        fmt_sig(order.headline)
    );
    Ok(0)
}

pub fn cmd_decay_report(
    input: &Path,
    column: &str,
    t_lo: Option<f64>,
    t_hi: Option<f64>,
    drop_factor: Option<f64>,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let text = fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("{}: empty file", input.display()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let t_idx = cols
        .iter()
        .position(|&c| c == "t")
        .ok_or_else(|| anyhow!("{}: no 't' column", input.display()))?;
    let v_idx = cols
        .iter()
        .position(|&c| c == column)
        .ok_or_else(|| anyhow!("{}: no '{column}' column (have {cols:?})", input.display()))?;
    let mut series = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            bail!("{}: row {} has {} fields, expected {}", input.display(), k + 2, fields.len(), cols.len());
        }
        let t: f64 = fields[t_idx].parse()?;
        let v: f64 = fields[v_idx].parse()?;
        series.push((t, v));
    }
    if series.is_empty() {
        bail!("{}: no data rows", input.display());
    }
    let t_last = series.last().unwrap().0;
    let window = (t_lo.unwrap_or(t_last / 10.0), t_hi.unwrap_or(t_last));

    let cleaned = prepare_decay_series(&series);
    let fit = fit_power_law(&cleaned, window)?;
    let halftime = match drop_factor {
        Some(f) => Some(trapping_halftime(&cleaned, f)?),
        None => None,
    };
    let doc = json!({
        "experiment": "decay-report",
        "input": input.display().to_string(),
        "column": column,
        "fit": fit,
        "halftime": halftime.map(|t| if t.is_finite() { json!(t) } else { json!("never") }),
        "drop_factor": drop_factor,
    });
    let rendered = serde_json::to_string_pretty(&doc)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("decay_report.json"), &rendered)?;
    }
    println!("{rendered}");
    Ok(0)
}
