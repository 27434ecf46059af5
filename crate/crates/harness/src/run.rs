//! One viscous run against its inviscid reference.

use std::path::Path;

use serde::Serialize;
use serde_json::json;
use vll_core::augmented::{drag_absorption_check, k_entropy_report, DragBound, KEntropyBudget};
use vll_core::euler::{solve_reference, well_prepared_init, EulerReference, ReferenceOptions};
use vll_core::field::{Grid, ScalarField};
use vll_core::ns::{
    bd_entropy_report, energy_report, simulate, snapshot_file_name, write_snapshot_csv, BdEntropyBudget, EnergyBudget, FluidParams,
    FluidState, SolverOptions, Trajectory,
};
use vll_core::relative::{relative_energy_report, RelativeEnergyReport};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{ensure_dir, write_atomic, write_json, write_table};

#[derive(Debug, Clone, Serialize)]
pub struct Budgets {
    pub energy: EnergyBudget,
    pub bd: BdEntropyBudget,
    pub k_entropy: KEntropyBudget,
    pub drag_bound: DragBound,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub params: FluidParams,
    pub trajectory: Trajectory,
    pub reference: EulerReference,
    pub budgets: Budgets,
    pub report: RelativeEnergyReport,
    /// Conditions that make the run suspect without aborting it.
    pub flags: Vec<String>,
}

pub fn fluid_params(config: &RunConfig, rho0: &ScalarField) -> Result<FluidParams> {
    let eos = config.eos_params();
    let p = match config.physics.rho_floor {
        Some(f) => FluidParams::new(eos, config.physics.epsilon, config.drag(), f)?,
        None => FluidParams::with_default_floor(eos, config.physics.epsilon, config.drag(), rho0)?,
    };
    Ok(p.with_flux(config.physics.flux))
}

/// Runs the solver, the reference and every report, without touching disk.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let grid = Grid::new(config.grid.length, config.grid.cells)?;
    let eos = config.eos_params();
    let (rho0, u0) = well_prepared_init(&grid, &config.datum)?;
    let params = fluid_params(config, &rho0)?;
    let init = FluidState::from_velocity(0.0, rho0, &u0)?;
    let opts = SolverOptions { cfl: config.time.cfl, max_dt: None };
    let trajectory = simulate(&grid, &init, &params, config.time.horizon, config.time.cadence, &opts)?;
    let ref_opts = ReferenceOptions { intervals: config.reference.intervals, cfl: config.time.cfl, enforce_monitor: true };
    let reference = solve_reference(&grid, &config.datum, &eos, config.time.horizon, config.reference.refinement, &ref_opts)?;

    let budgets = Budgets {
        energy: energy_report(&trajectory, &params)?,
        bd: bd_entropy_report(&trajectory, &params)?,
        k_entropy: k_entropy_report(&trajectory, &params)?,
        drag_bound: drag_absorption_check(&trajectory, &params)?,
    };
    let report = relative_energy_report(&trajectory, &reference, &params, &config.comparator_settings(), config.layer.strip_c)?;

    let mut flags = Vec::new();
    if trajectory.stats.floor_activations > 0 {
        flags.push(format!("density floor activated {} times", trajectory.stats.floor_activations));
    }
    if !report.reliable {
        flags.push("relative-energy evaluation touched floored cells".into());
    }
    if reference.monitor.tripped {
        flags.push("reference smoothness monitor tripped".into());
    }
    if !report.press_cross.positive_holds {
        flags.push("positive part of the pressure cross term went negative".into());
    }
    Ok(RunOutcome { config: config.clone(), params, trajectory, reference, budgets, report, flags })
}

pub fn report_json(o: &RunOutcome) -> serde_json::Value {
    let r = &o.report;
    json!({
        "E_series": r.energy,
        "E0": r.e0,
        "R": r.remainders.r,
        "R_parts": {
            "convective": r.remainders.convective,
            "viscous": r.remainders.viscous,
            "pressure": r.remainders.pressure,
            "eta": r.remainders.eta,
            "eta_raw": r.remainders.eta_raw,
        },
        "press_cross": r.press_cross,
        "conditions": r.conditions,
        "gronwall": r.gronwall,
        "metric": r.metric,
        "reliable": r.reliable,
        "flags": o.flags,
        "epsilon": o.params.epsilon,
        "r1": o.params.drag,
        "cells": o.config.grid.cells,
        "solver": {
            "steps": o.trajectory.stats.steps,
            "floor_activations": o.trajectory.stats.floor_activations,
            "dt_max": o.trajectory.stats.dt_max(),
        },
    })
}

pub fn write_outputs(o: &RunOutcome, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let grid = &o.trajectory.grid;
    for (k, s) in o.trajectory.snapshots.iter().enumerate() {
        write_atomic(&dir.join(snapshot_file_name(k, false)), |w| write_snapshot_csv(w, grid, s))?;
        let sample = o.reference.sample(grid, s.t)?;
        let m: Vec<f64> = sample.rho.iter().zip(&sample.u).map(|(r, u)| r * u).collect();
        let rs = FluidState::new(s.t, ScalarField::new(sample.rho.clone()), ScalarField::new(m))?;
        write_atomic(&dir.join(snapshot_file_name(k, true)), |w| write_snapshot_csv(w, grid, &rs))?;
    }

    let b = &o.budgets;
    let rows: Vec<Vec<f64>> = (0..b.energy.times.len())
        .map(|k| {
            vec![
                b.energy.times[k],
                b.energy.kinetic[k],
                b.energy.potential[k],
                b.energy.viscous[k],
                b.energy.damping[k],
                b.energy.residual[k],
                b.bd.entropy[k],
                b.bd.residual[k],
                b.bd.literal_residual[k],
                b.k_entropy.entropy[k],
                b.k_entropy.residual[k],
            ]
        })
        .collect();
    write_table(
        &dir.join("budgets.csv"),
        &[
            "t",
            "kinetic",
            "potential",
            "viscous",
            "damping",
            "energy_residual",
            "bd_entropy",
            "bd_residual",
            "bd_literal_residual",
            "k_entropy",
            "k_residual",
        ],
        &rows,
    )?;

    let r = &o.report;
    let rows: Vec<Vec<f64>> = (0..r.energy.times.len())
        .map(|k| {
            vec![
                r.energy.times[k],
                r.energy.energy[k],
                r.energy.kinetic[k],
                r.energy.potential[k],
                r.energy.history[k],
                r.press_cross.series[k],
                r.metric.density[k],
                r.metric.velocity[k],
                r.metric.total[k],
            ]
        })
        .collect();
    write_table(
        &dir.join("report.csv"),
        &["t", "E", "kinetic", "potential", "history", "press_cross", "metric_density", "metric_velocity", "metric"],
        &rows,
    )?;
    write_json(&dir.join("report.json"), &report_json(o))?;
    write_json(&dir.join("budgets.json"), b)
}

pub fn run_single(config: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let o = execute(config)?;
    write_outputs(&o, dir)?;
    Ok(o)
}
