//! Layer norm scalings against `ε` for an analytic wall-touching profile.

use std::f64::consts::PI;
use std::path::Path;

use vll_core::layer::{layer_norm_scalings, write_scaling_csv, ScalingRow};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{ensure_dir, write_atomic};

/// `u = (1.2 + 0.3 sin 2πx)(1 + t)`, nonzero at both walls.
pub fn probe_profile(x: f64, t: f64) -> (f64, f64, f64) {
    let s = 1.2 + 0.3 * (2.0 * PI * x).sin();
    let sx = 0.6 * PI * (2.0 * PI * x).cos();
    (s * (1.0 + t), sx * (1.0 + t), s)
}

pub fn layer_scaling(config: &RunConfig, eps_list: &[f64]) -> Result<Vec<ScalingRow>> {
    let mut cfg = config.clone();
    cfg.scaling.epsilons = eps_list.to_vec();
    cfg.validate()?;
    let s = &cfg.scaling;
    Ok(layer_norm_scalings(&probe_profile, cfg.grid.length, s.base_cells, cfg.layer.c, &s.epsilons, &s.p, &s.times)?)
}

pub fn row_passes(row: &ScalingRow, rel: f64) -> bool {
    let e = row.expected_exponent;
    if e == 0.0 {
        row.fitted_exponent.abs() <= rel
    } else {
        (row.fitted_exponent - e).abs() <= rel * e.abs()
    }
}

pub fn write_scaling(dir: &Path, rows: &[ScalingRow]) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(&dir.join("scaling.csv"), |w| write_scaling_csv(w, rows))
}
