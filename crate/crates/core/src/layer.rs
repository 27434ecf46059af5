//! Kato-type fake boundary layer `v_bl = ξ(d/δ) u^E` with `δ = cε`, its
//! derivative calculus and the norm scalings in `ε`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{boundary_strip, gradient_values, lp_norm_values, Grid};
use crate::rates::fit_slope;

/// Smooth bump `ξ(r) = s·exp(1 − 1/(1 − r²))` on `|r| < 1`, zero elsewhere.
/// The standard cutoff has `s = 1`; other scales exist to exercise the
/// invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub scale: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

pub fn make_cutoff() -> Cutoff {
    Cutoff::default()
}

impl Cutoff {
    pub fn xi(&self, r: f64) -> f64 {
        if r.abs() >= 1.0 {
            return 0.0;
        }
        self.scale * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }

    pub fn dxi(&self, r: f64) -> f64 {
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - r * r;
        self.xi(r) * (-2.0 * r / (q * q))
    }

    pub fn d2xi(&self, r: f64) -> f64 {
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - r * r;
        let g1 = -2.0 * r / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * r * r / (q * q * q);
        self.xi(r) * (g1 * g1 + g2)
    }

    /// Largest violation of `ξ(0) = 1`, `ξ = ξ' = ξ'' = 0` on `r ≥ 1`,
    /// `ξ'(0) = 0`.
    pub fn invariant_violation(&self) -> f64 {
        let mut worst = (self.xi(0.0) - 1.0).abs().max(self.dxi(0.0).abs());
        for r in [1.0, 1.5, 2.0, 10.0] {
            worst = worst.max(self.xi(r).abs()).max(self.dxi(r).abs()).max(self.d2xi(r).abs());
        }
        worst
    }
}

/// Layer fields on a grid for one width `δ = cε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFields {
    pub epsilon: f64,
    pub c: f64,
    pub delta: f64,
    /// `ξ(d/δ)`.
    pub z: Vec<f64>,
    /// `(d/δ) ξ'(d/δ)`.
    pub z_tilde: Vec<f64>,
    /// `(d/δ)² ξ'(d/δ)`.
    pub z_hat: Vec<f64>,
    /// `(d/δ)² ξ''(d/δ)`.
    pub z_check: Vec<f64>,
    pub v_bl: Vec<f64>,
    /// Exact `∂ₓ v_bl = z u_x + (ξ'/δ) d' u`.
    pub v_bl_x: Vec<f64>,
    /// `z ∂ₜu^E`.
    pub v_bl_t: Vec<f64>,
}

/// Reference velocity and its derivatives at the cell centres.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityTrace {
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_t: Vec<f64>,
}

fn check_resolution(grid: &Grid, epsilon: f64, c: f64, min_cells: usize) -> Result<f64> {
    if !(epsilon > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("layer needs ε > 0 and c > 0, got ε = {epsilon}, c = {c}")));
    }
    let delta = c * epsilon;
    let strip = boundary_strip(grid, delta)?;
    // Cells on one side of the strip.
    let cells = strip.count() / 2;
    if delta < 2.0 * grid.dx() || cells < min_cells {
        return Err(Error::UnderResolvedLayer { epsilon, cells });
    }
    Ok(delta)
}

pub fn fake_layer(grid: &Grid, trace: &VelocityTrace, epsilon: f64, c: f64, cutoff: &Cutoff) -> Result<LayerFields> {
    fake_layer_min_cells(grid, trace, epsilon, c, cutoff, 2)
}

/// As [`fake_layer`] with a stricter resolution demand on each side strip.
pub fn fake_layer_min_cells(
    grid: &Grid,
    trace: &VelocityTrace,
    epsilon: f64,
    c: f64,
    cutoff: &Cutoff,
    min_cells: usize,
) -> Result<LayerFields> {
    let n = grid.cells();
    if trace.u.len() != n || trace.u_x.len() != n || trace.u_t.len() != n {
        return Err(Error::InvalidArgument("velocity trace length differs from grid".into()));
    }
    let delta = check_resolution(grid, epsilon, c, min_cells)?;
    let mut f = LayerFields {
        epsilon,
        c,
        delta,
        z: Vec::with_capacity(n),
        z_tilde: Vec::with_capacity(n),
        z_hat: Vec::with_capacity(n),
        z_check: Vec::with_capacity(n),
        v_bl: Vec::with_capacity(n),
        v_bl_x: Vec::with_capacity(n),
        v_bl_t: Vec::with_capacity(n),
    };
    for i in 0..n {
        let r = grid.dist(i) / delta;
        let xi = cutoff.xi(r);
        let dxi = cutoff.dxi(r);
        f.z.push(xi);
        f.z_tilde.push(r * dxi);
        f.z_hat.push(r * r * dxi);
        f.z_check.push(r * r * cutoff.d2xi(r));
        f.v_bl.push(xi * trace.u[i]);
        f.v_bl_x.push(xi * trace.u_x[i] + dxi / delta * grid.dist_slope(i) * trace.u[i]);
        f.v_bl_t.push(xi * trace.u_t[i]);
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCalculus {
    /// Max over cells of `|discrete ∂ₓv_bl − (z u_x + (ξ'/δ) d' u)|`.
    pub first: f64,
    /// Max over interior cells of
    /// `|discrete ∂ₓₓv_bl − (z u'' + 2(ξ'/δ) d' u' + (ξ''/δ²) u)|`.
    pub second: f64,
    /// Max of `|z̃/d − ξ'/δ|` over cells.
    pub identity: f64,
}

/// Compares grid derivatives of `v_bl` with the cutoff decomposition, for a
/// velocity given analytically as `x ↦ (u, u', u'')`.
pub fn layer_calculus_check(
    grid: &Grid,
    velocity: &dyn Fn(f64) -> (f64, f64, f64),
    epsilon: f64,
    c: f64,
    cutoff: &Cutoff,
) -> Result<LayerCalculus> {
    let n = grid.cells();
    let vals: Vec<(f64, f64, f64)> = grid.centers().map(velocity).collect();
    let trace = VelocityTrace { u: vals.iter().map(|v| v.0).collect(), u_x: vals.iter().map(|v| v.1).collect(), u_t: vec![0.0; n] };
    let layer = fake_layer(grid, &trace, epsilon, c, cutoff)?;
    let delta = layer.delta;
    let dv = gradient_values(grid, &layer.v_bl);
    let h = grid.dx();
    let mut out = LayerCalculus { first: 0.0, second: 0.0, identity: 0.0 };
    for i in 0..n {
        out.first = out.first.max((dv[i] - layer.v_bl_x[i]).abs());
        let d = grid.dist(i);
        let r = d / delta;
        if d > 0.0 {
            out.identity = out.identity.max((layer.z_tilde[i] / d - cutoff.dxi(r) / delta).abs());
        }
        if i > 0 && i + 1 < n {
            let discrete = (layer.v_bl[i + 1] - 2.0 * layer.v_bl[i] + layer.v_bl[i - 1]) / (h * h);
            let (u, u1, u2) = vals[i];
            let slope = grid.dist_slope(i);
            let exact = layer.z[i] * u2 + 2.0 * cutoff.dxi(r) / delta * slope * u1 + cutoff.d2xi(r) / (delta * delta) * u;
            out.second = out.second.max((discrete - exact).abs());
        }
    }
    Ok(out)
}

/// One row family of the scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub norm_name: String,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
}

impl ScalingRow {
    /// Within 10% of a non-zero expected exponent, or within 0.1 of zero.
    pub fn within_tolerance(&self) -> bool {
        if self.expected_exponent == 0.0 {
            self.fitted_exponent.abs() <= 0.1
        } else {
            ((self.fitted_exponent - self.expected_exponent) / self.expected_exponent).abs() <= 0.1
        }
    }
}

/// Smallest `N₀·2^k` placing at least `min_cells` cells inside a strip of
/// width `cε`.
pub fn cells_for_layer(length: f64, base_cells: usize, epsilon: f64, c: f64, min_cells: usize) -> usize {
    let needed = (min_cells as f64 * length / (c * epsilon)).ceil() as usize;
    let mut n = base_cells.max(Grid::MIN_CELLS);
    while n < needed {
        n *= 2;
    }
    n
}

/// Analytic velocity `(x, t) ↦ (u, ∂ₓu, ∂ₜu)`.
pub type VelocityProfile = dyn Fn(f64, f64) -> (f64, f64, f64) + Sync;

/// Measures each layer norm at every `ε` (sup over `times`) on a grid
/// refined per `ε`, and fits log-log slopes.
pub fn layer_norm_scalings(
    profile: &VelocityProfile,
    length: f64,
    base_cells: usize,
    c: f64,
    eps_list: &[f64],
    p_list: &[f64],
    times: &[f64],
) -> Result<Vec<ScalingRow>> {
    if eps_list.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: eps_list.len() });
    }
    let emax = eps_list.iter().copied().fold(f64::MIN, f64::max);
    let emin = eps_list.iter().copied().fold(f64::MAX, f64::min);
    if emax / emin < 10.0 {
        return Err(Error::InvalidArgument("epsilon list must span at least one decade".into()));
    }
    if times.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let cutoff = make_cutoff();
    let mut names: Vec<(String, f64)> = Vec::new();
    for &p in p_list {
        names.push((format!("v_bl_L{p}"), 1.0 / p));
        names.push((format!("dt_v_bl_L{p}"), 1.0 / p));
        names.push((format!("d_grad_v_bl_L{p}"), 1.0 / p));
    }
    names.push(("v_bl_Linf".into(), 0.0));
    names.push(("dt_v_bl_Linf".into(), 0.0));
    names.push(("grad_v_bl_Linf".into(), -1.0));
    names.push(("d_grad_v_bl_Linf".into(), 0.0));
    names.push(("d2_grad_v_bl_Linf".into(), 1.0));
    let extra_l2 = !p_list.contains(&2.0);
    if extra_l2 {
        names.push(("d_grad_v_bl_L2".into(), 0.5));
    }

    let mut values = vec![Vec::with_capacity(eps_list.len()); names.len()];
    for &eps in eps_list {
        let n = cells_for_layer(length, base_cells, eps, c, 16);
        let grid = Grid::new(length, n)?;
        let mut sup = vec![0.0_f64; names.len()];
        for &t in times {
            let mut trace = VelocityTrace::default();
            for x in grid.centers() {
                let (u, ux, ut) = profile(x, t);
                trace.u.push(u);
                trace.u_x.push(ux);
                trace.u_t.push(ut);
            }
            let layer = fake_layer_min_cells(&grid, &trace, eps, c, &cutoff, 8)?;
            let d_grad: Vec<f64> = (0..n).map(|i| grid.dist(i) * layer.v_bl_x[i]).collect();
            let d2_grad: Vec<f64> = (0..n).map(|i| grid.dist(i).powi(2) * layer.v_bl_x[i]).collect();
            let mut k = 0;
            let mut put = |v: f64| {
                sup[k] = sup[k].max(v);
                k += 1;
            };
            for &p in p_list {
                put(lp_norm_values(&grid, &layer.v_bl, p, None)?);
                put(lp_norm_values(&grid, &layer.v_bl_t, p, None)?);
                put(lp_norm_values(&grid, &d_grad, p, None)?);
            }
            put(lp_norm_values(&grid, &layer.v_bl, f64::INFINITY, None)?);
            put(lp_norm_values(&grid, &layer.v_bl_t, f64::INFINITY, None)?);
            put(lp_norm_values(&grid, &layer.v_bl_x, f64::INFINITY, None)?);
            put(lp_norm_values(&grid, &d_grad, f64::INFINITY, None)?);
            put(lp_norm_values(&grid, &d2_grad, f64::INFINITY, None)?);
            if extra_l2 {
                put(lp_norm_values(&grid, &d_grad, 2.0, None)?);
            }
        }
        for (col, v) in values.iter_mut().zip(sup) {
            col.push(v);
        }
    }
    let logs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    names
        .into_iter()
        .zip(values)
        .map(|((name, expected), vals)| {
            let ly: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
            Ok(ScalingRow {
                norm_name: name,
                epsilons: eps_list.to_vec(),
                fitted_exponent: fit_slope(&logs, &ly)?,
                values: vals,
                expected_exponent: expected,
            })
        })
        .collect()
}

/// Writes `norm_name,epsilon,value,fitted_exponent,paper_exponent`.
pub fn write_scaling_csv<W: Write>(mut w: W, rows: &[ScalingRow]) -> std::io::Result<()> {
    w.write_all(b"norm_name,epsilon,value,fitted_exponent,paper_exponent\n")?;
    for row in rows {
        for (e, v) in row.epsilons.iter().zip(&row.values) {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e}", row.norm_name, e, v, row.fitted_exponent, row.expected_exponent)?;
        }
    }
    Ok(())
}
