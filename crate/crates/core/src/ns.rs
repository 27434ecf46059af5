//! Explicit finite-volume integrator for the viscous system
//!
//! ```text
//! ρ_t + (ρu)_x = 0
//! (ρu)_t + (ρu² + p(ρ))_x = 2ε (ρ u_x)_x − r₁ ρ|u|u
//! ```
//!
//! on `[0, L]` with no-flux, no-slip walls, together with the energy and
//! BD-entropy budgets.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::field::{gradient_values, integrate, Grid, ScalarField};

/// Convective flux discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxMode {
    /// Local Lax–Friedrichs splitting.
    #[default]
    Rusanov,
    /// Plain centred flux average; only meant for order tests on smooth data.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub eos: EosParams,
    pub epsilon: f64,
    pub drag: f64,
    pub rho_floor: f64,
    #[serde(default)]
    pub flux: FluxMode,
}

impl FluidParams {
    pub fn new(eos: EosParams, epsilon: f64, drag: f64, rho_floor: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfiguration(format!("viscosity must be non-negative, got {epsilon}")));
        }
        if !(drag >= 0.0) || !drag.is_finite() {
            return Err(Error::InvalidConfiguration(format!("drag coefficient must be non-negative, got {drag}")));
        }
        if !(rho_floor > 0.0) {
            return Err(Error::InvalidConfiguration(format!("density floor must be positive, got {rho_floor}")));
        }
        Ok(Self { eos, epsilon, drag, rho_floor, flux: FluxMode::Rusanov })
    }

    /// Floor set to `1e-8` times the mean initial density.
    pub fn with_default_floor(eos: EosParams, epsilon: f64, drag: f64, rho0: &ScalarField) -> Result<Self> {
        let mean = rho0.values.iter().sum::<f64>() / rho0.len().max(1) as f64;
        Self::new(eos, epsilon, drag, 1e-8 * mean)
    }

    pub fn with_flux(mut self, flux: FluxMode) -> Self {
        self.flux = flux;
        self
    }
}

/// Density and momentum at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub m: ScalarField,
}

impl FluidState {
    pub fn new(t: f64, rho: ScalarField, m: ScalarField) -> Result<Self> {
        if rho.len() != m.len() {
            return Err(Error::InvalidArgument(format!("density has {} cells, momentum {}", rho.len(), m.len())));
        }
        Ok(Self { t, rho, m })
    }

    /// State with momentum `ρu` and the wall cells set to zero momentum.
    pub fn from_velocity(t: f64, rho: ScalarField, u: &ScalarField) -> Result<Self> {
        let mut m = rho.zip_map(u, |r, v| r * v);
        if let Some(first) = m.values.first_mut() {
            *first = 0.0;
        }
        if let Some(last) = m.values.last_mut() {
            *last = 0.0;
        }
        Self::new(t, rho, m)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn velocity(&self) -> ScalarField {
        self.m.zip_map(&self.rho, |m, r| m / r)
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        integrate(grid, &self.rho.values)
    }

    fn check_finite(&self) -> Result<()> {
        if self.rho.all_finite() && self.m.all_finite() {
            Ok(())
        } else {
            Err(Error::NumericalBlowup { time: self.t })
        }
    }
}

/// Pointwise-in-time rates of the dissipation integrals, evaluated on one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DissipationRates {
    /// `∫ ρ |u_x|²` (face quadrature).
    pub strain: f64,
    /// `∫ (p'(ρ)/ρ) |ρ_x|²` (face quadrature).
    pub pressure_gradient: f64,
    /// `∫ ρ |u|³`.
    pub drag: f64,
    /// `∫ |u| u ρ_x`.
    pub drag_cross: f64,
}

impl std::ops::Add for DissipationRates {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            strain: self.strain + o.strain,
            pressure_gradient: self.pressure_gradient + o.pressure_gradient,
            drag: self.drag + o.drag,
            drag_cross: self.drag_cross + o.drag_cross,
        }
    }
}

impl std::ops::Mul<f64> for DissipationRates {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            strain: self.strain * s,
            pressure_gradient: self.pressure_gradient * s,
            drag: self.drag * s,
            drag_cross: self.drag_cross * s,
        }
    }
}

pub fn dissipation_rates(grid: &Grid, state: &FluidState, eos: &EosParams) -> DissipationRates {
    let n = state.len();
    let dx = grid.dx();
    let rho = &state.rho.values;
    let u = state.velocity().values;
    let mut strain = 0.0;
    let mut pressure_gradient = 0.0;
    for i in 0..n - 1 {
        let rf = 0.5 * (rho[i] + rho[i + 1]);
        let du = (u[i + 1] - u[i]) / dx;
        let dr = (rho[i + 1] - rho[i]) / dx;
        strain += rf * du * du;
        pressure_gradient += eos.dp(rf) / rf * dr * dr;
    }
    let grad_rho = gradient_values(grid, rho);
    let mut drag = 0.0;
    let mut drag_cross = 0.0;
    for i in 0..n {
        drag += rho[i] * u[i].abs().powi(3);
        drag_cross += u[i].abs() * u[i] * grad_rho[i];
    }
    DissipationRates { strain: strain * dx, pressure_gradient: pressure_gradient * dx, drag: drag * dx, drag_cross: drag_cross * dx }
}

/// Time derivatives `(∂ₜρ, ∂ₜm)` of the semi-discrete scheme.
pub fn rhs(grid: &Grid, state: &FluidState, params: &FluidParams) -> Result<(ScalarField, ScalarField)> {
    state.check_finite()?;
    if state.len() != grid.cells() {
        return Err(Error::InvalidArgument(format!("state has {} cells, grid {}", state.len(), grid.cells())));
    }
    let (drho, dm) = rhs_values(grid, &state.rho.values, &state.m.values, params);
    if drho.iter().chain(&dm).any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup { time: state.t });
    }
    Ok((ScalarField::new(drho), ScalarField::new(dm)))
}

fn rhs_values(grid: &Grid, rho: &[f64], m: &[f64], params: &FluidParams) -> (Vec<f64>, Vec<f64>) {
    let n = rho.len();
    let dx = grid.dx();
    let eos = &params.eos;
    let eps = params.epsilon;
    let upwind = params.flux == FluxMode::Rusanov;

    // Per-cell velocity, pressure and wave speed, sharing one power per cell.
    let (a, g1) = (eos.a, eos.gamma - 1.0);
    let mut u = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let q = rho[i].powf(g1);
        let ui = m[i] / rho[i];
        u.push(ui);
        p.push(a * rho[i] * q);
        s.push(ui.abs() + (a * eos.gamma * q).sqrt());
    }

    // One mirrored ghost on each side: Neumann density, odd momentum.
    let cell = |i: isize| -> (f64, f64, f64, f64, f64) {
        if i < 0 {
            (rho[0], -m[0], -u[0], p[0], s[0])
        } else if i as usize >= n {
            (rho[n - 1], -m[n - 1], -u[n - 1], p[n - 1], s[n - 1])
        } else {
            let k = i as usize;
            (rho[k], m[k], u[k], p[k], s[k])
        }
    };

    let mut f_rho = vec![0.0; n + 1];
    let mut f_m = vec![0.0; n + 1];
    for k in 0..=n {
        let (rl, ml, ul, pl, sl) = cell(k as isize - 1);
        let (rr, mr, ur, pr, sr) = cell(k as isize);
        let mut fr = 0.5 * (ml + mr);
        let mut fm = 0.5 * (ml * ul + pl + mr * ur + pr);
        if upwind {
            let lam = sl.max(sr);
            fr -= 0.5 * lam * (rr - rl);
            fm -= 0.5 * lam * (mr - ml);
        }
        if eps > 0.0 {
            fm -= 2.0 * eps * 0.5 * (rl + rr) * (ur - ul) / dx;
        }
        f_rho[k] = fr;
        f_m[k] = fm;
    }

    let mut drho = vec![0.0; n];
    let mut dm = vec![0.0; n];
    for i in 0..n {
        drho[i] = -(f_rho[i + 1] - f_rho[i]) / dx;
        dm[i] = -(f_m[i + 1] - f_m[i]) / dx - params.drag * rho[i] * u[i].abs() * u[i];
    }
    dm[0] = 0.0;
    dm[n - 1] = 0.0;
    (drho, dm)
}

/// Stable time step `cfl · min(dx / max(|u| + c), dx² / (4ε))`.
pub fn stable_dt(grid: &Grid, state: &FluidState, params: &FluidParams, cfl: f64) -> f64 {
    let dx = grid.dx();
    let speed =
        state.rho.values.iter().zip(&state.m.values).map(|(&r, &m)| (m / r).abs() + params.eos.sound_speed(r)).fold(0.0_f64, f64::max);
    let adv = if speed > 0.0 { dx / speed } else { f64::INFINITY };
    let visc = if params.epsilon > 0.0 { dx * dx / (4.0 * params.epsilon) } else { f64::INFINITY };
    cfl * adv.min(visc)
}

const MIN_DT: f64 = 1e-14;

fn apply_floor(rho: &mut [f64], floor: f64) -> usize {
    let mut hits = 0;
    for r in rho.iter_mut() {
        if *r < floor {
            *r = floor;
            hits += 1;
        }
    }
    hits
}

/// One SSP-RK2 step of size `dt`; returns the new state and the number of
/// density-floor activations.
pub fn step_with_dt(grid: &Grid, state: &FluidState, params: &FluidParams, dt: f64) -> Result<(FluidState, usize)> {
    if !(dt >= MIN_DT) {
        return Err(Error::Stiffness { dt, time: state.t });
    }
    let n = state.len();
    let (k1r, k1m) = rhs(grid, state, params)?;
    let mut r1: Vec<f64> = (0..n).map(|i| state.rho.values[i] + dt * k1r.values[i]).collect();
    let m1: Vec<f64> = (0..n).map(|i| state.m.values[i] + dt * k1m.values[i]).collect();
    let mut hits = apply_floor(&mut r1, params.rho_floor);
    let mid = FluidState { t: state.t + dt, rho: ScalarField::new(r1), m: ScalarField::new(m1) };
    let (k2r, k2m) = rhs(grid, &mid, params)?;
    let mut r2: Vec<f64> = (0..n).map(|i| 0.5 * (state.rho.values[i] + mid.rho.values[i] + dt * k2r.values[i])).collect();
    let mut m2: Vec<f64> = (0..n).map(|i| 0.5 * (state.m.values[i] + mid.m.values[i] + dt * k2m.values[i])).collect();
    hits += apply_floor(&mut r2, params.rho_floor);
    m2[0] = 0.0;
    m2[n - 1] = 0.0;
    let next = FluidState { t: state.t + dt, rho: ScalarField::new(r2), m: ScalarField::new(m2) };
    next.check_finite()?;
    Ok((next, hits))
}

pub fn step(grid: &Grid, state: &FluidState, params: &FluidParams, cfl: f64) -> Result<(FluidState, usize)> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    let dt = stable_dt(grid, state, params, cfl);
    step_with_dt(grid, state, params, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub cfl: f64,
    /// Optional cap on the step size, used for temporal refinement studies.
    pub max_dt: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cfl: 0.5, max_dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub dt_history: Vec<f64>,
    pub floor_activations: usize,
    /// Largest number of floored cells seen in any single snapshot.
    pub max_floored_cells: usize,
}

impl SolverStats {
    pub fn dt_max(&self) -> f64 {
        self.dt_history.iter().copied().fold(0.0, f64::max)
    }
}

/// Snapshots at the output cadence plus the running dissipation integrals,
/// accumulated step by step with the trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<FluidState>,
    /// Cumulative `∫₀ᵗ` of each rate, one entry per snapshot.
    pub cumulative: Vec<DissipationRates>,
    pub stats: SolverStats,
}

impl Trajectory {
    /// Trajectory from imposed fields; cumulative integrals use the trapezoid
    /// rule over the given snapshots.
    pub fn from_snapshots(grid: Grid, snapshots: Vec<FluidState>, eos: &EosParams) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
        }
        for s in &snapshots {
            if s.len() != grid.cells() {
                return Err(Error::InvalidArgument("snapshot size differs from grid".into()));
            }
        }
        let rates: Vec<DissipationRates> = snapshots.iter().map(|s| dissipation_rates(&grid, s, eos)).collect();
        let mut cumulative = vec![DissipationRates::default()];
        for k in 1..snapshots.len() {
            let h = snapshots[k].t - snapshots[k - 1].t;
            let prev = cumulative[k - 1];
            cumulative.push(prev + (rates[k - 1] + rates[k]) * (0.5 * h));
        }
        Ok(Self { grid, snapshots, cumulative, stats: SolverStats::default() })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &FluidState {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

pub fn simulate(
    grid: &Grid,
    init: &FluidState,
    params: &FluidParams,
    horizon: f64,
    cadence: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(cadence > 0.0) {
        return Err(Error::InvalidArgument(format!("cadence must be positive, got {cadence}")));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl must lie in (0, 1], got {}", opts.cfl)));
    }
    if init.len() != grid.cells() {
        return Err(Error::InvalidArgument("initial state size differs from grid".into()));
    }
    init.check_finite()?;

    let mut state = init.clone();
    let n_out = ((horizon / cadence) - 1e-9).ceil().max(1.0) as usize;
    let out_time = |k: usize| if k >= n_out { horizon } else { init.t + k as f64 * cadence };

    let mut snapshots = vec![state.clone()];
    let mut cumulative = vec![DissipationRates::default()];
    let mut stats = SolverStats::default();
    let mut acc = DissipationRates::default();
    let mut rate = dissipation_rates(grid, &state, &params.eos);
    let end = init.t + horizon;

    for k in 1..=n_out {
        let target = if k == n_out { end } else { out_time(k) };
        let mut floored_here = 0;
        while state.t < target {
            let mut dt = stable_dt(grid, &state, params, opts.cfl);
            if let Some(cap) = opts.max_dt {
                dt = dt.min(cap);
            }
            let remaining = target - state.t;
            let last = dt >= remaining * (1.0 - 1e-12);
            if last {
                dt = remaining;
            }
            let (mut next, hits) = step_with_dt(grid, &state, params, dt).map_err(|e| match e {
                Error::Stiffness { dt, .. } if last => Error::Stiffness { dt, time: state.t },
                other => other,
            })?;
            if last {
                next.t = target;
            }
            let next_rate = dissipation_rates(grid, &next, &params.eos);
            acc = acc + (rate + next_rate) * (0.5 * dt);
            rate = next_rate;
            stats.steps += 1;
            stats.dt_history.push(dt);
            stats.floor_activations += hits;
            floored_here = floored_here.max(hits);
            state = next;
        }
        stats.max_floored_cells = stats.max_floored_cells.max(floored_here);
        snapshots.push(state.clone());
        cumulative.push(acc);
    }
    Ok(Trajectory { grid: *grid, snapshots, cumulative, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    /// `2ε ∫₀ᵗ∫ ρ|u_x|²`.
    pub viscous: Vec<f64>,
    /// `r₁ ∫₀ᵗ∫ ρ|u|³`.
    pub damping: Vec<f64>,
    /// `[E_kin + E_pot + viscous + damping](t) − [E_kin + E_pot](0)`.
    pub residual: Vec<f64>,
}

impl EnergyBudget {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

fn kinetic_potential(grid: &Grid, s: &FluidState, eos: &EosParams) -> (f64, f64) {
    let kin: Vec<f64> = s.rho.values.iter().zip(&s.m.values).map(|(&r, &m)| 0.5 * m * m / r).collect();
    let pot: Vec<f64> = s.rho.values.iter().map(|&r| eos.h(r)).collect();
    (integrate(grid, &kin), integrate(grid, &pot))
}

fn require_snapshots(traj: &Trajectory) -> Result<()> {
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: traj.snapshots.len() });
    }
    Ok(())
}

pub fn energy_report(traj: &Trajectory, params: &FluidParams) -> Result<EnergyBudget> {
    require_snapshots(traj)?;
    let mut b =
        EnergyBudget { times: traj.times(), kinetic: vec![], potential: vec![], viscous: vec![], damping: vec![], residual: vec![] };
    let mut e0 = 0.0;
    for (k, (s, c)) in traj.snapshots.iter().zip(&traj.cumulative).enumerate() {
        let (kin, pot) = kinetic_potential(&traj.grid, s, &params.eos);
        let visc = 2.0 * params.epsilon * c.strain;
        let damp = params.drag * c.drag;
        if k == 0 {
            e0 = kin + pot;
        }
        b.kinetic.push(kin);
        b.potential.push(pot);
        b.viscous.push(visc);
        b.damping.push(damp);
        b.residual.push(kin + pot + visc + damp - e0);
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdEntropyBudget {
    pub times: Vec<f64>,
    /// `∫ ½ ρ |u + 2ε ∂ₓ log ρ|² + ∫ H(ρ)`, the functional conserved up to
    /// dissipation by this system.
    pub entropy: Vec<f64>,
    /// `2ε ∫₀ᵗ∫ |𝒜|²`, identically zero in 1D.
    pub antisymmetric: Vec<f64>,
    /// `2ε ∫₀ᵗ∫ (p'(ρ)/ρ) |ρ_x|²`.
    pub pressure: Vec<f64>,
    /// `r₁ ∫₀ᵗ∫ ρ|u|³ + 2ε r₁ ∫₀ᵗ∫ |u|u ρ_x`.
    pub damping: Vec<f64>,
    pub residual: Vec<f64>,
    /// Same budget with drift `ε ∂ₓ log ρ` and single-ε pressure and drag
    /// coefficients. It does not close for this system: the strain work
    /// `ε ∫∫ ρ|u_x|²` and the Fisher term `ε² ∫ ½ρ|∂ₓ log ρ|²` are left over.
    pub literal_residual: Vec<f64>,
    pub reliable: bool,
}

impl BdEntropyBudget {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

fn floored_fraction(s: &FluidState, floor: f64) -> f64 {
    let hits = s.rho.values.iter().filter(|&&r| r <= floor * (1.0 + 1e-12)).count();
    hits as f64 / s.len().max(1) as f64
}

pub fn bd_entropy_report(traj: &Trajectory, params: &FluidParams) -> Result<BdEntropyBudget> {
    require_snapshots(traj)?;
    let grid = &traj.grid;
    let eps = params.epsilon;
    let r1 = params.drag;
    let reliable = traj.snapshots.iter().all(|s| floored_fraction(s, params.rho_floor) <= 0.01);
    let functional = |s: &FluidState, drift: f64| -> f64 {
        let logr: Vec<f64> = s.rho.values.iter().map(|r| r.ln()).collect();
        let g = gradient_values(grid, &logr);
        let dens: Vec<f64> = (0..s.len())
            .map(|i| {
                let r = s.rho.values[i];
                let v = s.m.values[i] / r + drift * g[i];
                0.5 * r * v * v + params.eos.h(r)
            })
            .collect();
        integrate(grid, &dens)
    };
    let mut b = BdEntropyBudget {
        times: traj.times(),
        entropy: vec![],
        antisymmetric: vec![],
        pressure: vec![],
        damping: vec![],
        residual: vec![],
        literal_residual: vec![],
        reliable,
    };
    let mut e0 = 0.0;
    let mut l0 = 0.0;
    for (k, (s, c)) in traj.snapshots.iter().zip(&traj.cumulative).enumerate() {
        let e = functional(s, 2.0 * eps);
        let lit = functional(s, eps);
        if k == 0 {
            e0 = e;
            l0 = lit;
        }
        let press = 2.0 * eps * c.pressure_gradient;
        let damp = r1 * c.drag + 2.0 * eps * r1 * c.drag_cross;
        b.entropy.push(e);
        b.antisymmetric.push(0.0);
        b.pressure.push(press);
        b.damping.push(damp);
        b.residual.push(e + press + damp - e0);
        let lit_rhs = eps * c.pressure_gradient + r1 * c.drag + eps * r1 * c.drag_cross;
        b.literal_residual.push(lit + lit_rhs - l0);
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// Midpoint times of the snapshot pairs.
    pub times: Vec<f64>,
    /// `d/dt ∫ ½ρ|∂ₓ log ρ|²` by differencing each pair.
    pub rate: Vec<f64>,
    /// `∫ u_xx ρ_x`, averaged over the pair.
    pub gradient_term: Vec<f64>,
    /// `∫ ρ u_x |∂ₓ log ρ|²`, averaged over the pair.
    pub strain_term: Vec<f64>,
    pub residual: Vec<f64>,
    pub reliable: bool,
}

impl LemmaCheck {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

/// Balance `d/dt ∫½ρ|∇log ρ|² + ∫ ∇div u·∇ρ + ∫ ρ D(u):∇log ρ⊗∇log ρ = 0`
/// evaluated over consecutive snapshot pairs.
pub fn lemma1_identity_check(traj: &Trajectory, params: &FluidParams) -> Result<LemmaCheck> {
    require_snapshots(traj)?;
    let grid = &traj.grid;
    let reliable = traj.snapshots.iter().all(|s| floored_fraction(s, params.rho_floor) == 0.0);
    let per_snapshot = |s: &FluidState| -> (f64, f64, f64) {
        let rho = &s.rho.values;
        let u = s.velocity().values;
        let rx = gradient_values(grid, rho);
        let ux = gradient_values(grid, &u);
        let uxx = gradient_values(grid, &ux);
        let n = rho.len();
        let fisher: Vec<f64> = (0..n).map(|i| 0.5 * rx[i] * rx[i] / rho[i]).collect();
        let grad: Vec<f64> = (0..n).map(|i| uxx[i] * rx[i]).collect();
        let strain: Vec<f64> = (0..n).map(|i| ux[i] * rx[i] * rx[i] / rho[i]).collect();
        (integrate(grid, &fisher), integrate(grid, &grad), integrate(grid, &strain))
    };
    let vals: Vec<(f64, f64, f64)> = traj.snapshots.iter().map(per_snapshot).collect();
    let mut out = LemmaCheck { times: vec![], rate: vec![], gradient_term: vec![], strain_term: vec![], residual: vec![], reliable };
    for k in 1..vals.len() {
        let (t0, t1) = (traj.snapshots[k - 1].t, traj.snapshots[k].t);
        let rate = (vals[k].0 - vals[k - 1].0) / (t1 - t0);
        let g = 0.5 * (vals[k].1 + vals[k - 1].1);
        let s = 0.5 * (vals[k].2 + vals[k - 1].2);
        out.times.push(0.5 * (t0 + t1));
        out.rate.push(rate);
        out.gradient_term.push(g);
        out.strain_term.push(s);
        out.residual.push(rate + g + s);
    }
    Ok(out)
}

/// `snap_<index>.csv`, or `snap_<index>_ref.csv` for reference dumps.
pub fn snapshot_file_name(index: usize, reference: bool) -> String {
    if reference {
        format!("snap_{index}_ref.csv")
    } else {
        format!("snap_{index}.csv")
    }
}

/// Writes `t,x,rho,m,u` rows with 17 significant digits.
pub fn write_snapshot_csv<W: Write>(mut w: W, grid: &Grid, state: &FluidState) -> std::io::Result<()> {
    w.write_all(b"t,x,rho,m,u\n")?;
    for i in 0..state.len() {
        let r = state.rho.values[i];
        let m = state.m.values[i];
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", state.t, grid.center(i), r, m, m / r)?;
    }
    Ok(())
}
