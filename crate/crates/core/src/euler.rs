//! Inviscid reference solution: the same scheme with `ε = 0`, `r₁ = 0` on a
//! refined grid, stored at a fixed cadence and sampled onto coarser grids
//! together with its derivative fields.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::field::{gradient_values, Grid, ScalarField};
use crate::ns::{simulate, FluidParams, FluidState, SolverOptions};

/// Shape of the density perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityShape {
    #[default]
    Sine,
    Cosine,
}

/// `ρ₀ = b + A sin(2πkx/L)` (or cosine) and `u₀ = B sin(πjx/L)`, so the
/// velocity vanishes at both walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellPreparedData {
    pub background: f64,
    pub rho_amplitude: f64,
    pub rho_mode: u32,
    #[serde(default)]
    pub rho_shape: DensityShape,
    pub u_amplitude: f64,
    pub u_mode: u32,
}

impl Default for WellPreparedData {
    fn default() -> Self {
        Self { background: 1.0, rho_amplitude: 0.1, rho_mode: 1, rho_shape: DensityShape::Sine, u_amplitude: 0.1, u_mode: 1 }
    }
}

impl WellPreparedData {
    pub fn flat() -> Self {
        Self { background: 1.0, rho_amplitude: 0.0, rho_mode: 1, rho_shape: DensityShape::Sine, u_amplitude: 0.0, u_mode: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.background.is_finite() && self.rho_amplitude.is_finite() && self.u_amplitude.is_finite()) {
            return Err(Error::InvalidData("datum parameters must be finite".into()));
        }
        if self.background - self.rho_amplitude.abs() <= 0.0 {
            return Err(Error::InvalidData(format!(
                "density touches vacuum: background {} with amplitude {}",
                self.background, self.rho_amplitude
            )));
        }
        if self.rho_mode == 0 || self.u_mode == 0 {
            return Err(Error::InvalidData("profile modes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rho(&self, x: f64, length: f64) -> f64 {
        let arg = 2.0 * PI * self.rho_mode as f64 * x / length;
        let wave = match self.rho_shape {
            DensityShape::Sine => arg.sin(),
            DensityShape::Cosine => arg.cos(),
        };
        self.background + self.rho_amplitude * wave
    }

    pub fn u(&self, x: f64, length: f64) -> f64 {
        self.u_amplitude * (PI * self.u_mode as f64 * x / length).sin()
    }
}

/// Samples the datum at cell centres.
pub fn well_prepared_init(grid: &Grid, datum: &WellPreparedData) -> Result<(ScalarField, ScalarField)> {
    datum.validate()?;
    let l = grid.length();
    let rho = ScalarField::from_fn(grid, |x| datum.rho(x, l));
    let u = ScalarField::from_fn(grid, |x| datum.u(x, l));
    if rho.values.iter().any(|&r| r <= 0.0) {
        return Err(Error::InvalidData("sampled density is not positive".into()));
    }
    Ok((rho, u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub times: Vec<f64>,
    pub max_velocity_gradient: Vec<f64>,
    pub max_log_density_gradient: Vec<f64>,
    /// Baselines the growth is measured against: `max(initial, 1/L)`.
    pub velocity_baseline: f64,
    pub log_density_baseline: f64,
    pub tripped: bool,
    pub trip_time: Option<f64>,
}

/// Growth factor at which the reference is declared too steep.
pub const TRIP_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerReference {
    pub fine: Grid,
    pub refinement: usize,
    pub eos: EosParams,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub monitor: SmoothnessReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    /// Number of stored intervals over the horizon.
    pub intervals: usize,
    pub cfl: f64,
    /// Also stop with an error when the monitor trips.
    pub enforce_monitor: bool,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { intervals: 100, cfl: 0.5, enforce_monitor: true }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn monitor_values(grid: &Grid, rho: &[f64], u: &[f64]) -> (f64, f64) {
    let ux = gradient_values(grid, u);
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let g = gradient_values(grid, &logr);
    (max_abs(&ux), max_abs(&g))
}

/// Runs the inviscid scheme on the grid refined `refinement` times, storing
/// `opts.intervals + 1` snapshots evenly spaced over `[0, horizon]`.
pub fn solve_reference(
    grid: &Grid,
    datum: &WellPreparedData,
    eos: &EosParams,
    horizon: f64,
    refinement: usize,
    opts: &ReferenceOptions,
) -> Result<EulerReference> {
    if refinement < 1 {
        return Err(Error::InvalidConfiguration("refinement factor must be at least 1".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if opts.intervals < 2 {
        return Err(Error::InvalidConfiguration("reference needs at least 2 stored intervals".into()));
    }
    let fine = grid.refined(refinement)?;
    let (rho0, u0) = well_prepared_init(&fine, datum)?;
    let params = FluidParams::with_default_floor(*eos, 0.0, 0.0, &rho0)?;
    let mut state = FluidState::from_velocity(0.0, rho0, &u0)?;
    let solver = SolverOptions { cfl: opts.cfl, max_dt: None };

    let (gu0, gr0) = monitor_values(&fine, &state.rho.values, &state.velocity().values);
    let inv_l = 1.0 / fine.length();
    let mut monitor = SmoothnessReport {
        times: vec![0.0],
        max_velocity_gradient: vec![gu0],
        max_log_density_gradient: vec![gr0],
        velocity_baseline: gu0.max(inv_l),
        log_density_baseline: gr0.max(inv_l),
        tripped: false,
        trip_time: None,
    };
    let mut times = vec![0.0];
    let mut rho = vec![state.rho.values.clone()];
    let mut u = vec![state.velocity().values];

    let h = horizon / opts.intervals as f64;
    for k in 1..=opts.intervals {
        let target = if k == opts.intervals { horizon } else { k as f64 * h };
        let span = target - state.t;
        let traj = simulate(&fine, &state, &params, span, span, &solver).map_err(|e| match e {
            Error::NumericalBlowup { time } | Error::Stiffness { time, .. } => Error::HorizonTooLong { time },
            other => other,
        })?;
        state = traj.last().clone();
        state.t = target;
        if state.rho.values.iter().any(|&r| r <= params.rho_floor) {
            return Err(Error::HorizonTooLong { time: target });
        }
        let vel = state.velocity().values;
        let (gu, gr) = monitor_values(&fine, &state.rho.values, &vel);
        monitor.times.push(target);
        monitor.max_velocity_gradient.push(gu);
        monitor.max_log_density_gradient.push(gr);
        let trip = gu >= TRIP_FACTOR * monitor.velocity_baseline || gr >= TRIP_FACTOR * monitor.log_density_baseline;
        if trip && !monitor.tripped {
            monitor.tripped = true;
            monitor.trip_time = Some(target);
            if opts.enforce_monitor {
                return Err(Error::HorizonTooLong { time: target });
            }
        }
        times.push(target);
        rho.push(state.rho.values.clone());
        u.push(vel);
    }
    Ok(EulerReference { fine, refinement, eos: *eos, times, rho, u, monitor })
}

/// Reference fields on a coarse grid at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// `∂ₓu^E`, which is also `D(u^E)` and `div u^E` in 1D.
    pub u_x: Vec<f64>,
    /// `∂ₓ log ρ^E`.
    pub g: Vec<f64>,
    /// `∂ₓₓ log ρ^E`.
    pub g_x: Vec<f64>,
    pub u_t: Vec<f64>,
    /// `∂ₜ∂ₓ log ρ^E`.
    pub g_t: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub dh: Vec<f64>,
}

impl ReferenceSample {
    /// Builds a sample from given fields, evaluating the pressure terms
    /// pointwise. All slices must have the same length.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fields(
        t: f64,
        eos: &EosParams,
        rho: Vec<f64>,
        u: Vec<f64>,
        u_x: Vec<f64>,
        g: Vec<f64>,
        g_x: Vec<f64>,
        u_t: Vec<f64>,
        g_t: Vec<f64>,
    ) -> Result<Self> {
        let n = rho.len();
        if [u.len(), u_x.len(), g.len(), g_x.len(), u_t.len(), g_t.len()].iter().any(|&l| l != n) {
            return Err(Error::InvalidArgument("reference fields differ in length".into()));
        }
        if rho.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Domain("reference density must be positive".into()));
        }
        let p = rho.iter().map(|&r| eos.p(r)).collect();
        let dp = rho.iter().map(|&r| eos.dp(r)).collect();
        let dh = rho.iter().map(|&r| eos.dh(r)).collect();
        Ok(Self { t, rho, u, u_x, g, g_x, u_t, g_t, p, dp, dh })
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// Fine fields at one stored time with `∂ₜu` and `∂ₜ∂ₓ log ρ`.
type FrameFields = (FineFields, Vec<f64>, Vec<f64>);

struct FineFields {
    rho: Vec<f64>,
    u: Vec<f64>,
    u_x: Vec<f64>,
    g: Vec<f64>,
    g_x: Vec<f64>,
}

/// Derivative of the quadratic through three samples, evaluated at `at`.
fn three_point_slope(t: [f64; 3], f: [f64; 3], at: f64) -> f64 {
    let [t0, t1, t2] = t;
    let [f0, f1, f2] = f;
    f0 * ((at - t1) + (at - t2)) / ((t0 - t1) * (t0 - t2))
        + f1 * ((at - t0) + (at - t2)) / ((t1 - t0) * (t1 - t2))
        + f2 * ((at - t0) + (at - t1)) / ((t2 - t0) * (t2 - t1))
}

impl EulerReference {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("reference stores at least two snapshots")
    }

    fn fine_fields(&self, k: usize) -> FineFields {
        let rho = self.rho[k].clone();
        let u = self.u[k].clone();
        let u_x = gradient_values(&self.fine, &u);
        let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
        let g = gradient_values(&self.fine, &logr);
        let g_x = gradient_values(&self.fine, &g);
        FineFields { rho, u, u_x, g, g_x }
    }

    /// Time derivative of `(u, g)` at stored snapshot `k`: centred in the
    /// interior, one-sided three-point at the two ends.
    fn time_derivatives(&self, k: usize, fields: &dyn Fn(usize) -> (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
        let last = self.times.len() - 1;
        let idx = if k == 0 {
            [0, 1, 2]
        } else if k == last {
            [last - 2, last - 1, last]
        } else {
            [k - 1, k, k + 1]
        };
        let ts = [self.times[idx[0]], self.times[idx[1]], self.times[idx[2]]];
        let f: Vec<(Vec<f64>, Vec<f64>)> = idx.iter().map(|&j| fields(j)).collect();
        let n = f[0].0.len();
        let at = self.times[k];
        let du = (0..n).map(|i| three_point_slope(ts, [f[0].0[i], f[1].0[i], f[2].0[i]], at)).collect();
        let dg = (0..n).map(|i| three_point_slope(ts, [f[0].1[i], f[1].1[i], f[2].1[i]], at)).collect();
        (du, dg)
    }

    fn aggregate(values: &[f64], factor: usize) -> Vec<f64> {
        values.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect()
    }

    /// All reference fields on `grid` at time `t`, linearly interpolated in
    /// time between stored snapshots and averaged from the fine cells.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<ReferenceSample> {
        let (start, end) = (self.times[0], self.horizon());
        let tol = 1e-12 * end.abs().max(1.0);
        if !(t >= start - tol && t <= end + tol) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let nf = self.fine.cells();
        if !nf.is_multiple_of(grid.cells()) || (grid.length() - self.fine.length()).abs() > 1e-12 * grid.length() {
            return Err(Error::InvalidArgument(format!(
                "grid with {} cells is not an aggregation of the {nf}-cell reference grid",
                grid.cells()
            )));
        }
        let factor = nf / grid.cells();
        let t = t.clamp(start, end);
        let k = match self.times.iter().position(|&s| s >= t) {
            Some(0) | None => 0,
            Some(j) => j - 1,
        };
        let k1 = (k + 1).min(self.times.len() - 1);
        let theta = if (t - self.times[k]).abs() <= tol {
            0.0
        } else if (t - self.times[k1]).abs() <= tol {
            1.0
        } else {
            (t - self.times[k]) / (self.times[k1] - self.times[k])
        };
        let ug = |j: usize| {
            let logr: Vec<f64> = self.rho[j].iter().map(|r| r.ln()).collect();
            (self.u[j].clone(), gradient_values(&self.fine, &logr))
        };
        let at = |j: usize| -> FrameFields {
            let f = self.fine_fields(j);
            let (du, dg) = self.time_derivatives(j, &ug);
            (f, du, dg)
        };
        let (fa, dua, dga) = at(k);
        let other = if theta == 0.0 { None } else { Some(at(k1)) };
        let blend = |a: &[f64], pick: &dyn Fn(&FrameFields) -> Vec<f64>| -> Vec<f64> {
            let v = match &other {
                None => a.to_vec(),
                Some(b) if theta == 1.0 => pick(b),
                Some(b) => a.iter().zip(pick(b)).map(|(x, y)| (1.0 - theta) * x + theta * y).collect(),
            };
            Self::aggregate(&v, factor)
        };
        ReferenceSample::from_fields(
            t,
            &self.eos,
            blend(&fa.rho, &|b| b.0.rho.clone()),
            blend(&fa.u, &|b| b.0.u.clone()),
            blend(&fa.u_x, &|b| b.0.u_x.clone()),
            blend(&fa.g, &|b| b.0.g.clone()),
            blend(&fa.g_x, &|b| b.0.g_x.clone()),
            blend(&dua, &|b| b.1.clone()),
            blend(&dga, &|b| b.2.clone()),
        )
    }

    pub fn smoothness_monitor(&self) -> &SmoothnessReport {
        &self.monitor
    }

    /// Stored snapshot `k` as a fluid state on the fine grid.
    pub fn state(&self, k: usize) -> FluidState {
        let rho = ScalarField::new(self.rho[k].clone());
        let m = ScalarField::new(self.rho[k].iter().zip(&self.u[k]).map(|(r, u)| r * u).collect());
        FluidState { t: self.times[k], rho, m }
    }
}

/// Monitor evaluated on an arbitrary velocity/density pair, as at `t = 0`.
pub fn initial_gradients(grid: &Grid, rho: &[f64], u: &[f64]) -> (f64, f64) {
    monitor_values(grid, rho, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_examples() {
        let g = Grid::new(1.0, 64).unwrap();
        let (r, u) = well_prepared_init(&g, &WellPreparedData::flat()).unwrap();
        assert!(r.values.iter().all(|&x| x == 1.0) && u.values.iter().all(|&x| x == 0.0));
        let d = WellPreparedData::default();
        assert!(d.u(0.0, 1.0).abs() < 1e-16 && d.u(1.0, 1.0).abs() < 1e-16);
        let bad = WellPreparedData { rho_amplitude: 1.5, ..d };
        assert!(matches!(well_prepared_init(&g, &bad), Err(Error::InvalidData(_))));
    }

    #[test]
    fn equilibrium_reference_is_constant() {
        let g = Grid::new(1.0, 16).unwrap();
        let opts = ReferenceOptions { intervals: 4, ..Default::default() };
        let r = solve_reference(&g, &WellPreparedData::flat(), &EosParams::default(), 0.1, 4, &opts).unwrap();
        assert!(!r.monitor.tripped);
        assert!(r.monitor.max_velocity_gradient.iter().all(|&v| v == 0.0));
        let s = r.sample(&g, 0.037).unwrap();
        assert!(s.rho.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(s.u_x.iter().chain(&s.g).chain(&s.g_t).chain(&s.u_t).all(|&x| x.abs() < 1e-14));
        assert!(matches!(r.sample(&g, 0.2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn sample_matches_stored_snapshot() {
        let g = Grid::new(1.0, 32).unwrap();
        let opts = ReferenceOptions { intervals: 10, ..Default::default() };
        let r = solve_reference(&g, &WellPreparedData::default(), &EosParams::default(), 0.1, 4, &opts).unwrap();
        let s = r.sample(&g, r.times[3]).unwrap();
        let direct: Vec<f64> = r.rho[3].chunks(4).map(|c| c.iter().sum::<f64>() / 4.0).collect();
        assert_eq!(s.rho, direct);
        // Fine-grid velocity vanishes at the walls.
        for u in &r.u {
            assert_eq!(u[0], 0.0);
            assert_eq!(*u.last().unwrap(), 0.0);
        }
        // p = H'ρ - H per snapshot.
        let e = EosParams::default();
        for &rho in &s.rho {
            assert!((e.dh(rho) * rho - e.h(rho) - e.p(rho)).abs() < 1e-14);
        }
    }

    #[test]
    fn log_gradient_of_exponential() {
        let fine = Grid::new(1.0, 256).unwrap();
        let rho: Vec<f64> = fine.centers().map(|x| x.exp()).collect();
        let zero = vec![0.0; 256];
        let r = EulerReference {
            fine,
            refinement: 4,
            eos: EosParams::default(),
            times: vec![0.0, 0.5, 1.0],
            rho: vec![rho.clone(), rho.clone(), rho],
            u: vec![zero.clone(), zero.clone(), zero],
            monitor: SmoothnessReport {
                times: vec![],
                max_velocity_gradient: vec![],
                max_log_density_gradient: vec![],
                velocity_baseline: 1.0,
                log_density_baseline: 1.0,
                tripped: false,
                trip_time: None,
            },
        };
        let s = r.sample(&Grid::new(1.0, 64).unwrap(), 0.25).unwrap();
        assert!(s.g.iter().all(|&v| (v - 1.0).abs() < 1e-10));
        assert!(s.g_t.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_velocity_gradient_monitor() {
        let g = Grid::new(2.0, 50).unwrap();
        let u: Vec<f64> = g.centers().map(|x| 0.3 * x).collect();
        let rho = vec![1.0; 50];
        let (gu, gr) = initial_gradients(&g, &rho, &u);
        assert!((gu - 0.3).abs() < 1e-12);
        assert_eq!(gr, 0.0);
    }

    #[test]
    fn steepening_trips_monitor() {
        let g = Grid::new(1.0, 64).unwrap();
        let d = WellPreparedData { u_amplitude: 1.0, rho_amplitude: 0.0, ..Default::default() };
        let opts = ReferenceOptions { intervals: 40, ..Default::default() };
        let res = solve_reference(&g, &d, &EosParams::new(1.0, 2.0).unwrap(), 2.0, 8, &opts);
        assert!(matches!(res, Err(Error::HorizonTooLong { .. })), "{res:?}");
        let lax = ReferenceOptions { enforce_monitor: false, ..opts };
        let r = solve_reference(&g, &d, &EosParams::new(1.0, 2.0).unwrap(), 2.0, 8, &lax).unwrap();
        assert!(r.monitor.tripped && r.monitor.trip_time.unwrap() < 2.0);
    }

    #[test]
    fn small_amplitude_energy_drift_shrinks() {
        let eos = EosParams::default();
        let drift = |n: usize| {
            let g = Grid::new(1.0, n).unwrap();
            let opts = ReferenceOptions { intervals: 4, ..Default::default() };
            let r = solve_reference(&g, &WellPreparedData::default(), &eos, 0.1, 4, &opts).unwrap();
            let energy = |k: usize| {
                let s = r.state(k);
                let dx = r.fine.dx();
                s.rho.values.iter().zip(&s.m.values).map(|(&rho, &m)| 0.5 * m * m / rho + eos.h(rho)).sum::<f64>() * dx
            };
            (energy(0) - energy(4)).abs()
        };
        let ratio = drift(32) / drift(64);
        assert!(ratio > 1.6, "drift ratio {ratio}");
    }
}
