//! Augmented variables `w = ε ∂ₓ log ρ`, `v = u + w`, the weak forms of the
//! augmented system, the k-entropy budget and static identity checks on a
//! two-dimensional patch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gradient_values, integrate, trapezoid, Grid};
use crate::layer::Cutoff;
use crate::ns::{FluidParams, FluidState, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub sqrt_rho: Vec<f64>,
    /// `∂ₓ√ρ`, taken as `½√ρ ∂ₓ log ρ`.
    pub grad_sqrt_rho: Vec<f64>,
    /// `√ρ D(u)`.
    pub sym: Vec<f64>,
    /// `√ρ A(u)`, zero in 1D.
    pub antisym: Vec<f64>,
    /// No cell sits on the density floor.
    pub reliable: bool,
}

pub fn augment(grid: &Grid, state: &FluidState, epsilon: f64, rho_floor: f64) -> Result<AugmentedState> {
    if state.len() != grid.cells() {
        return Err(Error::InvalidArgument("state size differs from grid".into()));
    }
    let rho = state.rho.values.clone();
    if let Some(bad) = rho.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::Domain(format!("augmented variables need positive density, got {bad}")));
    }
    let u = state.velocity().values;
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let g = gradient_values(grid, &logr);
    let ux = gradient_values(grid, &u);
    let w: Vec<f64> = g.iter().map(|x| epsilon * x).collect();
    let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
    let sqrt_rho: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let grad_sqrt_rho: Vec<f64> = sqrt_rho.iter().zip(&g).map(|(s, gi)| 0.5 * s * gi).collect();
    let sym: Vec<f64> = sqrt_rho.iter().zip(&ux).map(|(s, d)| s * d).collect();
    let reliable = rho.iter().all(|&r| r > rho_floor);
    Ok(AugmentedState { t: state.t, antisym: vec![0.0; rho.len()], rho, u, w, v, sqrt_rho, grad_sqrt_rho, sym, reliable })
}

impl AugmentedState {
    /// `u = v − w`.
    pub fn velocity_from_augmented(&self) -> Vec<f64> {
        self.v.iter().zip(&self.w).map(|(a, b)| a - b).collect()
    }

    /// `2ε ∂ₓ√ρ / √ρ`, which must reproduce `w`.
    pub fn w_from_sqrt(&self, epsilon: f64) -> Vec<f64> {
        self.grad_sqrt_rho.iter().zip(&self.sqrt_rho).map(|(d, s)| 2.0 * epsilon * d / s).collect()
    }
}

/// Square `d × d` tensor per point, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorField {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl TensorField {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim * dim) {
            return Err(Error::InvalidArgument(format!("{} values do not form {dim}x{dim} tensors", values.len())));
        }
        Ok(Self { dim, values })
    }

    pub fn points(&self) -> usize {
        self.values.len() / (self.dim * self.dim)
    }
}

/// Symmetric and antisymmetric parts `D = (∇u + ∇uᵀ)/2`, `A = (∇u − ∇uᵀ)/2`.
pub fn sym_antisym(grad: &TensorField) -> (TensorField, TensorField) {
    let d = grad.dim;
    let mut sym = grad.values.clone();
    let mut anti = grad.values.clone();
    for p in 0..grad.points() {
        let base = p * d * d;
        for i in 0..d {
            for j in 0..d {
                let a = grad.values[base + i * d + j];
                let b = grad.values[base + j * d + i];
                sym[base + i * d + j] = 0.5 * (a + b);
                anti[base + i * d + j] = 0.5 * (a - b);
            }
        }
    }
    (TensorField { dim: d, values: sym }, TensorField { dim: d, values: anti })
}

/// Uniform `n × n` node patch `[x0, x0 + n h)²`, values stored with `x` as
/// the slow index. Centred differences are evaluated away from the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch2 {
    pub n: usize,
    pub origin: f64,
    pub h: f64,
}

impl Patch2 {
    pub fn new(n: usize, origin: f64, length: f64) -> Result<Self> {
        if n < 8 || !(length > 0.0) {
            return Err(Error::InvalidConfiguration(format!("patch needs n ≥ 8 and positive length, got n = {n}")));
        }
        Ok(Self { n, origin, h: length / n as f64 })
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(f(self.coord(i), self.coord(j)));
            }
        }
        out
    }

    fn dx(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 1..n - 1 {
            for j in 0..n {
                out[i * n + j] = (f[(i + 1) * n + j] - f[(i - 1) * n + j]) / (2.0 * self.h);
            }
        }
        out
    }

    fn dy(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 1..n - 1 {
                out[i * n + j] = (f[i * n + j + 1] - f[i * n + j - 1]) / (2.0 * self.h);
            }
        }
        out
    }

    fn d(&self, axis: usize, f: &[f64]) -> Vec<f64> {
        if axis == 0 {
            self.dx(f)
        } else {
            self.dy(f)
        }
    }

    /// Largest absolute value over nodes at least `margin` away from the edges.
    fn interior_max(&self, f: &[f64], margin: usize) -> f64 {
        let n = self.n;
        let mut m = 0.0_f64;
        for i in margin..n - margin {
            for j in margin..n - margin {
                m = m.max(f[i * n + j].abs());
            }
        }
        m
    }
}

fn check_positive(rho: &[f64]) -> Result<()> {
    match rho.iter().find(|&&r| !(r > 0.0)) {
        Some(bad) => Err(Error::Domain(format!("density must be positive, got {bad}"))),
        None => Ok(()),
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    /// Pointwise residual magnitude; edge nodes are left at zero.
    pub field: Vec<f64>,
    /// Maximum over the interior nodes.
    pub max: f64,
}

const IDENTITY_MARGIN: usize = 3;

/// Residual of
/// `2ε ∇div(ρu) = 2ε div(ρu⊗∇log ρ + ρ∇log ρ⊗u) − 2εΔ(ρu) + 4ε div(ρD(u))`
/// with every operator built from centred differences.
pub fn derivation_identity_residual(patch: &Patch2, rho: &[f64], u: [&[f64]; 2], epsilon: f64) -> Result<IdentityResidual> {
    let nn = patch.n * patch.n;
    if rho.len() != nn || u[0].len() != nn || u[1].len() != nn {
        return Err(Error::InvalidArgument("patch fields have the wrong size".into()));
    }
    check_positive(rho)?;
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let g = [patch.dx(&logr), patch.dy(&logr)];
    let m = [zip_with(rho, u[0], |r, v| r * v), zip_with(rho, u[1], |r, v| r * v)];
    let div_m = zip_with(&patch.dx(&m[0]), &patch.dy(&m[1]), |a, b| a + b);
    let grad_u = [[patch.dx(u[0]), patch.dy(u[0])], [patch.dx(u[1]), patch.dy(u[1])]];

    let mut field = vec![0.0; nn];
    for i in 0..2 {
        let lhs: Vec<f64> = patch.d(i, &div_m).iter().map(|x| 2.0 * epsilon * x).collect();
        let mut rhs = vec![0.0; nn];
        for j in 0..2 {
            // ρ u_i g_j + ρ g_i u_j
            let t: Vec<f64> = (0..nn).map(|p| rho[p] * (u[i][p] * g[j][p] + g[i][p] * u[j][p])).collect();
            let dt = patch.d(j, &t);
            let lap = patch.d(j, &patch.d(j, &m[i]));
            // ρ D_ij with D_ij = (∂_j u_i + ∂_i u_j)/2
            let sd: Vec<f64> = (0..nn).map(|p| rho[p] * 0.5 * (grad_u[i][j][p] + grad_u[j][i][p])).collect();
            let dsd = patch.d(j, &sd);
            for p in 0..nn {
                rhs[p] += 2.0 * epsilon * dt[p] - 2.0 * epsilon * lap[p] + 4.0 * epsilon * dsd[p];
            }
        }
        for p in 0..nn {
            let r = lhs[p] - rhs[p];
            field[p] = (field[p] * field[p] + r * r).sqrt();
        }
    }
    clear_edges(patch, &mut field, IDENTITY_MARGIN);
    let max = patch.interior_max(&field, IDENTITY_MARGIN);
    Ok(IdentityResidual { field, max })
}

fn clear_edges(patch: &Patch2, f: &mut [f64], margin: usize) {
    let n = patch.n;
    for i in 0..n {
        for j in 0..n {
            if i < margin || j < margin || i >= n - margin || j >= n - margin {
                f[i * n + j] = 0.0;
            }
        }
    }
}

/// Interior maximum of the discrete curl of `ρ ∇log ρ`.
pub fn curl_free_check(patch: &Patch2, rho: &[f64]) -> Result<f64> {
    if rho.len() != patch.n * patch.n {
        return Err(Error::InvalidArgument("patch field has the wrong size".into()));
    }
    check_positive(rho)?;
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let fx = zip_with(rho, &patch.dx(&logr), |r, g| r * g);
    let fy = zip_with(rho, &patch.dy(&logr), |r, g| r * g);
    let curl = zip_with(&patch.dx(&fy), &patch.dy(&fx), |a, b| a - b);
    Ok(patch.interior_max(&curl, 2))
}

/// Interior maximum of `|∂ₓ∂ᵧ log ρ − ∂ᵧ∂ₓ log ρ|`, the discrete form of
/// `∇w = ∇ᵀw`.
pub fn log_hessian_asymmetry(patch: &Patch2, rho: &[f64]) -> Result<f64> {
    check_positive(rho)?;
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let a = patch.dy(&patch.dx(&logr));
    let b = patch.dx(&patch.dy(&logr));
    Ok(patch.interior_max(&zip_with(&a, &b, |x, y| x - y), 2))
}

/// `φ(t, x) = cos(ωt) · A ξ((x − c)/h)` with the standard bump `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
    pub time_frequency: f64,
}

impl TestFunction {
    pub fn validate(&self, length: f64) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::InvalidTestFunction(format!("half width must be positive, got {}", self.half_width)));
        }
        if !(self.center - self.half_width > 0.0 && self.center + self.half_width < length) {
            return Err(Error::InvalidTestFunction(format!(
                "support [{}, {}] must lie strictly inside (0, {length})",
                self.center - self.half_width,
                self.center + self.half_width
            )));
        }
        Ok(())
    }

    /// `(φ, ∂ₜφ, ∂ₓφ, ∂ₓₓφ)` at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64, f64) {
        let xi = Cutoff::default();
        let s = (x - self.center) / self.half_width;
        let h = self.half_width;
        let chi = (self.time_frequency * t).cos();
        let dchi = -self.time_frequency * (self.time_frequency * t).sin();
        let a = self.amplitude;
        (chi * a * xi.xi(s), dchi * a * xi.xi(s), chi * a * xi.dxi(s) / h, chi * a * xi.d2xi(s) / (h * h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakEquation {
    Mass,
    MomentumV,
    MomentumW,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub residual: f64,
    pub terms: Vec<(String, f64)>,
    /// Same form with the viscous splits taken with their printed
    /// coefficients (doubled symmetric split, negative sign on the
    /// transposed-gradient term).
    pub literal_residual: f64,
}

/// Evaluates one weak form of the augmented system along a trajectory, with
/// trapezoid time quadrature over the snapshots.
pub fn weak_residual(traj: &Trajectory, params: &FluidParams, phi: &TestFunction, which: WeakEquation) -> Result<WeakResidual> {
    let grid = &traj.grid;
    phi.validate(grid.length())?;
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: traj.snapshots.len() });
    }
    let eps = params.epsilon;
    let r1 = params.drag;
    let times = traj.times();
    let n = grid.cells();

    // Per-snapshot spatial integrals, named.
    let mut names: Vec<&str> = Vec::new();
    let mut series: Vec<Vec<f64>> = Vec::new();
    let mut endpoint0 = 0.0;
    let mut endpoint1 = 0.0;
    let last = traj.snapshots.len() - 1;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let a = augment(grid, s, eps, params.rho_floor)?;
        let t = s.t;
        let ph: Vec<(f64, f64, f64, f64)> = grid.centers().map(|x| phi.eval(t, x)).collect();
        let int = |f: &dyn Fn(usize) -> f64| integrate(grid, &(0..n).map(f).collect::<Vec<f64>>());
        let (carrier, vals): (Vec<f64>, Vec<(&str, f64)>) = match which {
            WeakEquation::Mass => {
                let c: Vec<f64> = a.rho.clone();
                let vals = vec![("time", int(&|i| a.rho[i] * ph[i].1)), ("flux", int(&|i| a.rho[i] * a.u[i] * ph[i].2))];
                (c, vals)
            }
            WeakEquation::MomentumV => {
                let c: Vec<f64> = (0..n).map(|i| a.rho[i] * a.v[i]).collect();
                let split = |f: &[f64], i: usize| {
                    -eps * a.rho[i] * f[i] * ph[i].3 - 2.0 * eps * a.sqrt_rho[i] * f[i] * a.grad_sqrt_rho[i] * ph[i].2
                };
                let half = |f: &[f64], i: usize| 0.5 * split(f, i);
                let vals = vec![
                    ("time", int(&|i| c[i] * ph[i].1)),
                    ("flux", int(&|i| c[i] * a.u[i] * ph[i].2)),
                    // ε∫ρD(v):∇φ, both index orders, half weight each.
                    ("visc_sym", int(&|i| half(&a.v, i) + half(&a.v, i))),
                    ("visc_antisym", int(&|i| half(&a.v, i) - half(&a.v, i))),
                    ("visc_w", int(&|i| split(&a.w, i))),
                    ("drag", int(&|i| r1 * a.rho[i] * a.u[i].abs() * a.u[i] * ph[i].0)),
                    ("pressure", int(&|i| params.eos.p(a.rho[i]) * ph[i].2)),
                ];
                (c, vals)
            }
            WeakEquation::MomentumW => {
                let c: Vec<f64> = (0..n).map(|i| a.rho[i] * a.w[i]).collect();
                let split = |f: &[f64], i: usize| {
                    -eps * a.rho[i] * f[i] * ph[i].3 - 2.0 * eps * a.sqrt_rho[i] * f[i] * a.grad_sqrt_rho[i] * ph[i].2
                };
                let vals = vec![
                    ("time", int(&|i| c[i] * ph[i].1)),
                    ("flux", int(&|i| c[i] * a.u[i] * ph[i].2)),
                    ("visc_transpose", int(&|i| split(&a.u, i))),
                ];
                (c, vals)
            }
        };
        if k == 0 {
            endpoint0 = integrate(grid, &(0..n).map(|i| carrier[i] * ph[i].0).collect::<Vec<f64>>());
        }
        if k == last {
            endpoint1 = integrate(grid, &(0..n).map(|i| carrier[i] * ph[i].0).collect::<Vec<f64>>());
        }
        if names.is_empty() {
            names = vals.iter().map(|(nm, _)| *nm).collect();
            series = vec![Vec::with_capacity(traj.snapshots.len()); vals.len()];
        }
        for (col, (_, v)) in series.iter_mut().zip(vals) {
            col.push(v);
        }
    }

    let mut terms = vec![("endpoint_T".to_string(), -endpoint1), ("endpoint_0".to_string(), endpoint0)];
    for (name, col) in names.iter().zip(&series) {
        terms.push((name.to_string(), trapezoid(&times, col)?));
    }
    let get = |name: &str| terms.iter().find(|(n, _)| n == name).map_or(0.0, |(_, v)| *v);
    let base = get("endpoint_T") + get("endpoint_0") + get("time") + get("flux");
    let (residual, literal_residual) = match which {
        WeakEquation::Mass => (base, base),
        WeakEquation::MomentumV => {
            let visc = -get("visc_sym") - get("visc_antisym") + get("visc_w");
            let rest = -get("drag") + get("pressure");
            (base + visc + rest, base - 2.0 * get("visc_sym") - get("visc_antisym") + get("visc_w") + rest)
        }
        WeakEquation::MomentumW => (base + get("visc_transpose"), base - get("visc_transpose")),
    };
    Ok(WeakResidual { residual, terms, literal_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEntropyBudget {
    pub times: Vec<f64>,
    /// `∫ ½ρ(|v|² + |w|²) + ∫ H(ρ)`.
    pub entropy: Vec<f64>,
    /// `ε ∫₀ᵗ∫ |√ρ D(u)|²`.
    pub sym: Vec<f64>,
    /// `ε ∫₀ᵗ∫ |√ρ A(u)|²`.
    pub antisym: Vec<f64>,
    /// `ε ∫₀ᵗ∫ (p'(ρ)/ρ)|ρ_x|²`.
    pub pressure: Vec<f64>,
    /// `r₁ ∫₀ᵗ∫ ρ|u|³ + ε r₁ ∫₀ᵗ∫ |u|u ρ_x`.
    pub damping: Vec<f64>,
    pub residual: Vec<f64>,
    pub reliable: bool,
}

impl KEntropyBudget {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

pub fn k_entropy_report(traj: &Trajectory, params: &FluidParams) -> Result<KEntropyBudget> {
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: traj.snapshots.len() });
    }
    let grid = &traj.grid;
    let eps = params.epsilon;
    let r1 = params.drag;
    let mut b = KEntropyBudget {
        times: traj.times(),
        entropy: vec![],
        sym: vec![],
        antisym: vec![],
        pressure: vec![],
        damping: vec![],
        residual: vec![],
        reliable: true,
    };
    let mut e0 = 0.0;
    for (k, (s, c)) in traj.snapshots.iter().zip(&traj.cumulative).enumerate() {
        let a = augment(grid, s, eps, params.rho_floor)?;
        b.reliable &= a.reliable;
        let dens: Vec<f64> =
            (0..a.rho.len()).map(|i| 0.5 * a.rho[i] * (a.v[i] * a.v[i] + a.w[i] * a.w[i]) + params.eos.h(a.rho[i])).collect();
        let e = integrate(grid, &dens);
        if k == 0 {
            e0 = e;
        }
        let sym = eps * c.strain;
        let press = eps * c.pressure_gradient;
        let damp = r1 * c.drag + eps * r1 * c.drag_cross;
        b.entropy.push(e);
        b.sym.push(sym);
        b.antisym.push(0.0);
        b.pressure.push(press);
        b.damping.push(damp);
        b.residual.push(e + sym + press + damp - e0);
    }
    Ok(b)
}

/// `|ε r₁ ∫∫ |u|u ρ_x| ≤ ½ε ∫∫ ρ|D(u)|² + (r₁/6) ∫∫ ρ + (r₁/3) ∫∫ ρ|u|³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn drag_absorption_check(traj: &Trajectory, params: &FluidParams) -> Result<DragBound> {
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: traj.snapshots.len() });
    }
    let c = traj.cumulative.last().expect("non-empty");
    let masses: Vec<f64> = traj.snapshots.iter().map(|s| s.mass(&traj.grid)).collect();
    let mass_time = trapezoid(&traj.times(), &masses)?;
    let eps = params.epsilon;
    let r1 = params.drag;
    let lhs = (eps * r1 * c.drag_cross).abs();
    let rhs = 0.5 * eps * c.strain + r1 / 6.0 * mass_time + r1 / 3.0 * c.drag;
    Ok(DragBound { lhs, rhs, holds: lhs <= rhs })
}
