//! Relative energy between a viscous trajectory and the Euler reference
//! corrected by the fake boundary layer, its remainder terms, the
//! boundary-strip monitors and the Gronwall closure.

use serde::{Deserialize, Serialize};

use crate::augmented::augment;
use crate::error::{Error, Result};
use crate::euler::{EulerReference, ReferenceSample};
use crate::field::{boundary_strip, cumulative_trapezoid, gradient_values, integrate, integrate_masked, lp_norm_values, trapezoid, Grid};
use crate::layer::{fake_layer_min_cells, make_cutoff, LayerFields, VelocityTrace};
use crate::ns::{FluidParams, FluidState, Trajectory};

/// Comparator fields `ū = u^E − v_bl`, `w̄ = δ̃ ∂ₓ log ρ^E`, `v̄ = ū + w̄`
/// with their derivatives composed from the reference and layer data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparator {
    pub u_bar: Vec<f64>,
    pub u_bar_x: Vec<f64>,
    pub u_bar_t: Vec<f64>,
    pub w_bar: Vec<f64>,
    pub w_bar_x: Vec<f64>,
    pub w_bar_t: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub v_bar_x: Vec<f64>,
    pub v_bl: Vec<f64>,
    pub v_bl_x: Vec<f64>,
    pub v_bl_t: Vec<f64>,
}

/// `layer = None` uses `v_bl ≡ 0`.
pub fn build_comparator(sample: &ReferenceSample, layer: Option<&LayerFields>, eps_tilde: f64) -> Result<Comparator> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidArgument("comparator needs at least two cells".into()));
    }
    let zeros = vec![0.0; n];
    let (v_bl, v_bl_x, v_bl_t) = match layer {
        Some(l) => {
            if l.v_bl.len() != n {
                return Err(Error::InvalidArgument("layer and reference differ in size".into()));
            }
            (l.v_bl.clone(), l.v_bl_x.clone(), l.v_bl_t.clone())
        }
        None => (zeros.clone(), zeros.clone(), zeros),
    };
    let mut u_bar: Vec<f64> = (0..n).map(|i| sample.u[i] - v_bl[i]).collect();
    u_bar[0] = 0.0;
    u_bar[n - 1] = 0.0;
    let u_bar_x: Vec<f64> = (0..n).map(|i| sample.u_x[i] - v_bl_x[i]).collect();
    let u_bar_t: Vec<f64> = (0..n).map(|i| sample.u_t[i] - v_bl_t[i]).collect();
    let w_bar: Vec<f64> = sample.g.iter().map(|g| eps_tilde * g).collect();
    let w_bar_x: Vec<f64> = sample.g_x.iter().map(|g| eps_tilde * g).collect();
    let w_bar_t: Vec<f64> = sample.g_t.iter().map(|g| eps_tilde * g).collect();
    let v_bar = (0..n).map(|i| u_bar[i] + w_bar[i]).collect();
    let v_bar_x = (0..n).map(|i| u_bar_x[i] + w_bar_x[i]).collect();
    Ok(Comparator { u_bar, u_bar_x, u_bar_t, w_bar, w_bar_x, w_bar_t, v_bar, v_bar_x, v_bl, v_bl_x, v_bl_t })
}

/// One snapshot paired with the reference and comparator at the same time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub state: FluidState,
    pub reference: ReferenceSample,
    pub comparator: Comparator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSettings {
    /// Layer width factor, `δ = cε`.
    pub layer_c: f64,
    /// `δ̃` multiplier: `w̄ = δ̃_scale · ε ∂ₓ log ρ^E`.
    pub eps_tilde_scale: f64,
    pub layer: bool,
    pub min_layer_cells: usize,
}

impl Default for ComparatorSettings {
    fn default() -> Self {
        Self { layer_c: 1.0, eps_tilde_scale: 1.0, layer: true, min_layer_cells: 2 }
    }
}

fn check_horizon(traj: &Trajectory, reference: &EulerReference) -> Result<()> {
    let t_end = traj.last().t;
    let h = reference.horizon();
    if t_end > h + 1e-12 * h.max(1.0) {
        return Err(Error::HorizonMismatch(format!("trajectory ends at {t_end}, reference at {h}")));
    }
    Ok(())
}

pub fn layer_at(grid: &Grid, sample: &ReferenceSample, epsilon: f64, settings: &ComparatorSettings) -> Result<LayerFields> {
    let trace = VelocityTrace { u: sample.u.clone(), u_x: sample.u_x.clone(), u_t: sample.u_t.clone() };
    fake_layer_min_cells(grid, &trace, epsilon, settings.layer_c, &make_cutoff(), settings.min_layer_cells)
}

pub fn frames_from(
    traj: &Trajectory,
    reference: &EulerReference,
    params: &FluidParams,
    settings: &ComparatorSettings,
) -> Result<Vec<Frame>> {
    check_horizon(traj, reference)?;
    let grid = &traj.grid;
    traj.snapshots
        .iter()
        .map(|s| {
            let sample = reference.sample(grid, s.t)?;
            let layer = if settings.layer { Some(layer_at(grid, &sample, params.epsilon, settings)?) } else { None };
            let comparator = build_comparator(&sample, layer.as_ref(), settings.eps_tilde_scale * params.epsilon)?;
            Ok(Frame { state: s.clone(), reference: sample, comparator })
        })
        .collect()
}

/// Fluid quantities used by every functional.
struct FluidView {
    rho: Vec<f64>,
    u: Vec<f64>,
    u_x: Vec<f64>,
    g: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    w_x: Vec<f64>,
    reliable: bool,
}

fn view(grid: &Grid, state: &FluidState, params: &FluidParams) -> Result<FluidView> {
    let a = augment(grid, state, params.epsilon, params.rho_floor)?;
    let u_x = gradient_values(grid, &a.u);
    let w_x = gradient_values(grid, &a.w);
    let logr: Vec<f64> = a.rho.iter().map(|r| r.ln()).collect();
    let g = gradient_values(grid, &logr);
    Ok(FluidView { rho: a.rho, u: a.u, u_x, g, v: a.v, w: a.w, w_x, reliable: a.reliable })
}

fn check_frames(grid: &Grid, frames: &[Frame]) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = grid.cells();
    for f in frames {
        if f.state.len() != n || f.reference.len() != n || f.comparator.u_bar.len() != n {
            return Err(Error::InvalidArgument("frame size differs from grid".into()));
        }
        if (f.state.t - f.reference.t).abs() > 1e-12 * f.state.t.abs().max(1.0) {
            return Err(Error::HorizonMismatch(format!("snapshot at {} paired with reference at {}", f.state.t, f.reference.t)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `∫ ½ρ(|v − v̄|² + |w − w̄|²)`.
    pub kinetic: Vec<f64>,
    /// `∫ H(ρ|ρ^E)`.
    pub potential: Vec<f64>,
    /// `ε ∫₀ᵗ∫ ρ|∂ₓu − ∂ₓū|²`.
    pub history: Vec<f64>,
    pub reliable: bool,
}

fn static_energy(grid: &Grid, v: &FluidView, f: &Frame, params: &FluidParams) -> (f64, f64) {
    let c = &f.comparator;
    let n = v.rho.len();
    let kin: Vec<f64> = (0..n)
        .map(|i| {
            let dv = v.v[i] - c.v_bar[i];
            let dw = v.w[i] - c.w_bar[i];
            0.5 * v.rho[i] * (dv * dv + dw * dw)
        })
        .collect();
    let pot: Vec<f64> = (0..n).map(|i| params.eos.rel_h(v.rho[i], f.reference.rho[i])).collect();
    (integrate(grid, &kin), integrate(grid, &pot))
}

pub fn energy(grid: &Grid, frames: &[Frame], params: &FluidParams) -> Result<EnergySeries> {
    check_frames(grid, frames)?;
    let mut s = EnergySeries {
        times: frames.iter().map(|f| f.state.t).collect(),
        energy: vec![],
        kinetic: vec![],
        potential: vec![],
        history: vec![],
        reliable: true,
    };
    let mut hist_rate = Vec::with_capacity(frames.len());
    for f in frames {
        let v = view(grid, &f.state, params)?;
        s.reliable &= v.reliable;
        let (k, p) = static_energy(grid, &v, f, params);
        s.kinetic.push(k);
        s.potential.push(p);
        let d: Vec<f64> = (0..v.rho.len())
            .map(|i| {
                let e = v.u_x[i] - f.comparator.u_bar_x[i];
                params.epsilon * v.rho[i] * e * e
            })
            .collect();
        hist_rate.push(integrate(grid, &d));
    }
    s.history = cumulative_trapezoid(&s.times, &hist_rate);
    s.energy = (0..frames.len()).map(|k| s.kinetic[k] + s.potential[k] + s.history[k]).collect();
    Ok(s)
}

/// Energy of one frame with empty viscous history.
pub fn initial_energy(grid: &Grid, frame: &Frame, params: &FluidParams) -> Result<f64> {
    check_frames(grid, std::slice::from_ref(frame))?;
    let v = view(grid, &frame.state, params)?;
    let (k, p) = static_energy(grid, &v, frame, params);
    Ok(k + p)
}

/// Sub-diagnostics of the convective remainder.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvectiveParts {
    /// `∫∫ ρ ∂ₓū (u − ū)(ū − u)`.
    pub tilde: f64,
    /// `∫∫ ρ ∂ₓu^E v_bl (ū − u)`.
    pub tilde_1: f64,
    /// `∫∫ ρ ∂ₓu^E (u − u^E)(ū − u)`.
    pub tilde_2: f64,
    /// `−∫∫ ρ u ∂ₓv_bl (ū − u)`.
    pub tilde_3: f64,
    /// `−∫∫ ρ ∂ₓv_bl (v_bl − u^E)(ū − u)`.
    pub tilde_4: f64,
    /// `−∫∫ ρ (ū − u) ∂ₓū v_bl`.
    pub layer_a: f64,
    /// `−∫∫ ρ (ū − u) u^E ∂ₓv_bl`.
    pub layer_b: f64,
    /// Total minus `tilde + layer_a + layer_b`; nonzero only through the
    /// wall cells where `ū` is pinned to zero.
    pub split_defect: f64,
}

/// The seven viscous integrals of the ninth remainder, 1D reductions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViscousParts {
    pub sym_v: f64,
    pub antisym_v: f64,
    pub grad_w: f64,
    pub transpose_u: f64,
    pub sym_cross: f64,
    pub antisym_cross: f64,
    pub comparator_square: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PressureParts {
    /// `−∫∫ [−p(ρ^E)∂ₓu^E + p(ρ)∂ₓv̄ − p'(ρ^E)(ρ−ρ^E)∂ₓu^E]`.
    pub display: f64,
    /// `ε ∫∫ ρ p'(ρ^E) g^E (g^E − g)`.
    pub eps_reference: f64,
    /// `−ε ∫∫ ρ p'(ρ) g g^E`.
    pub eps_fluid: f64,
    /// `−∫∫ [p(ρ) − p(ρ^E) − p'(ρ^E)(ρ−ρ^E)] ∂ₓu^E`, the part bounded by `C∫E`.
    pub absorbable: f64,
    /// `∫∫ p(ρ) ∂ₓv_bl`.
    pub layer: f64,
    /// `−∫∫ p(ρ) ∂ₓw̄`.
    pub comparator_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remainders {
    /// `R₁ … R₁₁` in order.
    pub r: [f64; 11],
    pub convective: ConvectiveParts,
    pub viscous: ViscousParts,
    pub pressure: PressureParts,
    /// `Σ|Rᵢ|` with the absorbable parts of the fifth and tenth removed.
    pub eta: f64,
    pub eta_raw: f64,
    pub reliable: bool,
}

const NCOL: usize = 11 + 8 + 7 + 6;

#[allow(clippy::needless_range_loop)]
fn frame_integrals(grid: &Grid, f: &Frame, params: &FluidParams) -> Result<([f64; NCOL], bool)> {
    let v = view(grid, &f.state, params)?;
    let c = &f.comparator;
    let r = &f.reference;
    let eps = params.epsilon;
    let eos = &params.eos;
    let n = v.rho.len();
    let mut dens = vec![[0.0; NCOL]; n];
    for i in 0..n {
        let rho = v.rho[i];
        let u = v.u[i];
        let du = c.u_bar[i] - u;
        let dg = r.g[i] - v.g[i];
        let d = &mut dens[i];
        d[0] = rho * c.v_bl_t[i] * du;
        d[1] = eps * rho * c.u_bar_t[i] * dg;
        d[2] = eps * rho * r.g_t[i] * du;
        d[3] = 2.0 * eps * eps * rho * r.g_t[i] * dg;
        d[4] = rho * c.u_bar_x[i] * u * du - rho * r.u_x[i] * r.u[i] * du;
        d[5] = eps * rho * c.u_bar_x[i] * u * dg;
        d[6] = eps * rho * r.g_x[i] * u * du;
        d[7] = 2.0 * eps * eps * rho * r.g_x[i] * u * dg;

        let v_x = v.u_x[i] + v.w_x[i];
        let sq = rho.sqrt();
        let visc = [
            eps * rho * v_x * c.v_bar_x[i],
            0.0,
            -eps * rho * v.w_x[i] * c.v_bar_x[i],
            eps * rho * v.u_x[i] * c.w_bar_x[i],
            -2.0 * eps * sq * (sq * v.u_x[i]) * c.u_bar_x[i],
            0.0,
            eps * rho * c.u_bar_x[i] * c.u_bar_x[i],
        ];
        d[8] = visc.iter().sum();
        d[19..26].copy_from_slice(&visc);

        let re = r.rho[i];
        let p = eos.p(rho);
        let display = -(-r.p[i] * r.u_x[i] + p * c.v_bar_x[i] - r.dp[i] * (rho - re) * r.u_x[i]);
        let eps_ref = eps * rho * r.dp[i] * r.g[i] * (r.g[i] - v.g[i]);
        let eps_fl = -eps * rho * eos.dp(rho) * v.g[i] * r.g[i];
        d[9] = display + eps_ref + eps_fl;
        d[26] = display;
        d[27] = eps_ref;
        d[28] = eps_fl;
        d[29] = -(p - r.p[i] - r.dp[i] * (rho - re)) * r.u_x[i];
        d[30] = p * c.v_bl_x[i];
        d[31] = -p * c.w_bar_x[i];

        d[10] = params.drag * rho * u.abs() * u * c.v_bar[i];

        d[11] = rho * c.u_bar_x[i] * (u - c.u_bar[i]) * du;
        d[12] = rho * r.u_x[i] * c.v_bl[i] * du;
        d[13] = rho * r.u_x[i] * (u - r.u[i]) * du;
        d[14] = -rho * u * c.v_bl_x[i] * du;
        d[15] = -rho * c.v_bl_x[i] * (c.v_bl[i] - r.u[i]) * du;
        d[16] = -rho * du * c.u_bar_x[i] * c.v_bl[i];
        d[17] = -rho * du * r.u[i] * c.v_bl_x[i];
    }
    let mut out = [0.0; NCOL];
    for (k, o) in out.iter_mut().enumerate() {
        if k == 18 {
            continue;
        }
        let col: Vec<f64> = dens.iter().map(|d| d[k]).collect();
        *o = integrate(grid, &col);
    }
    Ok((out, v.reliable))
}

pub fn remainder_terms(grid: &Grid, frames: &[Frame], params: &FluidParams) -> Result<Remainders> {
    check_frames(grid, frames)?;
    if frames.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: frames.len() });
    }
    let times: Vec<f64> = frames.iter().map(|f| f.state.t).collect();
    let mut cols = vec![Vec::new(); NCOL];
    let mut reliable = true;
    for f in frames {
        let (vals, ok) = frame_integrals(grid, f, params)?;
        reliable &= ok;
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let mut tot = [0.0; NCOL];
    for (t, c) in tot.iter_mut().zip(&cols) {
        *t = trapezoid(&times, c)?;
    }
    let mut r = [0.0; 11];
    r.copy_from_slice(&tot[..11]);
    let mut convective = ConvectiveParts {
        tilde: tot[11],
        tilde_1: tot[12],
        tilde_2: tot[13],
        tilde_3: tot[14],
        tilde_4: tot[15],
        layer_a: tot[16],
        layer_b: tot[17],
        split_defect: 0.0,
    };
    convective.split_defect = r[4] - (convective.tilde + convective.layer_a + convective.layer_b);
    let viscous = ViscousParts {
        sym_v: tot[19],
        antisym_v: tot[20],
        grad_w: tot[21],
        transpose_u: tot[22],
        sym_cross: tot[23],
        antisym_cross: tot[24],
        comparator_square: tot[25],
    };
    let pressure = PressureParts {
        display: tot[26],
        eps_reference: tot[27],
        eps_fluid: tot[28],
        absorbable: tot[29],
        layer: tot[30],
        comparator_w: tot[31],
    };
    let eta_raw = r.iter().map(|x| x.abs()).sum();
    let eta = r.iter().enumerate().filter(|(i, _)| *i != 4 && *i != 9).map(|(_, x)| x.abs()).sum::<f64>()
        + (r[4] - convective.tilde_2).abs()
        + (r[9] - pressure.absorbable).abs();
    Ok(Remainders { r, convective, viscous, pressure, eta, eta_raw, reliable })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCross {
    pub times: Vec<f64>,
    /// Spatial integral of `ερ(p'(ρ)g − p'(ρ^E)g^E)(g − g^E)` per snapshot.
    pub series: Vec<f64>,
    /// `ερ p'(ρ)|g − g^E|²`.
    pub positive_part: Vec<f64>,
    /// `ε ∂ₓ[p(ρ) − p(ρ^E) − p'(ρ^E)(ρ−ρ^E)] g^E`.
    pub gradient_part: Vec<f64>,
    /// `−ε[ρ(p'(ρ) − p'(ρ^E)) − p''(ρ^E)(ρ−ρ^E)ρ^E] |g^E|²`.
    pub quadratic_part: Vec<f64>,
    /// Time integral of `series`.
    pub total: f64,
    pub positive_holds: bool,
    /// Largest `|series − Σ parts|` relative to the largest part.
    pub split_defect: f64,
    /// `|∫∫ p(ρ|ρ^E) ∂ₓu^E|` and its bound `(γ−1)‖∂ₓu^E‖_∞ ∫₀ᵀ E`.
    pub absorbable: f64,
    pub absorbable_bound: f64,
}

#[allow(clippy::needless_range_loop)]
pub fn pressure_cross_term(grid: &Grid, frames: &[Frame], params: &FluidParams, energy_series: &EnergySeries) -> Result<PressureCross> {
    check_frames(grid, frames)?;
    let eps = params.epsilon;
    let eos = &params.eos;
    let times: Vec<f64> = frames.iter().map(|f| f.state.t).collect();
    let mut out = PressureCross {
        times: times.clone(),
        series: vec![],
        positive_part: vec![],
        gradient_part: vec![],
        quadratic_part: vec![],
        total: 0.0,
        positive_holds: true,
        split_defect: 0.0,
        absorbable: 0.0,
        absorbable_bound: 0.0,
    };
    let mut absorb = Vec::with_capacity(frames.len());
    let mut div_sup = 0.0_f64;
    for f in frames {
        let v = view(grid, &f.state, params)?;
        let r = &f.reference;
        let n = v.rho.len();
        let mut cols = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let (rho, re, g, ge) = (v.rho[i], r.rho[i], v.g[i], r.g[i]);
            let dpf = eos.dp(rho);
            let dpe = eos.dp(re);
            cols[0][i] = eps * rho * (dpf * g - dpe * ge) * (g - ge);
            cols[1][i] = eps * rho * dpf * (g - ge) * (g - ge);
            let grad_bracket = (dpf - dpe) * rho * g - eos.d2p(re) * re * ge * (rho - re);
            cols[2][i] = eps * grad_bracket * ge;
            cols[3][i] = -eps * (rho * (dpf - dpe) - eos.d2p(re) * (rho - re) * re) * ge * ge;
            cols[4][i] = (eos.p(rho) - eos.p(re) - dpe * (rho - re)) * r.u_x[i];
            div_sup = div_sup.max(r.u_x[i].abs());
        }
        let ints: Vec<f64> = cols.iter().map(|c| integrate(grid, c)).collect();
        out.positive_holds &= ints[1] >= 0.0;
        let scale = ints[1].abs().max(ints[2].abs()).max(ints[3].abs()).max(f64::MIN_POSITIVE);
        out.split_defect = out.split_defect.max((ints[0] - ints[1] - ints[2] - ints[3]).abs() / scale);
        out.series.push(ints[0]);
        out.positive_part.push(ints[1]);
        out.gradient_part.push(ints[2]);
        out.quadratic_part.push(ints[3]);
        absorb.push(ints[4]);
    }
    if frames.len() >= 2 {
        out.total = trapezoid(&times, &out.series)?;
        out.absorbable = trapezoid(&times, &absorb)?.abs();
        let e_int = trapezoid(&energy_series.times, &energy_series.energy)?;
        out.absorbable_bound = (eos.gamma - 1.0) * div_sup * e_int;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub epsilon: f64,
    pub strip_width: f64,
    /// `‖ρ‖_{L^γ(0,T; L^γ(Γ))}`.
    pub lgamma_norm: f64,
    /// `lgamma_norm / ε^{1/γ}`.
    pub lgamma_monitor: f64,
    /// `∫∫_Γ ρ|u|²/d²`.
    pub hardy_integral: f64,
    /// `ε^{(γ−1)/γ} ∫∫_Γ ρ|u|²/d²`.
    pub kato_monitor: f64,
    /// `ε ∫∫_Γ ρ|u|²/d²`.
    pub kato_consequence: f64,
    /// `ε∫∫ρ|u|²/d²`, `ε∫∫ρ²|u·n|²/d²`, `ε∫∫ 2ερ|D(u)|²`.
    pub sueur: [f64; 3],
    /// `∫∫ ρ^γ/(γ−1)`, `ε∫∫ρ|u|²/d²`, `ε∫∫ 2ερ|D(u)|²`.
    pub bardos_nguyen: [f64; 3],
    /// `ε ∫∫_Γ |D(u)|²` without the density weight.
    pub raw_strain: f64,
    /// `ε ∫∫_Γ |∂ₓu|²`.
    pub kato_gradient: f64,
}

pub fn condition_monitor(traj: &Trajectory, params: &FluidParams, c: f64) -> Result<ConditionReport> {
    let grid = &traj.grid;
    let eps = params.epsilon;
    if !(eps > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("strip needs ε > 0 and c > 0, got ε = {eps}, c = {c}")));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: traj.snapshots.len() });
    }
    let width = c * eps;
    let strip = boundary_strip(grid, width)?;
    if strip.count() / 2 < 2 {
        return Err(Error::UnderResolvedLayer { epsilon: eps, cells: strip.count() / 2 });
    }
    let gamma = params.eos.gamma;
    let n = grid.cells();
    let times = traj.times();
    let mut cols = vec![Vec::new(); 6];
    for s in &traj.snapshots {
        let rho = &s.rho.values;
        let u = s.velocity().values;
        let ux = gradient_values(grid, &u);
        let d2 = |i: usize| grid.dist(i).powi(2);
        let f: [Vec<f64>; 6] = [
            (0..n).map(|i| rho[i].powf(gamma)).collect(),
            (0..n).map(|i| rho[i] * u[i] * u[i] / d2(i)).collect(),
            (0..n).map(|i| rho[i] * rho[i] * u[i] * u[i] / d2(i)).collect(),
            (0..n).map(|i| 2.0 * eps * rho[i] * ux[i] * ux[i]).collect(),
            (0..n).map(|i| ux[i] * ux[i]).collect(),
            (0..n).map(|i| ux[i] * ux[i]).collect(),
        ];
        for (col, vals) in cols.iter_mut().zip(f.iter()) {
            col.push(integrate_masked(grid, vals, &strip));
        }
    }
    let t: Vec<f64> = cols.iter().map(|c| trapezoid(&times, c)).collect::<Result<_>>()?;
    let lgamma_norm = t[0].max(0.0).powf(1.0 / gamma);
    Ok(ConditionReport {
        epsilon: eps,
        strip_width: width,
        lgamma_norm,
        lgamma_monitor: lgamma_norm / eps.powf(1.0 / gamma),
        hardy_integral: t[1],
        kato_monitor: eps.powf((gamma - 1.0) / gamma) * t[1],
        kato_consequence: eps * t[1],
        sueur: [eps * t[1], eps * t[2], eps * t[3]],
        bardos_nguyen: [t[0] / (gamma - 1.0), eps * t[1], eps * t[3]],
        raw_strain: eps * t[4],
        kato_gradient: eps * t[5],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    /// `‖ρ − ρ^E‖_{L^γ}`.
    pub density: Vec<f64>,
    /// `∫ ρ|u − u^E|²`.
    pub velocity: Vec<f64>,
    pub total: Vec<f64>,
    pub sup: f64,
}

pub fn convergence_metric_frames(grid: &Grid, frames: &[Frame], params: &FluidParams) -> Result<MetricSeries> {
    check_frames(grid, frames)?;
    let mut m = MetricSeries { times: vec![], density: vec![], velocity: vec![], total: vec![], sup: 0.0 };
    for f in frames {
        let rho = &f.state.rho.values;
        let u = f.state.velocity().values;
        let r = &f.reference;
        let diff: Vec<f64> = rho.iter().zip(&r.rho).map(|(a, b)| a - b).collect();
        let kin: Vec<f64> = (0..rho.len()).map(|i| rho[i] * (u[i] - r.u[i]).powi(2)).collect();
        let a = lp_norm_values(grid, &diff, params.eos.gamma, None)?;
        let b = integrate(grid, &kin);
        m.times.push(f.state.t);
        m.density.push(a);
        m.velocity.push(b);
        m.total.push(a + b);
        m.sup = m.sup.max(a + b);
    }
    Ok(m)
}

pub fn convergence_metric(traj: &Trajectory, reference: &EulerReference, params: &FluidParams) -> Result<MetricSeries> {
    let settings = ComparatorSettings { layer: false, ..Default::default() };
    let frames = frames_from(traj, reference, params, &settings)?;
    convergence_metric_frames(&traj.grid, &frames, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallFit {
    /// Smallest `C ≥ 0` with `E(t) ≤ (E(0) + η) e^{Ct}` on every snapshot.
    pub c: f64,
    pub eta: f64,
    pub base: f64,
    pub bound_holds: bool,
}

pub fn gronwall_check(times: &[f64], energy: &[f64], e0: f64, eta: f64) -> Result<GronwallFit> {
    if times.len() != energy.len() {
        return Err(Error::InvalidArgument("times and energy differ in length".into()));
    }
    let base = e0 + eta;
    let mut c = 0.0_f64;
    for (&t, &e) in times.iter().zip(energy) {
        if !e.is_finite() {
            return Err(Error::InvalidData(format!("non-finite energy at t = {t}")));
        }
        if e <= base {
            continue;
        }
        if t <= 0.0 || base <= 0.0 {
            return Ok(GronwallFit { c: f64::INFINITY, eta, base, bound_holds: false });
        }
        c = c.max((e / base).ln() / t);
    }
    Ok(GronwallFit { c, eta, base, bound_holds: c.is_finite() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEnergyReport {
    #[serde(rename = "E_series")]
    pub energy: EnergySeries,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "R")]
    pub remainders: Remainders,
    pub press_cross: PressureCross,
    pub conditions: ConditionReport,
    pub gronwall: GronwallFit,
    pub metric: MetricSeries,
    pub reliable: bool,
}

pub fn relative_energy_report(
    traj: &Trajectory,
    reference: &EulerReference,
    params: &FluidParams,
    settings: &ComparatorSettings,
    strip_c: f64,
) -> Result<RelativeEnergyReport> {
    let frames = frames_from(traj, reference, params, settings)?;
    let grid = &traj.grid;
    let energy = energy(grid, &frames, params)?;
    let e0 = initial_energy(grid, &frames[0], params)?;
    let remainders = remainder_terms(grid, &frames, params)?;
    let press_cross = pressure_cross_term(grid, &frames, params, &energy)?;
    let conditions = condition_monitor(traj, params, strip_c)?;
    let gronwall = gronwall_check(&energy.times, &energy.energy, e0, remainders.eta)?;
    let metric = convergence_metric_frames(grid, &frames, params)?;
    let reliable = energy.reliable && remainders.reliable;
    Ok(RelativeEnergyReport { energy, e0, remainders, press_cross, conditions, gronwall, metric, reliable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::EosParams;
    use crate::field::ScalarField;

    fn sample(grid: &Grid, eos: &EosParams, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> ReferenceSample {
        let n = grid.cells();
        let r: Vec<f64> = grid.centers().map(&rho).collect();
        let uu: Vec<f64> = grid.centers().map(&u).collect();
        let logr: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let g = gradient_values(grid, &logr);
        let gx = gradient_values(grid, &g);
        let ux = gradient_values(grid, &uu);
        ReferenceSample::from_fields(0.0, eos, r, uu, ux, g, gx, vec![0.0; n], vec![0.0; n]).unwrap()
    }

    fn params(eps: f64, drag: f64) -> FluidParams {
        FluidParams::new(EosParams::default(), eps, drag, 1e-10).unwrap()
    }

    #[test]
    fn comparator_examples() {
        let g = Grid::new(1.0, 32).unwrap();
        let eos = EosParams::default();
        let s = sample(&g, &eos, |x| 1.0 + 0.2 * x, |x| 0.3 + x);
        let c = build_comparator(&s, None, 0.1).unwrap();
        assert_eq!(&c.u_bar[1..31], &s.u[1..31]);
        assert_eq!((c.u_bar[0], c.u_bar[31]), (0.0, 0.0));
        assert!(c.w_bar.iter().zip(&s.g).all(|(w, gi)| *w == 0.1 * gi));
        assert!((0..32).all(|i| (c.v_bar[i] - c.w_bar[i] - c.u_bar[i]).abs() <= 1e-15));
        let flat = sample(&g, &eos, |_| 2.0, |x| x);
        let c = build_comparator(&flat, None, 0.1).unwrap();
        assert!(c.w_bar.iter().all(|w| w.abs() < 1e-15));
        assert!((0..32).all(|i| (c.v_bar[i] - c.u_bar[i]).abs() < 1e-15));
    }

    fn frame(grid: &Grid, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64, s: &ReferenceSample, eps_t: f64) -> Frame {
        let state = FluidState::new(0.0, ScalarField::from_fn(grid, &rho), ScalarField::from_fn(grid, |x| rho(x) * u(x))).unwrap();
        Frame { state, reference: s.clone(), comparator: build_comparator(s, None, eps_t).unwrap() }
    }

    #[test]
    fn energy_examples() {
        let g = Grid::new(1.0, 64).unwrap();
        let p = params(0.05, 0.0);
        let s = sample(&g, &p.eos, |x| 1.0 + 0.1 * x, |x| (3.0 * x).sin());
        // Fluid equal to the comparator state.
        let mut c = build_comparator(&s, None, p.epsilon).unwrap();
        c.u_bar = s.u.clone();
        c.v_bar = (0..64).map(|i| c.u_bar[i] + c.w_bar[i]).collect();
        let st =
            FluidState::new(0.0, ScalarField::new(s.rho.clone()), ScalarField::new((0..64).map(|i| s.rho[i] * s.u[i]).collect())).unwrap();
        let f = Frame { state: st, reference: s.clone(), comparator: c.clone() };
        assert!(initial_energy(&g, &f, &p).unwrap().abs() < 1e-28);

        // Constant shift of v with unit mass.
        let k = 0.3;
        let s1 = sample(&g, &p.eos, |_| 1.0, |x| (3.0 * x).sin());
        let mut c1 = build_comparator(&s1, None, p.epsilon).unwrap();
        c1.u_bar = s1.u.clone();
        c1.v_bar = c1.u_bar.clone();
        let st = FluidState::new(0.0, ScalarField::constant(&g, 1.0), ScalarField::new(s1.u.iter().map(|u| u + k).collect())).unwrap();
        let f = Frame { state: st, reference: s1, comparator: c1 };
        assert!((initial_energy(&g, &f, &p).unwrap() - 0.5 * k * k).abs() < 1e-14);
    }

    #[test]
    fn prefactors_vanish() {
        let g = Grid::new(1.0, 32).unwrap();
        let eos = EosParams::default();
        let s = sample(&g, &eos, |x| 1.0 + 0.2 * (5.0 * x).cos(), |x| 0.3 * (2.0 * x).sin());
        let mut f0 = frame(&g, |x| 1.1 + 0.1 * x, |x| x * (1.0 - x), &s, 0.1);
        let mut f1 = f0.clone();
        f1.state.t = 0.1;
        f1.reference.t = 0.1;
        f0.state.t = 0.0;
        let frames = vec![f0, f1];
        let r = remainder_terms(&g, &frames, &params(0.0, 0.5)).unwrap();
        for i in [0, 1, 2, 3, 5, 6, 7, 8] {
            assert_eq!(r.r[i], 0.0, "R{}", i + 1);
        }
        assert_eq!(r.pressure.eps_reference, 0.0);
        assert_eq!(r.pressure.eps_fluid, 0.0);
        let r = remainder_terms(&g, &frames, &params(0.1, 0.0)).unwrap();
        assert_eq!(r.r[10], 0.0);
        assert!(r.r.iter().all(|x| x.is_finite()));
        assert!(r.eta <= r.eta_raw + (r.r[4] - r.convective.tilde_2).abs() + (r.r[9] - r.pressure.absorbable).abs());
    }

    #[test]
    fn pressure_cross_examples() {
        let g = Grid::new(1.0, 64).unwrap();
        let p = FluidParams::new(EosParams::new(1.0, 2.0).unwrap(), 0.1, 0.0, 1e-10).unwrap();
        let s = sample(&g, &p.eos, |x| 1.0 + 0.2 * x, |_| 0.0);
        let same = frame(&g, |x| 1.0 + 0.2 * x, |_| 0.0, &s, 0.1);
        let e = EnergySeries {
            times: vec![0.0],
            energy: vec![0.0],
            kinetic: vec![0.0],
            potential: vec![0.0],
            history: vec![0.0],
            reliable: true,
        };
        let pc = pressure_cross_term(&g, &[same], &p, &e).unwrap();
        assert!(pc.series[0].abs() < 1e-15);
        let near = frame(&g, |x| 1.0 + 0.2 * x + 0.01 * (7.0 * x).sin(), |_| 0.0, &s, 0.1);
        let pc = pressure_cross_term(&g, &[near], &p, &e).unwrap();
        assert!(pc.positive_holds && pc.series[0] > 0.0);
        assert!(pc.split_defect < 1e-12, "{}", pc.split_defect);
    }

    #[test]
    fn gronwall_examples() {
        let t: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let zero = gronwall_check(&t, &[0.0; 11], 0.0, 0.0).unwrap();
        assert_eq!(zero.c, 0.0);
        assert!(zero.bound_holds);
        let e: Vec<f64> = t.iter().map(|x| 0.5 * x.exp()).collect();
        let fit = gronwall_check(&t, &e, 0.5, 0.0).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-6);
        let bad = gronwall_check(&t, &e, 0.0, 0.0).unwrap();
        assert!(!bad.bound_holds);
    }
}
