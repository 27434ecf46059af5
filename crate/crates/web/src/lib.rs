//! Browser bindings: the layer profile, a viscous run against its reference,
//! and the relative-energy curve. The plain functions are usable natively;
//! the exported wrappers flatten results into `Float64Array`s.

use vll_core::eos::EosParams;
use vll_core::euler::{solve_reference, well_prepared_init, ReferenceOptions, WellPreparedData};
use vll_core::field::Grid;
use vll_core::layer::{fake_layer, make_cutoff, VelocityTrace};
use vll_core::ns::{simulate, FluidParams, FluidState, SolverOptions};
use vll_core::relative::{relative_energy_report, ComparatorSettings};
use wasm_bindgen::prelude::*;

const MAX_CELLS: usize = 2048;

fn datum(amplitude: f64) -> WellPreparedData {
    WellPreparedData { rho_amplitude: amplitude, u_amplitude: amplitude, ..WellPreparedData::default() }
}

fn check_cells(cells: usize) -> vll_core::Result<()> {
    if cells > MAX_CELLS {
        return Err(vll_core::Error::InvalidConfiguration(format!("at most {MAX_CELLS} cells in the browser, got {cells}")));
    }
    Ok(())
}

/// Cell centres, `ξ(d/δ)` and `v_bl` for a unit velocity trace.
pub fn layer_profile(epsilon: f64, c: f64, cells: usize) -> vll_core::Result<[Vec<f64>; 3]> {
    check_cells(cells)?;
    let grid = Grid::new(1.0, cells)?;
    let ones = vec![1.0; cells];
    let trace = VelocityTrace { u: ones, u_x: vec![0.0; cells], u_t: vec![0.0; cells] };
    let l = fake_layer(&grid, &trace, epsilon, c, &make_cutoff())?;
    Ok([grid.centers().collect(), l.z, l.v_bl])
}

/// Final-time `x, ρ, u, ρ^E, u^E`.
pub fn compare_final(epsilon: f64, amplitude: f64, cells: usize, horizon: f64) -> vll_core::Result<[Vec<f64>; 5]> {
    check_cells(cells)?;
    let grid = Grid::new(1.0, cells)?;
    let eos = EosParams::default();
    let d = datum(amplitude);
    let (rho0, u0) = well_prepared_init(&grid, &d)?;
    let params = FluidParams::with_default_floor(eos, epsilon, epsilon, &rho0)?;
    let init = FluidState::from_velocity(0.0, rho0, &u0)?;
    let tr = simulate(&grid, &init, &params, horizon, horizon, &SolverOptions::default())?;
    let reference = solve_reference(&grid, &d, &eos, horizon, 2, &ReferenceOptions::default())?;
    let last = tr.last();
    let s = reference.sample(&grid, last.t)?;
    Ok([grid.centers().collect(), last.rho.values.clone(), last.velocity().values, s.rho, s.u])
}

/// Snapshot times, `E(t)` and the Gronwall envelope `E₀ + η`.
pub fn energy_curve(epsilon: f64, amplitude: f64, cells: usize, horizon: f64) -> vll_core::Result<[Vec<f64>; 3]> {
    check_cells(cells)?;
    let grid = Grid::new(1.0, cells)?;
    let eos = EosParams::default();
    let d = datum(amplitude);
    let (rho0, u0) = well_prepared_init(&grid, &d)?;
    let params = FluidParams::with_default_floor(eos, epsilon, epsilon, &rho0)?;
    let init = FluidState::from_velocity(0.0, rho0, &u0)?;
    let tr = simulate(&grid, &init, &params, horizon, horizon / 20.0, &SolverOptions::default())?;
    let reference = solve_reference(&grid, &d, &eos, horizon, 2, &ReferenceOptions::default())?;
    let rep = relative_energy_report(&tr, &reference, &params, &ComparatorSettings::default(), 1.0)?;
    let env = vec![rep.gronwall.base; rep.energy.times.len()];
    Ok([rep.energy.times, rep.energy.energy, env])
}

fn flatten<const K: usize>(r: vll_core::Result<[Vec<f64>; K]>) -> Result<Vec<f64>, JsError> {
    r.map(|cols| cols.concat()).map_err(|e| JsError::new(&e.to_string()))
}

/// Three equal-length blocks: `x`, `ξ(d/δ)`, `v_bl`.
#[wasm_bindgen(js_name = layerProfile)]
pub fn layer_profile_js(epsilon: f64, c: f64, cells: usize) -> Result<Vec<f64>, JsError> {
    flatten(layer_profile(epsilon, c, cells))
}

/// Five equal-length blocks: `x`, `ρ`, `u`, `ρ^E`, `u^E`.
#[wasm_bindgen(js_name = compareFinal)]
pub fn compare_final_js(epsilon: f64, amplitude: f64, cells: usize, horizon: f64) -> Result<Vec<f64>, JsError> {
    flatten(compare_final(epsilon, amplitude, cells, horizon))
}

/// Three equal-length blocks: `t`, `E(t)`, `E₀ + η`.
#[wasm_bindgen(js_name = energyCurve)]
pub fn energy_curve_js(epsilon: f64, amplitude: f64, cells: usize, horizon: f64) -> Result<Vec<f64>, JsError> {
    flatten(energy_curve(epsilon, amplitude, cells, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_one_at_the_wall() {
        let [x, z, v] = layer_profile(0.05, 1.0, 256).unwrap();
        assert_eq!(x.len(), 256);
        assert!(z[0] > 0.99 && z[128] == 0.0);
        assert_eq!(z, v);
    }

    #[test]
    fn final_state_is_close_to_reference() {
        let [_, rho, _, rho_e, _] = compare_final(0.02, 0.1, 256, 0.05).unwrap();
        let err = rho.iter().zip(&rho_e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn energy_curve_shapes() {
        let [t, e, env] = energy_curve(0.05, 0.1, 128, 0.05).unwrap();
        assert_eq!(t.len(), 21);
        assert_eq!(e.len(), env.len());
        assert!(e.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rejects_large_grids() {
        assert!(layer_profile(0.05, 1.0, MAX_CELLS + 1).is_err());
    }
}
