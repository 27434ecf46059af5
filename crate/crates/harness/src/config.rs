//! TOML run configuration with field-level validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vll_core::eos::EosParams;
use vll_core::euler::WellPreparedData;
use vll_core::field::Grid;
use vll_core::layer::cells_for_layer;
use vll_core::ns::FluxMode;
use vll_core::relative::ComparatorSettings;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { length: 1.0, cells: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    pub a: f64,
    pub gamma: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self { a: 1.0, gamma: 1.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub epsilon: f64,
    /// Fixed drag coefficient; when absent `r₁ = κ ε^α`.
    pub drag: Option<f64>,
    pub coupling_alpha: f64,
    pub coupling_kappa: f64,
    /// Absolute density floor; defaults to `1e-8` times the mean density.
    pub rho_floor: Option<f64>,
    pub flux: FluxMode,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { epsilon: 1e-2, drag: None, coupling_alpha: 1.0, coupling_kappa: 1.0, rho_floor: None, flux: FluxMode::Rusanov }
    }
}

impl PhysicsConfig {
    pub fn drag_for(&self, epsilon: f64) -> f64 {
        self.drag.unwrap_or_else(|| self.coupling_kappa * epsilon.powf(self.coupling_alpha))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerConfig {
    /// `δ = c ε`.
    pub c: f64,
    /// `δ̃ = scale · ε`.
    pub eps_tilde_scale: f64,
    pub enabled: bool,
    /// Cells the layer strip must hold on each side.
    pub min_cells: usize,
    /// Width factor of the monitored strip `Γ_{cε}`.
    pub strip_c: f64,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self { c: 1.0, eps_tilde_scale: 1.0, enabled: true, min_cells: 2, strip_c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub cadence: f64,
    pub cfl: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { horizon: 0.2, cadence: 0.01, cfl: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub refinement: usize,
    pub intervals: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { refinement: 2, intervals: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// `N₀` of the refinement rule.
    pub base_cells: usize,
    pub min_layer_cells: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { epsilons: (3..=7).map(|k| 2f64.powi(-k)).collect(), base_cells: 128, min_layer_cells: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub epsilons: Vec<f64>,
    pub p: Vec<f64>,
    pub base_cells: usize,
    pub times: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { epsilons: (3..=9).map(|k| 2f64.powi(-k)).collect(), p: vec![1.0, 2.0, 4.0], base_cells: 64, times: vec![0.0, 0.1, 0.2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Multiplies the cutoff; anything but 1 breaks `ξ(0) = 1`.
    pub cutoff_scale: f64,
    pub seed: u64,
    pub samples: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { cutoff_scale: 1.0, seed: 20240611, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Smallest observed order accepted by identity ladders.
    pub min_order: f64,
    /// Relative tolerance on fitted layer exponents.
    pub scaling_rel: f64,
    /// Largest accepted drift of a budget constant across a ladder.
    pub budget_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { min_order: 1.8, scaling_rel: 0.1, budget_drift: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub eos: EosConfig,
    pub physics: PhysicsConfig,
    pub layer: LayerConfig,
    pub time: TimeConfig,
    pub datum: WellPreparedData,
    pub reference: ReferenceConfig,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
    pub check: CheckConfig,
    pub tolerances: Tolerances,
}

fn field(name: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{name}: {msg}"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn strictly_decreasing(name: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(field(name, "must not be empty"));
    }
    for &e in list {
        positive(name, e)?;
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(field(name, "must be strictly decreasing"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        positive("grid.length", self.grid.length)?;
        if self.grid.cells < Grid::MIN_CELLS {
            return Err(field("grid.cells", format!("must be at least {}, got {}", Grid::MIN_CELLS, self.grid.cells)));
        }
        EosParams::new(self.eos.a, self.eos.gamma).map_err(|e| field("eos", e))?;
        positive("physics.epsilon", self.physics.epsilon)?;
        if let Some(d) = self.physics.drag {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(field("physics.drag", format!("must be non-negative, got {d}")));
            }
        }
        if !(self.physics.coupling_kappa >= 0.0) || !self.physics.coupling_alpha.is_finite() {
            return Err(field("physics.coupling_kappa", "coupling needs kappa ≥ 0 and finite alpha"));
        }
        if let Some(f) = self.physics.rho_floor {
            positive("physics.rho_floor", f)?;
        }
        positive("layer.c", self.layer.c)?;
        positive("layer.strip_c", self.layer.strip_c)?;
        if !(self.layer.eps_tilde_scale >= 0.0) {
            return Err(field("layer.eps_tilde_scale", "must be non-negative"));
        }
        positive("time.horizon", self.time.horizon)?;
        positive("time.cadence", self.time.cadence)?;
        if !(self.time.cfl > 0.0 && self.time.cfl <= 1.0) {
            return Err(field("time.cfl", format!("must lie in (0, 1], got {}", self.time.cfl)));
        }
        self.datum.validate().map_err(|e| field("datum", e))?;
        if self.reference.refinement < 1 {
            return Err(field("reference.refinement", "must be at least 1"));
        }
        if self.reference.intervals < 2 {
            return Err(field("reference.intervals", "must be at least 2"));
        }
        strictly_decreasing("sweep.epsilons", &self.sweep.epsilons)?;
        if self.sweep.base_cells < Grid::MIN_CELLS {
            return Err(field("sweep.base_cells", format!("must be at least {}", Grid::MIN_CELLS)));
        }
        strictly_decreasing("scaling.epsilons", &self.scaling.epsilons)?;
        if self.scaling.p.iter().any(|&p| !(p >= 1.0)) {
            return Err(field("scaling.p", "exponents must be at least 1"));
        }
        if self.scaling.times.is_empty() {
            return Err(field("scaling.times", "must not be empty"));
        }
        if self.check.samples == 0 {
            return Err(field("check.samples", "must be positive"));
        }
        positive("tolerances.min_order", self.tolerances.min_order)?;
        positive("tolerances.scaling_rel", self.tolerances.scaling_rel)?;
        positive("tolerances.budget_drift", self.tolerances.budget_drift)?;
        Ok(())
    }

    pub fn eos_params(&self) -> EosParams {
        EosParams { a: self.eos.a, gamma: self.eos.gamma }
    }

    pub fn drag(&self) -> f64 {
        self.physics.drag_for(self.physics.epsilon)
    }

    pub fn comparator_settings(&self) -> ComparatorSettings {
        ComparatorSettings {
            layer_c: self.layer.c,
            eps_tilde_scale: self.layer.eps_tilde_scale,
            layer: self.layer.enabled,
            min_layer_cells: self.layer.min_cells,
        }
    }

    /// Per-`ε` configuration used by the sweep: refined grid, coupled drag,
    /// strict layer resolution.
    pub fn for_epsilon(&self, epsilon: f64) -> Self {
        let mut c = self.clone();
        c.physics.epsilon = epsilon;
        c.physics.drag = Some(self.physics.drag_for(epsilon));
        c.grid.cells = cells_for_layer(self.grid.length, self.sweep.base_cells, epsilon, self.layer.c, self.sweep.min_layer_cells);
        c.layer.min_cells = self.sweep.min_layer_cells;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.drag(), 1e-2);
    }

    #[test]
    fn field_level_messages() {
        let e = RunConfig::from_toml("[grid]\ncells = 2\n").unwrap_err();
        assert!(e.to_string().contains("grid.cells"), "{e}");
        let e = RunConfig::from_toml("[sweep]\nepsilons = [0.1, 0.2]\n").unwrap_err();
        assert!(e.to_string().contains("sweep.epsilons"));
        assert!(RunConfig::from_toml("[grid]\nbogus = 1\n").is_err());
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn coupling_and_refinement() {
        let mut c = RunConfig::default();
        c.physics.coupling_alpha = 0.0;
        c.physics.coupling_kappa = 0.3;
        assert_eq!(c.physics.drag_for(0.01), 0.3);
        let e = RunConfig::default().for_epsilon(1.0 / 128.0);
        assert_eq!(e.grid.cells, 2048);
        assert_eq!(e.physics.drag, Some(1.0 / 128.0));
    }
}
