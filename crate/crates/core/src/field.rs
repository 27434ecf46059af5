//! Cell-centred grids on `[0, L]`, fields, boundary strips, norms and
//! time quadrature.
//!
//! Space integrals use the midpoint rule over cell centres; time integrals
//! use the trapezoid rule over sample times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred mesh of the interval `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    cells: usize,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidConfiguration(format!("domain length must be positive and finite, got {length}")));
        }
        if cells < Self::MIN_CELLS {
            return Err(Error::InvalidConfiguration(format!("cell count must be at least {}, got {cells}", Self::MIN_CELLS)));
        }
        Ok(Self { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Distance from the centre of cell `i` to the nearest wall.
    pub fn dist(&self, i: usize) -> f64 {
        let x = self.center(i);
        x.min(self.length - x)
    }

    /// Derivative of the wall distance: `+1` on the left half, `-1` on the right.
    pub fn dist_slope(&self, i: usize) -> f64 {
        if self.center(i) <= 0.5 * self.length {
            1.0
        } else {
            -1.0
        }
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(move |i| self.center(i))
    }

    /// Grid with `factor` times as many cells on the same interval.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.length, self.cells * factor)
    }
}

/// One value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::new(vec![value; grid.cells()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid.centers().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_len(&self, grid: &Grid) -> Result<()> {
        if self.len() != grid.cells() {
            return Err(Error::InvalidArgument(format!("field has {} values but grid has {} cells", self.len(), grid.cells())));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// `dim` components per cell, stored component-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument("vector field needs at least one component".into()));
        };
        if components.iter().any(|c| c.len() != first.len()) {
            return Err(Error::InvalidArgument("vector components differ in length".into()));
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField::new((0..self.len()).map(|i| self.components.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt()).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scaled(alpha)).collect() }
    }
}

/// Boolean selection of cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMask(pub Vec<bool>);

impl CellMask {
    pub fn all(grid: &Grid) -> Self {
        Self(vec![true; grid.cells()])
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Cells whose centre lies within `width` of a wall: the strip `Γ_width`.
pub fn boundary_strip(grid: &Grid, width: f64) -> Result<CellMask> {
    if !(width >= 0.0) {
        return Err(Error::InvalidArgument(format!("strip width must be non-negative, got {width}")));
    }
    Ok(CellMask((0..grid.cells()).map(|i| grid.dist(i) <= width).collect()))
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("norm exponent must lie in [1, inf], got {p}")));
    }
    Ok(())
}

/// Midpoint-rule `L^p` norm of cell values over the masked cells;
/// `p = f64::INFINITY` gives the masked maximum of `|f|`.
pub fn lp_norm_values(grid: &Grid, values: &[f64], p: f64, mask: Option<&CellMask>) -> Result<f64> {
    check_exponent(p)?;
    let selected = |i: usize| mask.is_none_or(|m| m.0[i]);
    let cells = values.iter().enumerate().filter(|(i, _)| selected(*i));
    if p.is_infinite() {
        return Ok(cells.fold(0.0_f64, |acc, (_, v)| acc.max(v.abs())));
    }
    let sum: f64 = cells.map(|(_, v)| v.abs().powf(p)).sum();
    Ok((sum * grid.dx()).powf(1.0 / p))
}

pub fn lp_norm(grid: &Grid, f: &ScalarField, p: f64, mask: Option<&CellMask>) -> Result<f64> {
    lp_norm_values(grid, &f.values, p, mask)
}

pub fn lp_norm_vector(grid: &Grid, f: &VectorField, p: f64, mask: Option<&CellMask>) -> Result<f64> {
    lp_norm(grid, &f.magnitude(), p, mask)
}

/// Midpoint-rule integral of cell values.
pub fn integrate(grid: &Grid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.dx()
}

/// Midpoint-rule integral over the masked cells.
pub fn integrate_masked(grid: &Grid, values: &[f64], mask: &CellMask) -> f64 {
    mask.selected().map(|i| values[i]).sum::<f64>() * grid.dx()
}

/// Strictly increasing sample times with one value per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(times: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Trapezoid rule over the sample times.
pub fn time_integral(series: &TimeSeries<f64>) -> Result<f64> {
    trapezoid(series.times(), series.values())
}

pub fn trapezoid(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() < 2 || values.len() != times.len() {
        return Err(Error::InsufficientData { needed: 2, got: times.len().min(values.len()) });
    }
    Ok(times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum())
}

/// Running trapezoid integral; the first entry is zero.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        out.push(acc);
    }
    out
}

/// Second-order derivative of cell values: centred in the interior,
/// one-sided three-point at the two boundary cells.
pub fn gradient_values(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.dx();
    let mut g = vec![0.0; n];
    if n < 3 {
        return g;
    }
    for i in 1..n - 1 {
        g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    g
}

pub fn gradient(grid: &Grid, f: &ScalarField) -> ScalarField {
    ScalarField::new(gradient_values(grid, &f.values))
}

/// In 1D the gradient of a `d`-vector has a single derivative index, so the
/// result is again a `d`-vector of `∂ₓ` components.
pub fn gradient_vector(grid: &Grid, f: &VectorField) -> VectorField {
    VectorField { components: f.components.iter().map(|c| gradient(grid, c)).collect() }
}
