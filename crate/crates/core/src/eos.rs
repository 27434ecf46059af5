//! Barotropic pressure law `p = a ρ^γ`, its entropy potential and the
//! relative entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{integrate, lp_norm_values, Grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosParams {
    pub a: f64,
    pub gamma: f64,
}

impl Default for EosParams {
    fn default() -> Self {
        Self { a: 1.0, gamma: 1.4 }
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("density must be non-negative, got {rho}")))
    }
}

impl EosParams {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidConfiguration(format!("pressure constant a must be positive, got {a}")));
        }
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidConfiguration(format!("adiabatic exponent must exceed 1, got {gamma}")));
        }
        Ok(Self { a, gamma })
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.p(rho))
    }

    pub fn entropy(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.h(rho))
    }

    /// Unchecked `a ρ^γ`; callers guarantee `ρ ≥ 0`.
    #[inline]
    pub fn p(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    #[inline]
    pub fn dp(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn d2p(&self, rho: f64) -> f64 {
        self.a * self.gamma * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }

    /// `H(ρ) = a ρ^γ / (γ - 1)`, so that `ρH' - H = p` for every `a`.
    #[inline]
    pub fn h(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma) / (self.gamma - 1.0)
    }

    #[inline]
    pub fn dh(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// `H'' = p'/ρ`.
    #[inline]
    pub fn d2h(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 2.0)
    }

    /// `H(ρ|r) = H(ρ) - H(r) - H'(r)(ρ - r)`.
    pub fn relative_entropy(&self, rho: f64, r: f64) -> Result<f64> {
        check_density(rho)?;
        if !(r > 0.0) {
            return Err(Error::Domain(format!("reference density must be positive, got {r}")));
        }
        Ok(self.rel_h(rho, r))
    }

    /// Unchecked relative entropy, evaluated as `a r^γ φ(s)/(γ-1)` with
    /// `s = (ρ - r)/r` and `φ(s) = (1+s)^γ - 1 - γs` summed as a binomial
    /// series near `s = 0` to avoid cancellation.
    pub fn rel_h(&self, rho: f64, r: f64) -> f64 {
        let s = (rho - r) / r;
        let g = self.gamma;
        let phi = if s.abs() < 0.1 {
            let mut coeff = g * (g - 1.0) / 2.0;
            let mut pow = s * s;
            let mut sum = 0.0;
            for k in 2..60 {
                let term = coeff * pow;
                sum += term;
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
                coeff *= (g - k as f64) / (k as f64 + 1.0);
                pow *= s;
            }
            sum
        } else {
            (1.0 + s).powf(g) - 1.0 - g * s
        };
        self.a * r.powf(g) * phi / (g - 1.0)
    }
}

/// Both directions of the relative-entropy / `L^γ` equivalence evaluated on
/// one pair of fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// `∫ H(ρ|r)`.
    pub integral: f64,
    /// `‖ρ - r‖_{L^γ}`.
    pub lgamma_distance: f64,
    /// `∫ |ρ-r|² 1{|ρ-r|<1} + ∫ |ρ-r|^γ 1{|ρ-r|≥1}`.
    pub split: f64,
    /// Largest `c` with `c ‖ρ-r‖_γ ≤ (∫H)^γ + ∫H`.
    pub c_lower: f64,
    /// Largest `c` with `c ∫H ≤ ‖ρ-r‖_γ^γ + ‖ρ-r‖_γ²`.
    pub c_upper: f64,
    /// Largest `C` with `‖ρ-r‖_γ ≤ C ((∫H)^{1/2} + (∫H)^{1/γ})` failing, i.e.
    /// the smallest constant making that form hold.
    pub c_root_form: f64,
    pub holds: bool,
}

impl EquivalenceReport {
    /// Fitted constant: the smaller of the two directions.
    pub fn c(&self) -> f64 {
        self.c_lower.min(self.c_upper)
    }
}

pub fn entropy_equivalence_check(grid: &Grid, rho: &ScalarField, r: &ScalarField, eos: &EosParams) -> Result<EquivalenceReport> {
    rho.check_len(grid)?;
    r.check_len(grid)?;
    if let Some(bad) = r.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("reference density must be positive, got {bad}")));
    }
    if let Some(bad) = rho.values.iter().find(|&&v| !(v >= 0.0)) {
        return Err(Error::Domain(format!("density must be non-negative, got {bad}")));
    }
    let g = eos.gamma;
    let rel: Vec<f64> = rho.values.iter().zip(&r.values).map(|(&a, &b)| eos.rel_h(a, b)).collect();
    let diff: Vec<f64> = rho.values.iter().zip(&r.values).map(|(&a, &b)| a - b).collect();
    let integral = integrate(grid, &rel);
    let lgamma_distance = lp_norm_values(grid, &diff, g, None)?;
    let split_vals: Vec<f64> = diff.iter().map(|d| if d.abs() < 1.0 { d * d } else { d.abs().powf(g) }).collect();
    let split = integrate(grid, &split_vals);

    if lgamma_distance == 0.0 {
        return Ok(EquivalenceReport {
            integral,
            lgamma_distance,
            split,
            c_lower: f64::INFINITY,
            c_upper: f64::INFINITY,
            c_root_form: 0.0,
            holds: integral == 0.0,
        });
    }
    let c_lower = (integral.powf(g) + integral) / lgamma_distance;
    let c_upper = (lgamma_distance.powf(g) + lgamma_distance.powi(2)) / integral;
    let c_root_form = lgamma_distance / (integral.sqrt() + integral.powf(1.0 / g));
    let holds = c_lower > 0.0 && c_upper > 0.0 && c_lower.is_finite() && c_upper.is_finite();
    Ok(EquivalenceReport { integral, lgamma_distance, split, c_lower, c_upper, c_root_form, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> EosParams {
        EosParams::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let e = EosParams::new(2.5, 1.7).unwrap();
        assert_eq!(e.pressure(1.0).unwrap(), 2.5);
        assert_eq!(quad().pressure(3.0).unwrap(), 9.0);
        assert!(matches!(quad().pressure(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(EosParams::new(0.0, 1.4).is_err());
        assert!(EosParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(quad().entropy(0.0).unwrap(), 0.0);
        assert_eq!(quad().entropy(2.0).unwrap(), 4.0);
        let e = EosParams::default();
        for k in 1..=100 {
            let rho = 0.1 * k as f64;
            let res = rho * e.dh(rho) - e.h(rho) - e.p(rho);
            assert!(res.abs() <= 1e-14 * e.p(rho).max(1.0), "rho {rho} res {res}");
            let h2 = e.d2h(rho) - e.dp(rho) / rho;
            assert!(h2.abs() < 1e-13 * e.d2h(rho));
        }
    }

    #[test]
    fn relative_entropy_examples() {
        let e = quad();
        assert_eq!(e.relative_entropy(1.3, 1.3).unwrap(), 0.0);
        assert!((e.relative_entropy(2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((e.relative_entropy(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(e.relative_entropy(1.0, 0.0).is_err());
        assert!(e.relative_entropy(-1.0, 1.0).is_err());
        // Series and closed form agree where they meet.
        for &s in &[0.0999, 0.1001, -0.0999, -0.1001] {
            let r = 1.7;
            let rho = r * (1.0 + s);
            assert!((e.rel_h(rho, r) - (rho - r).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn equivalence_examples() {
        let g = Grid::new(1.0, 100).unwrap();
        let e = quad();
        let r = ScalarField::constant(&g, 1.0);
        let same = entropy_equivalence_check(&g, &r, &r, &e).unwrap();
        assert_eq!(same.integral, 0.0);
        assert_eq!(same.lgamma_distance, 0.0);

        let rho = ScalarField::from_fn(&g, |x| if x < 0.5 { 1.5 } else { 1.0 });
        let rep = entropy_equivalence_check(&g, &rho, &r, &e).unwrap();
        assert!((rep.integral - 0.125).abs() < 1e-14);
        assert!(rep.holds);

        let rho = ScalarField::from_fn(&g, |x| if x < 0.5 { 4.0 } else { 1.0 });
        let rep = entropy_equivalence_check(&g, &rho, &r, &e).unwrap();
        assert!(rep.holds && rep.c() > 0.0);
        assert!((rep.split - 4.5).abs() < 1e-12);
    }

    #[test]
    fn lower_direction_degenerates_for_small_perturbations() {
        // (∫H)^γ + ∫H is quadratic in the amplitude while ‖ρ-r‖ is linear,
        // so the admissible constant shrinks with the perturbation size.
        let g = Grid::new(1.0, 64).unwrap();
        let e = EosParams::default();
        let r = ScalarField::constant(&g, 1.0);
        let c_at = |amp: f64| {
            let rho = ScalarField::from_fn(&g, |x| 1.0 + amp * (6.0 * x).sin());
            entropy_equivalence_check(&g, &rho, &r, &e).unwrap().c_lower
        };
        let ratio = c_at(1e-2) / c_at(1e-3);
        assert!((ratio - 10.0).abs() < 0.5, "ratio {ratio}");
    }
}
