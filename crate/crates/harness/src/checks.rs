//! Verification suite: closed-form entropy checks, identity residual
//! ladders on manufactured fields, cutoff invariants and budget ladders.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use vll_core::augmented::{curl_free_check, derivation_identity_residual, k_entropy_report, Patch2};
use vll_core::eos::{entropy_equivalence_check, EosParams};
use vll_core::euler::{well_prepared_init, WellPreparedData};
use vll_core::field::{Grid, ScalarField};
use vll_core::layer::{layer_calculus_check, make_cutoff, Cutoff};
use vll_core::ns::{bd_entropy_report, energy_report, lemma1_identity_check, simulate, FluidParams, FluidState, SolverOptions, Trajectory};
use vll_core::rates::observed_orders;

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckItem {
    fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold, detail }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), value, threshold, passed: value >= threshold, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

pub const EOS_CASES: [(f64, f64); 3] = [(1.0, 1.4), (1.0, 2.0), (2.0, 5.0 / 3.0)];

/// Largest `|ρH' − H − p| / max(p, H)` over log-uniform `ρ ∈ [1e-3, 1e3]`.
pub fn entropy_algebra_residual(samples: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for (a, g) in EOS_CASES {
        let e = EosParams::new(a, g).expect("valid case");
        for _ in 0..samples {
            let rho = 10f64.powf(rng.gen_range(-3.0..=3.0));
            let res = rho * e.dh(rho) - e.h(rho) - e.p(rho);
            worst = worst.max(res.abs() / e.p(rho).max(e.h(rho)));
        }
    }
    worst
}

/// Closed forms at `γ = 2`, `a = 1`: `p(3) = 9`, `H(2) = 4`, `H(2|1) = 1`,
/// `H(0|1) = 1`. Returns the largest absolute error.
pub fn quadratic_closed_forms() -> f64 {
    let e = EosParams::new(1.0, 2.0).expect("valid");
    [e.p(3.0) - 9.0, e.h(2.0) - 4.0, e.rel_h(2.0, 1.0) - 1.0, e.rel_h(0.0, 1.0) - 1.0, e.rel_h(1.3, 1.3)]
        .iter()
        .fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceSummary {
    /// Smallest fitted constant over all pairs (both directions).
    pub c_min: f64,
    pub all_hold: bool,
    /// Largest `|H(ρ|r) / (½H''(r)(ρ−r)²) − 1|` for `|ρ−r| ≤ 1e-3 r`.
    pub quadratic_ratio_error: f64,
}

/// Random field pairs with `r ∈ [0.5, 2]` on a 64-cell grid.
pub fn equivalence_random(samples: usize, seed: u64, eos: &EosParams) -> Result<EquivalenceSummary> {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid::new(1.0, 64)?;
    let mut c_min = f64::INFINITY;
    let mut all_hold = true;
    for _ in 0..samples {
        let r: Vec<f64> = (0..64).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let amp = 10f64.powf(rng.gen_range(-2.0..=0.5));
        let rho: Vec<f64> = r.iter().map(|&x| (x + amp * rng.gen_range(-1.0..=1.0)).max(0.0)).collect();
        let rep = entropy_equivalence_check(&grid, &ScalarField::new(rho), &ScalarField::new(r), eos)?;
        all_hold &= rep.holds;
        c_min = c_min.min(rep.c());
    }
    let mut q = 0.0_f64;
    for _ in 0..samples {
        let r = rng.gen_range(0.5..=2.0);
        let d = r * 1e-3 * rng.gen_range(-1.0..=1.0);
        if d == 0.0 {
            continue;
        }
        let ratio = eos.rel_h(r + d, r) / (0.5 * eos.d2h(r) * d * d);
        q = q.max((ratio - 1.0).abs());
    }
    Ok(EquivalenceSummary { c_min, all_hold, quadratic_ratio_error: q })
}

pub fn derivation_identity_ladder(levels: &[usize]) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&n| {
            let p = Patch2::new(n, 0.0, 1.0)?;
            let rho = p.sample(|x, y| 2.0 + 0.5 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
            let ux = p.sample(|x, y| (PI * x).sin() * (PI * y).cos());
            let uy = p.sample(|x, y| 0.5 * (2.0 * PI * x).cos() * (PI * y).sin());
            Ok(derivation_identity_residual(&p, &rho, [&ux, &uy], 0.1)?.max)
        })
        .collect()
}

pub fn curl_free_ladder(levels: &[usize]) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&n| {
            let p = Patch2::new(n, 0.0, 1.0)?;
            let rho = p.sample(|x, y| 2.0 + 0.5 * (2.0 * PI * x).sin() * (3.0 * PI * y).cos());
            Ok(curl_free_check(&p, &rho)?)
        })
        .collect()
}

/// Trajectory generated by the mass potential `M = x + α(t)φ(x)`, so that
/// `ρ = M_x` and `ρu = −M_t` satisfy continuity exactly.
pub fn potential_trajectory(n: usize, steps: usize) -> Result<Trajectory> {
    let g = Grid::new(1.0, n)?;
    let phi = |x: f64| if (x - 0.5).abs() < 0.3 { (PI * (x - 0.2) / 0.6).sin().powi(6) } else { 0.0 };
    let dphi = |x: f64| {
        if (x - 0.5).abs() < 0.3 {
            let a = PI * (x - 0.2) / 0.6;
            6.0 * a.sin().powi(5) * a.cos() * PI / 0.6
        } else {
            0.0
        }
    };
    let alpha = |t: f64| 0.05 * (2.0 * PI * t).sin();
    let dalpha = |t: f64| 0.1 * PI * (2.0 * PI * t).cos();
    let horizon = 0.25;
    let snaps = (0..=steps)
        .map(|k| {
            let t = horizon * k as f64 / steps as f64;
            let rho = ScalarField::from_fn(&g, |x| 1.0 + alpha(t) * dphi(x));
            let m = ScalarField::from_fn(&g, |x| -dalpha(t) * phi(x));
            FluidState::new(t, rho, m)
        })
        .collect::<vll_core::Result<Vec<_>>>()?;
    Ok(Trajectory::from_snapshots(g, snaps, &EosParams::default())?)
}

pub fn lemma_ladder(levels: &[usize]) -> Result<Vec<f64>> {
    let p = FluidParams::new(EosParams::default(), 0.0, 0.0, 1e-8)?;
    levels.iter().map(|&n| Ok(lemma1_identity_check(&potential_trajectory(n, n / 4)?, &p)?.max_abs_residual())).collect()
}

/// First and second derivative defects of the layer on a ladder.
pub fn layer_calculus_ladder(levels: &[usize], cutoff: &Cutoff) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = |x: f64| ((3.0 * x).sin() + 1.5, 3.0 * (3.0 * x).cos(), -9.0 * (3.0 * x).sin());
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &n in levels {
        let r = layer_calculus_check(&Grid::new(1.0, n)?, &u, 0.1, 1.0, cutoff)?;
        first.push(r.first);
        second.push(r.second);
    }
    Ok((first, second))
}

pub fn min_order(errors: &[f64]) -> f64 {
    observed_orders(errors).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetLevel {
    pub cells: usize,
    pub dx: f64,
    pub dt_max: f64,
    pub energy: f64,
    pub bd: f64,
    pub k_entropy: f64,
}

impl BudgetLevel {
    fn scale(&self) -> f64 {
        self.dx + self.dt_max * self.dt_max
    }

    /// `residual / (dx + dt²)` for the three budgets.
    pub fn constants(&self) -> [f64; 3] {
        [self.energy / self.scale(), self.bd / self.scale(), self.k_entropy / self.scale()]
    }
}

/// Runs the default smooth datum at each resolution and returns the largest
/// absolute residual of each budget.
pub fn budget_ladder(
    levels: &[usize],
    epsilon: f64,
    drag: f64,
    horizon: f64,
    cfl: f64,
    datum: &WellPreparedData,
) -> Result<Vec<BudgetLevel>> {
    levels
        .iter()
        .map(|&n| {
            let g = Grid::new(1.0, n)?;
            let (rho, u) = well_prepared_init(&g, datum)?;
            let p = FluidParams::with_default_floor(EosParams::default(), epsilon, drag, &rho)?;
            let s = FluidState::from_velocity(0.0, rho, &u)?;
            let tr = simulate(&g, &s, &p, horizon, horizon / 10.0, &SolverOptions { cfl, max_dt: None })?;
            Ok(BudgetLevel {
                cells: n,
                dx: g.dx(),
                dt_max: tr.stats.dt_max(),
                energy: energy_report(&tr, &p)?.max_abs_residual(),
                bd: bd_entropy_report(&tr, &p)?.max_abs_residual(),
                k_entropy: k_entropy_report(&tr, &p)?.max_abs_residual(),
            })
        })
        .collect()
}

/// Largest `max C / min C` over the three budgets.
pub fn budget_drift(levels: &[BudgetLevel]) -> f64 {
    (0..3)
        .map(|k| {
            let cs: Vec<f64> = levels.iter().map(|l| l.constants()[k]).collect();
            let hi = cs.iter().copied().fold(0.0_f64, f64::max);
            let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
            if hi == 0.0 {
                1.0
            } else {
                hi / lo
            }
        })
        .fold(1.0, f64::max)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

pub fn check_suite(config: &RunConfig) -> Result<CheckReport> {
    config.validate()?;
    let tol = &config.tolerances;
    let chk = &config.check;
    let mut items = Vec::new();

    let r = entropy_algebra_residual(chk.samples, chk.seed);
    items.push(CheckItem::at_most("entropy_algebra", r, 1e-14, "relative residual of ρH' − H − p".into()));
    let q = quadratic_closed_forms();
    items.push(CheckItem::at_most("entropy_closed_forms", q, 1e-15, "γ = 2 closed forms".into()));

    let eq = equivalence_random(chk.samples, chk.seed ^ 0x5eed, &config.eos_params())?;
    items.push(CheckItem::at_least(
        "entropy_equivalence",
        if eq.all_hold { eq.c_min } else { 0.0 },
        f64::MIN_POSITIVE,
        "smallest fitted constant over random pairs".into(),
    ));
    items.push(CheckItem::at_most("entropy_local_quadratic", eq.quadratic_ratio_error, 1e-2, "ratio to ½H''(r)(ρ−r)²".into()));

    let cutoff = Cutoff { scale: chk.cutoff_scale };
    items.push(CheckItem::at_most("cutoff_invariants", cutoff.invariant_violation(), 1e-15, format!("scale {}", chk.cutoff_scale)));

    let ladder = [64, 128, 256, 512];
    let d = derivation_identity_ladder(&ladder)?;
    items.push(CheckItem::at_least("derivation_identity_order", min_order(&d), tol.min_order, fmt_list(&d)));
    let c = curl_free_ladder(&ladder)?;
    items.push(CheckItem::at_least("curl_free_order", min_order(&c), tol.min_order, fmt_list(&c)));
    let l = lemma_ladder(&[128, 256, 512, 1024])?;
    items.push(CheckItem::at_least("lemma_identity_order", min_order(&l), tol.min_order, fmt_list(&l)));
    let (f, s) = layer_calculus_ladder(&[800, 1600, 3200, 6400], &make_cutoff())?;
    items.push(CheckItem::at_least("layer_first_derivative_order", min_order(&f), tol.min_order, fmt_list(&f)));
    items.push(CheckItem::at_least("layer_second_derivative_order", min_order(&s), tol.min_order, fmt_list(&s)));

    let levels = budget_ladder(&[128, 256, 512], 1e-2, 1e-2, 0.05, config.time.cfl, &config.datum)?;
    let drift = budget_drift(&levels);
    let detail = levels.iter().map(|l| format!("N={} C={:?}", l.cells, l.constants())).collect::<Vec<_>>().join("; ");
    items.push(CheckItem::at_most("budget_constant_drift", drift, tol.budget_drift, detail));

    Ok(CheckReport { items })
}
