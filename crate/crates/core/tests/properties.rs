use proptest::prelude::*;
use vll_core::eos::EosParams;
use vll_core::field::{gradient_values, Grid, ScalarField};
use vll_core::layer::Cutoff;
use vll_core::ns::{step, FluidParams, FluidState};

fn eos() -> impl Strategy<Value = EosParams> {
    (0.5..3.0f64, 1.05..3.0f64).prop_map(|(a, g)| EosParams::new(a, g).unwrap())
}

proptest! {
    #[test]
    fn entropy_algebra(e in eos(), lr in -3.0..3.0f64) {
        let rho = 10f64.powf(lr);
        let lhs = rho * e.dh(rho) - e.h(rho) - e.p(rho);
        prop_assert!(lhs.abs() <= 1e-13 * e.p(rho).max(1e-300));
    }

    #[test]
    fn relative_entropy_nonnegative(e in eos(), r in 0.1..5.0f64, s in -0.99..3.0f64) {
        let rho = r * (1.0 + s);
        prop_assert!(e.rel_h(rho, r) >= 0.0);
        prop_assert_eq!(e.rel_h(r, r), 0.0);
    }

    #[test]
    fn cutoff_bounded(r in -2.0..2.0f64) {
        let c = Cutoff::default();
        let x = c.xi(r);
        prop_assert!((0.0..=1.0).contains(&x));
        if r.abs() >= 1.0 {
            prop_assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn gradient_exact_on_lines(a in -5.0..5.0f64, b in -5.0..5.0f64, n in 3usize..64) {
        let g = Grid::new(1.0, n.max(Grid::MIN_CELLS)).unwrap();
        let f: Vec<f64> = g.centers().map(|x| a + b * x).collect();
        for d in gradient_values(&g, &f) {
            prop_assert!((d - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn step_keeps_mass_and_walls(amp in 0.0..0.2f64, k in 1u32..4, eps in 0.0..0.05f64, drag in 0.0..0.1f64) {
        let g = Grid::new(1.0, 64).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + amp * (k as f64 * std::f64::consts::PI * x).cos());
        let u = ScalarField::from_fn(&g, |x| amp * (std::f64::consts::PI * x).sin());
        let s = FluidState::from_velocity(0.0, rho, &u).unwrap();
        let p = FluidParams::new(EosParams::default(), eps, drag, 1e-6).unwrap();
        let (next, hits) = step(&g, &s, &p, 0.5).unwrap();
        prop_assert_eq!(hits, 0);
        prop_assert!((next.mass(&g) - s.mass(&g)).abs() <= 1e-13);
        prop_assert_eq!(next.m.values[0], 0.0);
        prop_assert_eq!(next.m.values[63], 0.0);
    }
}
