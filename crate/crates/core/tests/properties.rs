use compfront::eigen::{principal_eigenvalue, EigenResolution};
use compfront::free_boundary::{simulate_coupled, FrontResolution};
use compfront::periodic::periodic_logistic_ode;
use compfront::{BoundaryOp, CompetitionParams, InitialData, PeriodicField};
use proptest::prelude::*;

fn res() -> FrontResolution {
    FrontResolution {
        nx: 64,
        nt: 50,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn front_invariants_hold(
        mu in 0.01f64..20.0,
        s0 in 0.5f64..5.0,
        k in 0.0f64..0.9,
        h in 0.0f64..0.9,
        rho in 0.0f64..2.0,
        amp in 0.0f64..0.8,
        alpha in 0.0f64..1.0,
    ) {
        let a = PeriodicField::seasonal(1.0, amp, 1.0);
        let b = PeriodicField::constant(0.8, 1.0);
        let mut p = CompetitionParams::symmetric(1.0, k, h, mu, s0);
        p.rho = rho;
        p.bc1 = BoundaryOp::robin(alpha);
        p.bc2 = BoundaryOp::robin(alpha);
        let tr = simulate_coupled(&a, &b, &p, &InitialData::bumps(0.8, 0.6), 8.0, res()).unwrap();
        let v = tr.invariant_violations();
        prop_assert!(v.is_empty(), "{:?}", v);
    }

    #[test]
    fn symmetric_species_stay_equal(mu in 0.1f64..10.0, s0 in 1.0f64..4.0, c in 0.0f64..0.9, amp in 0.0f64..0.8) {
        let a = PeriodicField::seasonal(1.0, amp, 1.0);
        let p = CompetitionParams::symmetric(1.0, c, c, mu, s0);
        let tr = simulate_coupled(&a, &a, &p, &InitialData::bumps(1.0, 1.0), 6.0, res()).unwrap();
        for snap in &tr.snapshots {
            prop_assert!(snap.u.iter().zip(&snap.v).all(|(u, v)| (u - v).abs() <= 1e-10));
        }
    }

    #[test]
    fn front_grows_with_mu(mu in 0.05f64..10.0, factor in 1.0f64..3.0, s0 in 0.8f64..4.0) {
        let a = PeriodicField::constant(1.0, 1.0);
        let run = |m: f64| {
            let p = CompetitionParams::symmetric(1.0, 0.5, 0.5, m, s0);
            simulate_coupled(&a, &a, &p, &InitialData::bumps(1.0, 1.0), 6.0, res()).unwrap()
        };
        let (lo, hi) = (run(mu), run(mu * factor));
        prop_assume!(lo.times == hi.times);
        // A halved step changes the explicit front update by O(dt).
        let dt = 1.0 / res().nt as f64;
        let tol = if lo.halvings == 0 && hi.halvings == 0 { 1e-6 } else { 0.5 * dt };
        prop_assert!(lo.s.iter().zip(&hi.s).all(|(x, y)| *x <= y + tol));
    }

    #[test]
    fn logistic_ode_is_periodic_and_positive(mean in 0.2f64..2.0, amp in 0.0f64..3.0, phase in 0.0f64..6.3) {
        let ode = periodic_logistic_ode(move |t: f64| mean + amp * (2.0 * std::f64::consts::PI * t + phase).sin(), 1.0).unwrap();
        prop_assert!((ode.eval(0.0) - ode.eval(1.0)).abs() < 1e-9);
        prop_assert!((0..50).all(|i| ode.eval(i as f64 / 50.0) > 0.0));
        prop_assert!(ode.residual(200) < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eigenvalue_decreases_with_length(ell in 0.5f64..6.0, stretch in 1.05f64..2.0, amp in 0.0f64..1.0) {
        let c = PeriodicField::seasonal(0.5, amp, 1.0);
        let r = EigenResolution::new(64, 64);
        let l1 = principal_eigenvalue(ell, 1.0, &c, BoundaryOp::dirichlet(), r).unwrap().lambda1;
        let l2 = principal_eigenvalue(ell * stretch, 1.0, &c, BoundaryOp::dirichlet(), r).unwrap().lambda1;
        prop_assert!(l2 < l1, "{l1} {l2}");
    }
}
