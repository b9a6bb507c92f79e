//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use compfront::dynamics::{classify, classify_with, Scenario, Verdict};
use compfront::eigen::{critical_length, principal_eigenvalue, EigenResolution};
use compfront::free_boundary::{
    build_vanishing_certificate, simulate_coupled, simulate_single, CertificateResolution, FrontResolution, FrontTrajectory,
};
use compfront::parabolic::{step_imex, ImexStepper, RightBoundary};
use compfront::periodic::{monotone_iteration, periodic_logistic_ode, MonotoneOptions, PeriodicProfile};
use compfront::speed::{measured_speed, solve_f0, speed_bounds, SemiWaveResolution};
use compfront::{BoundaryOp, CompetitionParams, Grid1D, InitialData, InitialShape, PeriodicField, Preset, Problem, Profile};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: compfront::Error) -> String {
    format!("{}: {e}", e.kind())
}

fn one() -> PeriodicField {
    PeriodicField::constant(1.0, 1.0)
}

fn single_init() -> InitialData {
    InitialData {
        u0: InitialShape::Bump { amplitude: 1.0 },
        v0: InitialShape::Plateau {
            amplitude: 1.0,
            width: 1.0,
        },
    }
}

fn smoke() -> (PeriodicField, CompetitionParams, InitialData, FrontResolution) {
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    (one(), params, InitialData::bumps(1.0, 1.0), FrontResolution::default())
}

/// Largest `lo(t) - hi(t)` over the times of `lo`, with `hi` interpolated.
fn front_excess(lo: &FrontTrajectory, hi: &FrontTrajectory) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    let mut j = 0;
    for (&t, &s) in lo.times.iter().zip(&lo.s) {
        if t > hi.final_time() {
            break;
        }
        while j + 1 < hi.times.len() && hi.times[j + 1] < t {
            j += 1;
        }
        let s_hi = if j + 1 < hi.times.len() && hi.times[j + 1] > hi.times[j] {
            let w = ((t - hi.times[j]) / (hi.times[j + 1] - hi.times[j])).clamp(0.0, 1.0);
            hi.s[j] * (1.0 - w) + hi.s[j + 1] * w
        } else {
            hi.s[j]
        };
        worst = worst.max(s - s_hi);
    }
    worst
}

fn c1_eigenvalue() -> Outcome {
    let zero = PeriodicField::constant(0.0, 1.0);
    let mut details = Vec::new();
    let mut ok = true;
    for (name, ell, bc) in [("dirichlet", PI, BoundaryOp::dirichlet()), ("neumann", PI / 2.0, BoundaryOp::neumann())] {
        let t0 = Instant::now();
        let r = principal_eigenvalue(ell, 1.0, &zero, bc, EigenResolution::default()).map_err(err)?;
        let secs = t0.elapsed().as_secs_f64();
        ok &= (r.lambda1 - 1.0).abs() < 1e-3 && secs < 5.0;
        details.push(format!("{name} lambda1 = {:.6} in {secs:.2} s", r.lambda1));
    }
    check(ok, details.join(", "))
}

fn c2_critical_lengths() -> Outcome {
    let res = EigenResolution::new(128, 128);
    let l1 = critical_length(1.0, &one(), BoundaryOp::dirichlet(), None, res).map_err(err)?.ell0;
    let l4 = critical_length(4.0, &one(), BoundaryOp::dirichlet(), None, res).map_err(err)?.ell0;
    let (e1, e4) = ((l1 - PI).abs() / PI, (l4 - 2.0 * PI).abs() / (2.0 * PI));
    check(e1 < 1e-3 && e4 < 1e-3, format!("ell0(1) = {l1:.6} (rel {e1:.1e}), ell0(4) = {l4:.6} (rel {e4:.1e})"))
}

fn c3_logistic_ode() -> Outcome {
    let c = |t: f64| 1.0 + 0.5 * (2.0 * PI * t).sin();
    let ode = periodic_logistic_ode(c, 1.0).map_err(err)?;
    let oracle = common::logistic_marching(c, 1.0, 1.0, 200, 40);
    let diff = oracle.iter().map(|&(t, z)| (ode.eval(t) - z).abs()).fold(0.0, f64::max);
    let flat = periodic_logistic_ode(|_| 1.3, 1.0).map_err(err)?;
    let flat_err = (0..=100).map(|i| (flat.eval(i as f64 / 100.0) - 1.3).abs()).fold(0.0, f64::max);
    check(diff < 1e-6 && flat_err < 1e-10, format!("seasonal vs marching {diff:.1e}, constant {flat_err:.1e}"))
}

fn c4_monotone_iteration() -> Outcome {
    let mut p = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    p.bc1 = BoundaryOp::neumann();
    p.bc2 = BoundaryOp::neumann();
    let st = monotone_iteration(&one(), &one(), &p, MonotoneOptions::default()).map_err(err)?;
    let off = |w: &PeriodicProfile| (w.sup() - 2.0 / 3.0).abs().max((w.inf() - 2.0 / 3.0).abs());
    let dev = [&st.u_star, &st.u_low, &st.v_star, &st.v_star_low].into_iter().map(off).fold(0.0, f64::max);
    p.k = 0.0;
    p.h = 0.0;
    let dec = monotone_iteration(&one(), &one(), &p, MonotoneOptions::default()).map_err(err)?;
    let gap = dec.u_star.sup_distance(&dec.u_low).max(dec.v_star.sup_distance(&dec.v_star_low));
    check(
        dev < 1e-3 && st.ordering_certificate < 1e-6 && gap < 1e-6,
        format!(
            "distance to 2/3 = {dev:.1e}, ordering violation {:.1e}, decoupled gap {gap:.1e}",
            st.ordering_certificate
        ),
    )
}

fn c5_invariants() -> Outcome {
    let (a, params, init, res) = smoke();
    let t0 = Instant::now();
    let smoke_run = simulate_coupled(&a, &a, &params, &init, 20.0, res).map_err(err)?;
    let smoke_secs = t0.elapsed().as_secs_f64();

    let seasonal = PeriodicField::seasonal(1.0, 0.5, 1.0);
    let separable = PeriodicField::preset(
        Preset::Separable {
            near: 2.0,
            far: 0.5,
            width: 2.0,
            amplitude: 0.5,
        },
        1.0,
    )
    .map_err(err)?;
    let sign_changing = PeriodicField::preset(Preset::SignChanging { kappa: 0.2, c: 3.0, p: 1.0 }, 1.0).map_err(err)?;

    let mut runs: Vec<(&str, FrontTrajectory)> = vec![("smoke", smoke_run)];
    let vanish = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1e-3, 1.0);
    runs.push(("vanishing", simulate_coupled(&a, &a, &vanish, &init, 60.0, res).map_err(err)?));
    let mut neu = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 2.0);
    neu.bc1 = BoundaryOp::neumann();
    neu.bc2 = BoundaryOp::neumann();
    runs.push(("seasonal/separable neumann", simulate_coupled(&seasonal, &separable, &neu, &init, 30.0, res).map_err(err)?));
    let mut robin = CompetitionParams::symmetric(1.0, 0.3, 0.3, 2.0, 3.0);
    robin.bc1 = BoundaryOp::robin(1.0);
    robin.bc2 = BoundaryOp::robin(1.0);
    robin.rho = 0.5;
    runs.push(("sign-changing robin", simulate_coupled(&sign_changing, &a, &robin, &init, 30.0, res).map_err(err)?));
    let fast = CompetitionParams::symmetric(1.0, 0.5, 0.5, 100.0, 1.0);
    runs.push(("mu = 100", simulate_coupled(&a, &a, &fast, &init, 10.0, res).map_err(err)?));
    let single = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    runs.push(("single front", simulate_single(&a, &a, &single, &single_init(), 30.0, 60.0, res).map_err(err)?));
    let mut sym = robin.clone();
    sym.rho = 1.0;
    let symmetric = simulate_coupled(&seasonal, &seasonal, &sym, &init, 20.0, res).map_err(err)?;
    let asym = symmetric
        .snapshots
        .iter()
        .flat_map(|s| s.u.iter().zip(&s.v).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    runs.push(("symmetric", symmetric));

    let mut failures = Vec::new();
    for (name, tr) in &runs {
        let mut v = tr.invariant_violations();
        v.extend(tr.speed_bound_violations());
        if !v.is_empty() {
            failures.push(format!("{name}: {} ({} total)", v[0], v.len()));
        }
    }
    let ratio = runs.iter().map(|(_, t)| t.max_speed_ratio()).fold(0.0, f64::max);
    let detail = format!(
        "{} scenarios, {} with violations, max s'/(mu(1+rho)M) = {ratio:.3}, |u - v| = {asym:.1e}, smoke {smoke_secs:.2} s{}",
        runs.len(),
        failures.len(),
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    check(failures.is_empty() && asym < 1e-10 && smoke_secs < 30.0, detail)
}

fn c6_dichotomy() -> Outcome {
    let mut verdicts = Vec::new();
    let mut ok = true;
    for (s0, mu, want) in [
        (4.0, 0.01, Verdict::Spreading),
        (4.0, 1.0, Verdict::Spreading),
        (4.0, 100.0, Verdict::Spreading),
        (1.0, 1e-3, Verdict::Vanishing),
        (1.0, 100.0, Verdict::Spreading),
    ] {
        let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, mu, s0);
        let sc = Scenario::new(Problem::Coupled, one(), one(), params, InitialData::bumps(1.0, 1.0));
        let th = sc.threshold().map_err(err)?.s_star;
        let (_, rep) = sc.run_and_classify(th).map_err(err)?;
        ok &= rep.verdict == want;
        verdicts.push(format!("s0={s0} mu={mu}: {}", rep.verdict));
    }
    check(ok, verdicts.join(", "))
}

fn c7_certificate() -> Outcome {
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let init = InitialData::bumps(1.0, 1.0);
    let cert = build_vanishing_certificate(&one(), &one(), &params, &init, 0.05, 0.05, CertificateResolution::default())
        .map_err(err)?;
    let mut p = params.clone();
    p.mu = cert.mu0 / 2.0;
    let tr = simulate_coupled(&one(), &one(), &p, &init, 200.0, FrontResolution::default()).map_err(err)?;
    let rep = classify(&tr, PI, Problem::Coupled).map_err(err)?;
    let bound = cert.front_bound + 1e-2;
    check(
        cert.margin_u > 0.0 && cert.margin_v > 0.0 && rep.verdict == Verdict::Vanishing && tr.final_s() <= bound,
        format!(
            "margins {:.4}/{:.4}, mu0 = {:.4e}, verdict {} with s(200) = {:.6} <= {bound:.4}",
            cert.margin_u,
            cert.margin_v,
            cert.mu0,
            rep.verdict,
            tr.final_s()
        ),
    )
}

fn c8_mu_ladder() -> Outcome {
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let mut sc = Scenario::new(Problem::Single, one(), one(), params, single_init());
    sc.length = Some(300.0);
    let th = sc.threshold().map_err(err)?.s_star;
    let ladder = [1.0, 5.0, 15.0, 45.0, 70.0, 100.0];
    let mut runs = Vec::new();
    for &mu in &ladder {
        let s = sc.with_mu(mu);
        let tr = s.simulate(th).map_err(err)?;
        let rep = classify_with(&tr, th, Problem::Single, s.classify).map_err(err)?;
        runs.push((tr, rep.verdict));
    }
    let verdicts: Vec<Verdict> = runs.iter().map(|r| r.1).collect();
    let decided = verdicts.iter().all(|v| *v != Verdict::Undecided);
    let crossovers = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
    let sorted = verdicts.first() == Some(&Verdict::Vanishing) && verdicts.last() == Some(&Verdict::Spreading);
    let excess = runs.windows(2).map(|w| front_excess(&w[0].0, &w[1].0)).fold(f64::NEG_INFINITY, f64::max);
    let names: Vec<String> = ladder.iter().zip(&verdicts).map(|(m, v)| format!("{m}:{v}")).collect();
    check(
        decided && sorted && crossovers == 1 && excess <= 1e-6,
        format!("{}; max s(t; mu_i) - s(t; mu_i+1) = {excess:.1e}", names.join(" ")),
    )
}

fn c9_semiwave() -> Outcome {
    let wave = solve_f0(1.0, 1.0, |_| 1.0, 1.0, None, SemiWaveResolution::default()).map_err(err)?;
    let oracle = common::oracle_speed(1.0, 1.0, 1.0);
    let diff = (wave.mean_f - oracle).abs();
    check(
        diff < 1e-3 && wave.mean_f > 0.0 && wave.mean_f < wave.band() && wave.residual < 1e-5,
        format!(
            "F0 = {:.6}, shooting {oracle:.6}, band (0, {}), residual {:.1e}",
            wave.mean_f,
            wave.band(),
            wave.residual
        ),
    )
}

fn c10_speed_bounds() -> Outcome {
    let t0 = Instant::now();
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    let mut sc = Scenario::new(Problem::Single, one(), one(), params.clone(), single_init());
    sc.t_end = 150.0;
    sc.length = Some(200.0);
    sc.resolution = FrontResolution {
        nx: 512,
        nt: 100,
        snapshots_per_period: 1,
        nx_v: Some(2000),
    };
    let th = sc.threshold().map_err(err)?.s_star;
    let tr = sc.simulate(th).map_err(err)?;
    let rep = classify(&tr, th, Problem::Single).map_err(err)?;
    let m = measured_speed(&tr, &rep, 1.0 / 3.0).map_err(err)?;
    let b = speed_bounds(&one(), &one(), &params, SemiWaveResolution::default()).map_err(err)?;
    let secs = t0.elapsed().as_secs_f64();
    check(
        m.slope >= 0.9 * b.lower && m.slope <= 1.1 * b.upper && secs < 120.0,
        format!("slope {:.4} in [{:.4}, {:.4}] (+-10%), {secs:.1} s", m.slope, b.lower, b.upper),
    )
}

fn c11_comparison() -> Outcome {
    // Scalar logistic stepper on ordered random data.
    let grid = Grid1D::new(64, 6.0).map_err(err)?;
    let n = grid.nodes();
    let strategy = (
        proptest::collection::vec(0.0..1.5f64, n),
        proptest::collection::vec(0.0..1.0f64, n),
        0.5..2.0f64,
        0.0..1.0f64,
    );
    let mut runner = TestRunner::new_with_rng(Config::with_cases(50), proptest::test_runner::TestRng::deterministic_rng(
        proptest::test_runner::RngAlgorithm::ChaCha,
    ));
    let mut stepper_worst: f64 = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (hi, gap, c0, amp) = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let pin = |w: Vec<f64>| {
            let mut w = w;
            w[0] = 0.0;
            w[n - 1] = 0.0;
            w
        };
        let hi_v = pin(hi.clone());
        let lo_v = pin(hi.iter().zip(&gap).map(|(h, g)| h * (1.0 - g)).collect());
        let mut w_hi = Profile::new(grid, hi_v).map_err(err)?;
        let mut w_lo = Profile::new(grid, lo_v).map_err(err)?;
        let growth = move |t: f64, x: f64| c0 + amp * (2.0 * PI * t).sin() - 0.1 * x;
        let dt = 0.01;
        for i in 0..200 {
            let t = i as f64 * dt;
            let step = |w: &Profile| {
                step_imex(w, 1.0, |_, _| 0.0, |t, x, v| v * (growth(t, x) - v), BoundaryOp::dirichlet(), RightBoundary::Dirichlet(0.0), t, dt)
            };
            w_hi = step(&w_hi).map_err(err)?;
            w_lo = step(&w_lo).map_err(err)?;
            let ex = w_lo.values().iter().zip(w_hi.values()).map(|(l, h)| l - h).fold(f64::NEG_INFINITY, f64::max);
            stepper_worst = stepper_worst.max(ex);
        }
    }

    // Free-boundary pairs: same data, growth of the first species raised by 0.2.
    let res = FrontResolution::default();
    let init = InitialData::bumps(1.0, 1.0);
    let seasonal = PeriodicField::seasonal(1.0, 0.5, 1.0);
    let seasonal_up = PeriodicField::seasonal(1.2, 0.5, 1.0);
    let up = PeriodicField::constant(1.2, 1.0);
    let p2 = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 2.0);
    let p4 = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    let pairs = [
        (
            simulate_coupled(&one(), &one(), &p2, &init, 30.0, res).map_err(err)?,
            simulate_coupled(&up, &one(), &p2, &init, 30.0, res).map_err(err)?,
        ),
        (
            simulate_coupled(&seasonal, &one(), &p4, &init, 30.0, res).map_err(err)?,
            simulate_coupled(&seasonal_up, &one(), &p4, &init, 30.0, res).map_err(err)?,
        ),
        (
            simulate_single(&one(), &one(), &p4, &single_init(), 30.0, 60.0, res).map_err(err)?,
            simulate_single(&up, &one(), &p4, &single_init(), 30.0, 60.0, res).map_err(err)?,
        ),
    ];
    let front_worst = pairs.iter().map(|(lo, hi)| front_excess(lo, hi)).fold(f64::NEG_INFINITY, f64::max);
    check(
        stepper_worst <= 1e-10 && front_worst <= 1e-6,
        format!("50 stepper pairs: worst excess {stepper_worst:.1e}; 3 front pairs: worst excess {front_worst:.1e}"),
    )
}

/// Spatial error of backward-Euler heat stepping against a fine-grid
/// reference at the same time step.
fn heat_errors() -> compfront::Result<Vec<f64>> {
    let (dt, steps) = (1e-4, 2000);
    let run = |n: usize| -> compfront::Result<Vec<f64>> {
        let grid = Grid1D::new(n, PI)?;
        let mut stepper = ImexStepper::new(grid);
        let mut w: Vec<f64> = grid.coordinates().iter().map(|x| x.sin()).collect();
        let mut out = vec![0.0; grid.nodes()];
        for _ in 0..steps {
            stepper.step(&w, &mut out, 1.0, dt, |_| 0.0, |_, _| 0.0, BoundaryOp::dirichlet().into(), RightBoundary::Dirichlet(0.0))?;
            std::mem::swap(&mut w, &mut out);
        }
        Ok(w)
    };
    let fine_n = 1024;
    let fine = run(fine_n)?;
    [16, 32, 64]
        .iter()
        .map(|&n| {
            let w = run(n)?;
            let stride = fine_n / n;
            Ok(w.iter().enumerate().map(|(j, v)| (v - fine[j * stride]).abs()).fold(0.0, f64::max))
        })
        .collect()
}

fn c12_refinement() -> Outcome {
    let (a, params, init, res) = smoke();
    let coarse = simulate_coupled(&a, &a, &params, &init, 20.0, res).map_err(err)?.final_s();
    let fine = simulate_coupled(&a, &a, &params, &init, 20.0, res.refined()).map_err(err)?.final_s();
    let change = (coarse - fine).abs() / fine;
    let e = heat_errors().map_err(err)?;
    let orders = [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
    check(
        change < 1e-2 && orders.iter().all(|&p| p >= 1.8),
        format!(
            "s(20) = {coarse:.5} vs {fine:.5} refined ({:.3}%), heat orders {:.3}, {:.3}",
            100.0 * change,
            orders[0],
            orders[1]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("eigenvalue exactness", c1_eigenvalue),
        ("critical lengths", c2_critical_lengths),
        ("periodic logistic ODE", c3_logistic_ode),
        ("monotone iteration", c4_monotone_iteration),
        ("free-boundary invariants", c5_invariants),
        ("spreading-vanishing dichotomy", c6_dichotomy),
        ("vanishing certificate", c7_certificate),
        ("monotonicity in mu", c8_mu_ladder),
        ("semi-wave oracle match", c9_semiwave),
        ("speed bounds", c10_speed_bounds),
        ("comparison principle", c11_comparison),
        ("refinement", c12_refinement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
