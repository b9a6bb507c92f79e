//! The `compfront` command: scenario files in, CSV/JSON/SVG out.
//!
//! Errors are reported on stderr as one JSON object
//! `{"error": <kind>, "message": <text>}` with exit status 1; usage errors
//! exit with status 2.

pub mod config;
pub mod output;
pub mod sweep;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::dynamics::{classify_with, critical_mu, CriticalMu};
use crate::eigen::{critical_length, principal_eigenvalue, EigenResolution};
use crate::error::{Error, Result};
use crate::fields::PeriodicField;
use crate::free_boundary::build_vanishing_certificate;
use crate::periodic::{monotone_iteration, ode_bound_set};
use crate::speed::{solve_f0, speed_bounds};
use config::{parse_bc, parse_field, ScenarioConfig};
use output::{num, nums, OutputDir};
use svg::{line_plot, Series};

#[derive(Debug, Parser)]
#[command(name = "compfront", version, about = "Free-boundary competition laboratory")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the free-boundary problem and write the trajectory.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Also dump every profile snapshot.
        #[arg(long)]
        profiles: bool,
    },
    /// Principal eigenvalue on (0, ell), or the critical length with --critical.
    Eigen {
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// const:v | seasonal:mean,amp[,phase] | separable:near,far,width,amp | sign-changing:kappa,c,p
        #[arg(long, default_value = "const:0")]
        field: String,
        /// dirichlet | neumann | robin:alpha
        #[arg(long, default_value = "dirichlet")]
        bc: String,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        #[arg(long, default_value_t = 256)]
        nx: usize,
        #[arg(long, default_value_t = 512)]
        nt: usize,
        /// Search the length where the eigenvalue vanishes instead.
        #[arg(long)]
        critical: bool,
    },
    /// Extremal periodic states by monotone iteration.
    Periodic {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Spreading/vanishing verdict for one run.
    Classify {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Transition value of mu.
    CriticalMu {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        mu_lo: Option<f64>,
        #[arg(long)]
        mu_hi: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Semi-wave drift and speed bounds. With --config, bounds for the
    /// scenario; otherwise F0 for --field.
    Speed {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value = "const:1")]
        field: String,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
    },
    /// Explicit supersolution and the mu it certifies.
    CertifyVanishing {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Also simulate at mu0 / 2 and classify.
        #[arg(long)]
        verify: bool,
    },
    /// Verdict matrix over the [sweep] grid; resumable.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
    },
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out = OutputDir::create(&cli.out)?;
    match &cli.command {
        Command::Simulate { config, t_end, mu, profiles } => {
            let mut cfg = ScenarioConfig::load(&config.config)?;
            if let Some(t) = t_end {
                cfg.t_end = *t;
            }
            if let Some(m) = mu {
                cfg.params.mu = *m;
            }
            cfg.validate()?;
            simulate(&cfg, &out, *profiles, cli.svg)
        }
        Command::Eigen {
            ell,
            d,
            field,
            bc,
            period,
            nx,
            nt,
            critical,
        } => {
            let c = PeriodicField::preset(parse_field(field)?, *period)?;
            let bc = parse_bc(bc)?;
            let res = EigenResolution::new(*nx, *nt);
            let settings = json!({ "ell": ell, "d": d, "field": field, "bc": bc, "period": period, "nx": nx, "nt": nt });
            if *critical {
                let cl = critical_length(*d, &c, bc, None, res)?;
                println!("ell0 = {}", cl.ell0);
                let summary = json!({ "ell0": cl.ell0, "lambda1": cl.lambda1, "bracket": cl.bracket, "evaluations": cl.evaluations, "warning": cl.warning });
                out.sidecar("critical_length.json", "eigen", &settings, &summary)?;
                return Ok(());
            }
            let e = principal_eigenvalue(*ell, *d, &c, bc, res)?;
            println!("lambda1 = {}", e.lambda1);
            out.csv("eigenfunction.csv", &["t", "x", "phi"], e.eigenfunction.rows().map(|(t, x, v)| nums([t, x, v])))?;
            let summary = json!({ "lambda1": e.lambda1, "iterations": e.iterations, "residual": e.residual, "discrete_bounds": e.discrete_bounds });
            out.sidecar("eigen.json", "eigen", &settings, &summary)?;
            Ok(())
        }
        Command::Periodic { config } => {
            let cfg = ScenarioConfig::load(&config.config)?;
            periodic(&cfg, &out, cli.svg)
        }
        Command::Classify { config, mu } => {
            let mut cfg = ScenarioConfig::load(&config.config)?;
            if let Some(m) = mu {
                cfg.params.mu = *m;
            }
            cfg.validate()?;
            let sc = cfg.scenario()?;
            let th = sc.threshold()?;
            let (traj, report) = sc.run_and_classify(th.s_star)?;
            println!("{}", report.verdict);
            out.json("classify.json", &report)?;
            out.csv("decay.csv", &["t", "supU", "supV", "sprime"], report.decay.iter().map(|r| nums(*r)))?;
            out.sidecar("classify.meta.json", "classify", &cfg, &json!({ "threshold": th, "halvings": traj.halvings }))?;
            Ok(())
        }
        Command::CriticalMu {
            config,
            mu_lo,
            mu_hi,
            tolerance,
        } => {
            let cfg = ScenarioConfig::load(&config.config)?;
            let c = cfg.critical_mu;
            let bracket = (mu_lo.unwrap_or(c.lo), mu_hi.unwrap_or(c.hi));
            let report = critical_mu(&cfg.scenario()?, bracket, tolerance.unwrap_or(c.tolerance))?;
            match report.result {
                CriticalMu::Sharp { lo, hi } => println!("mu* in [{lo}, {hi}]"),
                CriticalMu::Interval { mu_lower, mu_upper } => println!("mu_* = {mu_lower}, mu^* = {mu_upper}"),
            }
            out.csv(
                "critical_mu.csv",
                &["mu", "verdict"],
                report.evaluations.iter().map(|(m, v)| vec![num(*m), v.to_string()]),
            )?;
            out.sidecar("critical_mu.json", "critical-mu", &cfg, &report)?;
            Ok(())
        }
        Command::Speed {
            config,
            d,
            mu,
            field,
            period,
        } => match config {
            Some(path) => {
                let cfg = ScenarioConfig::load(path)?;
                speed_for_scenario(&cfg, &out, cli.svg)
            }
            None => {
                let c = PeriodicField::preset(parse_field(field)?, *period)?;
                let wave = solve_f0(*d, *mu, move |t| c.eval(t, 0.0), *period, None, Default::default())?;
                println!("mean F0 = {}", wave.mean_f);
                let nt = wave.f.len() - 1;
                out.csv(
                    "f0.csv",
                    &["t", "F0"],
                    wave.f.iter().enumerate().map(|(i, f)| nums([*period * i as f64 / nt as f64, *f])),
                )?;
                let summary = json!({
                    "mean_f0": wave.mean_f, "band": wave.band(), "residual": wave.residual,
                    "min_flux": wave.min_flux, "far_field_error": wave.far_field_error,
                    "iterations": wave.iterations, "violations": wave.violations(),
                });
                out.sidecar("speed.json", "speed", &json!({ "d": d, "mu": mu, "field": field, "period": period }), &summary)?;
                if cli.svg {
                    let pts = wave.f.iter().enumerate().map(|(i, f)| (*period * i as f64 / nt as f64, *f)).collect();
                    out.text("f0.svg", &line_plot("F0(t)", "t", "F0", &[Series { name: "F0", points: pts }]))?;
                }
                Ok(())
            }
        },
        Command::CertifyVanishing {
            config,
            delta,
            sigma,
            verify,
        } => {
            let cfg = ScenarioConfig::load(&config.config)?;
            certify(&cfg, &out, delta.unwrap_or(cfg.certificate.delta), sigma.unwrap_or(cfg.certificate.sigma), *verify)
        }
        Command::Sweep { config } => {
            let cfg = ScenarioConfig::load(&config.config)?;
            let computed = sweep::run_sweep(&cfg, &out)?;
            println!("computed {computed} cells");
            Ok(())
        }
    }
}

fn simulate(cfg: &ScenarioConfig, out: &OutputDir, profiles: bool, svg: bool) -> Result<()> {
    let sc = cfg.scenario()?;
    let th = sc.threshold().map(|t| t.s_star).ok();
    let length = sc.half_line_length(th.unwrap_or(10.0 * cfg.params.s0));
    let traj = sc.simulate(th.unwrap_or(10.0 * cfg.params.s0))?;
    out.csv(
        "trajectory.csv",
        &["t", "s", "sprime", "supU", "supV"],
        (0..traj.times.len()).map(|i| nums([traj.times[i], traj.s[i], traj.s_prime[i], traj.sup_u[i], traj.sup_v[i]])),
    )?;
    if profiles {
        let mut rows = Vec::new();
        for snap in &traj.snapshots {
            for (j, y) in traj.u_grid.coordinates().into_iter().enumerate() {
                let x = y * snap.s;
                rows.push(nums([snap.t, snap.s, x, snap.u[j], traj.v_at(snap, x)]));
            }
        }
        out.csv("profiles.csv", &["t", "s", "x", "u", "v"], rows)?;
    }
    let summary = json!({
        "s_end": traj.final_s(),
        "bound_m": traj.bound_m,
        "max_speed_ratio": traj.max_speed_ratio(),
        "halvings": traj.halvings,
        "half_line_length": (cfg.problem == crate::fields::Problem::Single).then_some(length),
        "invariant_violations": traj.invariant_violations(),
        "speed_bound_violations": traj.speed_bound_violations().len(),
    });
    out.sidecar("trajectory.json", "simulate", cfg, &summary)?;
    println!("s({}) = {}", traj.final_time(), traj.final_s());
    if svg {
        let front = traj.times.iter().copied().zip(traj.s.iter().copied()).collect();
        out.text("front.svg", &line_plot("front position", "t", "s(t)", &[Series { name: "s", points: front }]))?;
        if let Some(snap) = traj.snapshots.last() {
            let xs: Vec<f64> = traj.u_grid.coordinates().iter().map(|y| y * snap.s).collect();
            let u = xs.iter().map(|&x| (x, traj.u_at(snap, x))).collect();
            let v = xs.iter().map(|&x| (x, traj.v_at(snap, x))).collect();
            let title = format!("profiles at t = {}", snap.t);
            out.text("profiles.svg", &line_plot(&title, "x", "density", &[Series { name: "u", points: u }, Series { name: "v", points: v }]))?;
        }
    }
    Ok(())
}

fn periodic(cfg: &ScenarioConfig, out: &OutputDir, svg: bool) -> Result<()> {
    let (a, b) = cfg.fields()?;
    let states = monotone_iteration(&a, &b, &cfg.params, cfg.monotone)?;
    let rows = states
        .u_star
        .rows()
        .zip(states.v_star_low.rows())
        .zip(states.u_low.rows())
        .zip(states.v_star.rows())
        .map(|((((t, x, u1), (_, _, v1)), (_, _, u2)), (_, _, v2))| nums([t, x, u1, v1, u2, v2]));
    out.csv("extremal_states.csv", &["t", "x", "U_upper", "V_lower", "U_lower", "V_upper"], rows)?;
    let bounds = ode_bound_set(&a, &b, cfg.params.k, cfg.params.h)
        .ok()
        .map(|s| json!({ "w1_mean": s.w1.mean(), "w2_mean": s.w2.mean(), "z1_mean": s.z1.mean(), "z2_mean": s.z2.mean() }));
    let summary = json!({
        "iterations": states.iterations,
        "ordering_certificate": states.ordering_certificate,
        "monotonicity_violation": states.monotonicity_violation,
        "final_change": states.final_change,
        "truncation_changes": states.truncation_changes,
        "gap_u": states.u_star.sup_distance(&states.u_low),
        "gap_v": states.v_star.sup_distance(&states.v_star_low),
        "ode_bounds": bounds,
    });
    out.sidecar("periodic.json", "periodic", cfg, &summary)?;
    println!("converged after {} iterations", states.iterations);
    if svg {
        let xs = states.u_star.grid().coordinates();
        let s0 = |p: &crate::periodic::PeriodicProfile| xs.iter().copied().zip(p.slice(0).iter().copied()).collect::<Vec<_>>();
        let series = [
            Series { name: "U upper", points: s0(&states.u_star) },
            Series { name: "U lower", points: s0(&states.u_low) },
            Series { name: "V upper", points: s0(&states.v_star) },
            Series { name: "V lower", points: s0(&states.v_star_low) },
        ];
        out.text("extremal_states.svg", &line_plot("extremal states at t = 0", "x", "density", &series))?;
    }
    Ok(())
}

fn speed_for_scenario(cfg: &ScenarioConfig, out: &OutputDir, svg: bool) -> Result<()> {
    let (a, b) = cfg.fields()?;
    let bounds = speed_bounds(&a, &b, &cfg.params, cfg.semiwave)?;
    println!("speed in [{}, {}]", bounds.lower, bounds.upper);
    let (up, low) = (&bounds.upper_wave, &bounds.lower_wave);
    let n = 200;
    let times: Vec<f64> = (0..=n).map(|i| cfg.period * i as f64 / n as f64).collect();
    out.csv(
        "f0.csv",
        &["t", "F_upper", "F_lower"],
        times.iter().map(|&t| nums([t, up.f_at(t), low.f_at(t)])),
    )?;
    let wave = |w: &crate::speed::SemiWave| {
        json!({ "mean_f0": w.mean_f, "phi_mean": w.phi_mean, "band": w.band(), "residual": w.residual,
                "min_flux": w.min_flux, "far_field_error": w.far_field_error, "iterations": w.iterations,
                "violations": w.violations() })
    };
    let summary = json!({ "lower": bounds.lower, "upper": bounds.upper, "upper_wave": wave(up), "lower_wave": wave(low) });
    out.sidecar("speed.json", "speed", cfg, &summary)?;
    if svg {
        let series = [
            Series { name: "F0 upper", points: times.iter().map(|&t| (t, up.f_at(t))).collect() },
            Series { name: "F0 lower", points: times.iter().map(|&t| (t, low.f_at(t))).collect() },
        ];
        out.text("f0.svg", &line_plot("semi-wave drift", "t", "F0", &series))?;
    }
    Ok(())
}

fn certify(cfg: &ScenarioConfig, out: &OutputDir, delta: f64, sigma: f64, verify: bool) -> Result<()> {
    let (a, b) = cfg.fields()?;
    let init = cfg.init();
    let cert = build_vanishing_certificate(&a, &b, &cfg.params, &init, delta, sigma, cfg.certificate_resolution())?;
    println!("mu0 = {}", cert.mu0);
    let check = if verify {
        let mut sc = cfg.scenario()?;
        sc.params.mu = cert.mu0 / 2.0;
        sc.problem = crate::fields::Problem::Coupled;
        let th = sc.threshold()?.s_star;
        let traj = sc.simulate(th)?;
        let report = classify_with(&traj, th, sc.problem, sc.classify)?;
        Some(json!({ "mu": sc.params.mu, "verdict": report.verdict, "s_end": traj.final_s(),
                     "within_bound": traj.final_s() <= cert.front_bound + 1e-2 }))
    } else {
        None
    };
    let summary = json!({
        "delta": cert.delta, "sigma": cert.sigma, "Lambda": cert.lambda_amplitude,
        "lambda1": cert.lambda1, "gamma1": cert.gamma1, "C": cert.c_constant, "epsilon": cert.epsilon,
        "margin_u": cert.margin_u, "margin_v": cert.margin_v,
        "pde_residual_u": cert.pde_residual_u, "pde_residual_v": cert.pde_residual_v,
        "boundary_residual": cert.boundary_residual, "mu0": cert.mu0, "front_bound": cert.front_bound,
        "verification": check,
    });
    out.sidecar("certificate.json", "certify-vanishing", cfg, &summary)?;
    Ok(())
}
