//! Front-fixing solvers for the free-boundary competition problems and the
//! explicit vanishing supersolution.
//!
//! With `y = x / s(t)` the first species satisfies
//!
//! ```text
//! u_t = (d1 / s^2) u_yy + (y s' / s) u_y + u (a(t, s y) - u - k v),   0 < y < 1
//! s'  = -mu (u_x + rho v_x)(t, s) = -mu (u_y + rho v_y)(t, 1) / s
//! ```
//!
//! and the Robin condition becomes `alpha u - (beta / s) u_y = 0` at `y = 0`.
//! In the coupled problem both species live on `[0, 1]`. In the single-front
//! problem the second species lives on a fixed grid `[0, L]` with a Neumann
//! condition at `L`; it sees `u` extended by zero beyond the front, and
//! `rho` is ignored.
//!
//! Each step computes `s'` from the current profiles, advances both species
//! with the same old-time data (so symmetric data stay bitwise symmetric),
//! then moves the front by explicit Euler. When the drift CFL bound fails the
//! step is halved, down to `2^-20` of the base step.

use serde::{Deserialize, Serialize};

use crate::eigen::{principal_eigenvalue, EigenResolution, EigenResult};
use crate::error::{Error, Result};
use crate::fields::{CompetitionParams, InitialData, PeriodicField, Problem};
use crate::parabolic::{interpolate_uniform, one_sided_derivative, Grid1D, ImexStepper, LeftBoundary, RightBoundary, Side};

/// Values this far below zero are reported as an integrity breach;
/// smaller undershoots are clamped.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;
/// Relative slack on the a-priori bound `M`.
pub const BOUND_TOLERANCE: f64 = 1e-6;
/// Values below this are flushed to zero to keep decaying runs out of
/// subnormal arithmetic.
pub const FLUSH_THRESHOLD: f64 = 1e-250;
/// Maximum number of step halvings for the drift CFL bound.
pub const MAX_HALVINGS: u32 = 20;

/// Lattice and output cadence of a free-boundary run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontResolution {
    /// Cells on the normalised domain `[0, 1]`.
    pub nx: usize,
    /// Base steps per period.
    pub nt: usize,
    /// Profile snapshots per period (rounded to divide `nt`).
    pub snapshots_per_period: usize,
    /// Cells of the fixed second-species grid in the single-front problem;
    /// defaults to ten per unit length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx_v: Option<usize>,
}

impl Default for FrontResolution {
    fn default() -> Self {
        Self {
            nx: 128,
            nt: 100,
            snapshots_per_period: 4,
            nx_v: None,
        }
    }
}

impl FrontResolution {
    /// Doubles space and time resolution.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            nt: 2 * self.nt,
            snapshots_per_period: self.snapshots_per_period,
            nx_v: self.nx_v.map(|n| 2 * n),
        }
    }
}

/// Profiles at one output time. `u` lives on the normalised grid; `v` on the
/// normalised grid (coupled) or on the fixed grid (single front).
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub s: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FrontTrajectory {
    pub problem: Problem,
    pub period: f64,
    pub mu: f64,
    pub rho: f64,
    /// `max(|u0|, |v0|, |a|, |b|)`, sampled.
    pub bound_m: f64,
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub s_prime: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub sup_v: Vec<f64>,
    pub u_grid: Grid1D,
    pub v_grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    pub t_end: f64,
    pub stopped_early: bool,
    /// Smallest value of `u` or `v` seen before clamping.
    pub min_value: f64,
    /// Largest value of `u` or `v` seen.
    pub max_value: f64,
    /// Deepest step halving used.
    pub halvings: u32,
}

impl FrontTrajectory {
    /// `mu (1 + rho) M` for the coupled problem, `mu M` for the single front.
    pub fn speed_bound(&self) -> f64 {
        match self.problem {
            Problem::Coupled => self.mu * (1.0 + self.rho) * self.bound_m,
            Problem::Single => self.mu * self.bound_m,
        }
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_s(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Values of `u` at physical positions `x`, zero beyond the front.
    pub fn u_at(&self, snap: &Snapshot, x: f64) -> f64 {
        interpolate_uniform(&snap.u, 1.0, x / snap.s)
    }

    /// Values of `v` at physical positions `x`.
    pub fn v_at(&self, snap: &Snapshot, x: f64) -> f64 {
        match self.problem {
            Problem::Coupled => interpolate_uniform(&snap.v, 1.0, x / snap.s),
            Problem::Single => interpolate_uniform(&snap.v, self.v_grid.length(), x),
        }
    }

    /// Largest `s' / speed_bound()` over the run. The a-priori estimate only
    /// guarantees a bound of this form for some data-dependent constant, so
    /// this is reported rather than enforced during the run.
    pub fn max_speed_ratio(&self) -> f64 {
        let b = self.speed_bound();
        self.s_prime.iter().fold(0.0, |m: f64, &sp| m.max(sp / b))
    }

    /// Times where `s'` exceeds [`FrontTrajectory::speed_bound`]. Steep
    /// initial data can legitimately exceed it near `t = 0`, so this is kept
    /// apart from [`FrontTrajectory::invariant_violations`].
    pub fn speed_bound_violations(&self) -> Vec<String> {
        let bound = self.speed_bound() * (1.0 + BOUND_TOLERANCE);
        self.s_prime
            .iter()
            .zip(&self.times)
            .filter(|(&sp, _)| sp > bound)
            .map(|(sp, t)| format!("s' = {sp} exceeds mu-bound {bound} at t = {t}"))
            .collect()
    }

    /// Checks positivity of `s'`, monotonicity of `s` and the density bounds
    /// on the recorded data. Empty when all hold.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        // Once u has been flushed to zero the front flux is exactly zero, so
        // strict positivity is only demanded while u is representable.
        for (i, &sp) in self.s_prime.iter().enumerate() {
            let alive = self.sup_u[i] > FLUSH_THRESHOLD;
            if sp < 0.0 || (alive && sp == 0.0) {
                out.push(format!("s' = {sp:e} is not positive at t = {}", self.times[i]));
            }
        }
        // Increments below one ulp of s cannot show up in the series.
        for (i, w) in self.s.windows(2).enumerate() {
            let alive = self.s_prime[i] * (self.times[i + 1] - self.times[i]) > 4.0 * f64::EPSILON * w[0];
            if w[1] < w[0] || (alive && w[1] <= w[0]) {
                out.push(format!("front did not advance from {} to {}", w[0], w[1]));
            }
        }
        if self.min_value < 0.0 {
            out.push(format!("negative density {:e}", self.min_value));
        }
        if self.max_value > self.bound_m * (1.0 + BOUND_TOLERANCE) {
            out.push(format!("density {} exceeds M = {}", self.max_value, self.bound_m));
        }
        out
    }
}

/// Sampled `M = max(|u0|, |v0|, |a|, |b|)`.
fn a_priori_bound(a: &PeriodicField, b: &PeriodicField, params: &CompetitionParams, init: &InitialData, x_init: f64) -> f64 {
    let x_far = (100.0 * params.s0).max(1000.0);
    let fields = a.sup_abs(x_far).max(b.sup_abs(x_far)).max(a.sup_abs(params.s0 * 4.0)).max(b.sup_abs(params.s0 * 4.0));
    fields.max(init.sup(params, x_init))
}

struct Species {
    d: f64,
    competition: f64,
    left: crate::fields::BoundaryOp,
}

struct Monitor {
    min_value: f64,
    max_value: f64,
    bound: f64,
}

impl Monitor {
    /// Tracks extrema, clamps tiny undershoots and flushes underflow.
    fn absorb(&mut self, w: &mut [f64], step: usize) -> Result<()> {
        for v in w.iter_mut() {
            self.min_value = self.min_value.min(*v);
            self.max_value = self.max_value.max(*v);
            if *v < -NEGATIVITY_TOLERANCE {
                return Err(Error::Integrity {
                    step,
                    detail: format!("density {v:e} below -{NEGATIVITY_TOLERANCE:e}"),
                });
            }
            if *v > self.bound * (1.0 + BOUND_TOLERANCE) {
                return Err(Error::Integrity {
                    step,
                    detail: format!("density {v} exceeds M = {}", self.bound),
                });
            }
            if v.abs() < FLUSH_THRESHOLD {
                *v = 0.0;
            }
        }
        Ok(())
    }
}

fn front_speed(mu: f64, raw: f64, step: usize) -> Result<f64> {
    if raw < 0.0 {
        if raw > -1e-12 * mu {
            return Ok(0.0);
        }
        return Err(Error::Integrity {
            step,
            detail: format!("front speed {raw:e} is negative"),
        });
    }
    // + 0.0 turns a signed zero into +0
    Ok(raw + 0.0)
}

fn check_common(a: &PeriodicField, b: &PeriodicField, params: &CompetitionParams, t_end: f64, res: &FrontResolution) -> Result<()> {
    params.validate()?;
    if (a.period() - b.period()).abs() > 1e-12 * a.period() {
        return Err(Error::PeriodMismatch(a.period(), b.period()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    if res.nt == 0 || res.snapshots_per_period == 0 {
        return Err(Error::InvalidParameter("nt and snapshots_per_period must be positive".into()));
    }
    Ok(())
}

fn snapshot_stride(res: &FrontResolution) -> usize {
    (res.nt / res.snapshots_per_period.min(res.nt)).max(1)
}

/// Coupled problem: both species inside the front.
pub fn simulate_coupled(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    init: &InitialData,
    t_end: f64,
    res: FrontResolution,
) -> Result<FrontTrajectory> {
    simulate_coupled_until(a, b, params, init, t_end, res, None)
}

/// As [`simulate_coupled`], stopping once `s >= stop_at_s`.
pub fn simulate_coupled_until(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    init: &InitialData,
    t_end: f64,
    res: FrontResolution,
    stop_at_s: Option<f64>,
) -> Result<FrontTrajectory> {
    check_common(a, b, params, t_end, &res)?;
    init.validate(params, Problem::Coupled)?;
    let grid = Grid1D::unit(res.nx)?;
    let ys = grid.coordinates();
    let dy = grid.dx();
    let s0 = params.s0;
    let mut u: Vec<f64> = ys.iter().map(|&y| init.u0(y * s0, params)).collect();
    let mut v: Vec<f64> = ys.iter().map(|&y| init.v0(y * s0, params)).collect();
    u[res.nx] = 0.0;
    v[res.nx] = 0.0;
    let bound_m = a_priori_bound(a, b, params, init, s0);
    let su = Species {
        d: params.d1,
        competition: params.k,
        left: params.bc1,
    };
    let sv = Species {
        d: params.d2,
        competition: params.h,
        left: params.bc2,
    };
    let mut stepper_u = ImexStepper::new(grid);
    let mut stepper_v = ImexStepper::new(grid);
    let mut next_u = vec![0.0; grid.nodes()];
    let mut next_v = vec![0.0; grid.nodes()];
    let mut coef_u = vec![0.0; grid.nodes()];
    let mut coef_v = vec![0.0; grid.nodes()];
    let mut monitor = Monitor {
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        bound: bound_m,
    };
    monitor.absorb(&mut u, 0)?;
    monitor.absorb(&mut v, 0)?;

    let period = a.period();
    let dt = period / res.nt as f64;
    let steps = (t_end / dt).ceil() as usize;
    let stride = snapshot_stride(&res);
    let mut traj = FrontTrajectory {
        problem: Problem::Coupled,
        period,
        mu: params.mu,
        rho: params.rho,
        bound_m,
        times: Vec::with_capacity(steps + 1),
        s: Vec::with_capacity(steps + 1),
        s_prime: Vec::with_capacity(steps + 1),
        sup_u: Vec::with_capacity(steps + 1),
        sup_v: Vec::with_capacity(steps + 1),
        u_grid: grid,
        v_grid: grid,
        snapshots: Vec::new(),
        t_end,
        stopped_early: false,
        min_value: 0.0,
        max_value: 0.0,
        halvings: 0,
    };

    let speed = |u: &[f64], v: &[f64], s: f64, step: usize| -> Result<f64> {
        let ux = one_sided_derivative(u, dy, Side::Right) / s;
        let vx = one_sided_derivative(v, dy, Side::Right) / s;
        front_speed(params.mu, -params.mu * (ux + params.rho * vx), step)
    };
    let sup = |w: &[f64]| w.iter().fold(0.0, |m: f64, &x| m.max(x));

    let mut s = s0;
    let mut t = 0.0;
    for step in 0..=steps {
        let sp = speed(&u, &v, s, step)?;
        traj.times.push(t);
        traj.s.push(s);
        traj.s_prime.push(sp);
        traj.sup_u.push(sup(&u));
        traj.sup_v.push(sup(&v));
        if step % stride == 0 || step == steps {
            traj.snapshots.push(Snapshot {
                t,
                s,
                u: u.clone(),
                v: v.clone(),
            });
        }
        if stop_at_s.is_some_and(|stop| s >= stop) {
            traj.stopped_early = step < steps;
            break;
        }
        if step == steps {
            break;
        }
        let t_next = (step + 1) as f64 * dt;
        while t < t_next {
            let sp = speed(&u, &v, s, step)?;
            let mut h = t_next - t;
            let mut halvings = 0;
            while sp / s * h > dy {
                h *= 0.5;
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Cfl {
                        dt: h,
                        admissible: dy * s / sp,
                    });
                }
            }
            traj.halvings = traj.halvings.max(halvings);
            for (j, &y) in ys.iter().enumerate() {
                coef_u[j] = a.eval(t, s * y);
                coef_v[j] = b.eval(t, s * y);
            }
            let drift = |j: usize| ys[j] * sp / s;
            advance(&mut stepper_u, &su, &u, &v, &coef_u, &mut next_u, s, h, &drift)?;
            advance(&mut stepper_v, &sv, &v, &u, &coef_v, &mut next_v, s, h, &drift)?;
            std::mem::swap(&mut u, &mut next_u);
            std::mem::swap(&mut v, &mut next_v);
            monitor.absorb(&mut u, step + 1)?;
            monitor.absorb(&mut v, step + 1)?;
            s += h * sp;
            t = if halvings == 0 { t_next } else { t + h };
        }
    }
    traj.min_value = monitor.min_value;
    traj.max_value = monitor.max_value;
    Ok(traj)
}

/// One IMEX step of a species on the normalised grid. `other` is the
/// competitor on the same nodes.
#[allow(clippy::too_many_arguments)]
fn advance(
    stepper: &mut ImexStepper,
    sp: &Species,
    w: &[f64],
    other: &[f64],
    growth: &[f64],
    out: &mut [f64],
    s: f64,
    h: f64,
    drift: &dyn Fn(usize) -> f64,
) -> Result<()> {
    let k = sp.competition;
    stepper.step(
        w,
        out,
        sp.d / (s * s),
        h,
        drift,
        |j, u| u * (growth[j] - u - k * other[j]),
        LeftBoundary::stretched(sp.left, s),
        RightBoundary::Dirichlet(0.0),
    )
}

/// Single-front problem: the second species occupies `[0, length]` (a
/// truncation of the half line) and the first species vanishes beyond the
/// front.
pub fn simulate_single(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    init: &InitialData,
    t_end: f64,
    length: f64,
    res: FrontResolution,
) -> Result<FrontTrajectory> {
    simulate_single_until(a, b, params, init, t_end, length, res, None)
}

/// As [`simulate_single`], stopping once `s >= stop_at_s`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_single_until(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    init: &InitialData,
    t_end: f64,
    length: f64,
    res: FrontResolution,
    stop_at_s: Option<f64>,
) -> Result<FrontTrajectory> {
    check_common(a, b, params, t_end, &res)?;
    init.validate(params, Problem::Single)?;
    let s0 = params.s0;
    if !(length > s0 / 0.9) {
        return Err(Error::DomainExit { s: s0, limit: 0.9 * length });
    }
    let grid = Grid1D::unit(res.nx)?;
    let ys = grid.coordinates();
    let dy = grid.dx();
    let nx_v = res.nx_v.unwrap_or_else(|| ((10.0 * length).ceil() as usize).max(64));
    let vgrid = Grid1D::new(nx_v, length)?;
    let xs = vgrid.coordinates();

    let mut u: Vec<f64> = ys.iter().map(|&y| init.u0(y * s0, params)).collect();
    u[res.nx] = 0.0;
    let mut v: Vec<f64> = xs.iter().map(|&x| init.v0(x, params)).collect();
    let bound_m = a_priori_bound(a, b, params, init, length);
    let mut monitor = Monitor {
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        bound: bound_m,
    };
    monitor.absorb(&mut u, 0)?;
    monitor.absorb(&mut v, 0)?;

    let mut stepper_u = ImexStepper::new(grid);
    let mut stepper_v = ImexStepper::new(vgrid);
    let mut next_u = vec![0.0; grid.nodes()];
    let mut next_v = vec![0.0; vgrid.nodes()];
    let mut coef_u = vec![0.0; grid.nodes()];
    let mut coef_v = vec![0.0; vgrid.nodes()];
    let mut v_on_u = vec![0.0; grid.nodes()];
    let mut u_on_v = vec![0.0; vgrid.nodes()];

    let period = a.period();
    let dt = period / res.nt as f64;
    let steps = (t_end / dt).ceil() as usize;
    let stride = snapshot_stride(&res);
    let mut traj = FrontTrajectory {
        problem: Problem::Single,
        period,
        mu: params.mu,
        rho: params.rho,
        bound_m,
        times: Vec::with_capacity(steps + 1),
        s: Vec::with_capacity(steps + 1),
        s_prime: Vec::with_capacity(steps + 1),
        sup_u: Vec::with_capacity(steps + 1),
        sup_v: Vec::with_capacity(steps + 1),
        u_grid: grid,
        v_grid: vgrid,
        snapshots: Vec::new(),
        t_end,
        stopped_early: false,
        min_value: 0.0,
        max_value: 0.0,
        halvings: 0,
    };
    let speed = |u: &[f64], s: f64, step: usize| -> Result<f64> {
        front_speed(params.mu, -params.mu * one_sided_derivative(u, dy, Side::Right) / s, step)
    };
    let sup = |w: &[f64]| w.iter().fold(0.0, |m: f64, &x| m.max(x));
    let u_species = Species {
        d: params.d1,
        competition: params.k,
        left: params.bc1,
    };

    let mut s = s0;
    let mut t = 0.0;
    for step in 0..=steps {
        let sp = speed(&u, s, step)?;
        traj.times.push(t);
        traj.s.push(s);
        traj.s_prime.push(sp);
        traj.sup_u.push(sup(&u));
        traj.sup_v.push(sup(&v));
        if step % stride == 0 || step == steps {
            traj.snapshots.push(Snapshot {
                t,
                s,
                u: u.clone(),
                v: v.clone(),
            });
        }
        if stop_at_s.is_some_and(|stop| s >= stop) {
            traj.stopped_early = step < steps;
            break;
        }
        if step == steps {
            break;
        }
        if s >= 0.9 * length {
            return Err(Error::DomainExit { s, limit: 0.9 * length });
        }
        let t_next = (step + 1) as f64 * dt;
        while t < t_next {
            let sp = speed(&u, s, step)?;
            let mut h = t_next - t;
            let mut halvings = 0;
            while sp / s * h > dy {
                h *= 0.5;
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Cfl {
                        dt: h,
                        admissible: dy * s / sp,
                    });
                }
            }
            traj.halvings = traj.halvings.max(halvings);
            for (j, &y) in ys.iter().enumerate() {
                coef_u[j] = a.eval(t, s * y);
                v_on_u[j] = interpolate_uniform(&v, length, s * y);
            }
            for (j, &x) in xs.iter().enumerate() {
                coef_v[j] = b.eval(t, x);
                u_on_v[j] = if x < s { interpolate_uniform(&u, 1.0, x / s) } else { 0.0 };
            }
            let drift = |j: usize| ys[j] * sp / s;
            advance(&mut stepper_u, &u_species, &u, &v_on_u, &coef_u, &mut next_u, s, h, &drift)?;
            let hc = params.h;
            stepper_v.step(
                &v,
                &mut next_v,
                params.d2,
                h,
                |_| 0.0,
                |j, w| w * (coef_v[j] - w - hc * u_on_v[j]),
                params.bc2.into(),
                RightBoundary::Neumann(0.0),
            )?;
            std::mem::swap(&mut u, &mut next_u);
            std::mem::swap(&mut v, &mut next_v);
            monitor.absorb(&mut u, step + 1)?;
            monitor.absorb(&mut v, step + 1)?;
            s += h * sp;
            t = if halvings == 0 { t_next } else { t + h };
        }
    }
    traj.min_value = monitor.min_value;
    traj.max_value = monitor.max_value;
    Ok(traj)
}

/// Explicit supersolution `(w, z, s0 g(t))` certifying vanishing for small
/// `mu`:
///
/// ```text
/// g(t) = 1 + 2 delta - delta e^{-sigma t},  xi(t) = int_0^t g^{-2}
/// w(t, x) = Lambda e^{-sigma t} phi(xi(t), x / g(t))
/// ```
///
/// with `phi` (resp. `psi`) the principal eigenfunction at `l = s0`.
#[derive(Clone, Debug)]
pub struct VanishingCertificate {
    pub delta: f64,
    pub sigma: f64,
    pub lambda_amplitude: f64,
    pub lambda1: f64,
    pub gamma1: f64,
    /// `max x phi_x / phi` and `max x psi_x / psi` over interior nodes, clamped at 0.
    pub c_constant: f64,
    /// Sampled `sup |a(xi, x/g) - g^2 a(t, x)|` (and the same for `b`).
    pub epsilon: f64,
    /// `-sigma - epsilon - sigma C + lambda1 / 4` and its `gamma1` analogue.
    pub margin_u: f64,
    pub margin_v: f64,
    /// Smallest sampled growth rate of the exact residual of the `w` and `z`
    /// inequalities (per unit of `w`, resp. `z`).
    pub pde_residual_u: f64,
    pub pde_residual_v: f64,
    /// Smallest sampled `B[w](t, 0)` and `B[z](t, 0)` per unit amplitude.
    pub boundary_residual: f64,
    /// Largest `mu` for which the front inequality holds.
    pub mu0: f64,
    /// `s0 (1 + 2 delta)`, the bound on `s_inf` for `mu <= mu0`.
    pub front_bound: f64,
    pub phi: EigenResult,
    pub psi: EigenResult,
}

impl VanishingCertificate {
    pub fn g(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.delta - self.delta * (-self.sigma * t).exp()
    }

    /// `xi(t) = int_0^t g^{-2}`, by the closed form.
    pub fn xi(&self, t: f64) -> f64 {
        xi_closed(self.delta, self.sigma, t)
    }
}

/// `int_0^t (p - q e^{-sigma tau})^{-2} d tau` with `p = 1 + 2 delta`, `q = delta`.
fn xi_closed(delta: f64, sigma: f64, t: f64) -> f64 {
    let p = 1.0 + 2.0 * delta;
    let q = delta;
    // With u = e^{sigma tau} and w = p u - q the integrand is (w + q) / (p w)^2.
    let f = |u: f64| ((p * u - q).ln() - q / (p * u - q)) / (p * p);
    (f((sigma * t).exp()) - f(1.0)) / sigma
}

/// Verification lattice of the certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateResolution {
    pub eigen: EigenResolution,
    /// Time samples per period on the verification lattice.
    pub nt_check: usize,
    /// Horizon, in periods beyond `1/sigma`, covered by the lattice.
    pub periods: usize,
}

impl Default for CertificateResolution {
    fn default() -> Self {
        Self {
            eigen: EigenResolution::new(128, 128),
            nt_check: 32,
            periods: 20,
        }
    }
}

/// Builds the vanishing supersolution for `s0 < s*` and returns the largest
/// `mu0` it certifies.
pub fn build_vanishing_certificate(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    init: &InitialData,
    delta: f64,
    sigma: f64,
    res: CertificateResolution,
) -> Result<VanishingCertificate> {
    params.validate()?;
    init.validate(params, Problem::Coupled)?;
    if !(delta > 0.0 && delta <= 0.5) || !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < delta <= 1/2 and 0 < sigma < 1, got delta = {delta}, sigma = {sigma}"
        )));
    }
    let s0 = params.s0;
    let period = a.period();
    let phi = principal_eigenvalue(s0, params.d1, a, params.bc1, res.eigen)?;
    let psi = principal_eigenvalue(s0, params.d2, b, params.bc2, res.eigen)?;
    if !(phi.lambda1 > 0.0 && psi.lambda1 > 0.0) {
        return Err(Error::Precondition(format!(
            "s0 = {s0} is not below the threshold: lambda1 = {}, gamma1 = {}",
            phi.lambda1, psi.lambda1
        )));
    }

    let grid = phi.eigenfunction.grid();
    let n = grid.cells();
    let dx = grid.dx();
    // x phi_x / phi on interior nodes.
    let ratio_max = |e: &EigenResult| -> f64 {
        let p = &e.eigenfunction;
        let mut m = f64::NEG_INFINITY;
        for i in 0..=p.slices() {
            let w = p.slice(i);
            for j in 1..n {
                let dw = (w[j + 1] - w[j - 1]) / (2.0 * dx);
                m = m.max(grid.x(j) * dw / w[j]);
            }
        }
        m
    };
    let c_constant = ratio_max(&phi).max(ratio_max(&psi)).max(0.0);

    let g = |t: f64| 1.0 + 2.0 * delta - delta * (-sigma * t).exp();
    let g_prime = |t: f64| sigma * delta * (-sigma * t).exp();
    let horizon = 1.0 / sigma + res.periods as f64 * period;
    let n_times = ((horizon / period) * res.nt_check as f64).ceil() as usize;
    let times: Vec<f64> = (0..=n_times).map(|i| horizon * i as f64 / n_times as f64).collect();

    // epsilon on the lattice, plus all phase pairs at g = 1 + 2 delta.
    let mut epsilon: f64 = 0.0;
    let nxs = 64;
    for &t in &times {
        let (gt, xt) = (g(t), xi_closed(delta, sigma, t));
        for j in 0..=nxs {
            let x = s0 * gt * j as f64 / nxs as f64;
            let y = x / gt;
            epsilon = epsilon.max((a.eval(xt, y) - gt * gt * a.eval(t, x)).abs());
            epsilon = epsilon.max((b.eval(xt, y) - gt * gt * b.eval(t, x)).abs());
        }
    }
    let g_inf = 1.0 + 2.0 * delta;
    for p in 0..res.nt_check {
        for q in 0..res.nt_check {
            let (t1, t2) = (period * p as f64 / res.nt_check as f64, period * q as f64 / res.nt_check as f64);
            for j in 0..=nxs {
                let x = s0 * g_inf * j as f64 / nxs as f64;
                let y = x / g_inf;
                epsilon = epsilon.max((a.eval(t1, y) - g_inf * g_inf * a.eval(t2, x)).abs());
                epsilon = epsilon.max((b.eval(t1, y) - g_inf * g_inf * b.eval(t2, x)).abs());
            }
        }
    }

    let margin_u = -sigma - epsilon - sigma * c_constant + phi.lambda1 / 4.0;
    let margin_v = -sigma - epsilon - sigma * c_constant + psi.lambda1 / 4.0;
    if !(margin_u > 0.0 && margin_v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "supersolution margin is not positive (u: {margin_u:.6}, v: {margin_v:.6}) with epsilon = {epsilon:.6}, C = {c_constant:.6}; reduce delta or sigma"
        )));
    }

    // Exact residual per unit w on the lattice:
    // -sigma + g^-2 (c(xi, y) + lambda) - c(t, x) - (g'/g) y phi_y / phi.
    let residual = |e: &EigenResult, c: &PeriodicField| -> f64 {
        let p = &e.eigenfunction;
        let mut worst = f64::INFINITY;
        for &t in &times {
            let (gt, xt) = (g(t), xi_closed(delta, sigma, t));
            for j in 1..n {
                let y = grid.x(j);
                let x = gt * y;
                let (w, dw) = time_interp(p, xt, j, dx);
                let r = -sigma + (c.eval(xt, y) + e.lambda1) / (gt * gt) - c.eval(t, x) - g_prime(t) / gt * y * dw / w;
                worst = worst.min(r);
            }
        }
        worst
    };
    let pde_residual_u = residual(&phi, a);
    let pde_residual_v = residual(&psi, b);

    let boundary = |e: &EigenResult, alpha: f64| -> f64 {
        times
            .iter()
            .map(|&t| alpha * time_interp(&e.eigenfunction, xi_closed(delta, sigma, t), 0, dx).0 * (1.0 - 1.0 / g(t)))
            .fold(f64::INFINITY, f64::min)
    };
    let boundary_residual = boundary(&phi, params.bc1.alpha()).min(boundary(&psi, params.bc2.alpha()));

    // Smallest Lambda with u0(x) <= Lambda phi(0, x / (1 + delta)).
    let amplitude = |e: &EigenResult, f: &dyn Fn(f64) -> f64| -> f64 {
        let w0 = e.eigenfunction.slice(0);
        let m = 4000;
        (1..=m)
            .map(|i| {
                let x = s0 * i as f64 / m as f64;
                let base = interpolate_uniform(w0, s0, x / (1.0 + delta));
                if base > 0.0 {
                    f(x) / base
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let lambda_amplitude = amplitude(&phi, &|x| init.u0(x, params))
        .max(amplitude(&psi, &|x| init.v0(x, params)))
        * (1.0 + 1e-6);

    // Front inequality: s0 g' >= mu Lambda e^{-sigma t} (-phi_y - rho psi_y) / g.
    let mut flux: f64 = 0.0;
    for i in 0..=phi.eigenfunction.slices() {
        let fp = -one_sided_derivative(phi.eigenfunction.slice(i), dx, Side::Right);
        let fq = -one_sided_derivative(psi.eigenfunction.slice(i), dx, Side::Right);
        flux = flux.max(fp + params.rho * fq);
    }
    let mu0 = s0 * sigma * delta * (1.0 + delta) / (lambda_amplitude * flux);

    Ok(VanishingCertificate {
        delta,
        sigma,
        lambda_amplitude,
        lambda1: phi.lambda1,
        gamma1: psi.lambda1,
        c_constant,
        epsilon,
        margin_u,
        margin_v,
        pde_residual_u,
        pde_residual_v,
        boundary_residual,
        mu0,
        front_bound: s0 * (1.0 + 2.0 * delta),
        phi,
        psi,
    })
}

/// `(phi, phi_y)` at node `j` and time `t`, linear in time.
fn time_interp(p: &crate::periodic::PeriodicProfile, t: f64, j: usize, dx: f64) -> (f64, f64) {
    let tau = t.rem_euclid(p.period()) / p.period() * p.slices() as f64;
    let i = (tau as usize).min(p.slices() - 1);
    let f = tau - i as f64;
    let n = p.grid().cells();
    let at = |i: usize| {
        let w = p.slice(i);
        let d = if j == 0 {
            one_sided_derivative(w, dx, Side::Left)
        } else if j == n {
            one_sided_derivative(w, dx, Side::Right)
        } else {
            (w[j + 1] - w[j - 1]) / (2.0 * dx)
        };
        (w[j], d)
    };
    let (w0, d0) = at(i);
    let (w1, d1) = at(i + 1);
    (w0 * (1.0 - f) + w1 * f, d0 * (1.0 - f) + d1 * f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BoundaryOp, InitialShape};

    fn constant_case(mu: f64, s0: f64) -> (PeriodicField, CompetitionParams, InitialData) {
        (
            PeriodicField::constant(1.0, 1.0),
            CompetitionParams::symmetric(1.0, 0.5, 0.5, mu, s0),
            InitialData::bumps(1.0, 1.0),
        )
    }

    #[test]
    fn xi_matches_quadrature() {
        let (delta, sigma) = (0.2, 0.3);
        let g = |t: f64| 1.0 + 2.0 * delta - delta * (-sigma * t).exp();
        let t = 7.0;
        let n = 20000;
        let h = t / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let (a, m, b) = (i as f64 * h, (i as f64 + 0.5) * h, (i + 1) as f64 * h);
                h * (g(a).powi(-2) + 4.0 * g(m).powi(-2) + g(b).powi(-2)) / 6.0
            })
            .sum();
        assert!((xi_closed(delta, sigma, t) - quad).abs() < 1e-10);
        assert_eq!(xi_closed(delta, sigma, 0.0), 0.0);
    }

    #[test]
    fn symmetric_data_stay_identical() {
        let (one, mut p, init) = constant_case(1.0, 2.0);
        p.bc1 = BoundaryOp::robin(0.3);
        p.bc2 = p.bc1;
        let tr = simulate_coupled(&one, &one, &p, &init, 5.0, FrontResolution { nx: 32, nt: 50, ..Default::default() }).unwrap();
        for snap in &tr.snapshots {
            for (a, b) in snap.u.iter().zip(&snap.v) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn negative_growth_decays() {
        let neg = PeriodicField::constant(-1.0, 1.0);
        let p = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 2.0);
        let init = InitialData::bumps(1e-3, 1e-3);
        let tr = simulate_coupled(&neg, &neg, &p, &init, 10.0, FrontResolution { nx: 32, nt: 50, ..Default::default() }).unwrap();
        assert!(tr.sup_u.windows(2).all(|w| w[1] <= w[0]));
        assert!(tr.s_prime.iter().all(|&sp| sp >= 0.0));
        assert!(*tr.s_prime.last().unwrap() < 1e-6);
    }

    #[test]
    fn single_front_rejects_small_domain_and_bad_data() {
        let (one, p, _) = constant_case(1.0, 2.0);
        let init = InitialData {
            u0: InitialShape::Bump { amplitude: 1.0 },
            v0: InitialShape::Plateau {
                amplitude: 1.0,
                width: 1.0,
            },
        };
        assert!(matches!(
            simulate_single(&one, &one, &p, &init, 1.0, 2.0, FrontResolution::default()),
            Err(Error::DomainExit { .. })
        ));
        let bumps = InitialData::bumps(1.0, 1.0);
        assert!(simulate_single(&one, &one, &p, &bumps, 1.0, 40.0, FrontResolution::default()).is_err());
    }

    #[test]
    fn certificate_constant_case() {
        let (one, p, init) = constant_case(1.0, 1.0);
        let cert = build_vanishing_certificate(&one, &one, &p, &init, 0.05, 0.05, CertificateResolution::default()).unwrap();
        assert!((cert.lambda1 - (std::f64::consts::PI.powi(2) - 1.0)).abs() < 1e-2);
        assert!((cert.epsilon - 0.21).abs() < 1e-9);
        assert!(cert.margin_u > 0.0 && cert.margin_v > 0.0);
        assert!(cert.pde_residual_u >= cert.margin_u - 1e-9);
        assert!(cert.boundary_residual >= 0.0);
        assert!(cert.mu0 > 0.0);
        let err = build_vanishing_certificate(&one, &one, &p, &init, 0.5, 0.5, CertificateResolution::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
