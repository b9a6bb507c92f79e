//! Periodic semi-waves and spreading-speed bounds.
//!
//! For a `T`-periodic drift `F` and growth `phi`, the semi-wave is the
//! periodic solution of
//!
//! ```text
//! w_t - d w_xx + F(t) w_x = phi(t) w - w^2,   w(t, 0) = 0,   w(t, inf) = z(t)
//! ```
//!
//! with `z` the periodic logistic ODE solution for `phi`. It exists iff
//! `mean F < 2 sqrt(d mean phi)`. The drift `F0` is the fixed point of
//! `F -> mu w^F_x(t, 0)`; its mean bounds the front speed from above or below
//! depending on the growth used.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DichotomyReport, Verdict};
use crate::error::{Error, Result};
use crate::fields::{CompetitionParams, PeriodicField};
use crate::free_boundary::FrontTrajectory;
use crate::parabolic::{one_sided_derivative, Grid1D, ImexStepper, LeftBoundary, RightBoundary, Side};
use crate::periodic::{ode_bound_set, periodic_logistic_ode, sup_distance, PeriodicProfile, PeriodicScalarOde};

/// Lattice, stopping rules and damping of the semi-wave solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiWaveResolution {
    /// Cells per unit length.
    pub cells_per_unit: f64,
    /// Steps per period (raised automatically to satisfy the drift CFL bound).
    pub nt: usize,
    /// Period-to-period change at which a march stops.
    pub tolerance: f64,
    pub max_periods: usize,
    /// Stop the fixed-point iteration when `sup |mu w_x(t, 0) - F| <` this.
    pub fixed_point_tolerance: f64,
    pub max_iterations: usize,
    /// Initial damping `theta` in `(0, 1]`.
    pub theta: f64,
}

impl Default for SemiWaveResolution {
    fn default() -> Self {
        Self {
            cells_per_unit: 80.0,
            nt: 100,
            tolerance: 1e-9,
            max_periods: 20000,
            fixed_point_tolerance: 1e-6,
            max_iterations: 400,
            theta: 1.0,
        }
    }
}

/// Smallest `theta` tried before giving up.
pub const THETA_FLOOR: f64 = 1.0 / 1024.0;

/// `20 sqrt(d / mean phi)`, the default domain.
pub fn default_length(d: f64, phi_mean: f64) -> f64 {
    20.0 * (d / phi_mean).sqrt()
}

#[derive(Clone, Debug)]
pub struct SemiWave {
    pub d: f64,
    pub mu: f64,
    pub period: f64,
    /// `F0` at the step times `i T / nt`, `i = 0..nt`.
    pub f: Vec<f64>,
    pub profile: PeriodicProfile,
    pub z: PeriodicScalarOde,
    pub phi_mean: f64,
    pub mean_f: f64,
    /// `sup_t |mu w_x(t, 0) - F0(t)|`.
    pub residual: f64,
    /// `min_t w_x(t, 0)`.
    pub min_flux: f64,
    /// `sup_t |w(t, 3X/4) - z(t)|`.
    pub far_field_error: f64,
    pub iterations: usize,
    pub theta: f64,
}

impl SemiWave {
    /// `F0(t)`, linear between lattice times.
    pub fn f_at(&self, t: f64) -> f64 {
        let nt = self.f.len() - 1;
        let tau = t.rem_euclid(self.period) / self.period * nt as f64;
        let i = (tau as usize).min(nt - 1);
        let s = tau - i as f64;
        self.f[i] * (1.0 - s) + self.f[i + 1] * s
    }

    pub fn band(&self) -> f64 {
        2.0 * (self.d * self.phi_mean).sqrt()
    }

    /// Violated invariants, if any.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mean_f > 0.0 && self.mean_f < self.band()) {
            out.push(format!("mean F0 = {} outside (0, {})", self.mean_f, self.band()));
        }
        if !(self.min_flux > 0.0) {
            out.push(format!("w_x(t, 0) reaches {}", self.min_flux));
        }
        if !(self.far_field_error < 1e-2) {
            out.push(format!("far field misses z by {}", self.far_field_error));
        }
        out
    }
}

struct Lattice {
    grid: Grid1D,
    period: f64,
    nt: usize,
    phi: Vec<f64>,
    z: Vec<f64>,
}

impl Lattice {
    fn new(phi: &PeriodicScalarOde, length: f64, res: &SemiWaveResolution, max_drift: f64) -> Result<Self> {
        let cells = ((length * res.cells_per_unit).ceil() as usize).max(16);
        let grid = Grid1D::new(cells, length)?;
        let period = phi.period();
        let nt = res.nt.max((period * max_drift / grid.dx()).ceil() as usize);
        let times: Vec<f64> = (0..=nt).map(|i| period * i as f64 / nt as f64).collect();
        Ok(Self {
            grid,
            period,
            nt,
            phi: times.iter().map(|&t| phi.growth(t)).collect(),
            z: times.iter().map(|&t| phi.eval(t)).collect(),
        })
    }

    fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.nt).map(move |i| self.period * i as f64 / self.nt as f64)
    }

    fn initial(&self) -> Vec<f64> {
        let z0 = self.z[0];
        self.grid.coordinates().iter().map(|&x| z0 * (1.0 - (-x).exp())).collect()
    }

    /// Marches to the periodic attractor for drift samples `f` (length
    /// `nt + 1`), starting from `w`. Returns the profile and the boundary
    /// flux at each lattice time.
    fn march(&self, d: f64, f: &[f64], mut w: Vec<f64>, res: &SemiWaveResolution) -> Result<(PeriodicProfile, Vec<f64>)> {
        let dt = self.period / self.nt as f64;
        let dx = self.grid.dx();
        if let Some(&big) = f.iter().find(|v| v.abs() * dt > dx) {
            return Err(Error::Cfl {
                dt,
                admissible: dx / big.abs(),
            });
        }
        let mut stepper = ImexStepper::new(self.grid);
        let mut next = vec![0.0; w.len()];
        let mut slices: Vec<Vec<f64>> = Vec::with_capacity(self.nt + 1);
        let left = LeftBoundary { alpha: 1.0, beta: 0.0 };
        let mut change = f64::INFINITY;
        for _ in 0..res.max_periods {
            slices.clear();
            slices.push(w.clone());
            for i in 0..self.nt {
                let (fi, pi) = (f[i], self.phi[i]);
                stepper.step(&w, &mut next, d, dt, |_| -fi, |_, u| u * (pi - u), left, RightBoundary::Dirichlet(self.z[i + 1]))?;
                std::mem::swap(&mut w, &mut next);
                slices.push(w.clone());
            }
            change = sup_distance(&slices[0], &w);
            if change < res.tolerance {
                let flux = slices.iter().map(|s| one_sided_derivative(s, dx, Side::Left)).collect();
                let profile = PeriodicProfile::new(self.period, self.grid, std::mem::take(&mut slices))?;
                return Ok((profile, flux));
            }
        }
        Err(Error::NoConvergence {
            iterations: res.max_periods,
            residual: change,
        })
    }
}

fn band_check(mean_f: f64, d: f64, phi_mean: f64) -> Result<()> {
    let bound = 2.0 * (d * phi_mean).sqrt();
    if !(mean_f < bound) {
        return Err(Error::SemiWaveBand { mean_drift: mean_f, bound });
    }
    Ok(())
}

fn sampled_mean(v: &[f64]) -> f64 {
    // Trapezoid on a periodic lattice: the endpoint repeats the start.
    let n = v.len() - 1;
    v[..n].iter().sum::<f64>() / n as f64
}

/// Periodic semi-wave for a given drift.
pub fn semiwave_profile<F, P>(f: F, d: f64, phi: P, period: f64, length: f64, res: SemiWaveResolution) -> Result<PeriodicProfile>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(d > 0.0 && length > 0.0) {
        return Err(Error::InvalidParameter(format!("need d > 0 and X > 0, got {d}, {length}")));
    }
    let z = periodic_logistic_ode(phi, period)?;
    let phi_mean = z.mean_growth();
    let probe: Vec<f64> = (0..=res.nt).map(|i| f(period * i as f64 / res.nt as f64)).collect();
    band_check(sampled_mean(&probe), d, phi_mean)?;
    let max_drift = probe.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let lat = Lattice::new(&z, length, &res, max_drift)?;
    let samples: Vec<f64> = lat.times().map(&f).collect();
    band_check(sampled_mean(&samples), d, phi_mean)?;
    Ok(lat.march(d, &samples, lat.initial(), &res)?.0)
}

/// Damped fixed-point iteration `F <- (1 - theta) F + theta mu w^F_x(t, 0)`
/// from `F = sqrt(d mean phi)`. A step that leaves the admissible band, or
/// that increases the residual, is rejected and `theta` halved.
pub fn solve_f0<P>(d: f64, mu: f64, phi: P, period: f64, length: Option<f64>, res: SemiWaveResolution) -> Result<SemiWave>
where
    P: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(d > 0.0 && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("need d > 0 and mu > 0, got {d}, {mu}")));
    }
    if !(res.theta > 0.0 && res.theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {}", res.theta)));
    }
    let z = periodic_logistic_ode(phi, period)?;
    let phi_mean = z.mean_growth();
    let length = length.unwrap_or_else(|| default_length(d, phi_mean));
    let band = 2.0 * (d * phi_mean).sqrt();
    // The lattice admits drifts up to twice the band; larger trial drifts
    // are rejected like band violations.
    let lat = Lattice::new(&z, length, &res, 2.0 * band)?;

    let mut f = vec![(d * phi_mean).sqrt(); lat.nt + 1];
    let mut theta = res.theta;
    let (mut profile, mut flux) = lat.march(d, &f, lat.initial(), &res)?;
    let gap = |f: &[f64], flux: &[f64]| f.iter().zip(flux).fold(0.0, |m: f64, (a, b)| m.max((mu * b - a).abs()));
    let mut residual = gap(&f, &flux);
    let mut iterations = 0;
    while residual >= res.fixed_point_tolerance {
        if iterations >= res.max_iterations {
            return Err(Error::NoConvergence { iterations, residual });
        }
        iterations += 1;
        let trial: Vec<f64> = f.iter().zip(&flux).map(|(a, b)| (1.0 - theta) * a + theta * mu * b).collect();
        let accepted = if sampled_mean(&trial) < band {
            let start = profile.slice(profile.slices()).to_vec();
            match lat.march(d, &trial, start, &res) {
                Ok((p, fl)) => {
                    let r = gap(&trial, &fl);
                    (r < residual).then_some((p, fl, r))
                }
                Err(Error::Cfl { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        match accepted {
            Some((p, fl, r)) => {
                f = trial;
                profile = p;
                flux = fl;
                residual = r;
            }
            None => {
                theta *= 0.5;
                if theta < THETA_FLOOR {
                    return Err(Error::NoConvergence { iterations, residual });
                }
            }
        }
    }

    let mean_f = sampled_mean(&f);
    let min_flux = flux.iter().copied().fold(f64::INFINITY, f64::min);
    let x_far = 0.75 * length;
    let far_field_error = lat
        .times()
        .map(|t| (profile.value_at(t, x_far) - z.eval(t)).abs())
        .fold(0.0, f64::max);
    Ok(SemiWave {
        d,
        mu,
        period,
        f,
        profile,
        z,
        phi_mean,
        mean_f,
        residual,
        min_flux,
        far_field_error,
        iterations,
        theta,
    })
}

#[derive(Clone, Debug)]
pub struct SpeedBounds {
    pub lower: f64,
    pub upper: f64,
    /// Semi-wave for `a_inf - k z2`.
    pub lower_wave: SemiWave,
    /// Semi-wave for `a^inf - k z1`.
    pub upper_wave: SemiWave,
}

/// Bounds on `lim s(t) / t` for the single-front problem from the tail
/// envelopes (`r = 0`) of `a` and `b`.
pub fn speed_bounds(a: &PeriodicField, b: &PeriodicField, params: &CompetitionParams, res: SemiWaveResolution) -> Result<SpeedBounds> {
    params.validate()?;
    let set = ode_bound_set(a, b, params.k, params.h)?;
    let period = a.period();
    let ta = a.tail().expect("ode_bound_set checked the tails").clone();
    let k = params.k;
    let (upper_env, lower_env) = (ta.upper.clone(), ta.lower.clone());
    let (z1, z2) = (set.z1.clone(), set.z2.clone());
    let phi_upper = move |t: f64| upper_env.eval(t, period) - k * z1.eval(t);
    let phi_lower = move |t: f64| lower_env.eval(t, period) - k * z2.eval(t);
    let n = 512;
    for (name, phi) in [("a^inf - k z1", &phi_upper as &dyn Fn(f64) -> f64), ("a_inf - k z2", &phi_lower)] {
        let min = (0..n).map(|i| phi(period * i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Precondition(format!(
                "effective growth {name} reaches {min}; the weak-competition inequalities fail"
            )));
        }
    }
    let (d1, mu) = (params.d1, params.mu);
    let (up, low) = rayon::join(
        || solve_f0(d1, mu, phi_upper, period, None, res),
        || solve_f0(d1, mu, phi_lower, period, None, res),
    );
    let (upper_wave, lower_wave) = (up?, low?);
    Ok(SpeedBounds {
        lower: lower_wave.mean_f,
        upper: upper_wave.mean_f,
        lower_wave,
        upper_wave,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasuredSpeed {
    pub slope: f64,
    /// Slopes over the two halves of the window, ordered.
    pub band: (f64, f64),
    pub window: (f64, f64),
}

/// Least-squares slope of `s(t)` over the trailing `fraction` of the series.
pub fn fit_speed(times: &[f64], s: &[f64], fraction: f64) -> Result<MeasuredSpeed> {
    if !(fraction > 0.0 && fraction <= 1.0) || times.len() != s.len() || times.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < fraction <= 1 and at least four samples, got {fraction}, {}",
            times.len()
        )));
    }
    let t_last = times[times.len() - 1];
    let t_from = t_last - fraction * (t_last - times[0]);
    let start = times.iter().position(|&t| t >= t_from).unwrap();
    let (ts, ss) = (&times[start..], &s[start..]);
    if ts.len() < 4 {
        return Err(Error::InvalidParameter("window holds fewer than four samples".into()));
    }
    let slope = |ts: &[f64], ss: &[f64]| {
        let n = ts.len() as f64;
        let (mt, ms) = (ts.iter().sum::<f64>() / n, ss.iter().sum::<f64>() / n);
        let cov: f64 = ts.iter().zip(ss).map(|(t, s)| (t - mt) * (s - ms)).sum();
        let var: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
        cov / var
    };
    let half = ts.len() / 2;
    let (s1, s2) = (slope(&ts[..half], &ss[..half]), slope(&ts[half..], &ss[half..]));
    Ok(MeasuredSpeed {
        slope: slope(ts, ss),
        band: (s1.min(s2), s1.max(s2)),
        window: (ts[0], t_last),
    })
}

/// Front speed of a spreading run over the trailing `fraction` of the run.
pub fn measured_speed(traj: &FrontTrajectory, report: &DichotomyReport, fraction: f64) -> Result<MeasuredSpeed> {
    if report.verdict != Verdict::Spreading {
        return Err(Error::Precondition(format!("verdict is {}; a speed needs a spreading run", report.verdict)));
    }
    fit_speed(&traj.times, &traj.s, fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_semiwave_far_field() {
        let w = semiwave_profile(|_| 0.0, 1.0, |_| 1.0, 1.0, 20.0, SemiWaveResolution::default()).unwrap();
        for i in 0..=w.slices() {
            assert!((w.value_at(w.time(i), 15.0) - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn band_refusal() {
        let err = semiwave_profile(|_| 2.5, 1.0, |_| 1.0, 1.0, 20.0, SemiWaveResolution::default()).unwrap_err();
        assert!(matches!(err, Error::SemiWaveBand { .. }));
    }

    #[test]
    fn semiwave_comparison() {
        let res = SemiWaveResolution::default();
        let wg = semiwave_profile(|_| 0.0, 1.0, |_| 1.0, 1.0, 20.0, res).unwrap();
        let wf = semiwave_profile(|_| 0.5, 1.0, |_| 1.0, 1.0, 20.0, res).unwrap();
        let dx = wg.grid().dx();
        for i in 0..=wg.slices() {
            let t = wg.time(i);
            for x in [0.5, 1.0, 2.0, 4.0] {
                assert!(wg.value_at(t, x) > wf.value_at(t, x));
            }
        }
        let fg = one_sided_derivative(wg.slice(0), dx, Side::Left);
        let ff = one_sided_derivative(wf.slice(0), wf.grid().dx(), Side::Left);
        assert!(fg > ff);
    }

    #[test]
    fn bounds_constant_envelopes() {
        let one = PeriodicField::constant(1.0, 1.0);
        let p = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
        let b = speed_bounds(&one, &one, &p, SemiWaveResolution::default()).unwrap();
        assert!(b.lower < b.upper);
        assert!((b.upper_wave.phi_mean - 0.75).abs() < 1e-9);
        assert!((b.lower_wave.phi_mean - 0.5).abs() < 1e-9);
        let p0 = CompetitionParams::symmetric(1.0, 0.0, 0.5, 1.0, 1.0);
        let b0 = speed_bounds(&one, &one, &p0, SemiWaveResolution::default()).unwrap();
        assert!((b0.lower - b0.upper).abs() < 1e-12);
    }

    #[test]
    fn fitted_speeds() {
        let ts: Vec<f64> = (0..=3000).map(|i| i as f64 * 0.1).collect();
        let lin: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let m = fit_speed(&ts, &lin, 1.0 / 3.0).unwrap();
        assert!((m.slope - 2.0).abs() < 1e-12 && (m.band.1 - m.band.0).abs() < 1e-12);
        let wavy: Vec<f64> = ts.iter().map(|t| 2.0 * t + t.sin()).collect();
        let m = fit_speed(&ts, &wavy, 1.0 / 3.0).unwrap();
        assert!((m.slope - 2.0).abs() < 0.05);
    }
}
