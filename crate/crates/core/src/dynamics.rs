//! Long-run classification of free-boundary runs, critical `mu` searches and
//! convergence to the extremal periodic states.
//!
//! The spreading rule is the threshold rule: once the front passes the
//! critical length of the eigenvalue problem (plus a margin) it can never
//! stall. Vanishing is declared when the densities have decayed and the front
//! has stopped moving. Anything else is `Undecided`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{threshold_s_star, EigenResolution, Threshold};
use crate::error::{Error, Result};
use crate::fields::{CompetitionParams, InitialData, PeriodicField, Problem};
use crate::free_boundary::{simulate_coupled_until, simulate_single_until, FrontResolution, FrontTrajectory};
use crate::periodic::ExtremalStates;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Spreading => "spreading",
            Verdict::Vanishing => "vanishing",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Decision thresholds of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Spreading needs `s >= threshold (1 + margin)`.
    pub margin: f64,
    /// Vanishing needs `sup u` (and `sup v` when coupled) below this.
    pub eps_density: f64,
    /// ... and `max s'` over the last period below this.
    pub eps_speed: f64,
    /// Minimum requested horizon, in periods.
    pub min_periods: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            margin: 0.1,
            eps_density: 1e-3,
            eps_speed: 1e-4,
            min_periods: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub verdict: Verdict,
    pub problem: Problem,
    pub threshold: f64,
    pub margin: f64,
    pub t_end: f64,
    /// Time actually simulated (shorter than `t_end` for runs stopped at the
    /// threshold).
    pub t_covered: f64,
    pub s_final: f64,
    /// First output time with `s >= threshold (1 + margin)`.
    pub crossing_time: Option<f64>,
    pub sup_u_final: f64,
    pub sup_v_final: f64,
    pub max_speed_last_period: f64,
    /// `(t, sup u, sup v, s')` at each period start.
    pub decay: Vec<[f64; 4]>,
    pub fingerprint: String,
}

/// Applies the two decision rules to a trajectory.
pub fn classify(traj: &FrontTrajectory, threshold: f64, problem: Problem) -> Result<DichotomyReport> {
    classify_with(traj, threshold, problem, ClassifyOptions::default())
}

pub fn classify_with(traj: &FrontTrajectory, threshold: f64, problem: Problem, opts: ClassifyOptions) -> Result<DichotomyReport> {
    if traj.problem != problem {
        return Err(Error::InvalidParameter(format!(
            "trajectory is for the {:?} problem, classification requested for {:?}",
            traj.problem, problem
        )));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!("threshold must be positive and finite, got {threshold}")));
    }
    let period = traj.period;
    if traj.t_end < opts.min_periods * period * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "run covers {:.3} periods; classification needs at least {}",
            traj.t_end / period,
            opts.min_periods
        )));
    }
    let target = threshold * (1.0 + opts.margin);
    let crossing = traj.s.iter().position(|&s| s >= target).map(|i| traj.times[i]);
    let last = traj.times.len() - 1;
    let t_covered = traj.times[last];
    let from = traj.times.iter().position(|&t| t >= t_covered - period).unwrap_or(0);
    let max_speed_last_period = traj.s_prime[from..].iter().fold(0.0, |m: f64, &x| m.max(x));
    let (su, sv) = (traj.sup_u[last], traj.sup_v[last]);
    let densities_gone = su < opts.eps_density && (problem == Problem::Single || sv < opts.eps_density);
    let verdict = if crossing.is_some() {
        Verdict::Spreading
    } else if densities_gone && max_speed_last_period < opts.eps_speed && t_covered >= opts.min_periods * period * (1.0 - 1e-9) {
        Verdict::Vanishing
    } else {
        Verdict::Undecided
    };
    let mut decay = Vec::new();
    let mut next = 0.0;
    for (i, &t) in traj.times.iter().enumerate() {
        if t >= next - 1e-9 * period {
            decay.push([t, traj.sup_u[i], traj.sup_v[i], traj.s_prime[i]]);
            next += period;
        }
    }
    Ok(DichotomyReport {
        verdict,
        problem,
        threshold,
        margin: opts.margin,
        t_end: traj.t_end,
        t_covered,
        s_final: traj.final_s(),
        crossing_time: crossing,
        sup_u_final: su,
        sup_v_final: sv,
        max_speed_last_period,
        decay,
        fingerprint: format!(
            "{:?} T={} mu={} rho={} s0={} t_end={} samples={}",
            problem,
            period,
            traj.mu,
            traj.rho,
            traj.s[0],
            traj.t_end,
            traj.times.len()
        ),
    })
}

/// Everything needed to run and classify one free-boundary experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub problem: Problem,
    pub a: PeriodicField,
    pub b: PeriodicField,
    pub params: CompetitionParams,
    pub init: InitialData,
    pub t_end: f64,
    pub resolution: FrontResolution,
    /// Half-line truncation for the single-front problem; defaults from the
    /// threshold when absent.
    pub length: Option<f64>,
    pub eigen: EigenResolution,
    pub classify: ClassifyOptions,
}

impl Scenario {
    pub fn new(problem: Problem, a: PeriodicField, b: PeriodicField, params: CompetitionParams, init: InitialData) -> Self {
        Self {
            problem,
            a,
            b,
            params,
            init,
            t_end: 200.0,
            resolution: FrontResolution::default(),
            length: None,
            eigen: EigenResolution::new(128, 128),
            classify: ClassifyOptions::default(),
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        let mut s = self.clone();
        s.params.mu = mu;
        s
    }

    /// `s*` (coupled) or `s_*` (single front).
    pub fn threshold(&self) -> Result<Threshold> {
        threshold_s_star(&self.a, &self.b, &self.params, self.problem, self.eigen)
    }

    /// Truncation used for the single-front problem: room for the front to
    /// pass the spreading target plus a wide far field.
    pub fn half_line_length(&self, threshold: f64) -> f64 {
        self.length
            .unwrap_or_else(|| (threshold * (1.0 + self.classify.margin) / 0.9 + 30.0).max(10.0 * self.params.s0).max(40.0))
    }

    /// Full run to `t_end`.
    pub fn simulate(&self, threshold: f64) -> Result<FrontTrajectory> {
        self.simulate_until(threshold, None)
    }

    fn simulate_until(&self, threshold: f64, stop: Option<f64>) -> Result<FrontTrajectory> {
        match self.problem {
            Problem::Coupled => simulate_coupled_until(&self.a, &self.b, &self.params, &self.init, self.t_end, self.resolution, stop),
            Problem::Single => simulate_single_until(
                &self.a,
                &self.b,
                &self.params,
                &self.init,
                self.t_end,
                self.half_line_length(threshold),
                self.resolution,
                stop,
            ),
        }
    }

    /// Runs until the front passes the spreading target or `t_end`, then
    /// classifies.
    pub fn run_and_classify(&self, threshold: f64) -> Result<(FrontTrajectory, DichotomyReport)> {
        let stop = threshold * (1.0 + self.classify.margin);
        let traj = self.simulate_until(threshold, Some(stop))?;
        let report = classify_with(&traj, threshold, self.problem, self.classify)?;
        Ok((traj, report))
    }

    /// Verdict at `mu`, retrying once with doubled `t_end` when undecided.
    pub fn verdict_at(&self, mu: f64, threshold: f64) -> Result<(Verdict, f64)> {
        let sc = self.with_mu(mu);
        let (_, rep) = sc.run_and_classify(threshold)?;
        if rep.verdict != Verdict::Undecided {
            return Ok((rep.verdict, sc.t_end));
        }
        let mut longer = sc;
        longer.t_end *= 2.0;
        let (_, rep) = longer.run_and_classify(threshold)?;
        Ok((rep.verdict, longer.t_end))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriticalMu {
    /// Single front: vanishing at `lo`, spreading at `hi`, `hi - lo <= tol hi`.
    Sharp { lo: f64, hi: f64 },
    /// Coupled: every sampled `mu <= mu_lower` vanished, every sampled
    /// `mu >= mu_upper` spread. Never collapsed to a point.
    Interval { mu_lower: f64, mu_upper: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalMuReport {
    pub result: CriticalMu,
    pub threshold: f64,
    /// Every classified `(mu, verdict)`, in evaluation order.
    pub evaluations: Vec<(f64, Verdict)>,
}

/// Points of the initial ladder in the coupled search.
const LADDER: usize = 8;

/// Locates the spreading/vanishing transition in `mu` with relative width
/// `tolerance`.
pub fn critical_mu(scenario: &Scenario, bracket: (f64, f64), tolerance: f64) -> Result<CriticalMuReport> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) || !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < mu_lo < mu_hi and 0 < tolerance < 1, got ({lo}, {hi}), {tolerance}"
        )));
    }
    let th = scenario.threshold()?.s_star;
    if scenario.params.s0 >= th {
        return Err(Error::Precondition(format!(
            "s0 = {} is not below the threshold {th}; the front spreads for every mu",
            scenario.params.s0
        )));
    }
    let mut evaluations = Vec::new();
    let undecided = |mu: f64| Error::Bracket {
        lo,
        hi,
        detail: format!("undecided verdict at mu = {mu} even with doubled t_end"),
    };
    match scenario.problem {
        Problem::Single => {
            let (r_lo, r_hi) = rayon::join(|| scenario.verdict_at(lo, th), || scenario.verdict_at(hi, th));
            let (v_lo, v_hi) = (r_lo?.0, r_hi?.0);
            evaluations.push((lo, v_lo));
            evaluations.push((hi, v_hi));
            check_endpoints(lo, hi, v_lo, v_hi)?;
            let (mut a, mut b) = (lo, hi);
            while b - a > tolerance * b {
                let mid = (a * b).sqrt();
                let (v, _) = scenario.verdict_at(mid, th)?;
                evaluations.push((mid, v));
                match v {
                    Verdict::Vanishing => a = mid,
                    Verdict::Spreading => b = mid,
                    Verdict::Undecided => return Err(undecided(mid)),
                }
            }
            Ok(CriticalMuReport {
                result: CriticalMu::Sharp { lo: a, hi: b },
                threshold: th,
                evaluations,
            })
        }
        Problem::Coupled => {
            let ratio = (hi / lo).powf(1.0 / (LADDER - 1) as f64);
            let mut samples: Vec<f64> = (0..LADDER).map(|i| lo * ratio.powi(i as i32)).collect();
            samples[LADDER - 1] = hi;
            let verdicts = samples
                .par_iter()
                .map(|&mu| scenario.verdict_at(mu, th).map(|v| v.0))
                .collect::<Result<Vec<_>>>()?;
            evaluations.extend(samples.iter().copied().zip(verdicts.iter().copied()));
            check_endpoints(lo, hi, verdicts[0], verdicts[LADDER - 1])?;
            loop {
                let (mu_lower, mu_upper) = conservative_interval(&evaluations);
                if mu_upper - mu_lower <= tolerance * mu_upper {
                    return Ok(CriticalMuReport {
                        result: CriticalMu::Interval { mu_lower, mu_upper },
                        threshold: th,
                        evaluations,
                    });
                }
                let mid = (mu_lower * mu_upper).sqrt();
                let (v, _) = scenario.verdict_at(mid, th)?;
                evaluations.push((mid, v));
                if v == Verdict::Undecided {
                    let (l, u) = conservative_interval(&evaluations);
                    return Ok(CriticalMuReport {
                        result: CriticalMu::Interval { mu_lower: l, mu_upper: u },
                        threshold: th,
                        evaluations,
                    });
                }
            }
        }
    }
}

fn check_endpoints(lo: f64, hi: f64, v_lo: Verdict, v_hi: Verdict) -> Result<()> {
    if v_lo != Verdict::Vanishing || v_hi != Verdict::Spreading {
        return Err(Error::Bracket {
            lo,
            hi,
            detail: format!("endpoint verdicts are {v_lo} at mu_lo and {v_hi} at mu_hi; need vanishing and spreading"),
        });
    }
    Ok(())
}

/// Largest `mu` below which every sample vanished and smallest `mu` above
/// which every sample spread.
fn conservative_interval(evals: &[(f64, Verdict)]) -> (f64, f64) {
    let mut sorted = evals.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let first_non_vanishing = sorted.iter().position(|e| e.1 != Verdict::Vanishing).unwrap_or(sorted.len());
    let last_non_spreading = sorted.iter().rposition(|e| e.1 != Verdict::Spreading);
    let lower = sorted[first_non_vanishing.saturating_sub(1)].0;
    let upper = match last_non_spreading {
        Some(i) if i + 1 < sorted.len() => sorted[i + 1].0,
        Some(_) => f64::INFINITY,
        None => sorted[0].0,
    };
    (lower, upper)
}

/// Sandwich check of the tail of a spreading run against the extremal
/// periodic states.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub window: (f64, f64),
    pub tolerance: f64,
    /// `max (U_* - min_n u)` on the window; positive means below the lower state.
    pub u_below: f64,
    /// `max (max_n u - U*)`.
    pub u_above: f64,
    pub v_below: f64,
    pub v_above: f64,
    /// Range of the sampled `u` and `v` values.
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub periods_used: usize,
    pub holds: bool,
}

/// Periods at the end of the run used by [`convergence_to_periodic`].
pub const CONVERGENCE_PERIODS: usize = 5;

/// Checks `U_* - tol <= u(t + nT, x) <= U* + tol` (and the `V` analogue) on
/// the window over the last five periods.
pub fn convergence_to_periodic(
    traj: &FrontTrajectory,
    report: &DichotomyReport,
    states: &ExtremalStates,
    window: (f64, f64),
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if report.verdict != Verdict::Spreading {
        return Err(Error::Precondition(format!("verdict is {}, convergence needs spreading", report.verdict)));
    }
    let period = traj.period;
    let t_last = traj.final_time();
    let t_from = t_last - CONVERGENCE_PERIODS as f64 * period;
    if t_from < 0.0 {
        return Err(Error::Precondition("run is shorter than five periods".into()));
    }
    let snaps: Vec<_> = traj.snapshots.iter().filter(|s| s.t >= t_from - 1e-9 * period).collect();
    if snaps.len() < CONVERGENCE_PERIODS {
        return Err(Error::Precondition("too few snapshots in the last five periods".into()));
    }
    let (x0, x1) = window;
    let s_min = snaps.iter().map(|s| s.s).fold(f64::INFINITY, f64::min);
    let l_states = states.u_star.grid().length();
    if !(x0 >= 0.0 && x1 > x0) || x1 > s_min || x1 > l_states {
        return Err(Error::Precondition(format!(
            "window [{x0}, {x1}] must lie inside the front (s >= {s_min}) and the state domain [0, {l_states}]"
        )));
    }
    let nx = 64;
    let mut r = ConvergenceReport {
        window,
        tolerance,
        u_below: f64::NEG_INFINITY,
        u_above: f64::NEG_INFINITY,
        v_below: f64::NEG_INFINITY,
        v_above: f64::NEG_INFINITY,
        u_range: (f64::INFINITY, f64::NEG_INFINITY),
        v_range: (f64::INFINITY, f64::NEG_INFINITY),
        periods_used: CONVERGENCE_PERIODS,
        holds: false,
    };
    // Each snapshot is compared at its own phase, which bounds the per-phase
    // min/max over n by the same states.
    for snap in snaps {
        for j in 0..=nx {
            let x = x0 + (x1 - x0) * j as f64 / nx as f64;
            let (u, v) = (traj.u_at(snap, x), traj.v_at(snap, x));
            r.u_range = (r.u_range.0.min(u), r.u_range.1.max(u));
            r.v_range = (r.v_range.0.min(v), r.v_range.1.max(v));
            r.u_below = r.u_below.max(states.u_low.value_at(snap.t, x) - u);
            r.u_above = r.u_above.max(u - states.u_star.value_at(snap.t, x));
            r.v_below = r.v_below.max(states.v_star_low.value_at(snap.t, x) - v);
            r.v_above = r.v_above.max(v - states.v_star.value_at(snap.t, x));
        }
    }
    r.holds = r.u_below <= tolerance && r.u_above <= tolerance && r.v_below <= tolerance && r.v_above <= tolerance;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BoundaryOp;

    fn constant(problem: Problem, mu: f64, s0: f64) -> Scenario {
        let one = PeriodicField::constant(1.0, 1.0);
        let init = match problem {
            Problem::Coupled => InitialData::bumps(1.0, 1.0),
            Problem::Single => InitialData {
                u0: crate::fields::InitialShape::Bump { amplitude: 1.0 },
                v0: crate::fields::InitialShape::Plateau {
                    amplitude: 1.0,
                    width: 1.0,
                },
            },
        };
        let mut sc = Scenario::new(problem, one.clone(), one, CompetitionParams::symmetric(1.0, 0.5, 0.5, mu, s0), init);
        sc.resolution = FrontResolution {
            nx: 64,
            nt: 50,
            ..Default::default()
        };
        sc.eigen = EigenResolution::new(64, 64);
        sc
    }

    #[test]
    fn coverage_precondition() {
        let mut sc = constant(Problem::Coupled, 1.0, 4.0);
        sc.t_end = 2.0;
        let tr = sc.simulate(std::f64::consts::PI).unwrap();
        assert!(matches!(classify(&tr, std::f64::consts::PI, Problem::Coupled), Err(Error::Precondition(_))));
    }

    #[test]
    fn spreading_above_threshold() {
        let sc = constant(Problem::Coupled, 1.0, 4.0);
        let (_, rep) = sc.run_and_classify(std::f64::consts::PI).unwrap();
        assert_eq!(rep.verdict, Verdict::Spreading);
    }

    #[test]
    fn vanishing_for_small_mu() {
        let sc = constant(Problem::Coupled, 1e-3, 1.0);
        let th = sc.threshold().unwrap().s_star;
        assert!((th - std::f64::consts::PI).abs() < 1e-2);
        let (_, rep) = sc.run_and_classify(th).unwrap();
        assert_eq!(rep.verdict, Verdict::Vanishing);
    }

    #[test]
    fn conservative_interval_tolerates_disorder() {
        use Verdict::*;
        let e = [(1.0, Vanishing), (2.0, Vanishing), (3.0, Spreading), (4.0, Vanishing), (5.0, Spreading), (6.0, Spreading)];
        assert_eq!(conservative_interval(&e), (2.0, 5.0));
        let e = [(1.0, Vanishing), (2.0, Spreading)];
        assert_eq!(conservative_interval(&e), (1.0, 2.0));
    }

    #[test]
    fn critical_mu_refuses_above_threshold() {
        let mut sc = constant(Problem::Single, 1.0, 4.0);
        sc.params.bc1 = BoundaryOp::dirichlet();
        assert!(matches!(critical_mu(&sc, (1e-3, 1e2), 0.05), Err(Error::Precondition(_))));
    }
}
