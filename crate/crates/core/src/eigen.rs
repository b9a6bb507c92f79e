//! Principal eigenvalue of the periodic-parabolic problem
//!
//! ```text
//! phi_t - d phi_xx - c(t, x) phi = lambda phi   on (0, T) x (0, l)
//! B[phi](t, 0) = 0,  phi(t, l) = 0,  phi(0, x) = phi(T, x)
//! ```
//!
//! computed by power iteration on the period map of `phi_t = d phi_xx + c phi`.
//! The map is discretised with backward Euler (diffusion and the linear term
//! both implicit), which keeps it a positive operator, and the eigenvalue is
//! Richardson-extrapolated from `nt` and `2 nt` steps per period to remove the
//! first-order time error.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BoundaryOp, CompetitionParams, PeriodicField};
use crate::parabolic::{Grid1D, ImexStepper, LeftBoundary, RightBoundary};
use crate::periodic::PeriodicProfile;

/// Space and time resolution of one eigenvalue solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EigenResolution {
    pub nx: usize,
    /// Steps per period.
    pub nt: usize,
    pub max_iterations: usize,
    /// Convergence tolerance on the change of `ln rho` between iterations.
    pub tolerance: f64,
}

impl Default for EigenResolution {
    fn default() -> Self {
        Self {
            nx: 256,
            nt: 512,
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

impl EigenResolution {
    pub fn new(nx: usize, nt: usize) -> Self {
        Self {
            nx,
            nt,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 32 || self.nt < 64 {
            return Err(Error::InvalidParameter(format!(
                "eigen resolution needs nx >= 32 and nt >= 64, got ({}, {})",
                self.nx, self.nt
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Positive, sup-normalised, `nt + 1` time slices on `[0, T]`.
    pub eigenfunction: PeriodicProfile,
    pub ell: f64,
    pub iterations: usize,
    /// Last change of `ln rho` in the power iteration.
    pub residual: f64,
    /// Collatz–Wielandt enclosure of the eigenvalue of the discrete
    /// (`2 nt`) period map, before extrapolation.
    pub discrete_bounds: (f64, f64),
}

struct PowerRun {
    log_rho: f64,
    iterations: usize,
    residual: f64,
    start: Vec<f64>,
    cw_bounds: (f64, f64),
}

struct PeriodMap<'a> {
    grid: Grid1D,
    stepper: ImexStepper,
    d: f64,
    c: &'a PeriodicField,
    left: LeftBoundary,
    nt: usize,
    xs: Vec<f64>,
}

impl<'a> PeriodMap<'a> {
    fn new(ell: f64, d: f64, c: &'a PeriodicField, bc: BoundaryOp, nx: usize, nt: usize) -> Result<Self> {
        let grid = Grid1D::new(nx, ell)?;
        Ok(Self {
            grid,
            stepper: ImexStepper::new(grid),
            d,
            c,
            left: bc.into(),
            nt,
            xs: grid.coordinates(),
        })
    }

    /// Applies one period to `w` in place, sup-normalising after each step.
    /// Returns the accumulated `ln` growth; `record` receives each
    /// normalised slice with the cumulative log growth so far.
    fn apply(&mut self, w: &mut Vec<f64>, mut record: impl FnMut(usize, &[f64], f64)) -> Result<f64> {
        let period = self.c.period();
        let dt = period / self.nt as f64;
        let mut next = vec![0.0; w.len()];
        let mut log_growth = 0.0;
        record(0, w, 0.0);
        for k in 0..self.nt {
            let t_new = (k + 1) as f64 * dt;
            let (c, xs) = (self.c, &self.xs);
            self.stepper.step_with_implicit(
                w,
                &mut next,
                self.d,
                dt,
                |_| 0.0,
                |_, _| 0.0,
                |j| c.eval(t_new, xs[j]),
                self.left,
                RightBoundary::Dirichlet(0.0),
            )?;
            let m = next.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
            log_growth += m.ln();
            for v in next.iter_mut() {
                *v /= m;
            }
            std::mem::swap(w, &mut next);
            record(k + 1, w, log_growth);
        }
        Ok(log_growth)
    }

    fn power_iterate(&mut self, mut w: Vec<f64>, res: &EigenResolution) -> Result<PowerRun> {
        let mut previous = f64::NAN;
        let mut residual = f64::INFINITY;
        for it in 1..=res.max_iterations {
            let start = w.clone();
            let log_rho = self.apply(&mut w, |_, _, _| {})?;
            residual = (log_rho - previous).abs();
            previous = log_rho;
            if residual < res.tolerance {
                let cw_bounds = collatz_wielandt(&start, &w, log_rho);
                return Ok(PowerRun {
                    log_rho,
                    iterations: it,
                    residual,
                    start: w,
                    cw_bounds,
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: res.max_iterations,
            residual,
        })
    }
}

/// Bounds `min_j ln((P w)_j / w_j) <= ln rho <= max_j ln((P w)_j / w_j)`.
fn collatz_wielandt(start: &[f64], end: &[f64], log_growth: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&a, &b) in start.iter().zip(end) {
        if a > 1e-200 && b > 1e-200 {
            let r = (b / a).ln() + log_growth;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

fn initial_vector(grid: Grid1D, bc: BoundaryOp) -> Vec<f64> {
    let l = grid.length();
    grid.coordinates()
        .into_iter()
        .map(|x| bc.alpha() * (PI * x / l).sin() + bc.beta() * (PI * x / (2.0 * l)).cos())
        .collect()
}

/// Principal eigenvalue `lambda_1(ell; d, c)` with the Robin operator `bc`
/// at `x = 0` and Dirichlet at `x = ell`.
pub fn principal_eigenvalue(ell: f64, d: f64, c: &PeriodicField, bc: BoundaryOp, res: EigenResolution) -> Result<EigenResult> {
    principal_eigenvalue_from(ell, d, c, bc, res, None)
}

/// As [`principal_eigenvalue`], warm-started from a previous eigenfunction
/// (its first time slice, rescaled to the new length).
pub fn principal_eigenvalue_from(
    ell: f64,
    d: f64,
    c: &PeriodicField,
    bc: BoundaryOp,
    res: EigenResolution,
    warm: Option<&EigenResult>,
) -> Result<EigenResult> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::InvalidParameter(format!("ell must be positive, got {ell}")));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("d must be positive, got {d}")));
    }
    res.validate()?;
    let period = c.period();

    let mut coarse = PeriodMap::new(ell, d, c, bc, res.nx, res.nt)?;
    let grid = coarse.grid;
    let w0 = match warm {
        Some(prev) if prev.eigenfunction.grid().cells() == res.nx => prev.eigenfunction.slice(0).to_vec(),
        _ => initial_vector(grid, bc),
    };
    let run_coarse = coarse.power_iterate(w0, &res)?;

    let mut fine = PeriodMap::new(ell, d, c, bc, res.nx, 2 * res.nt)?;
    let run_fine = fine.power_iterate(run_coarse.start.clone(), &res)?;

    let lambda_coarse = -run_coarse.log_rho / period;
    let lambda_fine = -run_fine.log_rho / period;
    let lambda1 = 2.0 * lambda_fine - lambda_coarse;

    // Eigenfunction phi(t) = e^{lambda t} w(t) from one more fine period,
    // keeping every other slice.
    let mut slices = Vec::with_capacity(res.nt + 1);
    let mut w = run_fine.start.clone();
    let dt = period / (2 * res.nt) as f64;
    fine.apply(&mut w, |k, slice, log_growth| {
        if k % 2 == 0 {
            let scale = (log_growth + lambda_fine * k as f64 * dt).exp();
            slices.push(slice.iter().map(|v| v * scale).collect::<Vec<f64>>());
        }
    })?;
    let sup = slices.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
    for s in slices.iter_mut() {
        for v in s.iter_mut() {
            *v /= sup;
        }
    }
    let eigenfunction = PeriodicProfile::new(period, grid, slices)?;

    let (lo, hi) = run_fine.cw_bounds;
    Ok(EigenResult {
        lambda1,
        eigenfunction,
        ell,
        iterations: run_coarse.iterations + run_fine.iterations,
        residual: run_fine.residual,
        discrete_bounds: (-hi / period, -lo / period),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalLength {
    pub ell0: f64,
    pub lambda1: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// Set when the tail growth condition could not be verified from the field's tail.
    pub warning: Option<String>,
}

/// Default lower end of the critical-length search.
pub const DEFAULT_ELL_LO: f64 = 1e-2;
/// The search doubles the upper end at most this many times.
pub const MAX_DOUBLINGS: u32 = 14;

/// Length `ell0` with `lambda_1(ell0; d, c) = 0`, found by bisection.
/// Without an explicit bracket the upper end doubles from [`DEFAULT_ELL_LO`]
/// until the eigenvalue turns negative.
pub fn critical_length(
    d: f64,
    c: &PeriodicField,
    bc: BoundaryOp,
    bracket: Option<(f64, f64)>,
    res: EigenResolution,
) -> Result<CriticalLength> {
    let warning = match c.tail() {
        Some(_) => None,
        None => Some("tail growth condition not verifiable: the field carries no tail metadata".to_string()),
    };
    let mut evaluations = 0;
    let mut eval = |ell: f64, warm: Option<&EigenResult>| {
        evaluations += 1;
        principal_eigenvalue_from(ell, d, c, bc, res, warm)
    };

    let (mut lo, mut hi, mut warm) = match bracket {
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::InvalidParameter(format!("invalid bracket ({lo}, {hi})")));
            }
            let e_lo = eval(lo, None)?;
            let e_hi = eval(hi, Some(&e_lo))?;
            if !(e_lo.lambda1 > 0.0 && e_hi.lambda1 < 0.0) {
                return Err(Error::Bracket {
                    lo,
                    hi,
                    detail: format!("lambda1 = {} at lo and {} at hi", e_lo.lambda1, e_hi.lambda1),
                });
            }
            (lo, hi, e_hi)
        }
        None => {
            let cap = DEFAULT_ELL_LO * 2f64.powi(MAX_DOUBLINGS as i32);
            // lambda_1 >= -sup c, so a nowhere-positive rate never crosses zero.
            if c.sup(cap) <= 0.0 {
                return Err(Error::NoThreshold { searched_to: cap });
            }
            let mut lo = DEFAULT_ELL_LO;
            let mut e = eval(lo, None)?;
            if e.lambda1 <= 0.0 {
                return Err(Error::Bracket {
                    lo,
                    hi: lo,
                    detail: format!("lambda1 = {} is already nonpositive at the lower end", e.lambda1),
                });
            }
            let mut hi = lo;
            loop {
                if hi >= cap {
                    return Err(Error::NoThreshold { searched_to: hi });
                }
                lo = hi;
                hi *= 2.0;
                e = eval(hi, Some(&e))?;
                if e.lambda1 < 0.0 {
                    break;
                }
            }
            (lo, hi, e)
        }
    };
    let bracket = (lo, hi);

    loop {
        let mid = 0.5 * (lo + hi);
        let e = eval(mid, Some(&warm))?;
        if e.lambda1.abs() < 1e-4 {
            return Ok(CriticalLength {
                ell0: mid,
                lambda1: e.lambda1,
                bracket,
                evaluations,
                warning,
            });
        }
        if e.lambda1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = e;
        if hi - lo < 1e-12 * hi {
            return Err(Error::NoConvergence {
                iterations: evaluations,
                residual: warm.lambda1.abs(),
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    UBranch,
    VBranch,
}

#[derive(Clone, Debug, Serialize)]
pub struct Threshold {
    pub s_star: f64,
    pub branch: Branch,
    /// Critical length of `(d1, a, bc1)`, if it exists.
    pub u_branch: Option<f64>,
    /// Critical length of `(d2, b, bc2)`; always `None` for the single-front problem.
    pub v_branch: Option<f64>,
    pub warnings: Vec<String>,
}

/// Spreading threshold: `s*` (the smaller critical length of the two
/// species) for the coupled problem, `s_*` (the first species only) for the
/// single-front problem. Ties go to the u-branch.
pub fn threshold_s_star(
    a: &PeriodicField,
    b: &PeriodicField,
    params: &CompetitionParams,
    problem: crate::fields::Problem,
    res: EigenResolution,
) -> Result<Threshold> {
    let mut warnings = Vec::new();
    let mut branch = |d: f64, c: &PeriodicField, bc: BoundaryOp| -> Result<Option<f64>> {
        match critical_length(d, c, bc, None, res) {
            Ok(cl) => {
                warnings.extend(cl.warning);
                Ok(Some(cl.ell0))
            }
            Err(Error::NoThreshold { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let u = branch(params.d1, a, params.bc1)?;
    let v = match problem {
        crate::fields::Problem::Coupled => branch(params.d2, b, params.bc2)?,
        crate::fields::Problem::Single => None,
    };
    let (s_star, which) = match (u, v) {
        (Some(u), Some(v)) if v < u => (v, Branch::VBranch),
        (Some(u), _) => (u, Branch::UBranch),
        (None, Some(v)) => (v, Branch::VBranch),
        (None, None) => {
            return Err(Error::NoThreshold {
                searched_to: DEFAULT_ELL_LO * 2f64.powi(MAX_DOUBLINGS as i32),
            })
        }
    };
    Ok(Threshold {
        s_star,
        branch: which,
        u_branch: u,
        v_branch: v,
        warnings,
    })
}
