//! Uniform grids, tridiagonal solves and an IMEX stepper for
//! `w_t = d w_xx + drift(t, x) w_x + reaction(t, x, w)` on `[0, l]`.
//!
//! Diffusion is backward Euler; drift (centred differences) and reaction are
//! explicit. The Robin row at `x = 0` uses the one-sided second-order
//! derivative and is folded into the tridiagonal matrix by eliminating `w_2`
//! with the first interior row; a Neumann row on the right is folded the
//! same way.
//!
//! # Positivity
//!
//! With nonnegative data, `reaction(t, x, 0) >= 0` and homogeneous boundary
//! data, a step keeps `w >= 0` when
//!
//! - the cell Péclet number `|drift| dx / (2 d)` is at most 1,
//! - `dt * sup(-reaction(w) / w) <= 1`,
//! - and, when `beta > 0`, `d dt / dx^2 >= 1/2` so the folded boundary row
//!   stays an M-matrix row.
//!
//! For two logistic solutions `c w - w^2` below `M` the explicit reaction is
//! monotone when `dt <= 1 / (2M - inf c)`, which gives the comparison
//! principle for the scheme.

use crate::error::{Error, Result};
use crate::fields::BoundaryOp;

/// Uniform grid `x_j = j dx`, `j = 0..=n`, on `[0, length]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 8 cells, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { n, length })
    }

    /// `[0, 1]` with `n` cells, the front-fixed domain.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Node coordinate; the last node is exactly `length`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        if j == self.n {
            self.length
        } else {
            self.length * j as f64 / self.n as f64
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.x(j)).collect()
    }
}

/// Values on the nodes of a [`Grid1D`].
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::InvalidParameter(format!(
                "profile has {} values for {} nodes",
                values.len(),
                grid.nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profile contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coordinates().into_iter().map(f).collect())
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.nodes()],
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation, zero outside `[0, length]`.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_uniform(&self.values, self.grid.length(), x)
    }
}

/// Linear interpolation of nodal values on a uniform grid over `[0, length]`;
/// zero outside.
#[inline]
pub fn interpolate_uniform(values: &[f64], length: f64, x: f64) -> f64 {
    if !(0.0..=length).contains(&x) {
        return 0.0;
    }
    let n = values.len() - 1;
    let pos = x / length * n as f64;
    let j = (pos as usize).min(n - 1);
    let f = pos - j as f64;
    values[j] * (1.0 - f) + values[j + 1] * f
}

/// Thomas algorithm. Row `i` reads
/// `lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`, so
/// `lower` and `upper` have length `n - 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(Error::InvalidParameter("tridiagonal bands have inconsistent lengths".into()));
    }
    let mut out = vec![0.0; n];
    let mut cp = vec![0.0; n];
    thomas(lower, diag, upper, rhs, &mut cp, &mut out)?;
    Ok(out)
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], cp: &mut [f64], x: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    if diag[0] == 0.0 {
        return Err(Error::SingularSystem { row: 0 });
    }
    cp[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    x[0] = rhs[0] / diag[0];
    for i in 1..n {
        let pivot = diag[i] - lower[i - 1] * cp[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        cp[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(())
}

/// Robin data `alpha w(0) - beta w_x(0) = 0` with raw coefficients. In
/// stretched coordinates `beta` absorbs the Jacobian, so `alpha + beta = 1`
/// is not required here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeftBoundary {
    pub alpha: f64,
    pub beta: f64,
}

impl LeftBoundary {
    /// The operator as seen on a domain stretched by `scale` (`x = scale y`).
    pub fn stretched(op: BoundaryOp, scale: f64) -> Self {
        Self {
            alpha: op.alpha(),
            beta: op.beta() / scale,
        }
    }
}

impl From<BoundaryOp> for LeftBoundary {
    fn from(op: BoundaryOp) -> Self {
        Self {
            alpha: op.alpha(),
            beta: op.beta(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RightBoundary {
    /// `w(l) = value`
    Dirichlet(f64),
    /// `w_x(l) = flux`
    Neumann(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Second-order one-sided derivative at either end.
pub fn boundary_derivative(w: &Profile, side: Side) -> f64 {
    one_sided_derivative(w.values(), w.grid().dx(), side)
}

#[inline]
pub fn one_sided_derivative(w: &[f64], dx: f64, side: Side) -> f64 {
    let n = w.len() - 1;
    match side {
        Side::Right => (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * dx),
        Side::Left => (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dx),
    }
}

/// Reusable workspace for repeated steps on one grid.
#[derive(Clone, Debug)]
pub struct ImexStepper {
    grid: Grid1D,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    cp: Vec<f64>,
}

impl ImexStepper {
    pub fn new(grid: Grid1D) -> Self {
        let n = grid.nodes();
        Self {
            grid,
            lower: vec![0.0; n - 1],
            diag: vec![0.0; n],
            upper: vec![0.0; n - 1],
            rhs: vec![0.0; n],
            cp: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Largest `dt` allowed by the explicit-drift CFL guard.
    pub fn admissible_dt(&self, max_drift: f64) -> f64 {
        if max_drift > 0.0 {
            self.grid.dx() / max_drift
        } else {
            f64::INFINITY
        }
    }

    /// One IMEX step from `w` into `out`. `drift(j)` and `reaction(j, w_j)`
    /// are evaluated at the old time level.
    #[allow(clippy::too_many_arguments)]
    pub fn step<D, R>(
        &mut self,
        w: &[f64],
        out: &mut [f64],
        d: f64,
        dt: f64,
        drift: D,
        reaction: R,
        left: LeftBoundary,
        right: RightBoundary,
    ) -> Result<()>
    where
        D: Fn(usize) -> f64,
        R: Fn(usize, f64) -> f64,
    {
        self.step_with_implicit(w, out, d, dt, drift, reaction, |_| 0.0, left, right)
    }

    /// As [`ImexStepper::step`], with an extra linear term `k(j) w` treated
    /// implicitly. The eigenvalue solver uses this for `c w`.
    #[allow(clippy::too_many_arguments)]
    pub fn step_with_implicit<D, R, K>(
        &mut self,
        w: &[f64],
        out: &mut [f64],
        d: f64,
        dt: f64,
        drift: D,
        reaction: R,
        implicit: K,
        left: LeftBoundary,
        right: RightBoundary,
    ) -> Result<()>
    where
        D: Fn(usize) -> f64,
        R: Fn(usize, f64) -> f64,
        K: Fn(usize) -> f64,
    {
        let n = self.grid.cells();
        let dx = self.grid.dx();
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(d >= 0.0) {
            return Err(Error::InvalidParameter(format!("diffusivity must be nonnegative, got {d}")));
        }
        let r = d * dt / (dx * dx);
        let mut max_drift: f64 = 0.0;
        for j in 1..n {
            let b = drift(j);
            max_drift = max_drift.max(b.abs());
            self.lower[j - 1] = -r;
            self.diag[j] = 1.0 + 2.0 * r - dt * implicit(j);
            self.upper[j] = -r;
            self.rhs[j] = w[j] + dt * (b * (w[j + 1] - w[j - 1]) / (2.0 * dx) + reaction(j, w[j]));
        }
        if max_drift * dt > dx * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                admissible: self.admissible_dt(max_drift),
            });
        }

        // Left Robin row c0 w0 + c1 w1 + c2 w2 = 0, folded with row 1.
        let c0 = left.alpha + 1.5 * left.beta / dx;
        let c1 = -2.0 * left.beta / dx;
        let c2 = 0.5 * left.beta / dx;
        if c2 == 0.0 {
            self.diag[0] = c0;
            self.upper[0] = 0.0;
            self.rhs[0] = 0.0;
        } else if self.upper[1] != 0.0 {
            let f = c2 / self.upper[1];
            self.diag[0] = c0 - f * self.lower[0];
            self.upper[0] = c1 - f * self.diag[1];
            self.rhs[0] = -f * self.rhs[1];
        } else {
            // Decoupled interior (d = 0): w2 is already known.
            let w2 = self.rhs[2] / self.diag[2];
            self.diag[0] = c0;
            self.upper[0] = c1;
            self.rhs[0] = -c2 * w2;
        }

        match right {
            RightBoundary::Dirichlet(value) => {
                self.lower[n - 1] = 0.0;
                self.diag[n] = 1.0;
                self.rhs[n] = value;
            }
            RightBoundary::Neumann(flux) => {
                // (3 w_n - 4 w_{n-1} + w_{n-2}) / (2 dx) = flux, folded with row n-1.
                let (e0, e1, e2) = (1.5 / dx, -2.0 / dx, 0.5 / dx);
                if self.lower[n - 2] != 0.0 {
                    let f = e2 / self.lower[n - 2];
                    self.diag[n] = e0 - f * self.upper[n - 1];
                    self.lower[n - 1] = e1 - f * self.diag[n - 1];
                    self.rhs[n] = flux - f * self.rhs[n - 1];
                } else {
                    let wm2 = self.rhs[n - 2] / self.diag[n - 2];
                    self.diag[n] = e0;
                    self.lower[n - 1] = e1;
                    self.rhs[n] = flux - e2 * wm2;
                }
            }
        }

        thomas(&self.lower, &self.diag, &self.upper, &self.rhs, &mut self.cp, out)
    }
}

/// Pure single step of `w_t = d w_xx + drift w_x + reaction` from time `t`.
#[allow(clippy::too_many_arguments)]
pub fn step_imex(
    w: &Profile,
    d: f64,
    drift: impl Fn(f64, f64) -> f64,
    reaction: impl Fn(f64, f64, f64) -> f64,
    bc_left: BoundaryOp,
    bc_right: RightBoundary,
    t: f64,
    dt: f64,
) -> Result<Profile> {
    let grid = w.grid();
    let xs = grid.coordinates();
    let mut stepper = ImexStepper::new(grid);
    let mut out = vec![0.0; grid.nodes()];
    stepper.step(
        w.values(),
        &mut out,
        d,
        dt,
        |j| drift(t, xs[j]),
        |j, v| reaction(t, xs[j], v),
        bc_left.into(),
        bc_right,
    )?;
    Profile::new(grid, out)
}
