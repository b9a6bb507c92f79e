//! Two-species Lotka–Volterra competition with Stefan free boundaries in
//! time-periodic heterogeneous environments.
//!
//! The crate simulates the moving-front problems, computes the periodic
//! principal eigenvalues whose signs decide spreading versus vanishing,
//! builds the extremal periodic coexistence states by monotone iteration and
//! estimates spreading speeds from periodic semi-waves.
//!
//! Modules, bottom up:
//!
//! - [`parabolic`]: grids, tridiagonal solves and the IMEX stepper.
//! - [`fields`]: periodic coefficients, boundary operators, parameters.
//! - [`eigen`]: principal eigenvalue of the periodic-parabolic problem.
//! - [`periodic`]: periodic logistic ODE/PDE solutions and monotone iteration.
//! - [`free_boundary`]: front-fixing solvers and the vanishing certificate.
//! - [`dynamics`]: spreading/vanishing classification and critical `mu`.
//! - [`speed`]: semi-waves, the drift `F0` and speed bounds.
//! - [`cli`]: scenario files and the `compfront` command.
//!
//! # Examples
//!
//! ```bash
//! cargo run --example eigenvalue
//! cargo run --example critical_length
//! cargo run --example periodic_logistic
//! cargo run --example monotone_iteration
//! cargo run --example coupled_front
//! cargo run --example single_front
//! cargo run --example vanishing_certificate
//! cargo run --example dichotomy
//! cargo run --example critical_mu
//! cargo run --example semiwave_speed
//! cargo run --example sweep
//! ```

pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod fields;
pub mod free_boundary;
pub mod parabolic;
pub mod periodic;
pub mod speed;

pub use error::{Error, Result};
pub use fields::{BoundaryOp, CompetitionParams, InitialData, InitialShape, PeriodicField, Preset, Problem};
pub use parabolic::{Grid1D, Profile};
pub use periodic::PeriodicProfile;
