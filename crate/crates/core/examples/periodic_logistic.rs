//! Periodic logistic states: the closed-form ODE solution, the Dirichlet
//! problem on a bounded interval and the half-line problem.
use compfront::periodic::{periodic_logistic_halfline, periodic_logistic_ode, periodic_logistic_pde, PdeResolution, RightValue};
use compfront::{BoundaryOp, PeriodicField};

fn main() -> compfront::Result<()> {
    let c = |t: f64| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin();
    let z = periodic_logistic_ode(c, 1.0)?;
    println!("z(0) = {:.8}, mean z = {:.8}, ODE residual {:.1e}", z.z0(), z.mean(), z.residual(256));

    let field = PeriodicField::seasonal(1.0, 0.5, 1.0);
    let w = periodic_logistic_pde(10.0, 1.0, &field, BoundaryOp::dirichlet(), RightValue::Zero, PdeResolution::default())?;
    println!("Dirichlet on (0, 10): sup W = {:.6}, period residual {:.1e}", w.sup(), w.period_residual());

    let half = periodic_logistic_halfline(1.0, &field, BoundaryOp::dirichlet(), 40.0, PdeResolution::default(), true)?;
    println!(
        "half line: W(0.25, 20) = {:.6} vs z(0.25) = {:.6}, truncation change {:?}",
        half.profile.value_at(0.25, 20.0),
        z.eval(0.25),
        half.truncation_change
    );
    Ok(())
}
