//! Extremal periodic competition states by alternating upper/lower iteration.
use compfront::fields::check_condition_h1;
use compfront::periodic::{monotone_iteration, ode_bound_set, MonotoneOptions};
use compfront::{BoundaryOp, CompetitionParams, PeriodicField};

fn main() -> compfront::Result<()> {
    let a = PeriodicField::constant(1.0, 1.0);
    let b = PeriodicField::seasonal(1.0, 0.3, 1.0);
    let mut params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    params.bc1 = BoundaryOp::neumann();
    params.bc2 = BoundaryOp::neumann();

    println!("{:?}", check_condition_h1(&a, &b, &params)?.verdict);
    let set = ode_bound_set(&a, &b, params.k, params.h)?;
    println!(
        "ODE bounds: mean w1 = {:.4}, w2 = {:.4}, z1 = {:.4}, z2 = {:.4}",
        set.w1.mean(),
        set.w2.mean(),
        set.z1.mean(),
        set.z2.mean()
    );

    let states = monotone_iteration(&a, &b, &params, MonotoneOptions::default())?;
    println!(
        "{} iterations, ordering certificate {:.1e}, last change {:.1e}",
        states.iterations, states.ordering_certificate, states.final_change
    );
    for x in [0.0, 5.0, 20.0] {
        println!(
            "x = {x:>4}: U_* = {:.5} <= U* = {:.5}, V_* = {:.5} <= V* = {:.5}",
            states.u_low.value_at(0.0, x),
            states.u_star.value_at(0.0, x),
            states.v_star_low.value_at(0.0, x),
            states.v_star.value_at(0.0, x)
        );
    }
    Ok(())
}
