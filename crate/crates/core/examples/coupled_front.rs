//! Both species behind a common free boundary.
use compfront::free_boundary::{simulate_coupled, FrontResolution};
use compfront::{CompetitionParams, InitialData, PeriodicField};

fn main() -> compfront::Result<()> {
    let one = PeriodicField::constant(1.0, 1.0);
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    let tr = simulate_coupled(&one, &one, &params, &InitialData::bumps(1.0, 1.0), 40.0, FrontResolution::default())?;
    for t in [0.0, 10.0, 20.0, 30.0, 40.0] {
        let i = tr.times.iter().position(|&x| x >= t - 1e-9).unwrap();
        println!("t = {:>4}: s = {:8.4}, s' = {:.4}, sup u = {:.4}", tr.times[i], tr.s[i], tr.s_prime[i], tr.sup_u[i]);
    }
    let snap = tr.snapshots.last().unwrap();
    println!("u(t, 8) = {:.5} (coexistence value 2/3)", tr.u_at(snap, 8.0));
    println!("max s' / (mu (1 + rho) M) = {:.4}", tr.max_speed_ratio());
    println!("invariant violations: {:?}", tr.invariant_violations());
    Ok(())
}
