//! Spreading or vanishing, decided from the threshold and decay rules.
use compfront::dynamics::Scenario;
use compfront::{CompetitionParams, InitialData, PeriodicField, Problem};

fn main() -> compfront::Result<()> {
    let one = PeriodicField::constant(1.0, 1.0);
    for (s0, mu) in [(4.0, 0.01), (4.0, 100.0), (1.0, 1e-3), (1.0, 1e2)] {
        let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, mu, s0);
        let sc = Scenario::new(Problem::Coupled, one.clone(), one.clone(), params, InitialData::bumps(1.0, 1.0));
        let th = sc.threshold()?.s_star;
        let (_, rep) = sc.run_and_classify(th)?;
        println!(
            "s0 = {s0}, mu = {mu:>6}: {:<9} (s* = {th:.4}, s = {:.4} at t = {:.2})",
            rep.verdict.to_string(),
            rep.s_final,
            rep.t_covered
        );
    }
    Ok(())
}
