//! Transition value of mu: a sharp bracket for the single front, an
//! interval for the coupled problem.
use compfront::dynamics::{critical_mu, Scenario};
use compfront::{CompetitionParams, InitialData, InitialShape, PeriodicField, Problem};

fn main() -> compfront::Result<()> {
    let one = PeriodicField::constant(1.0, 1.0);
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let single_init = InitialData {
        u0: InitialShape::Bump { amplitude: 1.0 },
        v0: InitialShape::Plateau {
            amplitude: 1.0,
            width: 1.0,
        },
    };
    let single = Scenario::new(Problem::Single, one.clone(), one.clone(), params.clone(), single_init);
    let r = critical_mu(&single, (1e-3, 1e2), 0.05)?;
    println!("single front: {:?} after {} runs", r.result, r.evaluations.len());

    let coupled = Scenario::new(Problem::Coupled, one.clone(), one, params, InitialData::bumps(1.0, 1.0));
    let r = critical_mu(&coupled, (1e-3, 1e2), 0.05)?;
    println!("coupled: {:?} after {} runs", r.result, r.evaluations.len());
    Ok(())
}
