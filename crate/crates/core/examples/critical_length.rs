//! Length at which the principal eigenvalue changes sign, and the spreading
//! thresholds built from it.
use compfront::eigen::{critical_length, threshold_s_star, EigenResolution};
use compfront::fields::Preset;
use compfront::{BoundaryOp, CompetitionParams, PeriodicField, Problem};

fn main() -> compfront::Result<()> {
    let res = EigenResolution::new(128, 128);
    let one = PeriodicField::constant(1.0, 1.0);
    for d in [1.0, 4.0] {
        let cl = critical_length(d, &one, BoundaryOp::dirichlet(), None, res)?;
        println!("d = {d}: l0 = {:.6} (exact {:.6})", cl.ell0, std::f64::consts::PI * d.sqrt());
    }
    let cl = critical_length(1.0, &one, BoundaryOp::robin(0.5), None, res)?;
    println!("Robin alpha = 1/2: l0 = {:.6}", cl.ell0);

    let a = PeriodicField::preset(
        Preset::Separable {
            near: 2.0,
            far: 0.5,
            width: 1.0,
            amplitude: 0.5,
        },
        1.0,
    )?;
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let th = threshold_s_star(&a, &one, &params, Problem::Coupled, res)?;
    println!("coupled s* = {:.6} from the {:?}", th.s_star, th.branch);
    let th = threshold_s_star(&a, &one, &params, Problem::Single, res)?;
    println!("single-front s_* = {:.6}", th.s_star);

    // Negative growth everywhere: no finite threshold.
    let neg = PeriodicField::constant(-1.0, 1.0);
    match critical_length(1.0, &neg, BoundaryOp::dirichlet(), None, res) {
        Err(e) => println!("c = -1: {e}"),
        Ok(cl) => println!("unexpected threshold {}", cl.ell0),
    }
    Ok(())
}
