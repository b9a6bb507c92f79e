//! Principal eigenvalue of the periodic-parabolic problem on (0, l).
use std::f64::consts::PI;

use compfront::eigen::{principal_eigenvalue, EigenResolution};
use compfront::{BoundaryOp, PeriodicField};

fn main() -> compfront::Result<()> {
    let res = EigenResolution::default();
    let zero = PeriodicField::constant(0.0, 1.0);
    let e = principal_eigenvalue(PI, 1.0, &zero, BoundaryOp::dirichlet(), res)?;
    println!("Dirichlet, l = pi, c = 0:      lambda1 = {:.6} (exact 1)", e.lambda1);
    let e = principal_eigenvalue(PI / 2.0, 1.0, &zero, BoundaryOp::neumann(), res)?;
    println!("Neumann,   l = pi/2, c = 0:    lambda1 = {:.6} (exact 1)", e.lambda1);

    // A seasonal growth rate only shifts lambda1 by its mean.
    let seasonal = PeriodicField::seasonal(0.5, 2.0, 1.0);
    let e = principal_eigenvalue(PI, 1.0, &seasonal, BoundaryOp::dirichlet(), res)?;
    println!("Dirichlet, l = pi, c = 0.5 + 2 sin(2 pi t): lambda1 = {:.6} (exact 0.5)", e.lambda1);
    println!("discrete enclosure {:?}, {} power iterations", e.discrete_bounds, e.iterations);
    Ok(())
}
