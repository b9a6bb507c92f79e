//! Explicit supersolution certifying vanishing for small mu, checked
//! against a simulation at half the certified value.
use compfront::dynamics::classify;
use compfront::free_boundary::{build_vanishing_certificate, simulate_coupled, CertificateResolution, FrontResolution};
use compfront::{CompetitionParams, InitialData, PeriodicField, Problem};

fn main() -> compfront::Result<()> {
    let one = PeriodicField::constant(1.0, 1.0);
    let mut params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let init = InitialData::bumps(1.0, 1.0);
    let cert = build_vanishing_certificate(&one, &one, &params, &init, 0.05, 0.05, CertificateResolution::default())?;
    println!(
        "lambda1 = {:.4}, C = {:.4}, epsilon = {:.4}, margin = {:.4}, Lambda = {:.4}",
        cert.lambda1, cert.c_constant, cert.epsilon, cert.margin_u, cert.lambda_amplitude
    );
    println!("mu0 = {:.6e}, front bound {:.4}", cert.mu0, cert.front_bound);

    params.mu = cert.mu0 / 2.0;
    let tr = simulate_coupled(&one, &one, &params, &init, 200.0, FrontResolution::default())?;
    let rep = classify(&tr, std::f64::consts::PI, Problem::Coupled)?;
    println!("at mu0 / 2: {} with s(200) = {:.6}", rep.verdict, tr.final_s());

    match build_vanishing_certificate(&one, &one, &params, &init, 0.5, 0.5, CertificateResolution::default()) {
        Err(e) => println!("delta = sigma = 0.5: {e}"),
        Ok(_) => println!("delta = sigma = 0.5 unexpectedly certified"),
    }
    Ok(())
}
