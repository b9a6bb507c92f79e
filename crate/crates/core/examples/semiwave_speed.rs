//! Semi-wave drift F0 and the spreading-speed bounds, compared with a
//! measured front speed.
use compfront::dynamics::classify;
use compfront::free_boundary::{simulate_single, FrontResolution};
use compfront::speed::{measured_speed, solve_f0, speed_bounds, SemiWaveResolution};
use compfront::{CompetitionParams, InitialData, InitialShape, PeriodicField, Problem};

fn main() -> compfront::Result<()> {
    let res = SemiWaveResolution::default();
    let wave = solve_f0(1.0, 1.0, |_| 1.0, 1.0, None, res)?;
    println!("constant growth: F0 = {:.6}, residual {:.1e}", wave.mean_f, wave.residual);
    let wave = solve_f0(1.0, 1.0, |t| 1.0 + 0.8 * (2.0 * std::f64::consts::PI * t).sin(), 1.0, None, res)?;
    println!(
        "seasonal growth: mean F0 = {:.6}, F0 ranges over [{:.4}, {:.4}]",
        wave.mean_f,
        wave.f.iter().copied().fold(f64::INFINITY, f64::min),
        wave.f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    );

    let one = PeriodicField::constant(1.0, 1.0);
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    let bounds = speed_bounds(&one, &one, &params, res)?;
    println!("speed bounds [{:.4}, {:.4}]", bounds.lower, bounds.upper);

    let init = InitialData {
        u0: InitialShape::Bump { amplitude: 1.0 },
        v0: InitialShape::Plateau {
            amplitude: 1.0,
            width: 1.0,
        },
    };
    let fr = FrontResolution {
        nx: 512,
        snapshots_per_period: 1,
        nx_v: Some(2000),
        ..Default::default()
    };
    let tr = simulate_single(&one, &one, &params, &init, 150.0, 200.0, fr)?;
    let rep = classify(&tr, std::f64::consts::PI, Problem::Single)?;
    let m = measured_speed(&tr, &rep, 1.0 / 3.0)?;
    println!("measured speed {:.4} (halves {:.4}, {:.4})", m.slope, m.band.0, m.band.1);
    Ok(())
}
