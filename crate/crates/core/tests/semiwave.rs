mod common;

use common::{oracle_speed, semiwave_slope};
use compfront::speed::{solve_f0, speed_bounds, SemiWaveResolution};
use compfront::{CompetitionParams, PeriodicField};

#[test]
fn oracle_zero_speed_slope() {
    // Energy identity at c = 0: d p^2 / 2 = a^3 / 6.
    let p = semiwave_slope(1.0, 1.0, 0.0);
    assert!((p - (1.0f64 / 3.0).sqrt()).abs() < 1e-6, "{p}");
}

#[test]
fn constant_drift_matches_shooting() {
    let c0 = oracle_speed(1.0, 1.0, 1.0);
    let wave = solve_f0(1.0, 1.0, |_| 1.0, 1.0, None, SemiWaveResolution::default()).unwrap();
    assert!((wave.mean_f - c0).abs() < 1e-3, "{} vs {c0}", wave.mean_f);
    assert!(wave.residual < 1e-5);
    assert!(wave.violations().is_empty(), "{:?}", wave.violations());
    let spread = wave.f.iter().fold(0.0, |m: f64, v| m.max((v - wave.mean_f).abs()));
    assert!(spread < 1e-9);
}

#[test]
fn small_mu_drift() {
    let wave = solve_f0(1.0, 1e-2, |_| 1.0, 1.0, None, SemiWaveResolution::default()).unwrap();
    let c0 = oracle_speed(1.0, 1.0, 1e-2);
    assert!(wave.mean_f > 0.0 && wave.mean_f < 0.2);
    assert!((wave.mean_f - c0).abs() < 1e-3);
}

#[test]
fn upper_bound_matches_shooting() {
    let one = PeriodicField::constant(1.0, 1.0);
    let p = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
    let b = speed_bounds(&one, &one, &p, SemiWaveResolution::default()).unwrap();
    assert!((b.upper - oracle_speed(1.0, 0.75, 1.0)).abs() < 1e-3);
    assert!((b.lower - oracle_speed(1.0, 0.5, 1.0)).abs() < 1e-3);
}
