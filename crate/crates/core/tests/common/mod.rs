//! Test-only oracles, independent of the library's solvers.
#![allow(dead_code)]

/// `d q'' - c q' + q (a - q) = 0`, `q(0) = 0`, by RK4 from slope `p`.
/// True if `q` overshoots `a`, false if `q'` turns negative first.
pub fn shoot(d: f64, a: f64, c: f64, p: f64) -> bool {
    let h = 1e-3;
    let rhs = |q: f64, r: f64| (r, (c * r - q * (a - q)) / d);
    let (mut q, mut r) = (0.0, p);
    for _ in 0..2_000_000 {
        let k1 = rhs(q, r);
        let k2 = rhs(q + 0.5 * h * k1.0, r + 0.5 * h * k1.1);
        let k3 = rhs(q + 0.5 * h * k2.0, r + 0.5 * h * k2.1);
        let k4 = rhs(q + h * k3.0, r + h * k3.1);
        q += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        r += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if q > a {
            return true;
        }
        if r < 0.0 {
            return false;
        }
    }
    false
}

/// Slope `q'(0)` of the monotone semi-wave with speed `c`.
pub fn semiwave_slope(d: f64, a: f64, c: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 2.0 * (a * a * a / d).sqrt() + 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(d, a, c, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Constant-coefficient semi-wave speed: the `c` with `mu q'(0; c) = c`.
pub fn oracle_speed(d: f64, a: f64, mu: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 2.0 * (a * d).sqrt());
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mu * semiwave_slope(d, a, mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `z' = z (c(t) - z)` marched by RK4 for `periods` periods from `z0`, then
/// sampled at `n` equispaced times over one more period.
pub fn logistic_marching(c: impl Fn(f64) -> f64, period: f64, z0: f64, periods: usize, n: usize) -> Vec<(f64, f64)> {
    let steps_per_period = 2000 * n;
    let h = period / steps_per_period as f64;
    let f = |t: f64, z: f64| z * (c(t) - z);
    let mut z = z0;
    let mut t = 0.0;
    let step = |t: &mut f64, z: &mut f64| {
        let k1 = f(*t, *z);
        let k2 = f(*t + 0.5 * h, *z + 0.5 * h * k1);
        let k3 = f(*t + 0.5 * h, *z + 0.5 * h * k2);
        let k4 = f(*t + h, *z + h * k3);
        *z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        *t += h;
    };
    for _ in 0..periods * steps_per_period {
        step(&mut t, &mut z);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push((i as f64 * period / n as f64, z));
        for _ in 0..steps_per_period / n {
            step(&mut t, &mut z);
        }
    }
    out
}
