//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// `J0(x)` from its power series; accurate to ~1e-15 for `x < 10`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// `J1(x)` from its power series.
pub fn bessel_j1(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..80 {
        term *= q / (k as f64 * (k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive zero of `J0`, by bisection on the power series.
pub fn j01() -> f64 {
    bisect(bessel_j0, 2.0, 3.0)
}

/// First positive zero of `J1`.
pub fn j11() -> f64 {
    bisect(bessel_j1, 3.0, 4.5)
}

/// Principal Dirichlet eigenvalue of the unit disk.
pub fn disk_lambda(r: f64) -> f64 {
    let j = j01();
    j * j / (r * r)
}

/// Principal eigenvalue of `-u'' - (d-1)/r u' = lambda u` on `(r_in, r_out)`
/// with zero end values (or regularity at 0 when `r_in = 0`), by shooting
/// with RK4 and bisection on `lambda`.
pub fn radial_shooting(dim: usize, r_in: f64, r_out: f64, lo: f64, hi: f64) -> f64 {
    let end_value = |lambda: f64| -> f64 {
        let steps = 20_000;
        let h = (r_out - r_in) / steps as f64;
        // state (u, u'); start slightly off the origin with the series
        let (mut r, mut u, mut du) = if r_in == 0.0 {
            let r0 = 1e-6;
            (r0, 1.0 - lambda * r0 * r0 / (2.0 * dim as f64), -lambda * r0 / dim as f64)
        } else {
            (r_in, 0.0, 1.0)
        };
        let h = if r_in == 0.0 { (r_out - r) / steps as f64 } else { h };
        let rhs = |r: f64, u: f64, du: f64| (du, -(dim as f64 - 1.0) / r * du - lambda * u);
        for _ in 0..steps {
            let k1 = rhs(r, u, du);
            let k2 = rhs(r + 0.5 * h, u + 0.5 * h * k1.0, du + 0.5 * h * k1.1);
            let k3 = rhs(r + 0.5 * h, u + 0.5 * h * k2.0, du + 0.5 * h * k2.1);
            let k4 = rhs(r + h, u + h * k3.0, du + h * k3.1);
            u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            du += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            r += h;
        }
        u
    };
    bisect(end_value, lo, hi)
}
