#![allow(dead_code)]

use hill::coeffs::PeriodicCoefficients;

pub const BARRIER: f64 = 10.0;
pub const BARRIER_WIDTH: f64 = 0.5;

pub fn kp() -> PeriodicCoefficients {
    PeriodicCoefficients::kronig_penney(1.0, BARRIER, BARRIER_WIDTH).unwrap()
}

/// Transfer matrix of `y'' + k2·y = 0` over width `w`, written out by branch.
pub fn segment(k2: f64, w: f64) -> [[f64; 2]; 2] {
    if k2 > 0.0 {
        let k = k2.sqrt();
        [[(k * w).cos(), (k * w).sin() / k], [-k * (k * w).sin(), (k * w).cos()]]
    } else if k2 < 0.0 {
        let k = (-k2).sqrt();
        [[(k * w).cosh(), (k * w).sinh() / k], [k * (k * w).sinh(), (k * w).cosh()]]
    } else {
        [[1.0, w], [0.0, 1.0]]
    }
}

pub fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Kronig-Penney transfer matrix from 0 to `x` in `[0, 1]` (barrier on `[0, 0.5)`).
pub fn kp_transfer(lambda: f64, x: f64) -> [[f64; 2]; 2] {
    let barrier = segment(lambda - BARRIER, x.min(BARRIER_WIDTH));
    if x <= BARRIER_WIDTH {
        barrier
    } else {
        mul(segment(lambda, x - BARRIER_WIDTH), barrier)
    }
}

pub fn kp_discriminant(lambda: f64) -> f64 {
    let m = kp_transfer(lambda, 1.0);
    m[0][0] + m[1][1]
}

/// Plain bisection on a bracketed sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "not bracketed on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kronig-Penney edges up to `lambda_max` from a dense scan of the
/// analytic discriminant: `(lambda, target)` with target `±2`.
pub fn kp_edges(lambda_max: f64) -> Vec<(f64, f64)> {
    let n = 200_000;
    let lo = -1.0;
    let step = (lambda_max - lo) / n as f64;
    let mut out = Vec::new();
    for target in [2.0, -2.0] {
        let f = |l: f64| kp_discriminant(l) - target;
        let mut prev = f(lo);
        for i in 1..=n {
            let x = lo + i as f64 * step;
            let cur = f(x);
            if prev * cur < 0.0 {
                out.push((bisect(f, x - step, x), target));
            }
            prev = cur;
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
