#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Tanh-sinh rule on [a, b]; the integrand receives the node and its distances to both ends,
/// so endpoint singularities can be evaluated without cancellation.
pub fn tanh_sinh<F>(a: f64, b: f64, f: F) -> Complex64
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let eval = |h: f64| -> Complex64 {
        let kmax = (4.5 / h) as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -kmax..=kmax {
            let t = k as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
            let da = half * 2.0 / (1.0 + (-2.0 * u).exp());
            let db = half * 2.0 / (1.0 + (2.0 * u).exp());
            if da <= 0.0 || db <= 0.0 {
                continue;
            }
            acc += h * w * half * f(a + da, da, db);
        }
        acc
    };
    let mut h = 1.0 / 8.0;
    let mut prev = eval(h);
    loop {
        h *= 0.5;
        let cur = eval(h);
        if (cur - prev).norm() <= 1e-14 * cur.norm().max(1.0) || h < 1.0 / 1024.0 {
            return cur;
        }
        prev = cur;
    }
}

/// `∫_0^{π/2} cos(2np) / sqrt((E/4)^2 - cos^2 p) dp` for `0 < E < 4`, split at the branch point.
pub fn j_line_integral(energy: f64, n: i64) -> Complex64 {
    let p0 = (energy / 4.0).acos();
    let nf = n as f64;
    // (E/4)^2 - cos^2 p = sin(p - p0) sin(p + p0)
    let left = tanh_sinh(0.0, p0, |p, _da, db| {
        let mag = (db.sin() * (p + p0).sin()).sqrt();
        Complex64::new(0.0, -(2.0 * nf * p).cos() / mag)
    });
    let right = tanh_sinh(p0, PI / 2.0, |p, da, _db| {
        let mag = (da.sin() * (p + p0).sin()).sqrt();
        Complex64::new((2.0 * nf * p).cos() / mag, 0.0)
    });
    left + right
}

/// `∫_0^{π/2} cos^{2n} p (1 - k^2 sin^2 p)^{-1/2} dp` with `sqrt(negative) = +i|.|`, `k^2 > 1`.
pub fn cn_line_integral(k_squared: f64, n: i32) -> Complex64 {
    let p1 = (1.0 / k_squared.sqrt()).asin();
    // 1 - k^2 sin^2 p = k^2 sin(p1 - p) sin(p1 + p)
    let left = tanh_sinh(0.0, p1, |p, _da, db| {
        let mag = (k_squared * db.sin() * (p1 + p).sin()).sqrt();
        Complex64::new(p.cos().powi(2 * n) / mag, 0.0)
    });
    let right = tanh_sinh(p1, PI / 2.0, |p, da, _db| {
        let mag = (k_squared * da.sin() * (p1 + p).sin()).sqrt();
        Complex64::new(0.0, -p.cos().powi(2 * n) / mag)
    });
    left + right
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}
