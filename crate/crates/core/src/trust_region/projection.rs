//! Euclidean projection onto `C = [0, 1]^n ∩ {w^T x <= V}` and the
//! stationarity measures built on it.

use crate::hdm::{dot, norm};
use crate::mma::VolumeConstraint;

fn clip_shifted(y: &[f64], w: &[f64], mu: f64) -> Vec<f64> {
    y.iter().zip(w).map(|(y, w)| (y - mu * w).clamp(0.0, 1.0)).collect()
}

/// `P_C(y)`. The multiplier of the halfspace is found by bisection and then
/// polished by solving exactly on the detected free set.
pub fn project(y: &[f64], c: &VolumeConstraint) -> Vec<f64> {
    let w = &c.weights;
    let x0 = clip_shifted(y, w, 0.0);
    if dot(w, &x0) <= c.cap {
        return x0;
    }
    let vol = |mu: f64| dot(w, &clip_shifted(y, w, mu));
    let mut a = 0.0;
    let mut b = 1.0;
    while vol(b) > c.cap {
        a = b;
        b *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if vol(m) > c.cap {
            a = m;
        } else {
            b = m;
        }
    }
    // On the free set the volume is affine in mu; solve it exactly.
    let mut num = -c.cap;
    let mut den = 0.0;
    for (yj, wj) in y.iter().zip(w) {
        let z = yj - b * wj;
        if z >= 1.0 {
            num += wj;
        } else if z > 0.0 {
            num += wj * yj;
            den += wj * wj;
        }
    }
    if den > 0.0 {
        let mu = num / den;
        if mu >= a && mu <= b {
            let x = clip_shifted(y, w, mu);
            if dot(w, &x) <= c.cap + 1e-14 * c.cap.max(1.0) {
                return x;
            }
        }
    }
    clip_shifted(y, w, b)
}

/// `|| psi - P_C(psi - g) ||_2`.
pub fn termination_measure(psi: &[f64], grad: &[f64], c: &VolumeConstraint) -> f64 {
    let y: Vec<f64> = psi.iter().zip(grad).map(|(p, g)| p - g).collect();
    let p = project(&y, c);
    psi.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Criticality measure `|min <g, d>|` over `psi + d ∈ C`, `|d| <= 1`.
///
/// The minimizer lies on the projected-gradient path
/// `d(t) = P_C(psi - t g) - psi`, whose norm is non-decreasing in `t`; the
/// step length with `|d(t)| = 1` is found by bisection. Returns `None` if
/// the bisection does not reach relative accuracy `1e-8` in `10^4` steps.
pub fn criticality_chi(psi: &[f64], grad: &[f64], c: &VolumeConstraint) -> Option<f64> {
    if norm(grad) == 0.0 {
        return Some(0.0);
    }
    let step = |t: f64| -> Vec<f64> {
        let y: Vec<f64> = psi.iter().zip(grad).map(|(p, g)| p - t * g).collect();
        project(&y, c).iter().zip(psi).map(|(a, b)| a - b).collect()
    };
    let value = |d: &[f64]| (-dot(grad, d)).max(0.0);
    let mut hi = 1.0 / norm(grad);
    let mut d = step(hi);
    // -g lies in the normal cone: the path never leaves psi.
    if norm(&d) <= 1e-15 {
        return Some(value(&d));
    }
    // Grow t until the ball binds or the path stops moving.
    let mut prev = norm(&d);
    let mut iters = 0;
    while norm(&d) < 1.0 {
        hi *= 2.0;
        d = step(hi);
        let n = norm(&d);
        iters += 1;
        if n - prev <= 1e-15 * n.max(1.0) && iters > 60 {
            return Some(value(&d));
        }
        prev = n;
        if iters > 10_000 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..10_000 {
        let mid = 0.5 * (lo + hi);
        let dm = step(mid);
        let n = norm(&dm);
        if (n - 1.0).abs() <= 1e-8 {
            return Some(value(&dm));
        }
        if n > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * hi {
            return Some(value(&dm));
        }
    }
    None
}
