//! Polynomial evaluation and real-root isolation on an interval.
//!
//! Roots are isolated recursively: the critical points of `p` (roots of
//! `p'`) split the interval into monotone pieces, and each sign change is
//! then bracketed by bisection. Roots of even multiplicity are caught at
//! the critical points themselves.

use alloc::vec::Vec;

use crate::math;

/// Horner evaluation; `coeffs` are ordered low degree first.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Coefficients of the derivative.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Strip trailing coefficients that are exactly zero.
fn trimmed(coeffs: &[f64]) -> &[f64] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1] == 0.0 {
        n -= 1;
    }
    &coeffs[..n]
}

/// True when every coefficient is exactly zero.
pub fn is_zero(coeffs: &[f64]) -> bool {
    trimmed(coeffs).is_empty()
}

fn root_tolerance(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let scale = coeffs.iter().fold(0.0f64, |m, &c| m.max(math::abs(c)));
    let span = math::abs(a).max(math::abs(b)).max(1.0);
    let deg = coeffs.len().saturating_sub(1) as i32;
    // Magnitude a coefficient-level perturbation of ~1e-12 can reach on [a,b].
    1e-12 * scale * math::powf(span, deg as f64).max(1.0)
}

fn bisect_root(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = eval(coeffs, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (flo < 0.0) == (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots of `coeffs` in the closed interval `[a, b]`, ascending
/// and deduplicated. Even-multiplicity roots are included.
pub fn roots_in(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let p = trimmed(coeffs);
    let mut out = Vec::new();
    if p.is_empty() || a > b {
        return out;
    }
    if p.len() == 1 {
        return out; // nonzero constant
    }
    if p.len() == 2 {
        let r = -p[0] / p[1];
        if r >= a && r <= b {
            out.push(r);
        }
        return out;
    }

    let crits = roots_in(&derivative(p), a, b);
    let ztol = root_tolerance(p, a, b);

    // Monotone panels between consecutive critical points.
    let mut nodes = Vec::with_capacity(crits.len() + 2);
    nodes.push(a);
    nodes.extend(crits.iter().copied().filter(|&c| c > a && c < b));
    nodes.push(b);

    for pair in nodes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (flo, fhi) = (eval(p, lo), eval(p, hi));
        if math::abs(flo) <= ztol {
            out.push(lo);
        }
        if (flo < 0.0) != (fhi < 0.0) && math::abs(flo) > ztol && math::abs(fhi) > ztol {
            out.push(bisect_root(p, lo, hi));
        }
    }
    if math::abs(eval(p, b)) <= ztol {
        out.push(b);
    }

    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let sep = 1e-10 * (math::abs(a).max(math::abs(b)).max(1.0));
    out.dedup_by(|x, y| math::abs(*x - *y) <= sep);
    out
}
