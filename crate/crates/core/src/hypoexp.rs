//! Survival function and density of a sum of independent exponentials
//! (hypoexponential law), stable under repeated rates.
//!
//! The sum is the absorption time of a pure-birth chain whose state `j`
//! exits at `rates[j]`. Uniformization turns that chain into a discrete
//! one subordinated to a Poisson clock: every term is nonnegative, so no
//! cancellation occurs and Erlang (equal-rate) cases are exact to
//! rounding. Poisson weights are generated in log space so large
//! `max_rate·u` cannot underflow the recurrence.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const ABS_TOL: f64 = 1e-13;

/// `P{ Y_1 + … + Y_n > u }` for independent exponentials with the given
/// rates; `1` for `u <= 0`, and `0` for an empty rate list with `u > 0`.
pub fn hypoexp_sf(rates: &[f64], u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if rates.is_empty() {
        return 0.0;
    }
    if rates.len() == 1 {
        return math::exp(-rates[0] * u);
    }
    uniformized(rates, u).0
}

/// Strict-inequality variant `P{ Σ Y > u }` that treats the empty sum as
/// the point mass at zero (`P{0 > 0} = 0`). Identical to [`hypoexp_sf`]
/// for nonempty rates, where the law is continuous.
pub fn hypoexp_sf_strict(rates: &[f64], u: f64) -> f64 {
    if rates.is_empty() {
        return if u < 0.0 { 1.0 } else { 0.0 };
    }
    hypoexp_sf(rates, u)
}

/// Density of the sum at `u` (zero for `u <= 0` or an empty list).
pub fn hypoexp_pdf(rates: &[f64], u: f64) -> f64 {
    if u <= 0.0 || rates.is_empty() {
        return 0.0;
    }
    if rates.len() == 1 {
        return rates[0] * math::exp(-rates[0] * u);
    }
    uniformized(rates, u).1
}

/// Returns `(survival, density)` by uniformization.
fn uniformized(rates: &[f64], u: f64) -> (f64, f64) {
    let n = rates.len();
    let lam = rates.iter().fold(0.0f64, |m, &r| m.max(r));
    let m = lam * u;
    let move_p: Vec<f64> = rates.iter().map(|&r| r / lam).collect();

    // occupancy of the discrete chain after k steps
    let mut v = vec![0.0f64; n];
    v[0] = 1.0;
    let mut survival = 0.0;
    let mut last_occ = 0.0;
    let mut weight_seen = 0.0;

    let ln_m = math::ln(m);
    let mut log_w = -m; // log Poisson(k=0) weight
    let hard_cap = (m + 12.0 * math::sqrt(m + 1.0) + 60.0) as usize;

    for k in 0..=hard_cap {
        let w = math::exp(log_w);
        let sigma: f64 = v.iter().sum();
        survival += w * sigma;
        last_occ += w * v[n - 1];
        weight_seen += w;

        // remaining Poisson tail bounds the truncation error (sigma <= 1)
        if k as f64 >= m && 1.0 - weight_seen <= 0.5 * ABS_TOL {
            break;
        }
        if sigma < 0.5 * ABS_TOL {
            break;
        }

        // one step of the discrete chain
        for j in (1..n).rev() {
            v[j] += move_p[j - 1] * v[j - 1] - move_p[j] * v[j];
        }
        v[0] -= move_p[0] * v[0];

        log_w += ln_m - math::ln((k + 1) as f64);
    }
    (survival.clamp(0.0, 1.0), rates[n - 1] * last_occ)
}
