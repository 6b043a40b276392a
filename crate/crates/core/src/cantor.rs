//! Self-similar (Cantor-type) right-hand sides.
//!
//! On a support interval the function vanishes exactly on the attractor of
//! the two-map IFS with contraction `ratio`, and on each removed gap equals
//! `sign · coeff · dist^exponent`, where `dist` is the distance to the
//! nearer gap edge. The reciprocal integral over the whole support is a
//! geometric series with ratio `2·ratio^(1-exponent)`; it converges exactly
//! when that ratio is below one, in which case closed forms exist for every
//! subinterval by self-similarity.

use crate::math;

/// Gap profile of a self-similar piece. The support interval comes from
/// the enclosing piece, so the profile itself is position-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorGaps {
    /// IFS contraction ratio, in (0, 1/2).
    pub ratio: f64,
    /// Gap profile exponent, > 0. Reciprocals are integrable only for
    /// exponents below 1.
    pub exponent: f64,
    /// Positive multiplier of the gap profile.
    pub coeff: f64,
    /// +1 for a nonnegative piece, -1 for a nonpositive one.
    pub sign: i8,
}

impl CantorGaps {
    /// Middle-thirds construction with cube-root gap profile.
    pub fn middle_thirds() -> Self {
        CantorGaps {
            ratio: 1.0 / 3.0,
            exponent: 1.0 / 3.0,
            coeff: 1.0,
            sign: 1,
        }
    }

    /// Whether the reciprocal series over the removed gaps converges.
    pub fn reciprocal_converges(&self) -> bool {
        self.exponent < 1.0 && 2.0 * math::powf(self.ratio, 1.0 - self.exponent) < 1.0
    }

    /// Largest value the piece attains on a support of width `w`.
    pub fn sup_value(&self, w: f64) -> f64 {
        self.coeff * math::powf((1.0 - 2.0 * self.ratio) * w * 0.5, self.exponent)
    }

    /// `∫ dx / |f|` over a full support of width `w`.
    pub fn full_reciprocal(&self, w: f64) -> f64 {
        if !self.reciprocal_converges() {
            return f64::INFINITY;
        }
        let p = self.exponent;
        let geom = 1.0 - 2.0 * math::powf(self.ratio, 1.0 - p);
        2.0 * math::powf((1.0 - 2.0 * self.ratio) * w * 0.5, 1.0 - p)
            / ((1.0 - p) * self.coeff * geom)
    }

    /// Signed value at `x` for support `[lo, hi]`; exactly zero on the
    /// attractor (and outside the support).
    pub fn eval(&self, lo: f64, hi: f64, x: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..96 {
            if x <= lo || x >= hi {
                return 0.0;
            }
            let w = hi - lo;
            let ga = lo + self.ratio * w;
            let gb = hi - self.ratio * w;
            if x > ga && x < gb {
                let dist = (x - ga).min(gb - x);
                return f64::from(self.sign) * self.coeff * math::powf(dist, self.exponent);
            }
            if x <= ga {
                hi = ga;
            } else {
                lo = gb;
            }
        }
        0.0
    }

    /// Whether `x` lies on the attractor, up to `tol`.
    pub fn in_attractor(&self, lo: f64, hi: f64, x: f64, tol: f64) -> bool {
        if x < lo - tol || x > hi + tol {
            return false;
        }
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            if hi - lo <= tol {
                return true;
            }
            let w = hi - lo;
            let ga = lo + self.ratio * w;
            let gb = hi - self.ratio * w;
            if math::abs(x - ga) <= tol || math::abs(x - gb) <= tol {
                return true;
            }
            if x > ga && x < gb {
                return false;
            }
            if x <= ga {
                hi = ga;
            } else {
                lo = gb;
            }
        }
        true
    }

    /// `∫ dx / |f|` over `[a, b] ∩ [lo, hi]` for support `[lo, hi]`.
    pub fn reciprocal_integral(&self, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
        if !self.reciprocal_converges() {
            if b.min(hi) > a.max(lo) {
                return f64::INFINITY;
            }
            return 0.0;
        }
        self.recip_cell(lo, hi, a, b, 64)
    }

    fn recip_cell(&self, clo: f64, chi: f64, a: f64, b: f64, depth: u32) -> f64 {
        if b <= clo || a >= chi {
            return 0.0;
        }
        if a <= clo && b >= chi {
            return self.full_reciprocal(chi - clo);
        }
        if depth == 0 {
            // cell mass ~ w^(1-p) is far below any tolerance by now
            return 0.0;
        }
        let w = chi - clo;
        let ga = clo + self.ratio * w;
        let gb = chi - self.ratio * w;
        self.gap_reciprocal(ga, gb, a.max(ga), b.min(gb))
            + self.recip_cell(clo, ga, a, b, depth - 1)
            + self.recip_cell(gb, chi, a, b, depth - 1)
    }

    /// Closed-form `∫ dx / (coeff · min(x-ga, gb-x)^p)` over `[a, b] ⊆ [ga, gb]`.
    fn gap_reciprocal(&self, ga: f64, gb: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let p = self.exponent;
        let mid = 0.5 * (ga + gb);
        let mut total = 0.0;
        // left half: profile (x - ga)^p
        let (la, lb) = (a, b.min(mid));
        if lb > la {
            if p >= 1.0 && la <= ga {
                return f64::INFINITY;
            }
            total += (math::powf(lb - ga, 1.0 - p) - math::powf(la - ga, 1.0 - p))
                / ((1.0 - p) * self.coeff);
        }
        // right half: profile (gb - x)^p
        let (ra, rb) = (a.max(mid), b);
        if rb > ra {
            if p >= 1.0 && rb >= gb {
                return f64::INFINITY;
            }
            total += (math::powf(gb - ra, 1.0 - p) - math::powf(gb - rb, 1.0 - p))
                / ((1.0 - p) * self.coeff);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thirds() -> CantorGaps {
        CantorGaps::middle_thirds()
    }

    #[test]
    fn full_reciprocal_matches_series() {
        // independent oracle: sum the gap contributions level by level;
        // level n holds 2^n gaps of length 3^-(n+1), each contributing
        // 3 (g/2)^(2/3), a geometric series with ratio 2/3^(2/3)
        let mut series = 0.0f64;
        let mut term = 3.0 * (1.0f64 / 6.0).powf(2.0 / 3.0);
        let ratio = 2.0 / 3.0f64.powf(2.0 / 3.0);
        while term > 1e-18 {
            series += term;
            term *= ratio;
        }
        let closed = thirds().full_reciprocal(1.0);
        assert!((closed - series).abs() < 1e-10, "{closed} vs {series}");
        assert!((closed - 23.598_793_149_740_556).abs() < 1e-9);
    }

    #[test]
    fn reciprocal_is_additive() {
        let c = thirds();
        for &m in &[0.1, 0.25, 1.0 / 3.0, 0.5, 0.77] {
            let whole = c.reciprocal_integral(0.0, 1.0, 0.0, 1.0);
            let split =
                c.reciprocal_integral(0.0, 1.0, 0.0, m) + c.reciprocal_integral(0.0, 1.0, m, 1.0);
            assert!(
                (whole - split).abs() < 1e-9,
                "split at {m}: {whole} vs {split}"
            );
        }
    }

    #[test]
    fn gap_values() {
        let c = thirds();
        let v = c.eval(0.0, 1.0, 0.5);
        assert!((v - (1.0f64 / 6.0).powf(1.0 / 3.0)).abs() < 1e-14);
        assert_eq!(c.eval(0.0, 1.0, 0.25), 0.0); // 0.0202...₃, in the set
        assert_eq!(c.eval(0.0, 1.0, 1.0 / 3.0), 0.0); // gap edge
        assert_eq!(c.eval(0.0, 1.0, -0.5), 0.0);
    }

    #[test]
    fn membership() {
        let c = thirds();
        assert!(c.in_attractor(0.0, 1.0, 0.25, 1e-12));
        assert!(c.in_attractor(0.0, 1.0, 1.0 / 3.0, 1e-12));
        assert!(c.in_attractor(0.0, 1.0, 1.0, 1e-12));
        assert!(!c.in_attractor(0.0, 1.0, 0.5, 1e-12));
        assert!(!c.in_attractor(0.0, 1.0, 0.4, 1e-12));
    }

    #[test]
    fn steep_profile_diverges() {
        let c = CantorGaps {
            exponent: 1.2,
            ..thirds()
        };
        assert!(!c.reciprocal_converges());
        assert_eq!(c.reciprocal_integral(0.0, 1.0, 0.2, 0.8), f64::INFINITY);
    }
}
