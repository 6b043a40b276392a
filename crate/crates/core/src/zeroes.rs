//! The zero set of `f` and its reachability classification.
//!
//! `f⁻¹(0)` decomposes into isolated points, flat intervals and
//! Cantor-type attractors. Classification attaches two flags to each
//! point or boundary: whether a strictly increasing solution can start
//! there (`in_r_plus`, local integrability of `1/f⁺` to the right) and
//! whether a strictly decreasing one can (`in_r_minus`, mirrored).
//! Points with both flags are branch points; points with neither are
//! dead: only the constant solution exists.

use alloc::vec::Vec;

use crate::cantor::CantorGaps;
use crate::error::Result;
use crate::math;
use crate::regulated::{PieceZeroSet, RegulatedFn, Side};
use crate::ZERO_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolatedZero {
    pub x: f64,
    pub in_r_minus: bool,
    pub in_r_plus: bool,
}

/// Maximal closed interval on which `f` vanishes identically. Interior
/// points are always dead; only the endpoints can carry escape flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_in_r_minus: bool,
    pub hi_in_r_plus: bool,
}

/// Cantor-type component of the zero set. Escape within the component is
/// uniform: when the reciprocal series converges, every non-extremal point
/// of the attractor can escape in the sign direction of the piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorComponent {
    pub lo: f64,
    pub hi: f64,
    pub gaps: CantorGaps,
    pub interior_in_r_plus: bool,
    pub interior_in_r_minus: bool,
    /// Escape to the left of `lo`, through whatever lies outside the piece.
    pub lo_in_r_minus: bool,
    /// Escape to the right of `hi`.
    pub hi_in_r_plus: bool,
}

/// Classified zero set.
#[derive(Debug, Clone, Default)]
pub struct ZeroStructure {
    pub isolated: Vec<IsolatedZero>,
    pub intervals: Vec<ZeroInterval>,
    pub cantor: Vec<CantorComponent>,
}

impl ZeroStructure {
    /// Whether `[a, b]` lies inside one flat interval.
    pub fn interval_contains(&self, a: f64, b: f64) -> bool {
        self.intervals.iter().any(|iv| iv.lo <= a && b <= iv.hi)
    }

    /// Membership of `x` in the zero set, up to `tol`.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.isolated.iter().any(|z| math::abs(z.x - x) <= tol)
            || self
                .intervals
                .iter()
                .any(|iv| x >= iv.lo - tol && x <= iv.hi + tol)
            || self
                .cantor
                .iter()
                .any(|c| c.gaps.in_attractor(c.lo, c.hi, x, tol.max(1e-14)))
    }

    /// Isolated branch points: zeros or component boundaries from which
    /// both an increasing and a decreasing solution can start.
    pub fn omega_star(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .isolated
            .iter()
            .filter(|z| z.in_r_minus && z.in_r_plus)
            .map(|z| z.x)
            .collect();
        for c in &self.cantor {
            if c.lo_in_r_minus && c.interior_in_r_plus {
                out.push(c.lo);
            }
            if c.hi_in_r_plus && c.interior_in_r_minus {
                out.push(c.hi);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// Isolated dead points (no escape in either direction). Interiors of
    /// flat intervals and of non-escapable attractors are dead as well but
    /// are represented by their components.
    pub fn dead_isolated(&self) -> Vec<f64> {
        self.isolated
            .iter()
            .filter(|z| !z.in_r_minus && !z.in_r_plus)
            .map(|z| z.x)
            .collect()
    }

    /// Every finite point that bounds a component (used as subdivision
    /// nodes by the flow builder).
    pub(crate) fn critical_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.isolated.iter().map(|z| z.x).collect();
        for iv in &self.intervals {
            if iv.lo.is_finite() {
                pts.push(iv.lo);
            }
            if iv.hi.is_finite() {
                pts.push(iv.hi);
            }
        }
        for c in &self.cantor {
            pts.push(c.lo);
            pts.push(c.hi);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts
    }
}

/// Collect the zero set of a validated `f`: piece-interior zeros, flat
/// pieces, Cantor attractors and zero-valued breakpoints, each represented
/// exactly once.
pub fn zero_set(f: &RegulatedFn) -> Result<ZeroStructure> {
    let mut isolated: Vec<f64> = Vec::new();
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut cantor: Vec<(f64, f64, CantorGaps)> = Vec::new();

    for i in 0..f.pieces().len() {
        let (lo, hi) = f.piece_bounds(i);
        match f.piece_zero_set(i)? {
            PieceZeroSet::Points(pts) => isolated.extend(pts),
            PieceZeroSet::FullInterval => intervals.push((lo, hi)),
            PieceZeroSet::Attractor(g) => cantor.push((lo, hi, g)),
        }
    }
    for (j, &v) in f.breakpoint_values().iter().enumerate() {
        if math::abs(v) <= ZERO_TOL {
            isolated.push(f.breakpoints()[j]);
        }
    }

    // merge flat intervals that touch or overlap
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }

    // drop isolated candidates already covered by a component
    isolated.sort_by(|a, b| a.partial_cmp(b).unwrap());
    isolated.dedup_by(|a, b| math::abs(*a - *b) <= ZERO_TOL);
    let isolated: Vec<f64> = isolated
        .into_iter()
        .filter(|&z| {
            !merged.iter().any(|&(lo, hi)| z >= lo && z <= hi)
                && !cantor
                    .iter()
                    .any(|&(lo, hi, g)| g.in_attractor(lo, hi, z, 1e-13))
        })
        .collect();

    Ok(ZeroStructure {
        isolated: isolated
            .into_iter()
            .map(|x| IsolatedZero {
                x,
                in_r_minus: false,
                in_r_plus: false,
            })
            .collect(),
        intervals: merged
            .into_iter()
            .map(|(lo, hi)| ZeroInterval {
                lo,
                hi,
                lo_in_r_minus: false,
                hi_in_r_plus: false,
            })
            .collect(),
        cantor: cantor
            .into_iter()
            .map(|(lo, hi, gaps)| CantorComponent {
                lo,
                hi,
                gaps,
                interior_in_r_plus: false,
                interior_in_r_minus: false,
                lo_in_r_minus: false,
                hi_in_r_plus: false,
            })
            .collect(),
    })
}

/// Fill the reachability flags of a zero structure. Idempotent.
pub fn classify(f: &RegulatedFn, mut zs: ZeroStructure) -> Result<ZeroStructure> {
    let criticals = {
        let mut pts = zs.critical_points();
        pts.extend(f.breakpoints().iter().copied());
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| math::abs(*a - *b) <= ZERO_TOL);
        pts
    };
    // probe endpoints never cross the next critical point: integrability at
    // x is a local property and the far end must stay away from other zeros
    let probe_above = |x: f64| -> f64 {
        match criticals.iter().find(|&&c| c > x + ZERO_TOL) {
            Some(&c) => 0.5 * (x + c),
            None => x + 1.0,
        }
    };
    let probe_below = |x: f64| -> f64 {
        match criticals.iter().rev().find(|&&c| c < x - ZERO_TOL) {
            Some(&c) => 0.5 * (x + c),
            None => x - 1.0,
        }
    };

    let escapes_right = |x: f64| -> Result<bool> {
        Ok(f.reciprocal_integral(x, probe_above(x), Side::Plus)?
            .is_finite())
    };
    for i in 0..zs.isolated.len() {
        let x = zs.isolated[i].x;
        zs.isolated[i].in_r_plus = escapes_right(x)?;
    }
    for i in 0..zs.intervals.len() {
        let hi = zs.intervals[i].hi;
        zs.intervals[i].hi_in_r_plus = hi.is_finite() && escapes_right(hi)?;
    }
    for i in 0..zs.cantor.len() {
        let hi = zs.cantor[i].hi;
        zs.cantor[i].hi_in_r_plus = escapes_right(hi)?;
        zs.cantor[i].interior_in_r_plus =
            zs.cantor[i].gaps.sign > 0 && zs.cantor[i].gaps.reciprocal_converges();
    }

    let escapes_left = |x: f64| -> Result<bool> {
        Ok(f.reciprocal_integral(probe_below(x), x, Side::Minus)?
            .is_finite())
    };
    for i in 0..zs.isolated.len() {
        let x = zs.isolated[i].x;
        zs.isolated[i].in_r_minus = escapes_left(x)?;
    }
    for i in 0..zs.intervals.len() {
        let lo = zs.intervals[i].lo;
        zs.intervals[i].lo_in_r_minus = lo.is_finite() && escapes_left(lo)?;
    }
    for i in 0..zs.cantor.len() {
        let lo = zs.cantor[i].lo;
        zs.cantor[i].lo_in_r_minus = escapes_left(lo)?;
        zs.cantor[i].interior_in_r_minus =
            zs.cantor[i].gaps.sign < 0 && zs.cantor[i].gaps.reciprocal_converges();
    }

    Ok(zs)
}
