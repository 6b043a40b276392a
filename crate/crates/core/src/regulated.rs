//! Bounded regulated right-hand sides `f` in piecewise closed form.
//!
//! A [`RegulatedFn`] is a strictly increasing list of breakpoints, one
//! [`PieceForm`] per open interval between them (plus the two unbounded end
//! pieces), and the value of `f` at each breakpoint. One-sided limits come
//! exactly from the adjacent piece forms. Validation enforces boundedness
//! and the no-jamming condition: wherever the one-sided limits vanish or
//! jam (`f(y-) > 0 > f(y+)`), the stored value must be zero, otherwise no
//! solution can pass through or rest at the point.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::cantor::CantorGaps;
use crate::error::{Error, Result};
use crate::{math, poly, quad};
use crate::{DIVERGENCE_CAP, QUAD_ABS_TOL, ZERO_TOL};

/// Which signed part of `f` a reciprocal integral runs over: `Plus` is
/// `∫ dy / f⁺`, `Minus` is `-∫ dy / f⁻`. Both are nonnegative and equal
/// `+∞` whenever the relevant part vanishes on a set of positive measure
/// or carries a non-integrable zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Closed-form function on one open piece.
#[derive(Debug, Clone)]
pub enum PieceForm {
    Constant(f64),
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `sign · coeff · |x - anchor|^exponent` with `coeff > 0`.
    PowerLaw {
        anchor: f64,
        coeff: f64,
        exponent: f64,
        sign: i8,
    },
    /// Coefficients ordered low degree first.
    Polynomial(Vec<f64>),
    /// Self-similar piece vanishing on a Cantor-type attractor spanning
    /// the whole (necessarily bounded) piece.
    Cantor(CantorGaps),
    Custom(CustomPiece),
}

/// A user-supplied piece. The evaluator must be continuous on the closed
/// piece. `zeros` certifies the zero locus inside the open piece (an empty
/// list certifies there are none); without it the zero set is unresolvable.
#[derive(Clone)]
pub struct CustomPiece {
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Closed-form antiderivative of `1/f` on the piece, when known.
    pub recip_antiderivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub zeros: Option<Vec<f64>>,
}

impl fmt::Debug for CustomPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPiece")
            .field("recip_antiderivative", &self.recip_antiderivative.is_some())
            .field("zeros", &self.zeros)
            .finish()
    }
}

/// Zero locus of a single piece, as seen by the zero-set builder.
#[derive(Debug, Clone)]
pub(crate) enum PieceZeroSet {
    Points(Vec<f64>),
    FullInterval,
    Attractor(CantorGaps),
}

/// One validation failure, with the rule that fired and a witness point.
#[derive(Debug, Clone)]
pub struct Violation {
    pub rule: &'static str,
    pub witness: f64,
    pub detail: String,
}

/// Outcome of [`RegulatedFn::validate`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &'static str, witness: f64, detail: String) {
        self.violations.push(Violation {
            rule,
            witness,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{} at {}: {}", v.rule, v.witness, v.detail)?;
        }
        Ok(())
    }
}

/// Validation rule identifiers, stable across releases so callers can match
/// on them.
pub mod rules {
    pub const BREAKPOINTS_NOT_SORTED: &str = "breakpoints-not-sorted";
    pub const NOT_REGULATED: &str = "not-regulated";
    pub const NO_JAMMING: &str = "no-jamming";
    pub const BOUND_EXCEEDED: &str = "bound-exceeded";
    pub const BOUND_INVALID: &str = "bound-invalid";
    pub const PIECE_PARAMS: &str = "piece-params";
    pub const NON_FINITE: &str = "non-finite";
}

/// Bounded regulated scalar function with finitely many breakpoints.
#[derive(Debug, Clone)]
pub struct RegulatedFn {
    breakpoints: Vec<f64>,
    pieces: Vec<PieceForm>,
    values: Vec<f64>,
    bound: f64,
    accumulation_points: Vec<f64>,
}

impl RegulatedFn {
    /// Structural construction; semantic checks live in [`Self::validate`].
    pub fn new(
        breakpoints: Vec<f64>,
        pieces: Vec<PieceForm>,
        values: Vec<f64>,
        bound: f64,
    ) -> Result<Self> {
        // countable breakpoint families must be truncated by the caller
        // (and accumulation points declared); reject oversized lists
        // instead of truncating silently
        const MAX_BREAKPOINTS: usize = 1024;
        if breakpoints.len() > MAX_BREAKPOINTS {
            return Err(Error::Malformed(format!(
                "{} breakpoints exceed the cap of {MAX_BREAKPOINTS}; truncate and declare \
                 accumulation points instead",
                breakpoints.len()
            )));
        }
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::Malformed(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if values.len() != breakpoints.len() {
            return Err(Error::Malformed(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len(),
                values.len()
            )));
        }
        Ok(RegulatedFn {
            breakpoints,
            pieces,
            values,
            bound,
            accumulation_points: Vec::new(),
        })
    }

    /// Declare accumulation points of breakpoints that the finite encoding
    /// truncates. Declaring any makes the function fail validation: the
    /// truncation would silently change the dynamics near such a point.
    pub fn with_accumulation_points(mut self, points: Vec<f64>) -> Self {
        self.accumulation_points = points;
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn breakpoint_values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> &[PieceForm] {
        &self.pieces
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn accumulation_points(&self) -> &[f64] {
        &self.accumulation_points
    }

    /// Bounds of piece `i` (the two end pieces are unbounded).
    pub fn piece_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[i - 1]
        };
        let hi = if i == self.breakpoints.len() {
            f64::INFINITY
        } else {
            self.breakpoints[i]
        };
        (lo, hi)
    }

    /// Index of the piece whose closure contains `x` (ties at a breakpoint
    /// resolve to the right piece).
    fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    fn piece_eval(&self, i: usize, x: f64) -> f64 {
        let (lo, hi) = self.piece_bounds(i);
        match &self.pieces[i] {
            PieceForm::Constant(c) => *c,
            PieceForm::Affine { slope, intercept } => slope * x + intercept,
            PieceForm::PowerLaw {
                anchor,
                coeff,
                exponent,
                sign,
            } => f64::from(*sign) * coeff * math::powf(math::abs(x - anchor), *exponent),
            PieceForm::Polynomial(coeffs) => poly::eval(coeffs, x),
            PieceForm::Cantor(gaps) => gaps.eval(lo, hi, x),
            PieceForm::Custom(cp) => (cp.eval)(x),
        }
    }

    /// Point evaluation: piece value at interior points, the stored value
    /// at breakpoints. Total on the reals.
    pub fn eval(&self, x: f64) -> f64 {
        if let Ok(j) = self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).unwrap())
        {
            return self.values[j];
        }
        self.piece_eval(self.piece_index(x), x)
    }

    /// One-sided limits `(f(x-), f(x+))`; equal to the value at continuity
    /// points.
    pub fn one_sided_limits(&self, x: f64) -> (f64, f64) {
        if let Ok(j) = self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).unwrap())
        {
            return (self.piece_eval(j, x), self.piece_eval(j + 1, x));
        }
        let v = self.piece_eval(self.piece_index(x), x);
        (v, v)
    }

    /// Discontinuity points: breakpoints where the one-sided limits differ
    /// or differ from the stored value.
    pub fn discontinuity_set(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(|&(j, &b)| {
                let (l, r) = self.one_sided_limits(b);
                math::abs(l - r) > ZERO_TOL
                    || math::abs(l - self.values[j]) > ZERO_TOL
                    || math::abs(r - self.values[j]) > ZERO_TOL
            })
            .map(|(_, &b)| b)
            .collect()
    }

    /// Zero locus of piece `i` restricted to its open interval.
    pub(crate) fn piece_zero_set(&self, i: usize) -> Result<PieceZeroSet> {
        let (lo, hi) = self.piece_bounds(i);
        let interior =
            |zs: Vec<f64>| -> Vec<f64> { zs.into_iter().filter(|&z| z > lo && z < hi).collect() };
        Ok(match &self.pieces[i] {
            PieceForm::Constant(c) => {
                if *c == 0.0 {
                    PieceZeroSet::FullInterval
                } else {
                    PieceZeroSet::Points(vec![])
                }
            }
            PieceForm::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    if *intercept == 0.0 {
                        PieceZeroSet::FullInterval
                    } else {
                        PieceZeroSet::Points(vec![])
                    }
                } else {
                    PieceZeroSet::Points(interior(vec![-intercept / slope]))
                }
            }
            PieceForm::PowerLaw { anchor, .. } => PieceZeroSet::Points(interior(vec![*anchor])),
            PieceForm::Polynomial(coeffs) => {
                if poly::is_zero(coeffs) {
                    PieceZeroSet::FullInterval
                } else {
                    // validated pieces with degree >= 1 are bounded, hence finite
                    PieceZeroSet::Points(interior(poly::roots_in(coeffs, lo, hi)))
                }
            }
            PieceForm::Cantor(gaps) => PieceZeroSet::Attractor(*gaps),
            PieceForm::Custom(cp) => match &cp.zeros {
                Some(zs) => PieceZeroSet::Points(interior(zs.clone())),
                None => return Err(Error::UnresolvedZero { piece: i }),
            },
        })
    }

    /// Check structural soundness, representability, the no-jamming
    /// condition and the declared bound. Returns every violation with a
    /// witness point.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        for w in self.breakpoints.windows(2) {
            if w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less) {
                report.push(
                    rules::BREAKPOINTS_NOT_SORTED,
                    w[1],
                    format!("breakpoint {} does not exceed {}", w[1], w[0]),
                );
            }
        }
        for &b in &self.breakpoints {
            if !b.is_finite() {
                report.push(rules::NON_FINITE, b, "non-finite breakpoint".into());
            }
        }
        for &v in &self.values {
            if !v.is_finite() {
                report.push(rules::NON_FINITE, v, "non-finite breakpoint value".into());
            }
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            report.push(
                rules::BOUND_INVALID,
                self.bound,
                "bound must be a positive finite number".into(),
            );
        }
        for &p in &self.accumulation_points {
            report.push(
                rules::NOT_REGULATED,
                p,
                "declared accumulation point; the function is not regulated there".into(),
            );
        }

        self.check_piece_params(&mut report);
        if !report.is_valid() {
            return report;
        }

        // no-jamming: vanishing or jamming one-sided limits force f(y) = 0
        for (j, &b) in self.breakpoints.iter().enumerate() {
            let (l, r) = self.one_sided_limits(b);
            let vanishes = math::abs(l * r) <= ZERO_TOL;
            let jams = l > ZERO_TOL && r < -ZERO_TOL;
            if (vanishes || jams) && math::abs(self.values[j]) > ZERO_TOL {
                report.push(
                    rules::NO_JAMMING,
                    b,
                    format!(
                        "limits ({l}, {r}) require f({b}) = 0, but f({b}) = {}",
                        self.values[j]
                    ),
                );
            }
        }

        self.check_bound(&mut report);
        report
    }

    fn check_piece_params(&self, report: &mut ValidationReport) {
        for (i, piece) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.piece_bounds(i);
            let witness = if lo.is_finite() { lo } else { hi };
            match piece {
                PieceForm::Constant(c) => {
                    if !c.is_finite() {
                        report.push(rules::NON_FINITE, witness, format!("piece {i} constant"));
                    }
                }
                PieceForm::Affine { slope, intercept } => {
                    if !slope.is_finite() || !intercept.is_finite() {
                        report.push(rules::NON_FINITE, witness, format!("piece {i} affine"));
                    }
                }
                PieceForm::PowerLaw {
                    anchor,
                    coeff,
                    exponent,
                    sign,
                } => {
                    if !anchor.is_finite() || !coeff.is_finite() || !exponent.is_finite() {
                        report.push(rules::NON_FINITE, witness, format!("piece {i} power law"));
                    } else if *coeff <= 0.0 || *exponent <= 0.0 || (*sign != 1 && *sign != -1) {
                        report.push(
                            rules::PIECE_PARAMS,
                            *anchor,
                            format!("piece {i}: power law needs coeff > 0, exponent > 0, sign ±1"),
                        );
                    }
                }
                PieceForm::Polynomial(coeffs) => {
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        report.push(rules::NON_FINITE, witness, format!("piece {i} polynomial"));
                    }
                }
                PieceForm::Cantor(g) => {
                    if !(g.ratio > 0.0 && g.ratio < 0.5)
                        || !(g.exponent > 0.0 && g.exponent.is_finite())
                        || !(g.coeff > 0.0 && g.coeff.is_finite())
                        || (g.sign != 1 && g.sign != -1)
                    {
                        report.push(
                            rules::PIECE_PARAMS,
                            witness,
                            format!("piece {i}: self-similar piece parameters out of range"),
                        );
                    }
                    if !lo.is_finite() || !hi.is_finite() {
                        report.push(
                            rules::PIECE_PARAMS,
                            witness,
                            format!("piece {i}: self-similar piece must span a bounded interval"),
                        );
                    }
                }
                PieceForm::Custom(_) => {}
            }
        }
    }

    fn check_bound(&self, report: &mut ValidationReport) {
        let m = self.bound * (1.0 + 1e-12) + 1e-300;
        for (j, &v) in self.values.iter().enumerate() {
            if math::abs(v) > m {
                report.push(
                    rules::BOUND_EXCEEDED,
                    self.breakpoints[j],
                    format!(
                        "|f| = {} exceeds declared bound {}",
                        math::abs(v),
                        self.bound
                    ),
                );
            }
        }
        for (i, piece) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.piece_bounds(i);
            let unbounded = !lo.is_finite() || !hi.is_finite();
            let sup = match piece {
                PieceForm::Constant(c) => math::abs(*c),
                PieceForm::Affine { slope, .. } => {
                    if unbounded && *slope != 0.0 {
                        f64::INFINITY
                    } else if unbounded {
                        math::abs(self.piece_eval(i, if lo.is_finite() { lo } else { hi }))
                    } else {
                        math::abs(self.piece_eval(i, lo)).max(math::abs(self.piece_eval(i, hi)))
                    }
                }
                PieceForm::PowerLaw { coeff, .. } => {
                    if unbounded {
                        if *coeff == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        math::abs(self.piece_eval(i, lo)).max(math::abs(self.piece_eval(i, hi)))
                    }
                }
                PieceForm::Polynomial(coeffs) => {
                    let deg = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                    if unbounded && deg >= 1 {
                        f64::INFINITY
                    } else if unbounded {
                        coeffs.first().copied().unwrap_or(0.0).abs()
                    } else {
                        let mut sup = math::abs(self.piece_eval(i, lo))
                            .max(math::abs(self.piece_eval(i, hi)));
                        for c in poly::roots_in(&poly::derivative(coeffs), lo, hi) {
                            sup = sup.max(math::abs(poly::eval(coeffs, c)));
                        }
                        sup
                    }
                }
                PieceForm::Cantor(g) => {
                    if unbounded {
                        f64::INFINITY
                    } else {
                        g.sup_value(hi - lo)
                    }
                }
                PieceForm::Custom(_) => {
                    // sampled check only
                    let (a, b) = clamp_window(lo, hi);
                    let mut sup = 0.0f64;
                    for k in 0..=256 {
                        let x = a + (b - a) * (k as f64) / 256.0;
                        sup = sup.max(math::abs(self.piece_eval(i, x)));
                    }
                    sup
                }
            };
            if sup > m {
                let witness = if lo.is_finite() { lo } else { hi };
                report.push(
                    rules::BOUND_EXCEEDED,
                    witness,
                    format!(
                        "piece {i} reaches |f| = {sup}, over the declared bound {}",
                        self.bound
                    ),
                );
            }
        }
    }

    /// `∫_a^b dy/f⁺` (side `Plus`) or `-∫_a^b dy/f⁻` (side `Minus`),
    /// by closed form where the piece admits one and by certified adaptive
    /// quadrature otherwise. `Ok(+∞)` is a certified divergence.
    pub fn reciprocal_integral(&self, a: f64, b: f64, side: Side) -> Result<f64> {
        if a > b {
            return Err(Error::BadArgument(format!(
                "reciprocal integral needs a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        // |f| <= bound makes any infinite stretch cost infinite time
        if !a.is_finite() || !b.is_finite() {
            return Ok(f64::INFINITY);
        }
        let mut total = 0.0;
        for i in 0..self.pieces.len() {
            let (plo, phi) = self.piece_bounds(i);
            let (sa, sb) = (a.max(plo), b.min(phi));
            if sb <= sa {
                continue;
            }
            let part = self.piece_reciprocal(i, sa, sb, side)?;
            if part.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += part;
        }
        Ok(total)
    }

    fn piece_reciprocal(&self, i: usize, a: f64, b: f64, side: Side) -> Result<f64> {
        let (plo, phi) = self.piece_bounds(i);
        match &self.pieces[i] {
            PieceForm::Constant(c) => Ok(constant_reciprocal(*c, b - a, side)),
            PieceForm::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    return Ok(constant_reciprocal(*intercept, b - a, side));
                }
                let root = -intercept / slope;
                if root >= a && root <= b {
                    return Ok(f64::INFINITY);
                }
                let (fa, fb) = (slope * a + intercept, slope * b + intercept);
                if !side_matches(fa, side) {
                    return Ok(f64::INFINITY);
                }
                let v = (math::ln(math::abs(fb)) - math::ln(math::abs(fa))) / slope;
                Ok(match side {
                    Side::Plus => v,
                    Side::Minus => -v,
                })
            }
            PieceForm::PowerLaw {
                anchor,
                coeff,
                exponent,
                sign,
            } => {
                let want = if side == Side::Plus { 1 } else { -1 };
                if *sign != want {
                    return Ok(f64::INFINITY);
                }
                Ok(power_reciprocal(*anchor, *coeff, *exponent, a, b))
            }
            PieceForm::Polynomial(coeffs) => {
                if poly::is_zero(coeffs) || !poly::roots_in(coeffs, a, b).is_empty() {
                    return Ok(f64::INFINITY);
                }
                if !side_matches(poly::eval(coeffs, 0.5 * (a + b)), side) {
                    return Ok(f64::INFINITY);
                }
                quad::adaptive(
                    &|x| 1.0 / math::abs(poly::eval(coeffs, x)),
                    a,
                    b,
                    QUAD_ABS_TOL,
                )
            }
            PieceForm::Cantor(g) => {
                let want = if side == Side::Plus { 1 } else { -1 };
                if g.sign != want {
                    return Ok(f64::INFINITY);
                }
                Ok(g.reciprocal_integral(plo, phi, a, b))
            }
            PieceForm::Custom(cp) => self.custom_reciprocal(i, cp, a, b, side),
        }
    }

    fn custom_reciprocal(
        &self,
        piece: usize,
        cp: &CustomPiece,
        a: f64,
        b: f64,
        side: Side,
    ) -> Result<f64> {
        if let Some(anti) = &cp.recip_antiderivative {
            // Antiderivative of 1/f; a non-finite difference is a divergence.
            let v = anti(b) - anti(a);
            if !v.is_finite() {
                return Ok(f64::INFINITY);
            }
            return Ok(match side {
                Side::Plus => {
                    if side_matches((cp.eval)(0.5 * (a + b)), side) {
                        v
                    } else {
                        f64::INFINITY
                    }
                }
                Side::Minus => {
                    if side_matches((cp.eval)(0.5 * (a + b)), side) {
                        -v
                    } else {
                        f64::INFINITY
                    }
                }
            });
        }
        let zeros: Vec<f64> = match &cp.zeros {
            Some(zs) => zs.iter().copied().filter(|&z| z >= a && z <= b).collect(),
            None => Vec::new(),
        };
        let _ = piece;
        let f_abs = |x: f64| 1.0 / math::abs((cp.eval)(x));
        // split at interior zeros; probe divergence toward each zero edge
        let mut nodes = vec![a];
        nodes.extend(zeros.iter().copied().filter(|&z| z > a && z < b));
        nodes.push(b);
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            if !side_matches((cp.eval)(mid), side) {
                return Ok(f64::INFINITY);
            }
            let lo_singular = zeros.contains(&lo) || lo == a && is_zeroish((cp.eval)(lo));
            let hi_singular = zeros.contains(&hi) || hi == b && is_zeroish((cp.eval)(hi));
            let part = match (lo_singular, hi_singular) {
                (false, false) => quad::adaptive(&f_abs, lo, hi, QUAD_ABS_TOL)?,
                _ => {
                    let mut acc = 0.0;
                    if lo_singular {
                        match quad::refine_to_endpoint(&f_abs, lo, mid, QUAD_ABS_TOL)? {
                            quad::Refined::Divergent => return Ok(f64::INFINITY),
                            quad::Refined::Converged(v) => acc += v,
                        }
                    } else {
                        acc += quad::adaptive(&f_abs, lo, mid, QUAD_ABS_TOL)?;
                    }
                    if hi_singular {
                        // mirror so the singular edge sits at the lower end
                        let flipped = |x: f64| f_abs(hi + mid - x);
                        match quad::refine_to_endpoint(&flipped, mid, hi, QUAD_ABS_TOL)? {
                            quad::Refined::Divergent => return Ok(f64::INFINITY),
                            quad::Refined::Converged(v) => acc += v,
                        }
                    } else {
                        acc += quad::adaptive(&f_abs, mid, hi, QUAD_ABS_TOL)?;
                    }
                    acc
                }
            };
            total += part;
            if total > DIVERGENCE_CAP {
                return Ok(f64::INFINITY);
            }
        }
        Ok(total)
    }
}

fn is_zeroish(v: f64) -> bool {
    math::abs(v) <= ZERO_TOL
}

fn side_matches(value: f64, side: Side) -> bool {
    match side {
        Side::Plus => value > 0.0,
        Side::Minus => value < 0.0,
    }
}

fn constant_reciprocal(c: f64, len: f64, side: Side) -> f64 {
    match side {
        Side::Plus if c > 0.0 => len / c,
        Side::Minus if c < 0.0 => len / -c,
        _ => f64::INFINITY,
    }
}

/// `∫_a^b dx / (coeff · |x - anchor|^exponent)`, splitting at the anchor.
fn power_reciprocal(anchor: f64, coeff: f64, exponent: f64, a: f64, b: f64) -> f64 {
    let one_side = |near: f64, far: f64| -> f64 {
        // distances 0 <= near < far from the anchor
        if far <= near {
            return 0.0;
        }
        if exponent >= 1.0 && near == 0.0 {
            return f64::INFINITY;
        }
        if exponent == 1.0 {
            return (math::ln(far) - math::ln(near)) / coeff;
        }
        (math::powf(far, 1.0 - exponent) - math::powf(near, 1.0 - exponent))
            / ((1.0 - exponent) * coeff)
    };
    if anchor <= a {
        one_side(a - anchor, b - anchor)
    } else if anchor >= b {
        one_side(anchor - b, anchor - a)
    } else {
        one_side(0.0, anchor - a) + one_side(0.0, b - anchor)
    }
}

fn clamp_window(lo: f64, hi: f64) -> (f64, f64) {
    let a = if lo.is_finite() { lo } else { hi - 1e6 };
    let b = if hi.is_finite() { hi } else { lo + 1e6 };
    if a.is_finite() && b.is_finite() {
        (a, b)
    } else {
        (-1e6, 1e6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x) = 2·sqrt(|x|)`, capped at |x| = 400 so the bound holds.
    pub(crate) fn sqrt_abs() -> RegulatedFn {
        RegulatedFn::new(
            vec![-400.0, 0.0, 400.0],
            vec![
                PieceForm::Constant(40.0),
                PieceForm::PowerLaw {
                    anchor: 0.0,
                    coeff: 2.0,
                    exponent: 0.5,
                    sign: 1,
                },
                PieceForm::PowerLaw {
                    anchor: 0.0,
                    coeff: 2.0,
                    exponent: 0.5,
                    sign: 1,
                },
                PieceForm::Constant(40.0),
            ],
            vec![40.0, 0.0, 40.0],
            40.0,
        )
        .unwrap()
    }

    fn step(a: f64) -> RegulatedFn {
        RegulatedFn::new(
            vec![0.0],
            vec![PieceForm::Constant(1.0), PieceForm::Constant(-1.0)],
            vec![a],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_power_law() {
        let f = sqrt_abs();
        assert_eq!(f.eval(4.0), 4.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(-9.0), 6.0);
    }

    #[test]
    fn eval_agrees_with_direct_formula_everywhere() {
        let f = sqrt_abs();
        let mut state = 0x853C49E6748FEA9Bu64;
        for _ in 0..10_000 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let x = -500.0 + 1000.0 * ((state >> 11) as f64 / 9_007_199_254_740_992.0);
            let direct = if x.abs() >= 400.0 {
                40.0
            } else {
                2.0 * x.abs().sqrt()
            };
            // pow(x, 0.5) and sqrt(x) may differ in the last ulp
            let close = |v: f64| (v - direct).abs() <= 1e-15 * direct.abs();
            assert!(close(f.eval(x)), "at {x}: {} vs {direct}", f.eval(x));
            let (l, r) = f.one_sided_limits(x);
            assert!(close(l) && close(r), "at {x}");
        }
    }

    #[test]
    fn step_limits_and_value() {
        let f = step(0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.one_sided_limits(0.0), (1.0, -1.0));
        assert_eq!(f.one_sided_limits(0.5), (-1.0, -1.0));
        // continuous touching zero: both limits vanish
        assert_eq!(sqrt_abs().one_sided_limits(0.0), (0.0, 0.0));
    }

    #[test]
    fn affine_boundary_limits() {
        // f = x on (0,1), 0 on [1, ∞)
        let f = RegulatedFn::new(
            vec![0.0, 1.0],
            vec![
                PieceForm::Constant(0.0),
                PieceForm::Affine {
                    slope: 1.0,
                    intercept: 0.0,
                },
                PieceForm::Constant(0.0),
            ],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert_eq!(f.one_sided_limits(1.0), (1.0, 0.0));
        assert!(f.validate().is_valid());
    }

    #[test]
    fn no_jamming_rejects_nonzero_value() {
        let f = step(1.0);
        let report = f.validate();
        assert!(!report.is_valid());
        assert_eq!(report.violations[0].rule, rules::NO_JAMMING);
        assert_eq!(report.violations[0].witness, 0.0);
        assert!(step(0.0).validate().is_valid());
    }

    #[test]
    fn sqrt_abs_is_valid() {
        assert!(sqrt_abs().validate().is_valid());
    }

    #[test]
    fn declared_accumulation_is_rejected() {
        // zeros at 1/n accumulate at 0; a finite truncation must declare it
        let mut bps = Vec::new();
        for n in (1..=50).rev() {
            bps.push(1.0 / n as f64);
        }
        let pieces = vec![PieceForm::Constant(1.0); bps.len() + 1];
        let values = vec![0.0; bps.len()];
        let f = RegulatedFn::new(bps, pieces, values, 1.0)
            .unwrap()
            .with_accumulation_points(vec![0.0]);
        let report = f.validate();
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == rules::NOT_REGULATED && v.witness == 0.0));
    }

    #[test]
    fn bound_violation_detected() {
        let f = RegulatedFn::new(
            vec![0.0],
            vec![
                PieceForm::Constant(0.5),
                PieceForm::Affine {
                    slope: 1.0,
                    intercept: 0.0,
                },
            ],
            vec![0.0],
            1.0,
        )
        .unwrap();
        let report = f.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == rules::BOUND_EXCEEDED));
    }

    #[test]
    fn reciprocal_sqrt_closed_form_vs_quadrature() {
        // f = 2 sqrt(x) near 0: ∫_0^1 dx/(2 sqrt x) = 1
        let f = sqrt_abs();
        let v = f.reciprocal_integral(0.0, 1.0, Side::Plus).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        // independent oracle: singular-endpoint quadrature
        let oracle = quad::adaptive_power_endpoints(
            &|x: f64| 1.0 / (2.0 * x.sqrt()),
            0.0,
            1.0,
            Some(0.5),
            None,
            1e-11,
        )
        .unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn reciprocal_linear_zero_diverges() {
        // f(x) = x has a non-integrable zero at 0
        let f = RegulatedFn::new(
            vec![0.0],
            vec![
                PieceForm::Affine {
                    slope: 1.0,
                    intercept: 0.0,
                },
                PieceForm::Affine {
                    slope: 1.0,
                    intercept: 0.0,
                },
            ],
            vec![0.0],
            2.0,
        )
        .unwrap();
        assert_eq!(
            f.reciprocal_integral(0.0, 1.0, Side::Plus).unwrap(),
            f64::INFINITY
        );
        // away from the zero it is finite: ∫_1^2 dx/x = ln 2
        let v = f.reciprocal_integral(1.0, 2.0, Side::Plus).unwrap();
        assert!((v - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_crosses_anchor_when_integrable() {
        // 2 sqrt|x| from -1 to 1: both sides contribute 1
        let f = sqrt_abs();
        let v = f.reciprocal_integral(-1.0, 1.0, Side::Plus).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn minus_side_of_positive_function_diverges() {
        let f = sqrt_abs();
        assert_eq!(
            f.reciprocal_integral(0.0, 1.0, Side::Minus).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn reciprocal_additivity() {
        let f = sqrt_abs();
        let whole = f.reciprocal_integral(0.25, 9.0, Side::Plus).unwrap();
        let split = f.reciprocal_integral(0.25, 4.0, Side::Plus).unwrap()
            + f.reciprocal_integral(4.0, 9.0, Side::Plus).unwrap();
        assert!((whole - split).abs() < 1e-12);
    }

    #[test]
    fn power_law_closed_form_matches_formula() {
        // coeff^-1 (b - anchor)^(1-alpha) / (1-alpha) for alpha < 1
        for &(alpha, b) in &[(0.25, 2.0), (0.5, 1.0), (0.75, 0.5)] {
            let f = RegulatedFn::new(
                vec![0.0],
                vec![
                    PieceForm::Constant(0.0),
                    PieceForm::PowerLaw {
                        anchor: 0.0,
                        coeff: 3.0,
                        exponent: alpha,
                        sign: 1,
                    },
                ],
                vec![0.0],
                3.0 * 400f64.powf(alpha),
            )
            .unwrap();
            let v = f.reciprocal_integral(0.0, b, Side::Plus).unwrap();
            let want = b.powf(1.0 - alpha) / ((1.0 - alpha) * 3.0);
            assert!((v - want).abs() <= 1e-9 * want, "{v} vs {want}");
        }
    }

    #[test]
    fn custom_piece_with_antiderivative() {
        // f = 2 sqrt(x) on (0, 4), antiderivative of 1/f is sqrt(x)
        let f = RegulatedFn::new(
            vec![0.0, 4.0],
            vec![
                PieceForm::Constant(0.0),
                PieceForm::Custom(CustomPiece {
                    eval: Arc::new(|x: f64| 2.0 * x.sqrt()),
                    recip_antiderivative: Some(Arc::new(|x: f64| x.sqrt())),
                    zeros: Some(vec![]),
                }),
                PieceForm::Constant(4.0),
            ],
            vec![0.0, 4.0],
            4.0,
        )
        .unwrap();
        assert!(f.validate().is_valid());
        let v = f.reciprocal_integral(0.0, 4.0, Side::Plus).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn custom_piece_divergence_probe() {
        // f = x^2 on (0,1) with declared zero at the left edge of the range
        let f = RegulatedFn::new(
            vec![0.0, 1.0],
            vec![
                PieceForm::Constant(0.0),
                PieceForm::Custom(CustomPiece {
                    eval: Arc::new(|x: f64| x * x),
                    recip_antiderivative: None,
                    zeros: Some(vec![]),
                }),
                PieceForm::Constant(1.0),
            ],
            vec![0.0, 1.0],
            1.0,
        )
        .unwrap();
        let v = f.reciprocal_integral(0.0, 1.0, Side::Plus).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn cantor_function_reciprocal() {
        let f = cantor_fn();
        let v = f.reciprocal_integral(0.0, 1.0, Side::Plus).unwrap();
        assert!((v - 23.598_793_149_740_556).abs() < 1e-9, "{v}");
        assert_eq!(f.eval(0.25), 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!(f.validate().is_valid());
    }

    /// The continuous function vanishing exactly on the middle-thirds set
    /// (and off [0,1]), with cube-root gap profile.
    pub(crate) fn cantor_fn() -> RegulatedFn {
        RegulatedFn::new(
            vec![0.0, 1.0],
            vec![
                PieceForm::Constant(0.0),
                PieceForm::Cantor(CantorGaps::middle_thirds()),
                PieceForm::Constant(0.0),
            ],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap()
    }
}
