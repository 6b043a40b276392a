//! The deterministic semigroup built from `(f, μ, S, Φ)`.
//!
//! The line is cut at every zero-set boundary, breakpoint and stop point;
//! the sign pattern of `f` between cuts yields maximal domains of increase
//! and decrease. A cut point is crossed upward only when `1/f⁺` is
//! integrable on both sides and the point is not a stop. On a domain of
//! increase, trajectories invert the time functional
//! `T(x) = ∫ dy/f⁺ + μ([x₀, x])`, saturating at the right endpoint once
//! the total passage time is spent; `μ` adds dwell time on its support
//! without ever creating a rest point (it is atomless).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::measure::AtomlessMeasure;
use crate::regulated::{RegulatedFn, Side};
use crate::zeroes::{self, ZeroStructure};
use crate::{INVERT_REL_TOL, MASS_TOL, TIME_CAP, ZERO_TOL};

/// Direction of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Up,
    Down,
}

/// Matching tolerance for user-declared points (stop set, branch maps)
/// against computed structure.
pub(crate) const POINT_TOL: f64 = 1e-9;

/// The data determining a deterministic semigroup: the right-hand side,
/// an atomless measure on its zero set, the stop set, and the branch
/// selection at points from which both monotone solutions start.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub f: RegulatedFn,
    pub mu: AtomlessMeasure,
    pub stop_set: Vec<f64>,
    /// `(point, ±1)`: `+1` selects the increasing solution.
    pub phi: Vec<(f64, i8)>,
}

impl FlowSpec {
    /// Spec with no measure, no stops and no branch choices.
    pub fn plain(f: RegulatedFn) -> Self {
        FlowSpec {
            f,
            mu: AtomlessMeasure::zero(),
            stop_set: Vec::new(),
            phi: Vec::new(),
        }
    }
}

/// Maximal interval of increasing dynamics; the open core is `(lo, hi)`
/// and `lo` itself belongs to the interval iff `closed_lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncreaseInterval {
    pub lo: f64,
    pub hi: f64,
    pub closed_lo: bool,
}

impl IncreaseInterval {
    pub fn contains(&self, x: f64) -> bool {
        (if self.closed_lo {
            x >= self.lo
        } else {
            x > self.lo
        }) && x < self.hi
    }
}

/// Maximal interval of decreasing dynamics, closed at `hi` iff `closed_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecreaseInterval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl DecreaseInterval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo
            && (if self.closed_hi {
                x <= self.hi
            } else {
                x < self.hi
            })
    }
}

/// All maximal monotone domains of a flow spec.
#[derive(Debug, Clone, Default)]
pub struct MonotoneDomains {
    pub increase: Vec<IncreaseInterval>,
    pub decrease: Vec<DecreaseInterval>,
}

/// Sign pattern of one segment between cut points.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SegKind {
    Flat,
    Pos,
    Neg,
    /// Self-similar segment; traversable only when the reciprocal series
    /// converges.
    Cantor {
        sign: i8,
        conv: bool,
    },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    kind: SegKind,
}

impl Segment {
    fn up(&self) -> bool {
        matches!(self.kind, SegKind::Pos)
            || matches!(
                self.kind,
                SegKind::Cantor {
                    sign: 1,
                    conv: true
                }
            )
    }
    fn down(&self) -> bool {
        matches!(self.kind, SegKind::Neg)
            || matches!(
                self.kind,
                SegKind::Cantor {
                    sign: -1,
                    conv: true
                }
            )
    }
}

/// Deterministic flow engine: validated spec, classified zero set and the
/// monotone domains. All queries are pure.
#[derive(Debug, Clone)]
pub struct DetFlow {
    spec: FlowSpec,
    zeroes: ZeroStructure,
    domains: MonotoneDomains,
    branch_points: Vec<f64>,
}

/// Compute the maximal monotone domains of a spec (validating it first).
pub fn build_domains(spec: &FlowSpec) -> Result<MonotoneDomains> {
    Ok(DetFlow::new(spec.clone())?.domains().clone())
}

impl DetFlow {
    pub fn new(spec: FlowSpec) -> Result<Self> {
        let report = spec.f.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::FunctionInvalid {
                rule: v.rule,
                witness: v.witness,
            });
        }
        let zs = zeroes::classify(&spec.f, zeroes::zero_set(&spec.f)?)?;

        for &s in &spec.stop_set {
            if !zs.contains(s, POINT_TOL) {
                return Err(Error::StopPointNotZero { x: s });
            }
        }
        spec.mu.validate()?;
        spec.mu.check_support(&zs)?;
        // a point that is both a branch point and a stop point has no
        // coherent dynamics under the branch selection; reject it
        for z in zs.omega_star() {
            if spec.stop_set.iter().any(|&s| math::abs(s - z) <= POINT_TOL) {
                return Err(Error::BranchStopConflict { x: z });
            }
        }

        let domains = compute_domains(&spec.f, &zs, &spec.stop_set)?;
        let mut branch_points = Vec::new();
        for inc in &domains.increase {
            if !inc.closed_lo {
                continue;
            }
            let paired = domains
                .decrease
                .iter()
                .any(|dec| dec.closed_hi && math::abs(dec.hi - inc.lo) <= ZERO_TOL);
            if paired {
                branch_points.push(inc.lo);
            }
        }

        Ok(DetFlow {
            spec,
            zeroes: zs,
            domains,
            branch_points,
        })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn zero_structure(&self) -> &ZeroStructure {
        &self.zeroes
    }

    pub fn domains(&self) -> &MonotoneDomains {
        &self.domains
    }

    /// Points lying in both an increase and a decrease interval; the flow
    /// needs a branch selection (`phi`) exactly there.
    pub fn branch_points(&self) -> &[f64] {
        &self.branch_points
    }

    pub(crate) fn increase_at(&self, x: f64) -> Option<&IncreaseInterval> {
        self.domains.increase.iter().find(|iv| iv.contains(x))
    }

    pub(crate) fn decrease_at(&self, x: f64) -> Option<&DecreaseInterval> {
        self.domains.decrease.iter().find(|iv| iv.contains(x))
    }

    /// Time functional along increasing motion: `∫_{x0}^{x} dy/f⁺ + μ([x0, x])`.
    fn time_up(&self, x0: f64, x: f64) -> Result<f64> {
        let t = self.spec.f.reciprocal_integral(x0, x, Side::Plus)?;
        Ok(t + self.spec.mu.mass(x0, x, 0.25 * MASS_TOL))
    }

    /// Mirrored time functional along decreasing motion, `x <= x0`.
    fn time_down(&self, x0: f64, x: f64) -> Result<f64> {
        let t = self.spec.f.reciprocal_integral(x, x0, Side::Minus)?;
        Ok(t + self.spec.mu.mass(x, x0, 0.25 * MASS_TOL))
    }

    /// Passage time from `x0` to `x` inside one monotone interval, `+∞`
    /// when the target is never reached. `x` may equal the interval
    /// endpoint (the saturation target).
    pub fn time_to_reach(&self, x0: f64, x: f64, dir: Dir) -> Result<f64> {
        if x == x0 {
            return Ok(0.0);
        }
        let raw = match dir {
            Dir::Up => {
                let iv = self.increase_at(x0).ok_or(Error::OutsideDomain { x0, x })?;
                if !(x > x0 && x <= iv.hi) {
                    return Err(Error::OutsideDomain { x0, x });
                }
                self.time_up(x0, x)?
            }
            Dir::Down => {
                let iv = self.decrease_at(x0).ok_or(Error::OutsideDomain { x0, x })?;
                if !(x < x0 && x >= iv.lo) {
                    return Err(Error::OutsideDomain { x0, x });
                }
                self.time_down(x0, x)?
            }
        };
        Ok(if raw > TIME_CAP { f64::INFINITY } else { raw })
    }

    /// Directional flow map, ignoring the branch selection. Errors when
    /// `x0` is not in a domain of the requested direction.
    pub fn flow_dir(&self, x0: f64, t: f64, dir: Dir) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::BadArgument("flow needs t >= 0".into()));
        }
        match dir {
            Dir::Up => {
                let iv = *self
                    .increase_at(x0)
                    .ok_or(Error::OutsideDomain { x0, x: x0 })?;
                self.invert_up(&iv, x0, t)
            }
            Dir::Down => {
                let iv = *self
                    .decrease_at(x0)
                    .ok_or(Error::OutsideDomain { x0, x: x0 })?;
                self.invert_down(&iv, x0, t)
            }
        }
    }

    /// The semigroup map `S_t(x0)`: identity off the monotone domains,
    /// monotone inversion of the time functional inside, branch selection
    /// via `phi` where both directions are available.
    pub fn flow(&self, x0: f64, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::BadArgument("flow needs t >= 0".into()));
        }
        let up = self.increase_at(x0).copied();
        let down = self.decrease_at(x0).copied();
        match (up, down) {
            (None, None) => Ok(x0),
            (Some(iv), None) => self.invert_up(&iv, x0, t),
            (None, Some(iv)) => self.invert_down(&iv, x0, t),
            (Some(ivu), Some(ivd)) => match lookup(&self.spec.phi, x0) {
                Some(1) => self.invert_up(&ivu, x0, t),
                Some(-1) => self.invert_down(&ivd, x0, t),
                _ => Err(Error::PhiMissing { x: x0 }),
            },
        }
    }

    /// Pointwise flow along a sorted, nonnegative time grid.
    pub fn trajectory(&self, x0: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        if grid.windows(2).any(|w| w[0] > w[1]) || grid.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::BadArgument(
                "grid must be sorted and nonnegative".into(),
            ));
        }
        grid.iter().map(|&t| Ok((t, self.flow(x0, t)?))).collect()
    }

    fn invert_up(&self, iv: &IncreaseInterval, x0: f64, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(x0);
        }
        let beta = iv.hi;
        if beta.is_finite() {
            let tau = self.time_up(x0, beta)?;
            if tau <= t && tau <= TIME_CAP {
                return Ok(beta);
            }
        }
        // |f| <= M caps the reach, so this bracket always contains x(t)
        let reach = x0 + self.spec.f.bound() * t;
        let hi = beta.min(reach + 1e-9 * (1.0 + math::abs(reach)));
        self.bisect(x0, hi, t, |x| self.time_up(x0, x))
    }

    fn invert_down(&self, iv: &DecreaseInterval, x0: f64, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(x0);
        }
        let gamma = iv.lo;
        if gamma.is_finite() {
            let tau = self.time_down(x0, gamma)?;
            if tau <= t && tau <= TIME_CAP {
                return Ok(gamma);
            }
        }
        let reach = x0 - self.spec.f.bound() * t;
        let lo = gamma.max(reach - 1e-9 * (1.0 + math::abs(reach)));
        // mirror: measure descent by distance below x0
        let inverted = self.bisect(0.0, x0 - lo, t, |d| self.time_down(x0, x0 - d))?;
        Ok(x0 - inverted)
    }

    /// Bracketed bisection of a strictly increasing time functional; the
    /// map has slope at least `1/M`, so the bracket is guaranteed.
    fn bisect<F: Fn(f64) -> Result<f64>>(
        &self,
        lo0: f64,
        hi0: f64,
        t: f64,
        time: F,
    ) -> Result<f64> {
        let (mut lo, mut hi) = (lo0, hi0);
        let tol = (INVERT_REL_TOL * (hi0 - lo0)).max(1e-307);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let tm = time(mid)?;
            if tm < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Tolerant lookup in a small `(point, value)` map.
pub(crate) fn lookup<T: Copy>(map: &[(f64, T)], x: f64) -> Option<T> {
    map.iter()
        .find(|(p, _)| math::abs(p - x) <= POINT_TOL * (1.0 + math::abs(x)))
        .map(|&(_, v)| v)
}

fn compute_domains(f: &RegulatedFn, zs: &ZeroStructure, stop: &[f64]) -> Result<MonotoneDomains> {
    let mut cuts = zs.critical_points();
    cuts.extend(f.breakpoints().iter().copied());
    cuts.extend(stop.iter().copied());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| math::abs(*a - *b) <= ZERO_TOL);

    let mut segments = Vec::with_capacity(cuts.len() + 1);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend(cuts.iter().copied());
    edges.push(f64::INFINITY);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        segments.push(Segment {
            lo,
            hi,
            kind: segment_kind(f, zs, lo, hi),
        });
    }

    let is_stop = |p: f64| stop.iter().any(|&s| math::abs(s - p) <= ZERO_TOL);

    let probe_mid = |seg: &Segment| -> f64 {
        match (seg.lo.is_finite(), seg.hi.is_finite()) {
            (true, true) => 0.5 * (seg.lo + seg.hi),
            (true, false) => seg.lo + 1.0,
            (false, true) => seg.hi - 1.0,
            (false, false) => 0.0,
        }
    };

    let mut increase = Vec::new();
    let mut decrease = Vec::new();

    // scan for maximal runs of upward-traversable segments
    let mut cur: Option<(f64, f64, usize)> = None; // (lo, hi, first segment idx)
    for (idx, seg) in segments.iter().enumerate() {
        if seg.up() {
            match cur {
                None => cur = Some((seg.lo, seg.hi, idx)),
                Some((a, b, first)) => {
                    let p = seg.lo;
                    let left_ok = f
                        .reciprocal_integral(probe_mid(&segments[idx - 1]), p, Side::Plus)?
                        .is_finite();
                    let right_ok = f
                        .reciprocal_integral(p, probe_mid(seg), Side::Plus)?
                        .is_finite();
                    if !is_stop(p) && left_ok && right_ok {
                        cur = Some((a, seg.hi, first));
                    } else {
                        push_increase(f, &segments, &mut increase, a, b, first, is_stop)?;
                        cur = Some((p, seg.hi, idx));
                    }
                }
            }
        } else if let Some((a, b, first)) = cur.take() {
            push_increase(f, &segments, &mut increase, a, b, first, is_stop)?;
        }
    }
    if let Some((a, b, first)) = cur.take() {
        push_increase(f, &segments, &mut increase, a, b, first, is_stop)?;
    }

    let mut cur: Option<(f64, f64, usize)> = None; // (lo, hi, last segment idx)
    for (idx, seg) in segments.iter().enumerate() {
        if seg.down() {
            match cur {
                None => cur = Some((seg.lo, seg.hi, idx)),
                Some((a, _b, _last)) => {
                    let p = seg.lo;
                    let left_ok = f
                        .reciprocal_integral(probe_mid(&segments[idx - 1]), p, Side::Minus)?
                        .is_finite();
                    let right_ok = f
                        .reciprocal_integral(p, probe_mid(seg), Side::Minus)?
                        .is_finite();
                    if !is_stop(p) && left_ok && right_ok {
                        cur = Some((a, seg.hi, idx));
                    } else {
                        push_decrease(f, &segments, &mut decrease, a, p, idx - 1, is_stop)?;
                        cur = Some((p, seg.hi, idx));
                    }
                }
            }
        } else if let Some((a, b, last)) = cur.take() {
            push_decrease(f, &segments, &mut decrease, a, b, last, is_stop)?;
        }
    }
    if let Some((a, b, last)) = cur.take() {
        push_decrease(f, &segments, &mut decrease, a, b, last, is_stop)?;
    }

    Ok(MonotoneDomains { increase, decrease })
}

#[allow(clippy::too_many_arguments)]
fn push_increase(
    f: &RegulatedFn,
    segments: &[Segment],
    out: &mut Vec<IncreaseInterval>,
    lo: f64,
    hi: f64,
    first_seg: usize,
    is_stop: impl Fn(f64) -> bool,
) -> Result<()> {
    // left endpoint joins the interval iff it is not a stop and an
    // increasing solution actually starts there
    let closed_lo = if lo.is_finite() && !is_stop(lo) {
        let seg = &segments[first_seg];
        let mid = if seg.hi.is_finite() {
            0.5 * (seg.lo + seg.hi)
        } else {
            seg.lo + 1.0
        };
        f.reciprocal_integral(lo, mid, Side::Plus)?.is_finite()
    } else {
        false
    };
    out.push(IncreaseInterval { lo, hi, closed_lo });
    Ok(())
}

fn push_decrease(
    f: &RegulatedFn,
    segments: &[Segment],
    out: &mut Vec<DecreaseInterval>,
    lo: f64,
    hi: f64,
    last_seg: usize,
    is_stop: impl Fn(f64) -> bool,
) -> Result<()> {
    let closed_hi = if hi.is_finite() && !is_stop(hi) {
        let seg = &segments[last_seg];
        let mid = if seg.lo.is_finite() {
            0.5 * (seg.lo + seg.hi)
        } else {
            seg.hi - 1.0
        };
        f.reciprocal_integral(mid, hi, Side::Minus)?.is_finite()
    } else {
        false
    };
    out.push(DecreaseInterval { lo, hi, closed_hi });
    Ok(())
}

fn segment_kind(f: &RegulatedFn, zs: &ZeroStructure, lo: f64, hi: f64) -> SegKind {
    if zs.intervals.iter().any(|iv| iv.lo <= lo && hi <= iv.hi) {
        return SegKind::Flat;
    }
    if let Some(c) = zs.cantor.iter().find(|c| c.lo <= lo && hi <= c.hi) {
        return SegKind::Cantor {
            sign: c.gaps.sign,
            conv: c.gaps.reciprocal_converges(),
        };
    }
    let mid = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => 0.0,
    };
    if f.eval(mid) > 0.0 {
        SegKind::Pos
    } else {
        SegKind::Neg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorGaps;
    use crate::measure::{AtomlessMeasure, IfsComponent};
    use crate::regulated::PieceForm;
    use alloc::vec;

    fn sqrt_abs() -> RegulatedFn {
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

    fn signed_sqrt() -> RegulatedFn {
        RegulatedFn::new(
            vec![-400.0, 0.0, 400.0],
            vec![
                PieceForm::Constant(-40.0),
                PieceForm::PowerLaw {
                    anchor: 0.0,
                    coeff: 2.0,
                    exponent: 0.5,
                    sign: -1,
                },
                PieceForm::PowerLaw {
                    anchor: 0.0,
                    coeff: 2.0,
                    exponent: 0.5,
                    sign: 1,
                },
                PieceForm::Constant(40.0),
            ],
            vec![-40.0, 0.0, 40.0],
            40.0,
        )
        .unwrap()
    }

    #[test]
    fn sqrt_abs_is_one_increase_domain() {
        // the zero at 0 is integrable from both sides, so increase crosses it
        let flow = DetFlow::new(FlowSpec::plain(sqrt_abs())).unwrap();
        let d = flow.domains();
        assert_eq!(d.increase.len(), 1);
        assert!(!d.increase[0].lo.is_finite());
        assert!(!d.increase[0].hi.is_finite());
        assert!(d.decrease.is_empty());
    }

    #[test]
    fn stop_point_splits_the_domain() {
        let mut spec = FlowSpec::plain(sqrt_abs());
        spec.stop_set = vec![0.0];
        let flow = DetFlow::new(spec).unwrap();
        let d = flow.domains();
        assert_eq!(d.increase.len(), 2);
        assert_eq!(d.increase[0].hi, 0.0);
        assert_eq!(d.increase[1].lo, 0.0);
        assert!(!d.increase[1].closed_lo, "stop point is excluded");
        assert_eq!(flow.flow(0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn signed_sqrt_domains_and_branch() {
        let flow = DetFlow::new(FlowSpec::plain(signed_sqrt())).unwrap();
        let d = flow.domains();
        assert_eq!(d.increase.len(), 1);
        assert_eq!(d.increase[0].lo, 0.0);
        assert!(d.increase[0].closed_lo);
        assert_eq!(d.decrease.len(), 1);
        assert_eq!(d.decrease[0].hi, 0.0);
        assert!(d.decrease[0].closed_hi);
        assert_eq!(flow.branch_points(), &[0.0]);
    }

    #[test]
    fn example_flow_is_t_squared() {
        let flow = DetFlow::new(FlowSpec::plain(sqrt_abs())).unwrap();
        for &t in &[0.0, 0.25, 1.0, 2.5, 10.0] {
            let x = flow.flow(0.0, t).unwrap();
            assert!((x - t * t).abs() <= 1e-8, "t={t}: {x}");
        }
    }

    #[test]
    fn branch_selection() {
        let mut spec = FlowSpec::plain(signed_sqrt());
        spec.phi = vec![(0.0, -1)];
        let flow = DetFlow::new(spec).unwrap();
        let x = flow.flow(0.0, 2.0).unwrap();
        assert!((x + 4.0).abs() < 1e-9, "{x}");

        let mut spec = FlowSpec::plain(signed_sqrt());
        spec.phi = vec![(0.0, 1)];
        let flow = DetFlow::new(spec).unwrap();
        assert!((flow.flow(0.0, 2.0).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn phi_missing_is_an_error() {
        let flow = DetFlow::new(FlowSpec::plain(signed_sqrt())).unwrap();
        assert!(matches!(flow.flow(0.0, 1.0), Err(Error::PhiMissing { .. })));
        // off the branch point everything works without phi
        assert!(flow.flow(1.0, 1.0).is_ok());
    }

    #[test]
    fn branch_stop_conflict_rejected() {
        let mut spec = FlowSpec::plain(signed_sqrt());
        spec.stop_set = vec![0.0];
        assert!(matches!(
            DetFlow::new(spec),
            Err(Error::BranchStopConflict { x }) if x == 0.0
        ));
    }

    #[test]
    fn stop_not_zero_rejected() {
        let mut spec = FlowSpec::plain(sqrt_abs());
        spec.stop_set = vec![3.0];
        assert!(matches!(
            DetFlow::new(spec),
            Err(Error::StopPointNotZero { x }) if x == 3.0
        ));
    }

    #[test]
    fn saturation_at_flat_boundary() {
        // f = 2 sqrt(1-x) below 1, flat above; total passage time to 1 is 1
        let f = RegulatedFn::new(
            vec![-399.0, 1.0],
            vec![
                PieceForm::Constant(40.0),
                PieceForm::PowerLaw {
                    anchor: 1.0,
                    coeff: 2.0,
                    exponent: 0.5,
                    sign: 1,
                },
                PieceForm::Constant(0.0),
            ],
            vec![40.0, 0.0],
            40.0,
        )
        .unwrap();
        let flow = DetFlow::new(FlowSpec::plain(f)).unwrap();
        let tau = flow.time_to_reach(0.0, 1.0, Dir::Up).unwrap();
        assert!((tau - 1.0).abs() < 1e-10, "{tau}");
        for &t in &[1.0, 1.5, 100.0] {
            assert_eq!(flow.flow(0.0, t).unwrap(), 1.0);
        }
        let x = flow.flow(0.0, 0.5).unwrap();
        assert!((x - 0.75).abs() < 1e-9, "{x}"); // 1 - (1-t/... ) closed form: x(t) = 1-(1-t/2·2...)
    }

    #[test]
    fn time_to_reach_outside_domain() {
        let flow = DetFlow::new(FlowSpec::plain(signed_sqrt())).unwrap();
        assert!(matches!(
            flow.time_to_reach(-1.0, 1.0, Dir::Up),
            Err(Error::OutsideDomain { .. })
        ));
        assert_eq!(flow.time_to_reach(5.0, 5.0, Dir::Up).unwrap(), 0.0);
    }

    #[test]
    fn time_additivity() {
        let flow = DetFlow::new(FlowSpec::plain(sqrt_abs())).unwrap();
        let t02 = flow.time_to_reach(0.25, 2.0, Dir::Up).unwrap();
        let t24 = flow.time_to_reach(2.0, 4.0, Dir::Up).unwrap();
        let t04 = flow.time_to_reach(0.25, 4.0, Dir::Up).unwrap();
        assert!((t02 + t24 - t04).abs() < 2e-10);
    }

    #[test]
    fn downward_flow_closed_form() {
        let mut spec = FlowSpec::plain(signed_sqrt());
        spec.phi = vec![(0.0, -1)];
        let flow = DetFlow::new(spec).unwrap();
        // from x0 = -1, moving down: |x| grows like (t+1)^2
        let x = flow.flow(-1.0, 1.0).unwrap();
        assert!((x + 4.0).abs() < 1e-8, "{x}");
    }

    #[test]
    fn cantor_time_includes_measure_mass() {
        let f = RegulatedFn::new(
            vec![0.0, 1.0],
            vec![
                PieceForm::Constant(0.0),
                PieceForm::Cantor(CantorGaps::middle_thirds()),
                PieceForm::Constant(0.0),
            ],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        for c in [0.0, 1.0] {
            let spec = FlowSpec {
                f: f.clone(),
                mu: AtomlessMeasure {
                    ac: vec![],
                    ifs: if c == 0.0 {
                        vec![]
                    } else {
                        vec![IfsComponent::cantor(0.0, 1.0, c)]
                    },
                },
                stop_set: vec![],
                phi: vec![],
            };
            let flow = DetFlow::new(spec).unwrap();
            let tau = flow.time_to_reach(0.0, 1.0, Dir::Up).unwrap();
            let want = 23.598_793_149_740_556 + c;
            assert!((tau - want).abs() < 1e-6, "c={c}: {tau} vs {want}");
        }
    }

    #[test]
    fn trajectory_monotone_and_on_grid() {
        let flow = DetFlow::new(FlowSpec::plain(sqrt_abs())).unwrap();
        let path = flow.trajectory(0.0, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(path.len(), 3);
        assert!((path[1].1 - 1.0).abs() < 1e-8);
        assert!((path[2].1 - 4.0).abs() < 1e-8);
        assert!(path.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn breakpoint_free_constant_motion() {
        let f = RegulatedFn::new(vec![], vec![PieceForm::Constant(1.0)], vec![], 1.0).unwrap();
        let flow = DetFlow::new(FlowSpec::plain(f)).unwrap();
        assert_eq!(flow.domains().increase.len(), 1);
        assert!(flow.domains().decrease.is_empty());
        let x = flow.flow(-3.0, 7.0).unwrap();
        assert!((x - 4.0).abs() < 1e-9, "{x}");
    }

    #[test]
    fn everywhere_zero_function_is_static() {
        let f = RegulatedFn::new(vec![], vec![PieceForm::Constant(0.0)], vec![], 1.0).unwrap();
        let flow = DetFlow::new(FlowSpec::plain(f)).unwrap();
        assert!(flow.domains().increase.is_empty());
        assert!(flow.domains().decrease.is_empty());
        assert_eq!(flow.flow(2.5, 100.0).unwrap(), 2.5);
    }

    #[test]
    fn dead_point_is_fixed() {
        // attracting zero: trajectories converge to 0 and rest there
        let f = RegulatedFn::new(
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
                    sign: -1,
                },
                PieceForm::Constant(-40.0),
            ],
            vec![40.0, 0.0, -40.0],
            40.0,
        )
        .unwrap();
        let flow = DetFlow::new(FlowSpec::plain(f)).unwrap();
        for &t in &[0.0, 1.0, 7.0] {
            assert_eq!(flow.flow(0.0, t).unwrap(), 0.0);
        }
        // from above, trajectories decrease into 0 and saturate
        let x = flow.flow(1.0, 0.9999).unwrap();
        assert!(x > 0.0);
        assert_eq!(flow.flow(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(flow.flow(1.0, 50.0).unwrap(), 0.0);
    }
}
