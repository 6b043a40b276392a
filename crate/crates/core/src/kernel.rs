//! Analytic transition kernels of the Markov semigroup.
//!
//! From an initial point inside a domain of increase, the law of `X(t)` is
//! read off the passage-time identity: the chance of still being at or
//! below `y` is the chance that the deterministic passage time to `y` plus
//! the exponential waits collected in `[x0, y]` exceeds `t`. That yields a
//! CDF with atoms exactly at the waiting points (arrived but not yet
//! departed), at the saturation endpoint, and at the deterministic reach
//! when no wait intervenes. Branch points mix the upward and downward
//! kernels with weight `theta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{lookup, DecreaseInterval, DetFlow, Dir, FlowSpec, IncreaseInterval};
use crate::hypoexp::{hypoexp_pdf, hypoexp_sf, hypoexp_sf_strict};
use crate::math;
use crate::measure::AtomlessMeasure;
use crate::quad;
use crate::regulated::RegulatedFn;
use crate::{KERNEL_GRID_TOL, ZERO_TOL};

/// A waiting point with its exponential rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingPoint {
    pub x: f64,
    pub rate: f64,
}

/// The data determining a Markov semigroup: a deterministic base (without
/// branch selection), waiting points with rates, and upward probabilities
/// at branch points.
#[derive(Debug, Clone)]
pub struct MarkovSpec {
    pub f: RegulatedFn,
    pub mu: AtomlessMeasure,
    pub stop_set: Vec<f64>,
    pub waiting: Vec<WaitingPoint>,
    /// `(point, probability of moving up)` over the branch points.
    pub theta: Vec<(f64, f64)>,
}

/// Probability law of `X(t)` started at a point: atoms plus the cumulative
/// mass of the continuous part on an adaptive grid.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    /// `(location, mass)`, ascending, masses positive.
    pub atoms: Vec<(f64, f64)>,
    /// `(x, cumulative continuous mass)`, ascending in both coordinates.
    pub smooth_cdf: Vec<(f64, f64)>,
    pub support: (f64, f64),
}

impl TransitionKernel {
    pub fn dirac(x: f64) -> Self {
        TransitionKernel {
            atoms: vec![(x, 1.0)],
            smooth_cdf: Vec::new(),
            support: (x, x),
        }
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(_, m)| m).sum();
        atoms + self.smooth_cdf.last().map_or(0.0, |&(_, c)| c)
    }

    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(loc, _)| loc == x)
            .map(|&(_, m)| m)
            .sum()
    }

    fn smooth_at(&self, x: f64) -> f64 {
        if self.smooth_cdf.is_empty() {
            return 0.0;
        }
        let pts = &self.smooth_cdf;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        if x >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|&(g, _)| g <= x);
        let (x0, c0) = pts[i - 1];
        let (x1, c1) = pts[i];
        if x1 == x0 {
            return c1;
        }
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// `P{X <= x}` from the gridded representation.
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|&&(loc, _)| loc <= x)
            .map(|&(_, m)| m)
            .sum();
        atoms + self.smooth_at(x)
    }

    /// Left limit `P{X < x}`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x) - self.atom_mass_at(x)
    }

    /// Locations where either representation places grid detail.
    pub fn grid_points(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.atoms.iter().map(|&(x, _)| x).collect();
        xs.extend(self.smooth_cdf.iter().map(|&(x, _)| x));
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        xs
    }
}

/// Markov transition engine built from a validated [`MarkovSpec`].
#[derive(Debug, Clone)]
pub struct MarkovProcess {
    spec: MarkovSpec,
    flow: DetFlow,
}

impl MarkovProcess {
    pub fn new(spec: MarkovSpec) -> Result<Self> {
        let flow = DetFlow::new(FlowSpec {
            f: spec.f.clone(),
            mu: spec.mu.clone(),
            stop_set: spec.stop_set.clone(),
            phi: Vec::new(),
        })?;
        let mut spec = spec;
        spec.waiting.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        for pair in spec.waiting.windows(2) {
            if pair[1].x - pair[0].x <= ZERO_TOL {
                return Err(Error::Malformed(alloc::format!(
                    "duplicate waiting point {}",
                    pair[1].x
                )));
            }
        }
        for w in &spec.waiting {
            if !flow.zero_structure().contains(w.x, crate::flow::POINT_TOL) {
                return Err(Error::WaitPointNotZero { x: w.x });
            }
            if !(w.rate > 0.0 && w.rate.is_finite()) {
                return Err(Error::NonpositiveRate {
                    x: w.x,
                    rate: w.rate,
                });
            }
        }
        for &(p, th) in &spec.theta {
            if !(0.0..=1.0).contains(&th) {
                return Err(Error::BadArgument(alloc::format!(
                    "theta({p}) = {th} is not a probability"
                )));
            }
        }
        Ok(MarkovProcess { spec, flow })
    }

    pub fn spec(&self) -> &MarkovSpec {
        &self.spec
    }

    pub fn det_flow(&self) -> &DetFlow {
        &self.flow
    }

    pub fn waiting(&self) -> &[WaitingPoint] {
        &self.spec.waiting
    }

    pub(crate) fn theta_at(&self, x: f64) -> Result<f64> {
        lookup(&self.spec.theta, x).ok_or(Error::ThetaMissing { x })
    }

    /// Waiting points in the closed interval `[lo, hi]`, ascending. The
    /// bounds are exact: a trajectory starting even marginally past a
    /// waiting point never waits there.
    fn waits_between(&self, lo: f64, hi: f64) -> Vec<WaitingPoint> {
        self.spec
            .waiting
            .iter()
            .copied()
            .filter(|w| w.x >= lo && w.x <= hi)
            .collect()
    }

    /// `P_t(x0, (-∞, x])`, exact up to quadrature of the passage times.
    pub fn kernel_cdf(&self, x0: f64, t: f64, x: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::BadArgument("kernel needs t >= 0".into()));
        }
        let up = self.flow.increase_at(x0).copied();
        let down = self.flow.decrease_at(x0).copied();
        match (up, down) {
            (None, None) => Ok(if x >= x0 { 1.0 } else { 0.0 }),
            (Some(iv), None) => self.cdf_up(x0, t, x, &iv),
            (None, Some(iv)) => self.cdf_down(x0, t, x, &iv),
            (Some(ivu), Some(ivd)) => {
                let theta = self.theta_at(x0)?;
                Ok(theta * self.cdf_up(x0, t, x, &ivu)?
                    + (1.0 - theta) * self.cdf_down(x0, t, x, &ivd)?)
            }
        }
    }

    fn cdf_up(&self, x0: f64, t: f64, x: f64, iv: &IncreaseInterval) -> Result<f64> {
        if x < x0 {
            return Ok(0.0);
        }
        if iv.hi.is_finite() && x >= iv.hi {
            return Ok(1.0);
        }
        let eta = self.flow.time_to_reach(x0, x, Dir::Up)?;
        if !eta.is_finite() {
            return Ok(1.0); // the level x is never reached
        }
        let rates: Vec<f64> = self
            .waits_between(x0, x)
            .iter()
            .filter(|w| w.x < iv.hi - ZERO_TOL)
            .map(|w| w.rate)
            .collect();
        Ok(hypoexp_sf(&rates, snap(t - eta, t)))
    }

    fn cdf_down(&self, x0: f64, t: f64, x: f64, iv: &DecreaseInterval) -> Result<f64> {
        if x >= x0 {
            return Ok(1.0);
        }
        if iv.lo.is_finite() && x < iv.lo {
            return Ok(0.0);
        }
        let eta = self.flow.time_to_reach(x0, x, Dir::Down)?;
        if !eta.is_finite() {
            return Ok(0.0);
        }
        // waits in (x, x0]: the wait at x itself delays departure from x,
        // not arrival there
        let rates: Vec<f64> = self
            .waits_between(x, x0)
            .iter()
            .filter(|w| w.x > x + ZERO_TOL)
            .map(|w| w.rate)
            .collect();
        Ok(1.0 - hypoexp_sf_strict(&rates, snap(t - eta, t)))
    }

    /// Atoms of `P_t(x0, ·)`, ascending.
    pub fn atoms(&self, x0: f64, t: f64) -> Result<Vec<(f64, f64)>> {
        if t < 0.0 {
            return Err(Error::BadArgument("kernel needs t >= 0".into()));
        }
        let up = self.flow.increase_at(x0).copied();
        let down = self.flow.decrease_at(x0).copied();
        match (up, down) {
            (None, None) => Ok(vec![(x0, 1.0)]),
            (Some(iv), None) => self.atoms_up(x0, t, &iv, 1.0),
            (None, Some(iv)) => self.atoms_down(x0, t, &iv, 1.0),
            (Some(ivu), Some(ivd)) => {
                let theta = self.theta_at(x0)?;
                let mut all = self.atoms_down(x0, t, &ivd, 1.0 - theta)?;
                merge_atoms(&mut all, self.atoms_up(x0, t, &ivu, theta)?);
                Ok(all)
            }
        }
    }

    fn atoms_up(
        &self,
        x0: f64,
        t: f64,
        iv: &IncreaseInterval,
        weight: f64,
    ) -> Result<Vec<(f64, f64)>> {
        if weight == 0.0 {
            return Ok(Vec::new());
        }
        let reach = self.flow.flow_dir(x0, t, Dir::Up)?;
        let waits: Vec<WaitingPoint> = self
            .waits_between(x0, reach)
            .into_iter()
            .filter(|w| w.x < iv.hi - ZERO_TOL)
            .collect();
        if waits.is_empty() {
            // fully deterministic motion
            return Ok(vec![(reach, weight)]);
        }
        let mut atoms = Vec::new();
        let mut rates: Vec<f64> = Vec::new();
        for w in &waits {
            let eta = self.flow.time_to_reach(x0, w.x, Dir::Up)?;
            let u = t - eta;
            // arrived (strict: exact-time arrival counts) but not departed
            let arrived = 1.0 - hypoexp_sf_strict(&rates, u);
            rates.push(w.rate);
            let departed = 1.0 - hypoexp_sf(&rates, u);
            let mass = weight * (arrived - departed);
            if mass > 0.0 {
                atoms.push((w.x, mass));
            }
        }
        if iv.hi.is_finite() {
            let tau = self.flow.time_to_reach(x0, iv.hi, Dir::Up)?;
            if tau.is_finite() && t >= tau {
                let mass = weight * (1.0 - hypoexp_sf(&rates, t - tau));
                if mass > 0.0 {
                    atoms.push((iv.hi, mass));
                }
            }
        }
        Ok(atoms)
    }

    fn atoms_down(
        &self,
        x0: f64,
        t: f64,
        iv: &DecreaseInterval,
        weight: f64,
    ) -> Result<Vec<(f64, f64)>> {
        if weight == 0.0 {
            return Ok(Vec::new());
        }
        let reach = self.flow.flow_dir(x0, t, Dir::Down)?;
        let waits: Vec<WaitingPoint> = self
            .waits_between(reach, x0)
            .into_iter()
            .filter(|w| w.x > iv.lo + ZERO_TOL)
            .collect();
        if waits.is_empty() {
            return Ok(vec![(reach, weight)]);
        }
        let mut atoms = Vec::new();
        let mut rates: Vec<f64> = Vec::new();
        for w in waits.iter().rev() {
            let eta = self.flow.time_to_reach(x0, w.x, Dir::Down)?;
            let u = t - eta;
            let arrived = 1.0 - hypoexp_sf_strict(&rates, u);
            rates.push(w.rate);
            let departed = 1.0 - hypoexp_sf(&rates, u);
            let mass = weight * (arrived - departed);
            if mass > 0.0 {
                atoms.push((w.x, mass));
            }
        }
        if iv.lo.is_finite() {
            let tau = self.flow.time_to_reach(x0, iv.lo, Dir::Down)?;
            if tau.is_finite() && t >= tau {
                let mass = weight * (1.0 - hypoexp_sf(&rates, t - tau));
                if mass > 0.0 {
                    atoms.push((iv.lo, mass));
                }
            }
        }
        atoms.reverse();
        Ok(atoms)
    }

    /// Mass of the closed interval `[a, b]` under `P_t(x0, ·)`.
    pub fn interval_prob(&self, x0: f64, t: f64, a: f64, b: f64) -> Result<f64> {
        if b < a {
            return Ok(0.0);
        }
        let atom_at_a: f64 = self
            .atoms(x0, t)?
            .into_iter()
            .filter(|&(loc, _)| math::abs(loc - a) <= ZERO_TOL)
            .map(|(_, m)| m)
            .sum();
        Ok((self.kernel_cdf(x0, t, b)? - self.kernel_cdf(x0, t, a)? + atom_at_a).max(0.0))
    }

    /// Gridded kernel at the default grid tolerance.
    pub fn kernel(&self, x0: f64, t: f64) -> Result<TransitionKernel> {
        self.kernel_with_grid(x0, t, KERNEL_GRID_TOL)
    }

    /// Gridded kernel; the smooth part is refined until adjacent grid
    /// increments carry at most `grid_tol` mass.
    pub fn kernel_with_grid(&self, x0: f64, t: f64, grid_tol: f64) -> Result<TransitionKernel> {
        let atoms = self.atoms(x0, t)?;
        let up = self.flow.increase_at(x0).copied();
        let down = self.flow.decrease_at(x0).copied();

        let lo = match down {
            Some(_) => self.flow.flow_dir(x0, t, Dir::Down)?,
            None => x0,
        };
        let hi = match up {
            Some(_) => self.flow.flow_dir(x0, t, Dir::Up)?,
            None => x0,
        };

        // anchors: support ends, every atom, and x0
        let mut anchors = vec![lo, x0, hi];
        anchors.extend(atoms.iter().map(|&(x, _)| x));
        anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        anchors.dedup_by(|a, b| (*a - *b).abs() <= ZERO_TOL * (1.0 + a.abs()));

        let atom_below = |x: f64| -> f64 {
            atoms
                .iter()
                .filter(|&&(loc, _)| loc <= x)
                .map(|&(_, m)| m)
                .sum()
        };
        let cont = |x: f64| -> Result<f64> { Ok(self.kernel_cdf(x0, t, x)? - atom_below(x)) };

        let mut grid: Vec<(f64, f64)> = Vec::new();
        grid.push((anchors[0], cont(anchors[0])?));
        for pair in anchors.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let ca = cont(a)?;
            let cb = cont(b)?;
            refine_grid(&mut grid, a, ca, b, cb, grid_tol, &cont, 0)?;
        }
        // repair inversion jitter at deterministic steps
        let mut cum = 0.0f64;
        for entry in &mut grid {
            cum = cum.max(entry.1).min(1.0);
            entry.1 = cum;
        }
        Ok(TransitionKernel {
            atoms,
            smooth_cdf: grid,
            support: (lo, hi),
        })
    }

    /// `P_t(x0, (a, b])` as a plain CDF difference.
    pub fn half_open_prob(&self, x0: f64, t: f64, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        Ok((self.kernel_cdf(x0, t, b)? - self.kernel_cdf(x0, t, a)?).max(0.0))
    }

    /// Left side of the Chapman-Kolmogorov identity over the half-open set
    /// `(a, b]`: `∫ P_t(z, (a,b]) P_s(x0, dz)`, the atom contributions plus,
    /// per monotone direction, the continuous part integrated in the
    /// progress-time parameterization where its density is the
    /// hypoexponential density of the accumulated waits. `quad_tol` bounds
    /// the quadrature error of the continuous part.
    pub fn transition_integral(
        &self,
        x0: f64,
        s: f64,
        t: f64,
        a: f64,
        b: f64,
        quad_tol: f64,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (z, m) in self.atoms(x0, s)? {
            total += m * self.half_open_prob(z, t, a, b)?;
        }
        let up = self.flow.increase_at(x0).copied();
        let down = self.flow.decrease_at(x0).copied();
        match (up, down) {
            (None, None) => {}
            (Some(iv), None) => {
                total += self.continuous_integral(x0, s, t, a, b, Dir::Up, iv.hi, 1.0, quad_tol)?
            }
            (None, Some(iv)) => {
                total +=
                    self.continuous_integral(x0, s, t, a, b, Dir::Down, iv.lo, 1.0, quad_tol)?
            }
            (Some(ivu), Some(ivd)) => {
                let theta = self.theta_at(x0)?;
                total +=
                    self.continuous_integral(x0, s, t, a, b, Dir::Up, ivu.hi, theta, quad_tol)?;
                total += self.continuous_integral(
                    x0,
                    s,
                    t,
                    a,
                    b,
                    Dir::Down,
                    ivd.lo,
                    1.0 - theta,
                    quad_tol,
                )?;
            }
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn continuous_integral(
        &self,
        x0: f64,
        s: f64,
        t: f64,
        a: f64,
        b: f64,
        dir: Dir,
        boundary: f64,
        weight: f64,
        quad_tol: f64,
    ) -> Result<f64> {
        if weight == 0.0 {
            return Ok(0.0);
        }
        let reach = self.flow.flow_dir(x0, s, dir)?;
        let waits: Vec<WaitingPoint> = match dir {
            Dir::Up => self
                .waits_between(x0, reach)
                .into_iter()
                .filter(|w| w.x < boundary - ZERO_TOL)
                .collect(),
            Dir::Down => {
                let mut v: Vec<WaitingPoint> = self
                    .waits_between(reach, x0)
                    .into_iter()
                    .filter(|w| w.x > boundary + ZERO_TOL)
                    .collect();
                v.reverse(); // crossing order
                v
            }
        };
        if waits.is_empty() {
            return Ok(0.0); // purely deterministic: all mass is atomic
        }

        let tau = if boundary.is_finite() {
            self.flow.time_to_reach(x0, boundary, dir)?
        } else {
            f64::INFINITY
        };
        let end = s.min(tau);

        // progress times at which the rate set grows
        let wait_times: Vec<f64> = waits
            .iter()
            .map(|w| self.flow.time_to_reach(x0, w.x, dir))
            .collect::<Result<_>>()?;

        // the inner probability g(z(eta)) is smooth except where the
        // deterministic reach from z at horizon t crosses a set boundary
        // or the interval endpoint; in progress time those kinks sit at
        // eta(y) - t
        let mut cuts = vec![0.0, end];
        cuts.extend(wait_times.iter().copied().filter(|&e| e > 0.0 && e < end));
        for y in [a, b] {
            if let Ok(ey) = self.flow.time_to_reach(x0, y, dir) {
                if ey.is_finite() {
                    for k in [ey - t, ey] {
                        if k > 0.0 && k < end {
                            cuts.push(k);
                        }
                    }
                }
            }
        }
        if tau.is_finite() && tau - t > 0.0 && tau - t < end {
            cuts.push(tau - t);
        }
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-13 * (1.0 + p.abs()));

        let mut total = 0.0;
        let err = core::cell::Cell::new(None::<Error>);
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi <= lo {
                continue;
            }
            // rates of waits crossed before this panel
            let n_rates = wait_times
                .iter()
                .filter(|&&e| e <= lo + 1e-13 * (1.0 + lo))
                .count();
            if n_rates == 0 {
                continue; // deterministic stretch carries no continuous mass
            }
            let rates: Vec<f64> = waits[..n_rates].iter().map(|w| w.rate).collect();
            // nudge off the panel ends: the integrand has one-sided limits
            let pad = 1e-9 * (hi - lo);
            let integrand = |eta: f64| -> f64 {
                let res = (|| -> Result<f64> {
                    let z = self.flow.flow_dir(x0, eta, dir)?;
                    let g = self.half_open_prob(z, t, a, b)?;
                    Ok(g * hypoexp_pdf(&rates, s - eta))
                })();
                match res {
                    Ok(v) => v,
                    Err(e) => {
                        err.set(Some(e));
                        0.0
                    }
                }
            };
            let panel_tol = (quad_tol * 1e-2).clamp(1e-12, 1e-7);
            total += quad::adaptive_simpson(&integrand, lo + pad, hi - pad, panel_tol, 20);
            if let Some(e) = err.take() {
                return Err(e);
            }
        }
        Ok(weight * total)
    }
}

fn is_same(a: f64, b: f64) -> bool {
    math::abs(a - b) <= ZERO_TOL
}

/// Snap passage-time arguments that are zero up to inversion jitter, so
/// the deterministic (empty-rate) step lands on its own atom.
fn snap(u: f64, t: f64) -> f64 {
    if math::abs(u) <= 1e-11 * (1.0 + t) {
        0.0
    } else {
        u
    }
}

fn merge_atoms(base: &mut Vec<(f64, f64)>, add: Vec<(f64, f64)>) {
    for (x, m) in add {
        match base.iter_mut().find(|(loc, _)| is_same(*loc, x)) {
            Some(entry) => entry.1 += m,
            None => base.push((x, m)),
        }
    }
    base.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
}

#[allow(clippy::too_many_arguments)]
fn refine_grid<F: Fn(f64) -> Result<f64>>(
    grid: &mut Vec<(f64, f64)>,
    a: f64,
    ca: f64,
    b: f64,
    cb: f64,
    tol: f64,
    cont: &F,
    depth: u32,
) -> Result<()> {
    if cb - ca <= tol || depth >= 24 || b - a <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
        grid.push((b, cb));
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    let cm = cont(mid)?;
    refine_grid(grid, a, ca, mid, cm, tol, cont, depth + 1)?;
    refine_grid(grid, mid, cm, b, cb, tol, cont, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regulated::PieceForm;

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

    /// Example process: motion `x' = 2 sqrt|x|`, one unit-rate wait at 0.
    fn example_process(rate: f64) -> MarkovProcess {
        MarkovProcess::new(MarkovSpec {
            f: sqrt_abs(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 0.0, rate }],
            theta: vec![],
        })
        .unwrap()
    }

    fn branching_process(theta: f64) -> MarkovProcess {
        MarkovProcess::new(MarkovSpec {
            f: signed_sqrt(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 0.0, rate: 1.0 }],
            theta: vec![(0.0, theta)],
        })
        .unwrap()
    }

    #[test]
    fn holding_atom_is_exponential() {
        for &lam in &[0.1, 1.0, 10.0] {
            let proc = example_process(lam);
            for &t in &[0.1, 1.0, 10.0] {
                let atoms = proc.atoms(0.0, t).unwrap();
                let at_zero: f64 = atoms
                    .iter()
                    .filter(|&&(x, _)| x == 0.0)
                    .map(|&(_, m)| m)
                    .sum();
                let want = (-lam * t).exp();
                assert!(
                    (at_zero - want).abs() <= 1e-12,
                    "lam={lam} t={t}: {at_zero} vs {want}"
                );
            }
        }
    }

    #[test]
    fn example_cdf_closed_form() {
        // X(t) = ((t - Y)_+)^2: P{X <= x} = min(1, e^{-(t - sqrt x)})
        let proc = example_process(1.0);
        for &t in &[0.5, 1.0, 2.0] {
            for &x in &[0.0, 0.01, 0.25, 1.0, 4.5] {
                let got = proc.kernel_cdf(0.0, t, x).unwrap();
                let want = (-(t - x.sqrt())).exp().min(1.0);
                assert!((got - want).abs() < 1e-10, "t={t} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn kernel_at_zero_time_is_dirac() {
        let proc = example_process(1.0);
        let k = proc.kernel(0.0, 0.0).unwrap();
        assert_eq!(k.atoms, vec![(0.0, 1.0)]);
        assert!((k.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dead_point_kernel_is_identity() {
        let proc = branching_process(0.3);
        // -5 is in the decrease domain; 5 in increase; a point that is in
        // neither: none here, so use a stopped variant
        let stopped = MarkovProcess::new(MarkovSpec {
            f: sqrt_abs(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![0.0],
            waiting: vec![],
            theta: vec![],
        })
        .unwrap();
        let k = stopped.kernel(0.0, 3.0).unwrap();
        assert_eq!(k.atoms, vec![(0.0, 1.0)]);
        let _ = proc;
    }

    #[test]
    fn branching_mass_split() {
        // mass above 0 at time t: theta (1 - e^{-t})
        let proc = branching_process(0.3);
        let t = core::f64::consts::LN_2;
        let mass_above = 1.0 - proc.kernel_cdf(0.0, t, 0.0).unwrap();
        assert!((mass_above - 0.15).abs() < 1e-12, "{mass_above}");
        let atoms = proc.atoms(0.0, t).unwrap();
        let at_zero: f64 = atoms
            .iter()
            .filter(|&&(x, _)| x == 0.0)
            .map(|&(_, m)| m)
            .sum();
        assert!((at_zero - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_mass_is_one() {
        let proc = example_process(1.0);
        for &t in &[0.3, 1.0, 3.0] {
            let k = proc.kernel(0.0, t).unwrap();
            assert!((k.total_mass() - 1.0).abs() < 1e-9, "t={t}");
        }
        let proc = branching_process(0.7);
        for &x0 in &[0.0, -1.0, 2.0] {
            let k = proc.kernel(x0, 1.0).unwrap();
            assert!((k.total_mass() - 1.0).abs() < 1e-9, "x0={x0}");
        }
    }

    #[test]
    fn deterministic_kernel_is_dirac_at_flow() {
        let proc = MarkovProcess::new(MarkovSpec {
            f: sqrt_abs(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![],
            theta: vec![],
        })
        .unwrap();
        let k = proc.kernel(1.0, 1.0).unwrap();
        assert_eq!(k.atoms.len(), 1);
        // from 1, x(t) = (t+1)^2 = 4
        assert!((k.atoms[0].0 - 4.0).abs() < 1e-8);
        assert!((k.atoms[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_monotone_and_capped() {
        let proc = example_process(1.0);
        let t = 1.5;
        let mut prev = 0.0;
        for k in 0..=60 {
            let x = -0.5 + k as f64 * 0.05;
            let c = proc.kernel_cdf(0.0, t, x).unwrap();
            assert!(c >= prev - 1e-14, "cdf not monotone at {x}");
            assert!((0.0..=1.0 + 1e-12).contains(&c));
            prev = c;
        }
        assert_eq!(proc.kernel_cdf(0.0, t, -0.001).unwrap(), 0.0);
        assert!((proc.kernel_cdf(0.0, t, 2.26).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_refinement_converges_to_the_exact_cdf() {
        let proc = example_process(1.0);
        let (x0, t) = (0.0, 1.5);
        let sup_err = |grid_tol: f64| -> f64 {
            let k = proc.kernel_with_grid(x0, t, grid_tol).unwrap();
            let mut worst = 0.0f64;
            for i in 0..=400 {
                let x = -0.1 + 2.6 * i as f64 / 400.0;
                worst = worst.max((k.cdf(x) - proc.kernel_cdf(x0, t, x).unwrap()).abs());
            }
            worst
        };
        let coarse = sup_err(3e-2);
        let fine = sup_err(1e-4);
        assert!(fine <= coarse + 1e-12, "coarse {coarse} vs fine {fine}");
        assert!(fine < 1e-4, "{fine}");
    }

    #[test]
    fn fixed_point_chapman_kolmogorov_is_exact() {
        // constant trajectories: both sides of the identity coincide
        let stopped = MarkovProcess::new(MarkovSpec {
            f: sqrt_abs(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![0.0],
            waiting: vec![],
            theta: vec![],
        })
        .unwrap();
        for &(a, b) in &[(-1.0, 1.0), (-0.5, 0.0), (0.5, 2.0)] {
            let lhs = stopped.transition_integral(0.0, 0.7, 1.3, a, b, 1e-8).unwrap();
            let rhs = stopped.half_open_prob(0.0, 2.0, a, b).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn chapman_kolmogorov_closed_form_case() {
        // over (0, 0.09] both sides equal e^{-0.7} - e^{-1}: departed by
        // time 1 but not past 0.3 of progress; the closed set [0, 0.09]
        // adds the holding atom e^{-1} to the right-hand side
        let proc = example_process(1.0);
        let (s, t) = (0.5, 0.5);
        let lhs = proc.transition_integral(0.0, s, t, 0.0, 0.09, 1e-8).unwrap();
        let rhs = proc.half_open_prob(0.0, s + t, 0.0, 0.09).unwrap();
        let want = (-0.7f64).exp() - (-1.0f64).exp();
        assert!((rhs - want).abs() < 1e-12, "rhs {rhs} vs {want}");
        assert!((lhs - rhs).abs() < 1e-8, "lhs {lhs} vs rhs {rhs}");
        let closed = proc.interval_prob(0.0, s + t, 0.0, 0.09).unwrap();
        assert!((closed - (-0.7f64).exp()).abs() < 1e-12, "{closed}");
    }

    #[test]
    fn waiting_point_midway_produces_atom() {
        // waits at 0 and 1; start below, check the atom at 1 appears
        let proc = MarkovProcess::new(MarkovSpec {
            f: sqrt_abs(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 1.0, rate: 2.0 }],
            theta: vec![],
        });
        // 1.0 is not a zero of f here, so construction must fail
        assert!(matches!(proc, Err(Error::WaitPointNotZero { .. })));
    }

    #[test]
    fn downward_kernel_mirrors_upward() {
        // y(t) = -x(t) solves y' = -f(-y); the law of the mirrored process
        // is the reflected law, F_m(y) = 1 - F(-y) + atom(-y)
        let up = example_process(1.0);
        let mirrored = MarkovProcess::new(MarkovSpec {
            f: RegulatedFn::new(
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
                        sign: -1,
                    },
                    PieceForm::Constant(-40.0),
                ],
                vec![-40.0, 0.0, -40.0],
                40.0,
            )
            .unwrap(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 0.0, rate: 1.0 }],
            theta: vec![],
        })
        .unwrap();
        let (x0, t) = (-1.0, 1.7); // crosses the interior wait at 0
        let up_atoms = up.atoms(x0, t).unwrap();
        let down_atoms = mirrored.atoms(-x0, t).unwrap();
        assert_eq!(up_atoms.len(), down_atoms.len());
        for ((xu, mu_), (xd, md)) in up_atoms.iter().zip(down_atoms.iter().rev()) {
            assert!((xu + xd).abs() < 1e-8, "{xu} vs {xd}");
            assert!((mu_ - md).abs() < 1e-12);
        }
        for k in 0..=50 {
            let y = -3.0 + 6.0 * k as f64 / 50.0;
            let fm = mirrored.kernel_cdf(-x0, t, y).unwrap();
            let atom: f64 = up_atoms
                .iter()
                .filter(|&&(loc, _)| (loc + y).abs() <= 1e-9)
                .map(|&(_, m)| m)
                .sum();
            let want = 1.0 - up.kernel_cdf(x0, t, -y).unwrap() + atom;
            assert!((fm - want).abs() < 1e-8, "y={y}: {fm} vs {want}");
        }
    }

    #[test]
    fn interval_prob_includes_left_atom() {
        let proc = example_process(1.0);
        let t = 1.0;
        let p = proc.interval_prob(0.0, t, 0.0, 0.25).unwrap();
        // atom e^-1 plus continuous up to 0.25: cdf(0.25) = e^{-(1-0.5)}
        let want = (-0.5f64).exp();
        assert!((p - want).abs() < 1e-10, "{p} vs {want}");
        // excluding the atom leaves the continuous band (a, 0.25]
        let a = 1e-9;
        let inner = proc.interval_prob(0.0, t, a, 0.25).unwrap();
        let want_inner = want - (-(t - a.sqrt())).exp();
        assert!(
            (inner - want_inner).abs() < 1e-10,
            "{inner} vs {want_inner}"
        );
    }
}
