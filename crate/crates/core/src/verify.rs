//! Executable checks of the structural guarantees: the Chapman-Kolmogorov
//! identity, the semigroup law, solution-set closure under uniform limits,
//! degenerate-rate limits, and Caratheodory residuals of trajectories and
//! sample paths.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{DetFlow, Dir};
use crate::kernel::{MarkovProcess, MarkovSpec, TransitionKernel};
use crate::math;
use crate::quad;
use crate::regulated::RegulatedFn;
use crate::sampler::{PathSegment, SamplePath};
use crate::ZERO_TOL;

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
    pub lines: Vec<String>,
}

impl Report {
    fn new(name: &str, tol: f64) -> Self {
        Report {
            name: name.into(),
            tol,
            max_residual: 0.0,
            pass: true,
            lines: Vec::new(),
        }
    }

    fn record(&mut self, label: String, residual: f64) {
        if residual > self.max_residual {
            self.max_residual = residual;
        }
        if residual.partial_cmp(&self.tol) != Some(core::cmp::Ordering::Less)
            && residual != self.tol
        {
            self.pass = false;
        }
        self.lines.push(format!("{label}: residual {residual:.3e}"));
    }
}

impl core::fmt::Display for Report {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(
            f,
            "[{}] {}: max residual {:.3e} (tol {:.1e}, {} checks)",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.max_residual,
            self.tol,
            self.lines.len()
        )
    }
}

/// Deterministic pseudo-uniforms for building test tuples.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        lo + (hi - lo) * ((self.0 >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0))
    }
}

/// Dyadic subintervals of `[lo, hi]` down to the given depth.
pub fn dyadic_intervals(lo: f64, hi: f64, depth: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for d in 1..=depth {
        let n = 1usize << d;
        let w = (hi - lo) / n as f64;
        for i in 0..n {
            out.push((lo + i as f64 * w, lo + (i + 1) as f64 * w));
        }
    }
    out
}

/// Chapman-Kolmogorov consistency over a family of half-open intervals
/// `(a, b]`: compares `∫ P_t(z, A) P_s(x0, dz)` against `P_{s+t}(x0, A)`.
pub fn check_chapman_kolmogorov(
    proc: &MarkovProcess,
    x0: f64,
    s: f64,
    t: f64,
    sets: &[(f64, f64)],
    tol: f64,
) -> Result<Report> {
    let mut report = Report::new("chapman-kolmogorov", tol);
    for &(a, b) in sets {
        let lhs = proc.transition_integral(x0, s, t, a, b, tol)?;
        let rhs = proc.half_open_prob(x0, s + t, a, b)?;
        report.record(
            format!("x0={x0} s={s} t={t} A=({a:.4}, {b:.4}]"),
            math::abs(lhs - rhs),
        );
    }
    Ok(report)
}

/// Semigroup law on explicit triples: `|S_s(S_t x0) - S_{t+s} x0|`.
pub fn check_semigroup(flow: &DetFlow, triples: &[(f64, f64, f64)], tol: f64) -> Result<Report> {
    let mut report = Report::new("semigroup", tol);
    for &(x0, t, s) in triples {
        let two_step = flow.flow(flow.flow(x0, t)?, s)?;
        let one_step = flow.flow(x0, t + s)?;
        report.record(
            format!("x0={x0:.4} t={t:.4} s={s:.4}"),
            math::abs(two_step - one_step),
        );
    }
    Ok(report)
}

/// Caratheodory residual of a polyline trace `(t, x)` against `f`:
/// `max_k |x_k - x_0 - ∫_0^{t_k} f(x(s)) ds|` with `x` linearly
/// interpolated between nodes.
pub fn trace_residual(f: &RegulatedFn, trace: &[(f64, f64)]) -> f64 {
    if trace.len() < 2 {
        return 0.0;
    }
    let x0 = trace[0].1;
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for w in trace.windows(2) {
        let ((ta, xa), (tb, xb)) = (w[0], w[1]);
        if tb <= ta {
            continue;
        }
        let integrand = |s: f64| {
            let x = xa + (xb - xa) * (s - ta) / (tb - ta);
            f.eval(x)
        };
        acc += quad::adaptive_simpson(&integrand, ta, tb, 1e-11 * (tb - ta).max(1.0), 18);
        worst = worst.max(math::abs(xb - x0 - acc));
    }
    worst
}

/// Closure of the solution set under uniform limits: the sup-distances of
/// successive paths must shrink, and the limit must itself solve the ODE
/// (Caratheodory residual below `tol`).
pub fn check_closure(
    f: &RegulatedFn,
    paths: &[Vec<(f64, f64)>],
    limit: &[(f64, f64)],
    tol: f64,
) -> Result<Report> {
    let interp = |trace: &[(f64, f64)], t: f64| -> f64 {
        let i = trace.partition_point(|&(s, _)| s <= t);
        if i == 0 {
            return trace[0].1;
        }
        if i >= trace.len() {
            return trace[trace.len() - 1].1;
        }
        let (ta, xa) = trace[i - 1];
        let (tb, xb) = trace[i];
        if tb == ta {
            xb
        } else {
            xa + (xb - xa) * (t - ta) / (tb - ta)
        }
    };
    if paths.len() >= 2 {
        // evidence of uniform convergence: distance to the limit shrinks
        let dists: Vec<f64> = paths
            .iter()
            .map(|p| {
                limit
                    .iter()
                    .map(|&(t, x)| math::abs(interp(p, t) - x))
                    .fold(0.0, f64::max)
            })
            .collect();
        for pair in dists.windows(2) {
            if pair[1] > 1.1 * pair[0] + 1e-12 {
                return Err(Error::NotConverged);
            }
        }
    }
    let mut report = Report::new("closure", tol);
    report.record("limit path residual".into(), trace_residual(f, limit));
    Ok(report)
}

/// Caratheodory residual of a sampled path, re-evaluating the motion legs
/// through the flow (waiting episodes contribute `f = 0` exactly when the
/// waiting point is a zero, which is what the check certifies).
pub fn path_residual(proc: &MarkovProcess, path: &SamplePath) -> Result<f64> {
    let f = &proc.spec().f;
    let flow = proc.det_flow();
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    let mut t_end = 0.0;
    for seg in &path.segments {
        match seg {
            PathSegment::Wait { enter, leave, at } => {
                let end = leave.min(path.horizon);
                acc += f.eval(*at) * (end - enter);
                worst = worst.max(math::abs(at - path.x0 - acc));
                t_end = end;
            }
            PathSegment::Motion { samples } => {
                let (t0, xa) = samples[0];
                let (t1, xb) = samples[samples.len() - 1];
                let dir = path.dir.ok_or(Error::BadArgument(
                    "motion leg in a direction-free path".into(),
                ))?;
                let err = core::cell::Cell::new(None::<Error>);
                let integrand = |s: f64| match flow.flow_dir(xa, (s - t0).max(0.0), dir) {
                    Ok(x) => f.eval(x),
                    Err(e) => {
                        err.set(Some(e));
                        0.0
                    }
                };
                acc += quad::adaptive_simpson(&integrand, t0, t1, 2.5e-8, 22);
                if let Some(e) = err.take() {
                    return Err(e);
                }
                worst = worst.max(math::abs(xb - path.x0 - acc));
                t_end = t1;
            }
        }
    }
    if t_end < path.horizon {
        // resting tail after saturation or a dead start
        acc += f.eval(path.final_state) * (path.horizon - t_end);
        worst = worst.max(math::abs(path.final_state - path.x0 - acc));
    }
    Ok(worst)
}

/// Caratheodory residual of the deterministic trajectory from `x0`,
/// checked at `checkpoints` times up to `horizon`.
pub fn flow_residual(flow: &DetFlow, x0: f64, horizon: f64, checkpoints: usize) -> Result<f64> {
    let f = &flow.spec().f;
    let n = checkpoints.max(2);
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    let err = core::cell::Cell::new(None::<Error>);
    for k in 1..=n {
        let ta = horizon * (k - 1) as f64 / n as f64;
        let tb = horizon * k as f64 / n as f64;
        let integrand = |s: f64| match flow.flow(x0, s.max(0.0)) {
            Ok(x) => f.eval(x),
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        };
        acc += quad::adaptive_simpson(&integrand, ta, tb, 2.5e-8 / n as f64, 22);
        if let Some(e) = err.take() {
            return Err(e);
        }
        worst = worst.max(math::abs(flow.flow(x0, tb)? - x0 - acc));
    }
    Ok(worst)
}

/// First Wasserstein distance between two kernels, as the integral of the
/// absolute CDF difference over the support hull.
pub fn w1_distance(a: &TransitionKernel, b: &TransitionKernel) -> f64 {
    let lo = a.support.0.min(b.support.0);
    let hi = a.support.1.max(b.support.1);
    if hi <= lo {
        // both concentrated at single points
        return math::abs(a.support.0 - b.support.0);
    }
    let mut xs: Vec<f64> = a.grid_points();
    xs.extend(b.grid_points());
    let n = 2048;
    for k in 0..=n {
        xs.push(lo + (hi - lo) * k as f64 / n as f64);
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup();
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        // atoms sit on cell boundaries, so within a cell both CDFs are
        // continuous; take the left limit at the right edge
        let mid = 0.5 * (x0 + x1);
        let d0 = math::abs(a.cdf(x0) - b.cdf(x0));
        let dm = math::abs(a.cdf(mid) - b.cdf(mid));
        let d1 = math::abs(a.cdf_left(x1) - b.cdf_left(x1));
        total += (x1 - x0) * (d0 + 4.0 * dm + d1) / 6.0;
    }
    total
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF with
/// atoms: ties are collapsed into runs, the run top compares against the
/// CDF and the run bottom against its left limit.
pub fn ks_statistic<F, G>(sorted: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        d = d.max(math::abs(cdf(v) - j as f64 / n));
        d = d.max(math::abs(cdf_left(v) - i as f64 / n));
        i = j;
    }
    d
}

/// Degenerate-rate limits. With `lambda_fast` the kernel must approach the
/// waiting-free process (waits vanish); with `lambda_slow` it must
/// approach the flow frozen at every waiting point (waits last forever).
pub fn check_limits(
    spec: &MarkovSpec,
    x0: f64,
    t: f64,
    lambda_fast: f64,
    lambda_slow: f64,
    tol: f64,
) -> Result<Report> {
    let with_rates = |lam: f64| -> MarkovSpec {
        let mut s = spec.clone();
        for w in &mut s.waiting {
            w.rate = lam;
        }
        s
    };
    let fast = MarkovProcess::new(with_rates(lambda_fast))?;
    let slow = MarkovProcess::new(with_rates(lambda_slow))?;

    let moving_spec = MarkovSpec {
        waiting: Vec::new(),
        ..spec.clone()
    };
    let moving = MarkovProcess::new(moving_spec)?;

    let grid_tol = 1e-5;
    let mut report = Report::new("limits", tol);

    let k_fast = fast.kernel_with_grid(x0, t, grid_tol)?;
    let k_moving = moving.kernel_with_grid(x0, t, grid_tol)?;
    report.record(
        format!("lambda={lambda_fast} vs waiting-free flow"),
        w1_distance(&k_fast, &k_moving),
    );

    let k_slow = slow.kernel_with_grid(x0, t, grid_tol)?;
    let k_frozen = frozen_target(&moving, spec, x0, t)?;
    report.record(
        format!("lambda={lambda_slow} vs frozen flow"),
        w1_distance(&k_slow, &k_frozen),
    );
    Ok(report)
}

/// The zero-rate limit: deterministic motion frozen at the first waiting
/// point it reaches (and at `x0` itself when `x0` is a waiting point).
fn frozen_target(
    moving: &MarkovProcess,
    spec: &MarkovSpec,
    x0: f64,
    t: f64,
) -> Result<TransitionKernel> {
    let is_wait = |x: f64| spec.waiting.iter().any(|w| math::abs(w.x - x) <= ZERO_TOL);
    if is_wait(x0) {
        return Ok(TransitionKernel::dirac(x0));
    }
    let flow = moving.det_flow();
    let end_in = |dir: Dir| -> Result<f64> {
        let reach = flow.flow_dir(x0, t, dir)?;
        let blocking = spec
            .waiting
            .iter()
            .map(|w| w.x)
            .filter(|&w| match dir {
                Dir::Up => w > x0 + ZERO_TOL && w <= reach + ZERO_TOL,
                Dir::Down => w < x0 - ZERO_TOL && w >= reach - ZERO_TOL,
            })
            .fold(
                match dir {
                    Dir::Up => f64::INFINITY,
                    Dir::Down => f64::NEG_INFINITY,
                },
                |best, w| match dir {
                    Dir::Up => best.min(w),
                    Dir::Down => best.max(w),
                },
            );
        Ok(if blocking.is_finite() {
            blocking
        } else {
            reach
        })
    };
    let up = flow.domains().increase.iter().any(|iv| iv.contains(x0));
    let down = flow.domains().decrease.iter().any(|iv| iv.contains(x0));
    match (up, down) {
        (false, false) => Ok(TransitionKernel::dirac(x0)),
        (true, false) => Ok(TransitionKernel::dirac(end_in(Dir::Up)?)),
        (false, true) => Ok(TransitionKernel::dirac(end_in(Dir::Down)?)),
        (true, true) => {
            let theta = lookup_theta(spec, x0)?;
            let up_end = end_in(Dir::Up)?;
            let down_end = end_in(Dir::Down)?;
            let mut atoms = vec![(down_end, 1.0 - theta), (up_end, theta)];
            atoms.retain(|&(_, m)| m > 0.0);
            Ok(TransitionKernel {
                atoms,
                smooth_cdf: Vec::new(),
                support: (down_end, up_end),
            })
        }
    }
}

fn lookup_theta(spec: &MarkovSpec, x: f64) -> Result<f64> {
    spec.theta
        .iter()
        .find(|(p, _)| math::abs(p - x) <= 1e-9 * (1.0 + math::abs(x)))
        .map(|&(_, th)| th)
        .ok_or(Error::ThetaMissing { x })
}
