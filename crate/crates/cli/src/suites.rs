//! Verification suites behind `discflow verify`. Each suite builds its
//! test tuples deterministically from the spec (and a seed where
//! randomization is called for) and returns the underlying reports.

use anyhow::{bail, Result};
use discflow_core::flow::Dir;
use discflow_core::sampler;
use discflow_core::verify::{
    self, check_chapman_kolmogorov, check_closure, check_limits, check_semigroup, Report, TestRng,
};

use crate::schema::LoadedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ChapmanKolmogorov,
    Semigroup,
    Limits,
    Closure,
}

impl std::str::FromStr for Suite {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ck" => Suite::ChapmanKolmogorov,
            "semigroup" => Suite::Semigroup,
            "limits" => Suite::Limits,
            "closure" => Suite::Closure,
            other => bail!("unknown suite `{other}` (expected ck|semigroup|limits|closure)"),
        })
    }
}

/// Default initial point: the first waiting point if any, else the window
/// midpoint.
fn default_x0(spec: &LoadedSpec) -> f64 {
    spec.waiting
        .first()
        .map(|w| w.x)
        .unwrap_or(0.5 * (spec.window_x.0 + spec.window_x.1))
}

pub fn run_suite(
    spec: &LoadedSpec,
    suite: Suite,
    seed: u64,
    tol: Option<f64>,
) -> Result<Vec<Report>> {
    match suite {
        Suite::ChapmanKolmogorov => ck_suite(spec, tol.unwrap_or(1e-4)),
        Suite::Semigroup => semigroup_suite(spec, seed, tol.unwrap_or(1e-8)),
        Suite::Limits => limits_suite(spec, tol.unwrap_or(1e-2)),
        Suite::Closure => closure_suite(spec, seed, tol.unwrap_or(1e-6)),
    }
}

fn ck_suite(spec: &LoadedSpec, tol: f64) -> Result<Vec<Report>> {
    let proc = spec.markov_process()?;
    let x0 = default_x0(spec);
    let mut reports = Vec::new();
    for &(s, t) in &[(0.25, 0.25), (0.5, 0.5), (0.5, 1.0), (1.0, 0.5)] {
        let flow = proc.det_flow();
        let hi = flow
            .flow_dir(x0, s + t, Dir::Up)
            .unwrap_or(x0 + spec.f.bound() * (s + t));
        let lo = flow.flow_dir(x0, s + t, Dir::Down).unwrap_or(x0);
        let mut sets = verify::dyadic_intervals(lo, hi.max(lo + 1e-6), 3);
        for (z, _) in proc.atoms(x0, s + t)? {
            sets.push((z - 1e-7, z + 1e-7));
        }
        reports.push(check_chapman_kolmogorov(&proc, x0, s, t, &sets, tol)?);
    }
    Ok(reports)
}

fn semigroup_suite(spec: &LoadedSpec, seed: u64, tol: f64) -> Result<Vec<Report>> {
    let flow = spec.det_flow()?;
    let mut rng = TestRng::new(seed);
    let (xlo, xhi) = spec.window_x;
    let (_, tmax) = spec.window_t;
    let triples: Vec<(f64, f64, f64)> = (0..200)
        .map(|_| {
            (
                rng.uniform(xlo, xhi),
                rng.uniform(0.0, 0.5 * tmax),
                rng.uniform(0.0, 0.5 * tmax),
            )
        })
        .collect();
    Ok(vec![check_semigroup(&flow, &triples, tol)?])
}

fn limits_suite(spec: &LoadedSpec, tol: f64) -> Result<Vec<Report>> {
    if spec.waiting.is_empty() {
        bail!("the limits suite needs a waiting set");
    }
    let x0 = default_x0(spec);
    Ok(vec![check_limits(
        &spec.markov_spec(),
        x0,
        1.0,
        1e3,
        1e-3,
        tol,
    )?])
}

/// Uniform-limit closure: sample paths under rates scaled by 2^-n share
/// one seed, so the waits lengthen monotonically and the paths converge
/// to the flow frozen at the waiting points.
fn closure_suite(spec: &LoadedSpec, seed: u64, tol: f64) -> Result<Vec<Report>> {
    if spec.waiting.is_empty() {
        bail!("the closure suite needs a waiting set");
    }
    let x0 = default_x0(spec);
    let horizon = (spec.window_t.1 - spec.window_t.0).clamp(1.0, 8.0);
    let grid: Vec<f64> = (0..=256).map(|k| horizon * k as f64 / 256.0).collect();

    let mut paths = Vec::new();
    for n in 0..7 {
        let mut mspec = spec.markov_spec();
        for w in &mut mspec.waiting {
            w.rate *= 0.5f64.powi(n);
        }
        let proc = discflow_core::kernel::MarkovProcess::new(mspec)?;
        let path = sampler::sample_path(&proc, x0, horizon, seed)?;
        paths.push(
            grid.iter()
                .map(|&t| (t, path.state_at(t)))
                .collect::<Vec<_>>(),
        );
    }
    // the zero-rate limit freezes at the first waiting point reached
    let frozen: Vec<(f64, f64)> = grid.iter().map(|&t| (t, x0)).collect();
    Ok(vec![check_closure(&spec.f, &paths, &frozen, tol)?])
}
