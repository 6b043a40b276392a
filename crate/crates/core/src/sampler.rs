//! Seeded Monte Carlo sample paths and empirical kernels.
//!
//! Per-path generators are derived from the master seed by a counter-based
//! splitting scheme, so path `i` is reproducible in isolation and batches
//! merge by concatenation regardless of execution order.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::flow::Dir;
use crate::kernel::{MarkovProcess, TransitionKernel, WaitingPoint};
use crate::ZERO_TOL;

/// Samples recorded per motion leg.
const LEG_SAMPLES: usize = 512;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stream of uniforms and exponentials for one path.
pub struct PathRng {
    rng: ChaCha12Rng,
}

impl PathRng {
    /// Generator for path `index` under `master`; distinct indices give
    /// independent streams.
    pub fn for_path(master: u64, index: u64) -> Self {
        let mut state = master ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
        }
        PathRng {
            rng: ChaCha12Rng::from_seed(seed),
        }
    }

    /// Uniform in (0, 1].
    fn u01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        -crate::math::ln(self.u01()) / rate
    }

    fn happens(&mut self, p: f64) -> bool {
        self.u01() <= p
    }
}

/// One waiting episode or one monotone motion leg.
#[derive(Debug, Clone)]
pub enum PathSegment {
    Wait {
        enter: f64,
        leave: f64,
        at: f64,
    },
    Motion {
        /// `(time, state)` samples, ascending in time.
        samples: Vec<(f64, f64)>,
    },
}

/// A sampled trajectory: waiting episodes at waiting points interleaved
/// with monotone motion legs, plus the branch choice if one was made.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub seed: u64,
    pub path_index: u64,
    pub x0: f64,
    pub horizon: f64,
    pub dir: Option<Dir>,
    /// `(branch point, ±1)` when the path started at a branch point.
    pub branch_choice: Option<(f64, i8)>,
    pub segments: Vec<PathSegment>,
    pub final_state: f64,
}

impl SamplePath {
    /// State at time `t ∈ [0, horizon]` from the recorded segments
    /// (linear interpolation inside motion legs).
    pub fn state_at(&self, t: f64) -> f64 {
        let mut last = self.x0;
        for seg in &self.segments {
            match seg {
                PathSegment::Wait { enter, leave, at } => {
                    if t >= *enter && t <= *leave {
                        return *at;
                    }
                    if t < *enter {
                        return last;
                    }
                    last = *at;
                }
                PathSegment::Motion { samples } => {
                    if let (Some(&(t0, _)), Some(&(t1, x1))) = (samples.first(), samples.last()) {
                        if t >= t0 && t <= t1 {
                            let i = samples.partition_point(|&(s, _)| s <= t);
                            if i == 0 {
                                return samples[0].1;
                            }
                            if i >= samples.len() {
                                return x1;
                            }
                            let (ta, xa) = samples[i - 1];
                            let (tb, xb) = samples[i];
                            return if tb == ta {
                                xb
                            } else {
                                xa + (xb - xa) * (t - ta) / (tb - ta)
                            };
                        }
                        if t < t0 {
                            return last;
                        }
                        last = x1;
                    }
                }
            }
        }
        last
    }

    /// Whether the recorded states are monotone in time.
    pub fn is_monotone(&self) -> bool {
        let mut states = Vec::new();
        for seg in &self.segments {
            match seg {
                PathSegment::Wait { at, .. } => states.push(*at),
                PathSegment::Motion { samples } => states.extend(samples.iter().map(|&(_, x)| x)),
            }
        }
        let up = states.windows(2).all(|w| w[0] <= w[1] + 1e-12);
        let down = states.windows(2).all(|w| w[0] >= w[1] - 1e-12);
        up || down
    }

    /// Waiting episodes `(enter, leave, location)` clipped to the horizon.
    pub fn events(&self) -> Vec<(f64, f64, f64)> {
        self.segments
            .iter()
            .filter_map(|seg| match seg {
                PathSegment::Wait { enter, leave, at } => {
                    Some((*enter, leave.min(self.horizon), *at))
                }
                _ => None,
            })
            .collect()
    }
}

enum Step {
    Done(f64),
    Continue,
}

type Started<'a> = Option<(Walk<'a>, Option<(f64, i8)>)>;

/// Shared event walk: every random draw happens in crossing order, so the
/// full-path recorder and the single-time evaluator consume identical
/// streams.
struct Walk<'a> {
    proc: &'a MarkovProcess,
    dir: Dir,
    boundary: f64,
    waits: Vec<WaitingPoint>,
    next_wait: usize,
    t: f64,
    x: f64,
}

impl<'a> Walk<'a> {
    fn start(proc: &'a MarkovProcess, x0: f64, rng: &mut PathRng) -> Result<Started<'a>> {
        let flow = proc.det_flow();
        let up = flow
            .domains()
            .increase
            .iter()
            .find(|iv| iv.contains(x0))
            .copied();
        let down = flow
            .domains()
            .decrease
            .iter()
            .find(|iv| iv.contains(x0))
            .copied();
        let (dir, boundary, branch) = match (up, down) {
            (None, None) => return Ok(None),
            (Some(iv), None) => (Dir::Up, iv.hi, None),
            (None, Some(iv)) => (Dir::Down, iv.lo, None),
            (Some(ivu), Some(ivd)) => {
                let theta = proc.theta_at(x0)?;
                if rng.happens(theta) {
                    (Dir::Up, ivu.hi, Some((x0, 1i8)))
                } else {
                    (Dir::Down, ivd.lo, Some((x0, -1i8)))
                }
            }
        };
        let mut waits: Vec<WaitingPoint> = proc
            .waiting()
            .iter()
            .copied()
            .filter(|w| match dir {
                Dir::Up => w.x >= x0 && w.x < boundary - ZERO_TOL,
                Dir::Down => w.x <= x0 && w.x > boundary + ZERO_TOL,
            })
            .collect();
        if dir == Dir::Down {
            waits.reverse();
        }
        Ok(Some((
            Walk {
                proc,
                dir,
                boundary,
                waits,
                next_wait: 0,
                t: 0.0,
                x: x0,
            },
            branch,
        )))
    }

    fn at_wait(&self) -> Option<WaitingPoint> {
        self.waits
            .get(self.next_wait)
            .filter(|w| (w.x - self.x).abs() <= ZERO_TOL)
            .copied()
    }

    fn next_target(&self) -> f64 {
        self.waits
            .get(self.next_wait)
            .map(|w| w.x)
            .unwrap_or(self.boundary)
    }

    /// Advance one event; `on_wait`/`on_leg` observe the episode.
    fn step(
        &mut self,
        horizon: f64,
        rng: &mut PathRng,
        on_wait: &mut dyn FnMut(f64, f64, f64),
        on_leg: &mut dyn FnMut(f64, f64, f64, f64),
    ) -> Result<Step> {
        if let Some(w) = self.at_wait() {
            let y = rng.exponential(w.rate);
            on_wait(self.t, self.t + y, w.x);
            self.next_wait += 1;
            if self.t + y >= horizon {
                return Ok(Step::Done(self.x));
            }
            self.t += y;
            return Ok(Step::Continue);
        }
        let target = self.next_target();
        let dt = self
            .proc
            .det_flow()
            .time_to_reach(self.x, target, self.dir)
            .unwrap_or(f64::INFINITY);
        if !dt.is_finite() || self.t + dt >= horizon {
            let x_end = self
                .proc
                .det_flow()
                .flow_dir(self.x, horizon - self.t, self.dir)?;
            on_leg(self.t, self.x, horizon, x_end);
            return Ok(Step::Done(x_end));
        }
        on_leg(self.t, self.x, self.t + dt, target);
        self.t += dt;
        self.x = target;
        if (target - self.boundary).abs() <= ZERO_TOL {
            // saturated at the interval endpoint
            return Ok(Step::Done(target));
        }
        Ok(Step::Continue)
    }
}

/// Generate the sample path for `(master seed, path index)`; identical
/// arguments give bitwise-identical paths.
pub fn sample_path_indexed(
    proc: &MarkovProcess,
    x0: f64,
    horizon: f64,
    master: u64,
    index: u64,
) -> Result<SamplePath> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::BadArgument(
            "horizon must be positive and finite".into(),
        ));
    }
    let mut rng = PathRng::for_path(master, index);
    let mut segments = Vec::new();
    let flow = proc.det_flow();

    let started = Walk::start(proc, x0, &mut rng)?;
    let (mut walk, branch) = match started {
        None => {
            // no escape: the constant path, no events
            return Ok(SamplePath {
                seed: master,
                path_index: index,
                x0,
                horizon,
                dir: None,
                branch_choice: None,
                segments: Vec::new(),
                final_state: x0,
            });
        }
        Some(w) => w,
    };

    let dir = walk.dir;
    let final_state = loop {
        let mut wait_rec = None;
        let mut leg_rec = None;
        let step = walk.step(
            horizon,
            &mut rng,
            &mut |enter, leave, at| wait_rec = Some((enter, leave, at)),
            &mut |t0, xa, t1, _xb| leg_rec = Some((t0, xa, t1)),
        )?;
        if let Some((enter, leave, at)) = wait_rec {
            segments.push(PathSegment::Wait { enter, leave, at });
        }
        if let Some((t0, xa, t1)) = leg_rec {
            let mut samples = Vec::with_capacity(LEG_SAMPLES);
            for k in 0..LEG_SAMPLES {
                let t = t0 + (t1 - t0) * (k as f64) / (LEG_SAMPLES - 1) as f64;
                let x = flow.flow_dir(xa, t - t0, dir)?;
                samples.push((t, x));
            }
            segments.push(PathSegment::Motion { samples });
        }
        match step {
            Step::Done(x) => break x,
            Step::Continue => {}
        }
    };

    Ok(SamplePath {
        seed: master,
        path_index: index,
        x0,
        horizon,
        dir: Some(dir),
        branch_choice: branch,
        segments,
        final_state,
    })
}

/// Path 0 of the master seed.
pub fn sample_path(proc: &MarkovProcess, x0: f64, horizon: f64, seed: u64) -> Result<SamplePath> {
    sample_path_indexed(proc, x0, horizon, seed, 0)
}

/// State of path `(master, index)` at time `t` without recording; consumes
/// the random stream exactly like [`sample_path_indexed`] up to `t`.
pub fn sample_state(proc: &MarkovProcess, x0: f64, t: f64, master: u64, index: u64) -> Result<f64> {
    if t == 0.0 {
        return Ok(x0);
    }
    let mut rng = PathRng::for_path(master, index);
    let started = Walk::start(proc, x0, &mut rng)?;
    let (mut walk, _branch) = match started {
        None => return Ok(x0),
        Some(w) => w,
    };
    loop {
        match walk.step(t, &mut rng, &mut |_, _, _| {}, &mut |_, _, _, _| {})? {
            Step::Done(x) => return Ok(x),
            Step::Continue => {}
        }
    }
}

/// Terminal states of `n` independent paths, in path-index order.
pub fn sample_states(
    proc: &MarkovProcess,
    x0: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..n)
        .map(|i| sample_state(proc, x0, t, seed, i as u64))
        .collect()
}

/// Empirical kernel: exact repeats (waiting locations, saturation points)
/// collapse into atoms, the rest forms the continuous staircase.
pub fn empirical_kernel(
    proc: &MarkovProcess,
    x0: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<TransitionKernel> {
    if n_paths == 0 {
        return Err(Error::BadArgument("need at least one path".into()));
    }
    let mut states = sample_states(proc, x0, t, n_paths, seed)?;
    states.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = n_paths as f64;

    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut smooth: Vec<(f64, f64)> = Vec::new();
    let mut cum = 0.0;
    let mut i = 0;
    while i < states.len() {
        let mut j = i + 1;
        while j < states.len() && states[j] == states[i] {
            j += 1;
        }
        let mass = (j - i) as f64 / n;
        if j - i > 1 {
            atoms.push((states[i], mass));
        } else {
            cum += mass;
            smooth.push((states[i], cum));
        }
        i = j;
    }
    let support = (states[0], states[states.len() - 1]);
    Ok(TransitionKernel {
        atoms,
        smooth_cdf: smooth,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MarkovSpec;
    use crate::measure::AtomlessMeasure;
    use crate::regulated::{PieceForm, RegulatedFn};
    use alloc::vec;

    fn example_process(rate: f64) -> MarkovProcess {
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
                    sign: 1,
                },
                PieceForm::Constant(40.0),
            ],
            vec![40.0, 0.0, 40.0],
            40.0,
        )
        .unwrap();
        MarkovProcess::new(MarkovSpec {
            f,
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 0.0, rate }],
            theta: vec![],
        })
        .unwrap()
    }

    fn branching_process(theta: f64) -> MarkovProcess {
        let f = RegulatedFn::new(
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
        .unwrap();
        MarkovProcess::new(MarkovSpec {
            f,
            mu: AtomlessMeasure::zero(),
            stop_set: vec![],
            waiting: vec![WaitingPoint { x: 0.0, rate: 1.0 }],
            theta: vec![(0.0, theta)],
        })
        .unwrap()
    }

    #[test]
    fn identical_seeds_identical_paths() {
        let proc = example_process(1.0);
        let a = sample_path(&proc, 0.0, 3.0, 42).unwrap();
        let b = sample_path(&proc, 0.0, 3.0, 42).unwrap();
        assert_eq!(a.final_state.to_bits(), b.final_state.to_bits());
        assert_eq!(a.segments.len(), b.segments.len());
        let c = sample_path(&proc, 0.0, 3.0, 43).unwrap();
        assert_ne!(a.final_state.to_bits(), c.final_state.to_bits());
    }

    #[test]
    fn path_shape_wait_then_square() {
        let proc = example_process(1.0);
        let p = sample_path(&proc, 0.0, 5.0, 7).unwrap();
        let events = p.events();
        assert_eq!(events.len(), 1);
        let (enter, _leave, at) = events[0];
        assert_eq!(enter, 0.0);
        assert_eq!(at, 0.0);
        // after the wait the path is (t - Y)^2
        let y = match &p.segments[0] {
            PathSegment::Wait { leave, .. } => *leave,
            _ => panic!("first segment must be the wait"),
        };
        if y < 5.0 {
            let t = (y + 5.0) / 2.0;
            let x = p.state_at(t);
            let want = (t - y) * (t - y);
            assert!((x - want).abs() < 1e-4, "{x} vs {want}");
        }
        assert!(p.is_monotone());
    }

    #[test]
    fn state_matches_full_path() {
        let proc = branching_process(0.4);
        for seed in [1u64, 2, 3, 4, 5] {
            for idx in [0u64, 1, 9] {
                let p = sample_path_indexed(&proc, 0.0, 2.0, seed, idx).unwrap();
                let s = sample_state(&proc, 0.0, 2.0, seed, idx).unwrap();
                assert_eq!(p.final_state.to_bits(), s.to_bits());
            }
        }
    }

    #[test]
    fn dead_start_gives_constant_path() {
        let proc = MarkovProcess::new(MarkovSpec {
            f: example_process(1.0).spec().f.clone(),
            mu: AtomlessMeasure::zero(),
            stop_set: vec![0.0],
            waiting: vec![],
            theta: vec![],
        })
        .unwrap();
        let p = sample_path(&proc, 0.0, 4.0, 11).unwrap();
        assert_eq!(p.final_state, 0.0);
        assert!(p.events().is_empty());
        assert!(p.segments.is_empty());
    }

    #[test]
    fn empirical_atom_frequency_matches_holding_law() {
        let proc = example_process(1.0);
        let n = 20_000;
        let t = 1.0;
        let k = empirical_kernel(&proc, 0.0, t, n, 1234).unwrap();
        let p_hat = k.atom_mass_at(0.0);
        let p = (-t).exp();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() <= 3.0 * sigma, "{p_hat} vs {p}");
    }

    #[test]
    fn branch_frequency_matches_theta() {
        let proc = branching_process(0.3);
        let n = 20_000usize;
        let mut ups = 0usize;
        let mut moved = 0usize;
        for i in 0..n {
            let p = sample_path_indexed(&proc, 0.0, 2.0, 99, i as u64).unwrap();
            if p.final_state > 0.0 {
                ups += 1;
                moved += 1;
            } else if p.final_state < 0.0 {
                moved += 1;
            }
            if let Some((_, 1)) = p.branch_choice {
                assert!(p.final_state >= 0.0);
            }
        }
        // conditioned on having moved, upward share estimates theta
        let p_hat = ups as f64 / moved as f64;
        let sigma = (0.3 * 0.7 / moved as f64).sqrt();
        assert!((p_hat - 0.3).abs() <= 4.0 * sigma, "{p_hat}");
    }

    #[test]
    fn one_path_degenerate_ecdf() {
        let proc = example_process(1.0);
        let k = empirical_kernel(&proc, 0.0, 1.0, 1, 5).unwrap();
        assert!((k.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn waits_only_at_waiting_points() {
        let proc = branching_process(0.5);
        for i in 0..50 {
            let p = sample_path_indexed(&proc, -4.0, 3.0, 321, i).unwrap();
            for (_, _, at) in p.events() {
                assert!((at - 0.0).abs() <= 1e-12);
            }
        }
    }
}
