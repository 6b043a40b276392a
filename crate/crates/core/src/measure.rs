//! Positive atomless measures supported on the zero set of `f`.
//!
//! A measure is a sum of absolutely continuous components (interval plus
//! density) and iterated-function-system components (self-similar measures
//! such as the classical Cantor measure). Mass queries answer to a caller
//! tolerance: AC parts integrate exactly, IFS parts recurse until the
//! straddling cells are below tolerance.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::poly;
use crate::zeroes::ZeroStructure;

/// Density of an absolutely continuous component.
#[derive(Debug, Clone)]
pub enum Density {
    Constant(f64),
    /// Coefficients ordered low degree first.
    Polynomial(Vec<f64>),
}

impl Density {
    fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Density::Constant(c) => c * (b - a),
            Density::Polynomial(coeffs) => {
                let anti: Vec<f64> = core::iter::once(0.0)
                    .chain(coeffs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64))
                    .collect();
                poly::eval(&anti, b) - poly::eval(&anti, a)
            }
        }
    }

    fn min_on(&self, a: f64, b: f64) -> f64 {
        match self {
            Density::Constant(c) => *c,
            Density::Polynomial(coeffs) => {
                let mut m = poly::eval(coeffs, a).min(poly::eval(coeffs, b));
                for r in poly::roots_in(&poly::derivative(coeffs), a, b) {
                    m = m.min(poly::eval(coeffs, r));
                }
                m
            }
        }
    }
}

/// Absolutely continuous component: `density` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct AcComponent {
    pub lo: f64,
    pub hi: f64,
    pub density: Density,
}

/// Self-similar component: the attractor of `branches` equally spaced
/// contractions of ratio `ratio` on `[lo, hi]`, with one weight per branch.
#[derive(Debug, Clone)]
pub struct IfsComponent {
    pub lo: f64,
    pub hi: f64,
    pub ratio: f64,
    pub weights: Vec<f64>,
    pub total_mass: f64,
}

impl IfsComponent {
    /// The classical Cantor measure scaled to `mass`.
    pub fn cantor(lo: f64, hi: f64, mass: f64) -> Self {
        IfsComponent {
            lo,
            hi,
            ratio: 1.0 / 3.0,
            weights: alloc::vec![0.5, 0.5],
            total_mass: mass,
        }
    }

    fn child_bounds(&self, lo: f64, w: f64, i: usize) -> (f64, f64) {
        let m = self.weights.len();
        let offset = if m == 1 {
            0.0
        } else {
            (1.0 - self.ratio) * (i as f64) / (m as f64 - 1.0)
        };
        (lo + offset * w, lo + offset * w + self.ratio * w)
    }

    /// Mass of `[a, b]` within `err` absolute error; straddling cells are
    /// split until their mass falls below `err / 4`, with a depth cap of 64
    /// (cells prune at half mass, which the geometric decay makes harmless).
    fn mass(&self, a: f64, b: f64, err: f64) -> f64 {
        self.cell_mass(self.lo, self.hi - self.lo, self.total_mass, a, b, err, 64)
    }

    #[allow(clippy::too_many_arguments)]
    fn cell_mass(&self, lo: f64, w: f64, mass: f64, a: f64, b: f64, err: f64, depth: u32) -> f64 {
        if b < lo || a > lo + w {
            return 0.0;
        }
        if a <= lo && b >= lo + w {
            return mass;
        }
        if mass <= 0.25 * err || depth == 0 {
            // pruned straddling cell: attribute half, off by at most mass/2
            return 0.5 * mass;
        }
        let mut acc = 0.0;
        for (i, &p) in self.weights.iter().enumerate() {
            let (clo, chi) = self.child_bounds(lo, w, i);
            acc += self.cell_mass(clo, chi - clo, mass * p, a, b, err, depth - 1);
        }
        acc
    }

    fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m < 2 {
            return Err(Error::MeasureInvalid(
                "an IFS needs at least two branches".into(),
            ));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0 / m as f64) {
            return Err(Error::MeasureInvalid(format!(
                "ratio {} must lie in (0, 1/{m}] so branches do not overlap",
                self.ratio
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::MeasureInvalid(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        if self.weights.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::MeasureInvalid(
                "weights must lie strictly in (0, 1); a unit weight makes an atom".into(),
            ));
        }
        if !(self.total_mass >= 0.0 && self.total_mass.is_finite()) || self.lo >= self.hi {
            return Err(Error::MeasureInvalid("bad support or mass".into()));
        }
        Ok(())
    }
}

/// Positive atomless measure: AC components plus IFS components.
#[derive(Debug, Clone, Default)]
pub struct AtomlessMeasure {
    pub ac: Vec<AcComponent>,
    pub ifs: Vec<IfsComponent>,
}

impl AtomlessMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == 0.0
    }

    pub fn total_mass(&self) -> f64 {
        let ac: f64 = self.ac.iter().map(|c| c.density.integral(c.lo, c.hi)).sum();
        let ifs: f64 = self.ifs.iter().map(|c| c.total_mass).sum();
        ac + ifs
    }

    /// Check component shapes: densities nonnegative, IFS parameters sane.
    pub fn validate(&self) -> Result<()> {
        for c in &self.ac {
            if c.lo >= c.hi || !c.lo.is_finite() || !c.hi.is_finite() {
                return Err(Error::MeasureInvalid(format!(
                    "AC component on [{}, {}] is not a bounded interval",
                    c.lo, c.hi
                )));
            }
            if c.density.min_on(c.lo, c.hi) < 0.0 {
                return Err(Error::MeasureInvalid(format!(
                    "density is negative somewhere on [{}, {}]",
                    c.lo, c.hi
                )));
            }
        }
        for c in &self.ifs {
            c.validate()?;
        }
        Ok(())
    }

    /// Every component must sit inside the zero set: AC components need a
    /// flat interval, IFS components a flat interval or a matching
    /// Cantor-type component of the zero structure.
    pub fn check_support(&self, zeroes: &ZeroStructure) -> Result<()> {
        for c in &self.ac {
            if !zeroes.interval_contains(c.lo, c.hi) {
                return Err(Error::MeasureNotSupported { lo: c.lo, hi: c.hi });
            }
        }
        for c in &self.ifs {
            let inside_flat = zeroes.interval_contains(c.lo, c.hi);
            let matches_cantor = zeroes.cantor.iter().any(|k| {
                (k.lo - c.lo).abs() <= 1e-12
                    && (k.hi - c.hi).abs() <= 1e-12
                    && (k.gaps.ratio - c.ratio).abs() <= 1e-12
                    && c.weights.len() == 2
            });
            if !inside_flat && !matches_cantor {
                return Err(Error::MeasureNotSupported { lo: c.lo, hi: c.hi });
            }
        }
        Ok(())
    }

    /// `μ([a, b])` within `tol`.
    pub fn mass(&self, a: f64, b: f64, tol: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        for c in &self.ac {
            let (lo, hi) = (a.max(c.lo), b.min(c.hi));
            if hi > lo {
                acc += c.density.integral(lo, hi);
            }
        }
        let per = tol / self.ifs.len().max(1) as f64;
        for c in &self.ifs {
            acc += c.mass(a, b, per);
        }
        acc
    }

    /// `μ((-∞, x])` within `tol`; continuous and nondecreasing in `x`.
    pub fn cdf(&self, x: f64, tol: f64) -> f64 {
        let lo = self
            .ac
            .iter()
            .map(|c| c.lo)
            .chain(self.ifs.iter().map(|c| c.lo))
            .fold(f64::INFINITY, f64::min);
        if !lo.is_finite() || x <= lo {
            return 0.0;
        }
        self.mass(lo, x, tol)
    }

    /// Scale every component mass by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for comp in &mut out.ac {
            comp.density = match &comp.density {
                Density::Constant(d) => Density::Constant(d * c),
                Density::Polynomial(p) => Density::Polynomial(p.iter().map(|&q| q * c).collect()),
            };
        }
        for comp in &mut out.ifs {
            comp.total_mass *= c;
        }
        out
    }
}
