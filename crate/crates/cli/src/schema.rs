//! Problem-spec file format (JSON) and its validation against the
//! structural requirements: the right-hand side must pass the regulated
//! no-jamming checks, stop and waiting points must be zeros, the measure
//! must live on the zero set, and every branch point needs a branch
//! selection or an upward probability.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use discflow_core::cantor::CantorGaps;
use discflow_core::flow::{DetFlow, FlowSpec};
use discflow_core::kernel::{MarkovProcess, MarkovSpec, WaitingPoint};
use discflow_core::measure::{AcComponent, AtomlessMeasure, Density, IfsComponent};
use discflow_core::regulated::{PieceForm, RegulatedFn};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("schema error at `{key}`: {reason}")]
    Schema { key: String, reason: String },
    #[error("semantic error ({rule}): {detail}")]
    Semantic { rule: String, detail: String },
}

/// All problems found while loading a spec file.
#[derive(Debug, Error)]
pub struct SpecErrors(pub Vec<SpecError>);

impl std::fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.0 {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", content = "params", rename_all = "snake_case")]
pub enum PieceDto {
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    PowerLaw {
        anchor: f64,
        coeff: f64,
        exponent: f64,
        sign: i8,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
    Cantor {
        ratio: f64,
        exponent: f64,
        coeff: f64,
        sign: i8,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FunctionDto {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<PieceDto>,
    pub values: Vec<f64>,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accumulation_points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", content = "params", rename_all = "snake_case")]
pub enum DensityDto {
    Constant { value: f64 },
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AcDto {
    pub interval: [f64; 2],
    pub density: DensityDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IfsDto {
    pub support: [f64; 2],
    pub ratio: f64,
    pub weights: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct MeasureDto {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ac: Vec<AcDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ifs: Vec<IfsDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WaitingDto {
    pub points: Vec<f64>,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct BranchingDto {
    pub points: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WindowDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TolerancesDto {
    #[serde(default = "default_quad_tol")]
    pub quad: f64,
    #[serde(default = "default_mass_tol")]
    pub mass: f64,
    #[serde(default = "default_grid_tol")]
    pub kernel_grid: f64,
}

fn default_quad_tol() -> f64 {
    discflow_core::QUAD_ABS_TOL
}
fn default_mass_tol() -> f64 {
    discflow_core::MASS_TOL
}
fn default_grid_tol() -> f64 {
    discflow_core::KERNEL_GRID_TOL
}

impl Default for TolerancesDto {
    fn default() -> Self {
        TolerancesDto {
            quad: default_quad_tol(),
            mass: default_mass_tol(),
            kernel_grid: default_grid_tol(),
        }
    }
}

/// The on-disk problem description. `export` re-emits it canonically.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemSpec {
    pub function: FunctionDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop_set: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waiting: Option<WaitingDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<BranchingDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesDto>,
}

/// A parsed and fully cross-validated spec, ready to drive the engines.
#[derive(Debug)]
pub struct LoadedSpec {
    pub raw: ProblemSpec,
    pub f: RegulatedFn,
    pub mu: AtomlessMeasure,
    pub stop_set: Vec<f64>,
    pub waiting: Vec<WaitingPoint>,
    pub phi: Vec<(f64, i8)>,
    pub theta: Vec<(f64, f64)>,
    pub window_x: (f64, f64),
    pub window_t: (f64, f64),
    pub tolerances: TolerancesDto,
}

impl LoadedSpec {
    pub fn flow_spec(&self) -> FlowSpec {
        FlowSpec {
            f: self.f.clone(),
            mu: self.mu.clone(),
            stop_set: self.stop_set.clone(),
            phi: self.phi.clone(),
        }
    }

    pub fn markov_spec(&self) -> MarkovSpec {
        MarkovSpec {
            f: self.f.clone(),
            mu: self.mu.clone(),
            stop_set: self.stop_set.clone(),
            waiting: self.waiting.clone(),
            theta: self.theta.clone(),
        }
    }

    pub fn det_flow(&self) -> anyhow::Result<DetFlow> {
        Ok(DetFlow::new(self.flow_spec())?)
    }

    pub fn markov_process(&self) -> anyhow::Result<MarkovProcess> {
        Ok(MarkovProcess::new(self.markov_spec())?)
    }
}

pub fn parse_spec(path: &Path) -> Result<LoadedSpec, SpecErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        SpecErrors(vec![SpecError::Schema {
            key: path.display().to_string(),
            reason: e.to_string(),
        }])
    })?;
    let raw: ProblemSpec = serde_json::from_str(&text).map_err(|e| {
        SpecErrors(vec![SpecError::Schema {
            key: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            reason: e.to_string(),
        }])
    })?;
    validate(raw)
}

fn piece_from_dto(dto: &PieceDto) -> PieceForm {
    match dto {
        PieceDto::Constant { value } => PieceForm::Constant(*value),
        PieceDto::Affine { slope, intercept } => PieceForm::Affine {
            slope: *slope,
            intercept: *intercept,
        },
        PieceDto::PowerLaw {
            anchor,
            coeff,
            exponent,
            sign,
        } => PieceForm::PowerLaw {
            anchor: *anchor,
            coeff: *coeff,
            exponent: *exponent,
            sign: *sign,
        },
        PieceDto::Polynomial { coeffs } => PieceForm::Polynomial(coeffs.clone()),
        PieceDto::Cantor {
            ratio,
            exponent,
            coeff,
            sign,
        } => PieceForm::Cantor(CantorGaps {
            ratio: *ratio,
            exponent: *exponent,
            coeff: *coeff,
            sign: *sign,
        }),
    }
}

/// Cross-validate a deserialized spec, collecting every violation.
pub fn validate(raw: ProblemSpec) -> Result<LoadedSpec, SpecErrors> {
    let mut errors: Vec<SpecError> = Vec::new();

    // range checks that are shape-level rather than semantic
    if let Some(br) = &raw.branching {
        if let Some(phi) = &br.phi {
            if phi.len() != br.points.len() {
                errors.push(SpecError::Schema {
                    key: "branching.phi".into(),
                    reason: format!("{} entries for {} points", phi.len(), br.points.len()),
                });
            }
            for (i, v) in phi.iter().enumerate() {
                if *v != 1 && *v != -1 {
                    errors.push(SpecError::Schema {
                        key: format!("branching.phi[{i}]"),
                        reason: format!("{v} is not ±1"),
                    });
                }
            }
        }
        if let Some(theta) = &br.theta {
            if theta.len() != br.points.len() {
                errors.push(SpecError::Schema {
                    key: "branching.theta".into(),
                    reason: format!("{} entries for {} points", theta.len(), br.points.len()),
                });
            }
            for (i, v) in theta.iter().enumerate() {
                if !(0.0..=1.0).contains(v) {
                    errors.push(SpecError::Schema {
                        key: format!("branching.theta[{i}]"),
                        reason: format!("{v} is outside [0, 1]"),
                    });
                }
            }
        }
    }
    if let Some(tols) = &raw.tolerances {
        for (key, v) in [
            ("tolerances.quad", tols.quad),
            ("tolerances.mass", tols.mass),
            ("tolerances.kernel_grid", tols.kernel_grid),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errors.push(SpecError::Schema {
                    key: key.into(),
                    reason: format!("{v} must be positive and finite"),
                });
            }
        }
    }
    if let Some(w) = &raw.waiting {
        if w.points.len() != w.rates.len() {
            errors.push(SpecError::Schema {
                key: "waiting.rates".into(),
                reason: format!("{} rates for {} points", w.rates.len(), w.points.len()),
            });
        }
        for (i, r) in w.rates.iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                errors.push(SpecError::Schema {
                    key: format!("waiting.rates[{i}]"),
                    reason: format!("rate {r} must be positive and finite"),
                });
            }
        }
    }
    if !errors.is_empty() {
        return Err(SpecErrors(errors));
    }

    let pieces: Vec<PieceForm> = raw.function.pieces.iter().map(piece_from_dto).collect();
    let mut f = match RegulatedFn::new(
        raw.function.breakpoints.clone(),
        pieces,
        raw.function.values.clone(),
        raw.function.bound,
    ) {
        Ok(f) => f,
        Err(e) => {
            return Err(SpecErrors(vec![SpecError::Schema {
                key: "function".into(),
                reason: e.to_string(),
            }]))
        }
    };
    if !raw.function.accumulation_points.is_empty() {
        f = f.with_accumulation_points(raw.function.accumulation_points.clone());
    }

    let report = f.validate();
    for v in &report.violations {
        errors.push(SpecError::Semantic {
            rule: v.rule.to_string(),
            detail: format!("at {}: {}", v.witness, v.detail),
        });
    }
    if !errors.is_empty() {
        return Err(SpecErrors(errors));
    }

    let mu = match &raw.measure {
        None => AtomlessMeasure::zero(),
        Some(m) => AtomlessMeasure {
            ac: m
                .ac
                .iter()
                .map(|c| AcComponent {
                    lo: c.interval[0],
                    hi: c.interval[1],
                    density: match &c.density {
                        DensityDto::Constant { value } => Density::Constant(*value),
                        DensityDto::Polynomial { coeffs } => Density::Polynomial(coeffs.clone()),
                    },
                })
                .collect(),
            ifs: m
                .ifs
                .iter()
                .map(|c| IfsComponent {
                    lo: c.support[0],
                    hi: c.support[1],
                    ratio: c.ratio,
                    weights: c.weights.clone(),
                    total_mass: c.mass,
                })
                .collect(),
        },
    };

    let waiting: Vec<WaitingPoint> = raw
        .waiting
        .as_ref()
        .map(|w| {
            w.points
                .iter()
                .zip(w.rates.iter())
                .map(|(&x, &rate)| WaitingPoint { x, rate })
                .collect()
        })
        .unwrap_or_default();

    let (phi, theta) = match &raw.branching {
        None => (Vec::new(), Vec::new()),
        Some(br) => (
            br.phi
                .as_ref()
                .map(|v| br.points.iter().copied().zip(v.iter().copied()).collect())
                .unwrap_or_default(),
            br.theta
                .as_ref()
                .map(|v| br.points.iter().copied().zip(v.iter().copied()).collect())
                .unwrap_or_default(),
        ),
    };

    // semantic cross-checks through the engines
    let flow = match DetFlow::new(FlowSpec {
        f: f.clone(),
        mu: mu.clone(),
        stop_set: raw.stop_set.clone(),
        phi: phi.clone(),
    }) {
        Ok(flow) => flow,
        Err(e) => {
            return Err(SpecErrors(vec![SpecError::Semantic {
                rule: semantic_rule(&e),
                detail: e.to_string(),
            }]))
        }
    };
    if let Err(e) = MarkovProcess::new(MarkovSpec {
        f: f.clone(),
        mu: mu.clone(),
        stop_set: raw.stop_set.clone(),
        waiting: waiting.clone(),
        theta: theta.clone(),
    }) {
        errors.push(SpecError::Semantic {
            rule: semantic_rule(&e),
            detail: e.to_string(),
        });
    }

    // every branch point must be covered by whichever maps are present
    let covered = |pts: &[(f64, f64)], phis: &[(f64, i8)], x: f64| {
        pts.iter().any(|(p, _)| (p - x).abs() <= 1e-9)
            || phis.iter().any(|(p, _)| (p - x).abs() <= 1e-9)
    };
    for &bp in flow.branch_points() {
        if !covered(&theta, &phi, bp) {
            errors.push(SpecError::Semantic {
                rule: "branch-point-uncovered".into(),
                detail: format!(
                    "branch point {bp} needs a phi or theta entry in the branching block"
                ),
            });
        }
    }

    if !errors.is_empty() {
        return Err(SpecErrors(errors));
    }

    let window_x = raw
        .window
        .as_ref()
        .and_then(|w| w.x)
        .map(|[a, b]| (a, b))
        .unwrap_or((-10.0, 10.0));
    let window_t = raw
        .window
        .as_ref()
        .and_then(|w| w.t)
        .map(|[a, b]| (a, b))
        .unwrap_or((0.0, 10.0));
    let tolerances = raw.tolerances.clone().unwrap_or_default();

    Ok(LoadedSpec {
        f,
        mu,
        stop_set: raw.stop_set.clone(),
        waiting,
        phi,
        theta,
        window_x,
        window_t,
        tolerances,
        raw,
    })
}

fn semantic_rule(e: &discflow_core::Error) -> String {
    use discflow_core::Error::*;
    match e {
        StopPointNotZero { .. } => "stop-point-not-zero".into(),
        WaitPointNotZero { .. } => "waiting-point-not-zero".into(),
        NonpositiveRate { .. } => "nonpositive-rate".into(),
        BranchStopConflict { .. } => "branch-stop-conflict".into(),
        MeasureNotSupported { .. } => "measure-not-on-zero-set".into(),
        MeasureInvalid(_) => "measure-invalid".into(),
        FunctionInvalid { rule, .. } => (*rule).into(),
        _ => "invalid-spec".into(),
    }
}
