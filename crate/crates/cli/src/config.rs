//! Experiment configuration files.
//!
//! Configs are flat TOML documents with dotted keys, one setting per line:
//!
//! ```toml
//! set.kind = "ball"
//! set.center = [0.0, 0.0]
//! set.radius = 1.0
//! schedule.alpha = 0.5
//! ```

use std::fs;
use std::path::PathBuf;

use projflow_core::analysis::THEOREM_NAMES;
use projflow_core::{
    make_power_objective, ConvexSet, FlowProblem, Numerics, Objective, Point, Schedule, System,
};
use serde::Deserialize;
use thiserror::Error;

use crate::presets;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`; available: {1}")]
    UnknownPreset(String, String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<projflow_core::Error> for ConfigError {
    fn from(e: projflow_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSet {
    pub kind: String,
    pub dim: Option<usize>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub normal: Option<Vec<f64>>,
    pub offset: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawObjective {
    pub kind: String,
    pub dim: Option<usize>,
    pub center: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub shift: Option<f64>,
    pub theta: Option<f64>,
    pub quartic: Option<Vec<f64>>,
    pub quadratic: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub value: Option<f64>,
    /// Overrides the error-bound constant of the catalog certificate.
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSchedule {
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(rename = "K", alias = "k", default = "one")]
    pub k: f64,
    pub alpha: Option<f64>,
}

impl Default for RawSchedule {
    fn default() -> Self {
        RawSchedule {
            family: default_family(),
            k: 1.0,
            alpha: None,
        }
    }
}

fn default_family() -> String {
    "constant".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub x0: Vec<f64>,
    pub system: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub sample_every: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDgp {
    /// Constant step size; the schedule `lambda(k)` is used when absent.
    pub alpha: Option<f64>,
    pub iters: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAnalysis {
    pub window_fraction: Option<f64>,
    pub reference_z: Option<Vec<f64>>,
    /// Error-bound exponent to assume instead of the certified one.
    pub theta: Option<f64>,
    #[serde(default)]
    pub expect: Vec<String>,
    pub exact_terminal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCheck {
    #[serde(default)]
    pub assert_symmetric: bool,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub trajectory_path: Option<String>,
    pub report_path: Option<String>,
}

/// A config as written, before any validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub set: RawSet,
    pub objective: RawObjective,
    #[serde(default)]
    pub schedule: RawSchedule,
    pub problem: RawProblem,
    #[serde(default)]
    pub numerics: RawNumerics,
    #[serde(default)]
    pub dgp: RawDgp,
    #[serde(default)]
    pub analysis: RawAnalysis,
    #[serde(default)]
    pub check: RawCheck,
    #[serde(default)]
    pub output: RawOutput,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))
    }

    /// Reads `preset:NAME` from the built-in presets, anything else from disk.
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        let text = match source.strip_prefix("preset:") {
            Some(name) => presets::get(name)
                .ok_or_else(|| {
                    ConfigError::UnknownPreset(name.into(), presets::names().join(", "))
                })?
                .to_string(),
            None => fs::read_to_string(source).map_err(|e| ConfigError::Io {
                path: source.into(),
                source: e,
            })?,
        };
        Self::parse(&text)
    }

    /// Replaces one sweepable parameter.
    pub fn set_param(&mut self, param: SweepParam, value: f64) -> Result<(), ConfigError> {
        match param {
            SweepParam::Alpha => {
                if self.schedule.family == "constant" {
                    return Err(invalid(
                        "sweeping alpha needs schedule.family = power or power_ge1",
                    ));
                }
                self.schedule.family = if value >= 1.0 { "power_ge1" } else { "power" }.into();
                self.schedule.alpha = Some(value);
            }
            SweepParam::Theta => {
                if self.objective.kind != "power" {
                    return Err(invalid("sweeping theta needs objective.kind = power"));
                }
                self.objective.theta = Some(value);
            }
            SweepParam::K => self.schedule.k = value,
            SweepParam::Step => self.numerics.step = Some(value),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Theta,
    K,
    Step,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Theta => "theta",
            SweepParam::K => "K",
            SweepParam::Step => "step",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "theta" => Ok(SweepParam::Theta),
            "K" | "k" => Ok(SweepParam::K),
            "step" => Ok(SweepParam::Step),
            other => Err(invalid(format!(
                "unknown sweep parameter `{other}` (alpha, theta, K, step)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DgpSettings {
    pub alpha: Option<f64>,
    pub iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSettings {
    pub window_fraction: f64,
    pub reference_z: Option<Point>,
    pub theta: Option<f64>,
    pub expect: Vec<&'static str>,
    pub exact_terminal: Option<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSettings {
    pub assert_symmetric: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub trajectory_path: PathBuf,
    pub report_path: PathBuf,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: FlowProblem,
    pub numerics: Numerics,
    pub dgp: DgpSettings,
    pub analysis: AnalysisSettings,
    pub check: CheckSettings,
    pub output: OutputSettings,
}

impl ExperimentConfig {
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::load(source)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let set = build_set(&raw.set)?;
        let objective = build_objective(&raw.objective)?;
        if objective.dim() != set.dim() {
            return Err(invalid(format!(
                "objective has dimension {} but the set has dimension {}",
                objective.dim(),
                set.dim()
            )));
        }
        let schedule = build_schedule(&raw.schedule)?;
        let system: System = match &raw.problem.system {
            Some(s) => s.parse()?,
            None => System::Cgp,
        };
        let x0 = point("problem.x0", &raw.problem.x0)?;
        let problem = FlowProblem::new(set, objective, schedule, x0, system)?;

        let defaults = Numerics::default();
        let numerics = Numerics {
            step: raw.numerics.step.unwrap_or(defaults.step),
            horizon: raw.numerics.horizon.unwrap_or(defaults.horizon),
            sample_every: raw.numerics.sample_every.unwrap_or(defaults.sample_every),
        };
        numerics.validate()?;

        let dgp = DgpSettings {
            alpha: raw.dgp.alpha,
            iters: raw.dgp.iters.unwrap_or(1000),
        };
        if dgp.iters == 0 || dgp.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            return Err(invalid("dgp.alpha must be positive and dgp.iters non-zero"));
        }

        let window_fraction = raw.analysis.window_fraction.unwrap_or(0.9);
        if !(window_fraction > 0.0 && window_fraction <= 1.0) {
            return Err(invalid("analysis.window_fraction must lie in (0, 1]"));
        }
        let theta = raw.analysis.theta;
        if theta.is_some_and(|t| !(t > 0.0 && t <= 1.0)) {
            return Err(invalid("analysis.theta must lie in (0, 1]"));
        }
        let expect = raw
            .analysis
            .expect
            .iter()
            .map(|name| {
                THEOREM_NAMES
                    .iter()
                    .find(|n| **n == name.as_str())
                    .copied()
                    .ok_or_else(|| {
                        invalid(format!(
                            "unknown theorem `{name}`; known: {}",
                            THEOREM_NAMES.join(", ")
                        ))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dim = problem.set().dim();
        let reference_z = optional_point("analysis.reference_z", &raw.analysis.reference_z, dim)?;
        let exact_terminal =
            optional_point("analysis.exact_terminal", &raw.analysis.exact_terminal, dim)?;

        Ok(ExperimentConfig {
            problem,
            numerics,
            dgp,
            analysis: AnalysisSettings {
                window_fraction,
                reference_z,
                theta,
                expect,
                exact_terminal,
            },
            check: CheckSettings {
                assert_symmetric: raw.check.assert_symmetric,
                samples: raw.check.samples.unwrap_or(200).max(1),
            },
            output: OutputSettings {
                trajectory_path: raw
                    .output
                    .trajectory_path
                    .as_deref()
                    .unwrap_or("trajectory.csv")
                    .into(),
                report_path: raw
                    .output
                    .report_path
                    .as_deref()
                    .unwrap_or("report.csv")
                    .into(),
            },
        })
    }
}

fn point(key: &str, coords: &[f64]) -> Result<Point, ConfigError> {
    Point::new(coords.to_vec()).map_err(|e| invalid(format!("{key}: {e}")))
}

fn required<'a, T>(key: &str, v: &'a Option<T>) -> Result<&'a T, ConfigError> {
    v.as_ref()
        .ok_or_else(|| invalid(format!("missing `{key}`")))
}

fn optional_point(
    key: &str,
    v: &Option<Vec<f64>>,
    dim: usize,
) -> Result<Option<Point>, ConfigError> {
    match v {
        None => Ok(None),
        Some(c) => {
            let p = point(key, c)?;
            if p.dim() != dim {
                return Err(invalid(format!(
                    "{key} has dimension {} but the problem has {dim}",
                    p.dim()
                )));
            }
            Ok(Some(p))
        }
    }
}

fn build_set(raw: &RawSet) -> Result<ConvexSet, ConfigError> {
    let set = match raw.kind.as_str() {
        "whole" => ConvexSet::whole_space(*required("set.dim", &raw.dim)?)?,
        "box" => ConvexSet::boxed(
            point("set.lo", required("set.lo", &raw.lo)?)?,
            point("set.hi", required("set.hi", &raw.hi)?)?,
        )?,
        "ball" => ConvexSet::ball(
            point("set.center", required("set.center", &raw.center)?)?,
            *required("set.radius", &raw.radius)?,
        )?,
        "halfspace" => ConvexSet::half_space(
            point("set.normal", required("set.normal", &raw.normal)?)?,
            *required("set.offset", &raw.offset)?,
        )?,
        "hyperplane" => ConvexSet::hyperplane(
            point("set.normal", required("set.normal", &raw.normal)?)?,
            *required("set.offset", &raw.offset)?,
        )?,
        "simplex" => ConvexSet::simplex(*required("set.dim", &raw.dim)?, raw.scale.unwrap_or(1.0))?,
        other => {
            return Err(invalid(format!(
                "unknown set.kind `{other}` (whole, box, ball, halfspace, hyperplane, simplex)"
            )))
        }
    };
    if let Some(d) = raw.dim {
        if d != set.dim() {
            return Err(invalid(format!(
                "set.dim = {d} disagrees with the set data (dimension {})",
                set.dim()
            )));
        }
    }
    Ok(set)
}

fn build_objective(raw: &RawObjective) -> Result<Objective, ConfigError> {
    if raw.theta.is_some() && raw.kind != "power" {
        return Err(invalid(
            "objective.theta only applies to objective.kind = power",
        ));
    }
    let quadratic = |raw: &RawObjective| -> Result<Objective, ConfigError> {
        let center = point(
            "objective.center",
            required("objective.center", &raw.center)?,
        )?;
        let weights = match &raw.weights {
            Some(w) => point("objective.weights", w)?,
            None => Point::new(vec![1.0; center.dim()])?,
        };
        Ok(Objective::quadratic(
            center,
            weights,
            raw.shift.unwrap_or(0.0),
        )?)
    };
    let obj = match raw.kind.as_str() {
        "quadratic" => quadratic(raw)?,
        "power" => make_power_objective(&quadratic(raw)?, *required("objective.theta", &raw.theta)?)?,
        "even_quartic" => {
            let q = point("objective.quartic", required("objective.quartic", &raw.quartic)?)?;
            let c = match &raw.quadratic {
                Some(c) => point("objective.quadratic", c)?,
                None => Point::zeros(q.dim()),
            };
            Objective::even_quartic(q, c)?
        }
        "flat_bottom" => Objective::flat_bottom(
            point("objective.center", required("objective.center", &raw.center)?)?,
            *required("objective.radius", &raw.radius)?,
        )?,
        "constant" => Objective::constant(*required("objective.dim", &raw.dim)?, raw.value.unwrap_or(0.0))?,
        other => {
            return Err(invalid(format!(
                "unknown objective.kind `{other}` (quadratic, power, even_quartic, flat_bottom, constant)"
            )))
        }
    };
    match raw.kappa {
        None => Ok(obj),
        Some(kappa) => {
            let theta = obj.gheb().map(|g| g.theta).ok_or_else(|| {
                invalid("objective.kappa needs an objective with an error-bound certificate")
            })?;
            Ok(obj.with_gheb(kappa, theta)?)
        }
    }
}

fn build_schedule(raw: &RawSchedule) -> Result<Schedule, ConfigError> {
    let alpha = || required("schedule.alpha", &raw.alpha).copied();
    Ok(match raw.family.as_str() {
        "constant" => Schedule::constant(raw.k)?,
        "power" => Schedule::power(raw.k, alpha()?)?,
        "power_ge1" => Schedule::power_ge1(raw.k, alpha()?)?,
        other => {
            return Err(invalid(format!(
                "unknown schedule.family `{other}` (constant, power, power_ge1)"
            )))
        }
    })
}
