//! Experiment configuration: JSON loading, defaults and validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use matdyn::integrator::SolverOptions;
use matdyn::phase::{AttractorOptions, Projection};
use matdyn::{ControlSettings, ModelParameters, PopulationState, SystemVariant};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// JSON schema describing [`ExperimentConfig`], shipped with the binary.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { path, .. } => Some(path),
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Equilibria,
    Thresholds,
    Bifurcation,
    Basins,
    VerifyBounds,
    Repro,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Equilibria => "equilibria",
            Experiment::Thresholds => "thresholds",
            Experiment::Bifurcation => "bifurcation",
            Experiment::Basins => "basins",
            Experiment::VerifyBounds => "verify-bounds",
            Experiment::Repro => "repro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub variant: SystemVariant,
    /// `(I, Y, F, M)` at `t = 0`.
    pub initial_state: [f64; 4],
    /// Resample the trajectory on a uniform grid with this spacing instead
    /// of writing every accepted step.
    pub output_step: Option<f64>,
}

impl SimulateConfig {
    /// Name of the variant as written in the config.
    pub fn variant_name(&self) -> String {
        serde_json::to_value(self.variant)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            variant: SystemVariant::FullControl,
            initial_state: [100.0, 20.0, 20.0, 20.0],
            output_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub alphas: Vec<f64>,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        Self {
            alphas: (0..=20).map(|k| k as f64 * 0.01).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationConfig {
    /// Trapping rate of the sweep; `control.alpha` when absent.
    pub alpha: Option<f64>,
    pub yp_min: f64,
    pub yp_max: f64,
    pub points: usize,
    pub log_spacing: bool,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            yp_min: 10.0,
            yp_max: 2e6,
            points: 200,
            log_spacing: true,
        }
    }
}

impl BifurcationConfig {
    pub fn lures(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.yp_min];
        }
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                if self.log_spacing {
                    (self.yp_min.ln() + s * (self.yp_max / self.yp_min).ln()).exp()
                } else {
                    self.yp_min + s * (self.yp_max - self.yp_min)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    I,
    Y,
    F,
    M,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::I => 0,
            Component::Y => 1,
            Component::F => 2,
            Component::M => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProjectionConfig {
    /// `M` against `Y + F`, with `I` and the `Y:F` split taken in the
    /// endemic proportions.
    MalesFemales,
    Components {
        first: Component,
        second: Component,
        base: [f64; 4],
    },
}

impl ProjectionConfig {
    pub fn to_projection(self) -> Projection {
        match self {
            ProjectionConfig::MalesFemales => Projection::MalesFemales,
            ProjectionConfig::Components {
                first,
                second,
                base,
            } => Projection::Components {
                first: first.index(),
                second: second.index(),
                base,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinsConfig {
    pub projection: ProjectionConfig,
    pub first_range: [f64; 2],
    pub second_range: [f64; 2],
    pub first_points: usize,
    pub second_points: usize,
    pub attractor: AttractorOptions,
}

impl Default for BasinsConfig {
    fn default() -> Self {
        Self {
            projection: ProjectionConfig::MalesFemales,
            first_range: [0.0, 30.0],
            second_range: [0.0, 3.0],
            first_points: 50,
            second_points: 50,
            attractor: AttractorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBoundsConfig {
    pub initial_states: Vec<[f64; 4]>,
    pub t_end: f64,
}

impl Default for VerifyBoundsConfig {
    fn default() -> Self {
        Self {
            initial_states: vec![
                [10.0, 5.0, 5.0, 5.0],
                [500.0, 100.0, 300.0, 50.0],
                [990.0, 320.0, 1400.0, 1500.0],
                [50.0, 0.0, 10.0, 0.0],
            ],
            t_end: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproConfig {
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub parameters: ModelParameters,
    pub control: ControlSettings,
    pub solver: SolverOptions,
    /// Experiment run by `matdyn run`.
    pub experiment: Option<Experiment>,
    pub simulate: SimulateConfig,
    pub thresholds: ThresholdsConfig,
    pub bifurcation: BifurcationConfig,
    pub basins: BasinsConfig,
    pub verify_bounds: VerifyBoundsConfig,
    pub repro: ReproConfig,
    /// Emit SVG plots next to the CSV files.
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            parameters: ModelParameters::reference(),
            control: ControlSettings::NONE,
            solver: SolverOptions::default(),
            experiment: None,
            simulate: SimulateConfig::default(),
            thresholds: ThresholdsConfig::default(),
            bifurcation: BifurcationConfig::default(),
            basins: BasinsConfig::default(),
            verify_bounds: VerifyBoundsConfig::default(),
            repro: ReproConfig::default(),
            plots: true,
        }
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn check_state(field: &str, x: &[f64; 4]) -> Result<(), ConfigError> {
    match x.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(k) => Err(invalid(
            format!("{field}[{k}]"),
            format!("must be finite and >= 0 (got {})", x[k]),
        )),
        None => Ok(()),
    }
}

fn check_range(field: &str, r: &[f64; 2]) -> Result<(), ConfigError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] >= 0.0 && r[0] <= r[1] {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("expected 0 <= lo <= hi (got [{}, {}])", r[0], r[1]),
        ))
    }
}

impl ExperimentConfig {
    /// Checks value constraints the JSON types cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(v) = self.parameters.violations().first() {
            return Err(invalid(format!("parameters.{}", v.field()), v.to_string()));
        }
        if let Err(m) = self.control.validate() {
            let field = if m.starts_with("alpha") {
                "control.alpha"
            } else {
                "control.Y_P"
            };
            return Err(invalid(field, m));
        }
        self.solver.validate().map_err(|m| invalid("solver", m))?;

        check_state("simulate.initial_state", &self.simulate.initial_state)?;
        if let Some(h) = self.simulate.output_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(invalid(
                    "simulate.output_step",
                    format!("must be positive (got {h})"),
                ));
            }
        }

        if self.thresholds.alphas.is_empty() {
            return Err(invalid("thresholds.alphas", "must not be empty"));
        }
        for (k, a) in self.thresholds.alphas.iter().enumerate() {
            if !(a.is_finite() && *a >= 0.0) {
                return Err(invalid(
                    format!("thresholds.alphas[{k}]"),
                    format!("must be >= 0 (got {a})"),
                ));
            }
        }

        let b = &self.bifurcation;
        if let Some(a) = b.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid(
                    "bifurcation.alpha",
                    format!("must be >= 0 (got {a})"),
                ));
            }
        }
        if !(b.yp_min.is_finite() && b.yp_max.is_finite() && b.yp_min > 0.0 && b.yp_min <= b.yp_max)
        {
            return Err(invalid(
                "bifurcation.yp_min",
                format!(
                    "expected 0 < yp_min <= yp_max (got {}, {})",
                    b.yp_min, b.yp_max
                ),
            ));
        }
        if b.points == 0 {
            return Err(invalid("bifurcation.points", "must be positive"));
        }

        let g = &self.basins;
        check_range("basins.first_range", &g.first_range)?;
        check_range("basins.second_range", &g.second_range)?;
        if g.first_points == 0 || g.second_points == 0 {
            return Err(invalid(
                "basins.first_points",
                "grid sizes must be positive",
            ));
        }
        if let ProjectionConfig::Components {
            first,
            second,
            base,
        } = g.projection
        {
            if first == second {
                return Err(invalid(
                    "basins.projection.second",
                    "must differ from `first`",
                ));
            }
            check_state("basins.projection.base", &base)?;
        }
        let at = &g.attractor;
        if !(at.t_max > 0.0 && at.dwell > 0.0 && at.dwell < at.t_max && at.rel_radius > 0.0) {
            return Err(invalid(
                "basins.attractor",
                "expected t_max > dwell > 0 and rel_radius > 0",
            ));
        }
        at.solver
            .validate()
            .map_err(|m| invalid("basins.attractor.solver", m))?;

        for (k, x) in self.verify_bounds.initial_states.iter().enumerate() {
            check_state(&format!("verify_bounds.initial_states[{k}]"), x)?;
        }
        let t = self.verify_bounds.t_end;
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(
                "verify_bounds.t_end",
                format!("must be positive (got {t})"),
            ));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> PopulationState {
        PopulationState::from(self.simulate.initial_state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn schema_validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value =
            serde_json::from_str(CONFIG_SCHEMA).expect("shipped schema is valid JSON");
        jsonschema::validator_for(&schema).expect("shipped schema compiles")
    })
}

/// `/basins/first_range/0` becomes `basins.first_range[0]`.
fn dotted(pointer: &str) -> String {
    let mut out = String::new();
    for seg in pointer.split('/').filter(|s| !s.is_empty()) {
        if seg.bytes().all(|b| b.is_ascii_digit()) {
            out.push_str(&format!("[{seg}]"));
        } else {
            if !out.is_empty() {
                out.push('.');
            }
            out.push_str(&seg.replace("~1", "/").replace("~0", "~"));
        }
    }
    if out.is_empty() {
        out.push_str("(root)");
    }
    out
}

/// Parses JSON text, validates it against the shipped schema, then builds
/// and checks the typed configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e),
    })?;
    if let Some(err) = schema_validator().iter_errors(&value).next() {
        return Err(ConfigError::Schema {
            path: dotted(err.instance_path().as_str()),
            message: err.to_string(),
        });
    }
    let cfg: ExperimentConfig =
        serde_path_to_error::deserialize(value).map_err(|err| ConfigError::Schema {
            path: err.path().to_string(),
            message: strip_position(err.inner()),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(k) => s[..k].to_string(),
        None => s,
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn write_config(path: &Path, cfg: &ExperimentConfig) -> std::io::Result<()> {
    fs::write(path, cfg.to_json())
}
