//! JSON scenario files.
//!
//! A scenario is one JSON document with the sections `model`, `initial`,
//! `integration`, `analysis`, `periodic`, `outputs` and an optional `sweep`.
//! Coefficients are tagged objects, e.g.
//! `{"type": "cosine", "base": 2, "amplitude": 1, "omega": 2, "phase": 0.25}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{DEFAULT_FLOOR, DEFAULT_GRID_N, DEFAULT_QUAD_N, DEFAULT_VERIFY_TOL};
use crate::dde::IntegrationConfig;
use crate::error::Error;
use crate::model::{History, ModelParams};
use crate::periodic::{HistorySegment, PeriodicConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelParams,
    pub initial: History,
    #[serde(default)]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub periodic: PeriodicSettings,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub grid_n: usize,
    pub quad_n: usize,
    /// Sampling horizon for premises and bounds; defaults to the declared
    /// period, or to `integration.t_end` without one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Containment slack for trajectory verification.
    pub tol: f64,
    /// Floor for `b(t) >= b > 0` and `K(t) >= k > 0`.
    pub floor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            grid_n: DEFAULT_GRID_N,
            quad_n: DEFAULT_QUAD_N,
            horizon: None,
            tol: DEFAULT_VERIFY_TOL,
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    Constant {
        value: f64,
    },
    /// Explicit samples over `[-theta_max, 0]`.
    Samples {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicSettings {
    pub seed: SeedSpec,
    pub max_iter: usize,
    pub tol: f64,
    pub step: f64,
    pub n_samples: usize,
    pub oversample: usize,
    /// Run the solve even when neither margin condition holds.
    pub force: bool,
}

impl Default for PeriodicSettings {
    fn default() -> Self {
        let cfg = PeriodicConfig::default();
        PeriodicSettings {
            seed: SeedSpec::Constant { value: 1.0 },
            max_iter: cfg.max_iter,
            tol: cfg.tol,
            step: cfg.step,
            n_samples: cfg.n_samples,
            oversample: cfg.oversample,
            force: false,
        }
    }
}

impl PeriodicSettings {
    pub fn solver_config(&self, grid_n: usize, max_lag_iterations: usize) -> PeriodicConfig {
        PeriodicConfig {
            step: self.step,
            n_samples: self.n_samples,
            max_iter: self.max_iter,
            tol: self.tol,
            oversample: self.oversample,
            theta_grid_n: grid_n,
            max_lag_iterations,
        }
    }

    pub fn seed_segment(
        &self,
        model: &ModelParams,
        cfg: &PeriodicConfig,
    ) -> Result<HistorySegment, Error> {
        let template = HistorySegment::constant_for(model, cfg, 1.0)?;
        match &self.seed {
            SeedSpec::Constant { value } => {
                HistorySegment::constant(template.theta_max, cfg.n_samples, *value)
            }
            SeedSpec::Samples { values } => HistorySegment::new(template.theta_max, values.clone()),
        }
    }
}

/// Output file names, relative to the `--out` directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: String,
    pub report: String,
    pub bounds: String,
    pub periodic: String,
    pub periodic_trajectory: String,
    pub sweep: String,
    /// Interpolated points per step in trajectory CSVs.
    pub oversample: usize,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trajectory: "trajectory.csv".into(),
            report: "report.json".into(),
            bounds: "bounds.json".into(),
            periodic: "periodic.json".into(),
            periodic_trajectory: "periodic_trajectory.csv".into(),
            sweep: "sweep.csv".into(),
            oversample: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the scenario, e.g. `model.lam.peak`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
}

impl SweepSpec {
    /// Cartesian product of the axis values, first axis varying slowest.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            acc.iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut cell = prefix.clone();
                        cell.push(*v);
                        cell
                    })
                })
                .collect()
        })
    }
}

/// A configuration problem, located by the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{file}: field `{field}`: {message}")]
pub struct ConfigError {
    pub file: String,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(file: &str, field: &str, message: impl ToString) -> Self {
        ConfigError {
            file: file.to_string(),
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

impl Scenario {
    pub fn from_json_str(text: &str, file: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::new(file, &field, e.into_inner())
        })?;
        scenario.validate(file)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&file, ".", e))?;
        Self::from_json_str(&text, &file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Range checks on the numeric fields that feed each module.
    pub fn validate(&self, file: &str) -> Result<(), ConfigError> {
        for (name, c) in self.model.coefficients() {
            let field = match name {
                "K" => "model.K".to_string(),
                other => format!("model.{other}"),
            };
            c.validate()
                .map_err(|e| ConfigError::new(file, &field, e))?;
        }
        if let Some(p) = self.model.period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(ConfigError::new(file, "model.period", "must be > 0"));
            }
        }
        if !self.model.gamma.is_finite() {
            return Err(ConfigError::new(file, "model.gamma", "must be finite"));
        }
        self.initial
            .phi
            .validate()
            .map_err(|e| ConfigError::new(file, "initial.phi", e))?;
        if !self.initial.n0.is_finite() {
            return Err(ConfigError::new(file, "initial.N0", "must be finite"));
        }
        let i = &self.integration;
        if !(i.step > 0.0 && i.step.is_finite()) {
            return Err(ConfigError::new(file, "integration.step", "must be > 0"));
        }
        if !(i.t_end > 0.0 && i.t_end.is_finite()) {
            return Err(ConfigError::new(file, "integration.t_end", "must be > 0"));
        }
        if !(i.positivity_floor >= 0.0) {
            return Err(ConfigError::new(
                file,
                "integration.positivity_floor",
                "must be >= 0",
            ));
        }
        let a = &self.analysis;
        if a.grid_n < 2 {
            return Err(ConfigError::new(file, "analysis.grid_n", "must be >= 2"));
        }
        if a.quad_n < 2 {
            return Err(ConfigError::new(file, "analysis.quad_n", "must be >= 2"));
        }
        if let Some(h) = a.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ConfigError::new(file, "analysis.horizon", "must be > 0"));
            }
        }
        if !(a.tol >= 0.0) {
            return Err(ConfigError::new(file, "analysis.tol", "must be >= 0"));
        }
        if !(a.floor > 0.0) {
            return Err(ConfigError::new(file, "analysis.floor", "must be > 0"));
        }
        let p = &self.periodic;
        if p.n_samples < 2 {
            return Err(ConfigError::new(file, "periodic.n_samples", "must be >= 2"));
        }
        if !(p.step > 0.0 && p.step.is_finite()) {
            return Err(ConfigError::new(file, "periodic.step", "must be > 0"));
        }
        if !(p.tol > 0.0) {
            return Err(ConfigError::new(file, "periodic.tol", "must be > 0"));
        }
        if let Some(sweep) = &self.sweep {
            for (k, axis) in sweep.axes.iter().enumerate() {
                if axis.values.is_empty() {
                    return Err(ConfigError::new(
                        file,
                        &format!("sweep.axes[{k}].values"),
                        "is empty",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Horizon used for premise checks and bounds.
    pub fn analysis_horizon(&self) -> f64 {
        self.analysis
            .horizon
            .or(self.model.period)
            .unwrap_or(self.integration.t_end)
    }

    /// Copy of the scenario with the numeric field at dotted `path` set to `value`.
    pub fn with_field(&self, path: &str, value: f64) -> Result<Scenario, ConfigError> {
        let mut doc = serde_json::to_value(self).expect("scenario serializes");
        set_number(&mut doc, path, value).map_err(|m| ConfigError::new("sweep", path, m))?;
        let scenario: Scenario =
            serde_json::from_value(doc).map_err(|e| ConfigError::new("sweep", path, e))?;
        scenario.validate("sweep")?;
        Ok(scenario)
    }

    /// Checks that `path` names an existing numeric field.
    pub fn check_axis(&self, path: &str) -> Result<(), ConfigError> {
        let doc = serde_json::to_value(self).expect("scenario serializes");
        lookup(&doc, path)
            .map(|_| ())
            .map_err(|m| ConfigError::new("sweep", path, m))
    }
}

fn lookup<'a>(doc: &'a Value, path: &str) -> Result<&'a Value, String> {
    let mut cur = doc;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
            _ => None,
        }
        .ok_or_else(|| format!("no field `{key}` on this path"))?;
    }
    if cur.is_number() {
        Ok(cur)
    } else {
        Err("not a numeric field".into())
    }
}

fn set_number(doc: &mut Value, path: &str, value: f64) -> Result<(), String> {
    let integral = lookup(doc, path)?.is_u64() || lookup(doc, path)?.is_i64();
    let mut cur = doc;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key
                .parse::<usize>()
                .ok()
                .and_then(move |i| items.get_mut(i)),
            _ => None,
        }
        .expect("path checked above");
    }
    *cur = if integral {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(format!("expects a non-negative integer, got {value}"));
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| format!("{value} is not a finite number"))?
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {
            "gamma": 1,
            "r": {"type": "constant", "value": 2},
            "eta": {"type": "constant", "value": 1},
            "lam": {"type": "seasonal_pulse", "peak": 0.5, "H": 0.25, "t_start": 0.25},
            "K": {"type": "constant", "value": 1},
            "theta": {"type": "constant", "value": 0.25},
            "period": 1
        },
        "initial": {"phi": {"type": "constant", "value": 1}, "N0": 1}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let s = Scenario::from_json_str(MINIMAL, "minimal.json").unwrap();
        assert_eq!(s.integration, IntegrationConfig::default());
        assert_eq!(s.analysis.grid_n, 2048);
        assert_eq!(s.analysis_horizon(), 1.0);
        assert!(s.sweep.is_none());
    }

    #[test]
    fn round_trips() {
        let s = Scenario::from_json_str(MINIMAL, "minimal.json").unwrap();
        let again = Scenario::from_json_str(&s.to_json(), "again.json").unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = MINIMAL.replace(r#""H": 0.25"#, r#""H": "wide""#);
        let err = Scenario::from_json_str(&bad, "bad.json").unwrap_err();
        assert_eq!(err.file, "bad.json");
        assert!(err.field.starts_with("model.lam"), "{err}");

        let bad = MINIMAL.replace(r#""N0": 1"#, r#""N0": 1, "extra": 3"#);
        let err = Scenario::from_json_str(&bad, "bad.json").unwrap_err();
        assert!(err.field.starts_with("initial"), "{err}");

        let bad = MINIMAL.replace(r#""t_start": 0.25"#, r#""t_start": 0.9"#);
        let err = Scenario::from_json_str(&bad, "bad.json").unwrap_err();
        assert_eq!(err.field, "model.lam");
    }

    #[test]
    fn field_paths() {
        let s = Scenario::from_json_str(MINIMAL, "m.json").unwrap();
        let t = s.with_field("model.lam.peak", 0.1).unwrap();
        assert_eq!(
            t.model.lam,
            crate::model::Coefficient::seasonal(0.1, 0.25, 0.25)
        );
        assert!(s.check_axis("model.lam.peak").is_ok());
        assert!(s.check_axis("model.lam.nope").is_err());
        assert!(s.check_axis("model.lam").is_err());
        let t = s.with_field("analysis.grid_n", 64.0).unwrap();
        assert_eq!(t.analysis.grid_n, 64);
        assert!(s.with_field("analysis.grid_n", 1.5).is_err());
    }

    #[test]
    fn sweep_cells_are_ordered() {
        let spec = SweepSpec {
            axes: vec![
                SweepAxis {
                    path: "a".into(),
                    values: vec![1.0, 2.0],
                },
                SweepAxis {
                    path: "b".into(),
                    values: vec![10.0, 20.0, 30.0],
                },
            ],
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0], vec![1.0, 10.0]);
        assert_eq!(cells[2], vec![1.0, 30.0]);
        assert_eq!(cells[3], vec![2.0, 10.0]);
    }
}
