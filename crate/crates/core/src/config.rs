//! Run configuration: one TOML file describing inputs, model, forecast and
//! evaluation settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{load_cases_csv, load_temperature_csv, CaseSchema, TemperatureSchema};
use crate::model::{CalibrationSettings, ModelParams, MosquitoTraits};
use crate::pipeline::{County, ForecastSettings};

/// Environment variable that overrides `paths.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "WNVCAST_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub temperature: PathBuf,
    pub cases: PathBuf,
    /// Optional thermal-trait table replacing the bundled one.
    pub traits: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            temperature: PathBuf::from("temperature.csv"),
            cases: PathBuf::from("cases.csv"),
            traits: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendSettings {
    /// Years whose cases train the rate surface; empty means every case year.
    pub training_years: Vec<i32>,
    pub continuity_correction: bool,
}

impl Default for TrendSettings {
    fn default() -> Self {
        Self {
            training_years: Vec::new(),
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub location_id: String,
    /// Seed for every stochastic step.
    pub seed: u64,
    pub paths: Paths,
    pub temperature_schema: TemperatureSchema,
    pub case_schema: CaseSchema,
    pub model: ModelParams,
    /// Run the carrying-capacity calibration before fitting.
    pub calibrate: bool,
    pub calibration: CalibrationSettings,
    pub forecast: ForecastSettings,
    pub trend: TrendSettings,
    /// Year forecast by `forecast` and `evaluate-retro`.
    pub target_year: Option<i32>,
    /// Training years for `forecast` and `evaluate-retro`; empty means every
    /// evaluable year before the target.
    pub training_years: Vec<i32>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_overrides(path, &[])
    }

    /// As [`RunConfig::load`], with `dotted.key=value` overrides applied to
    /// the parsed table first. Values are read as TOML, falling back to a
    /// bare string.
    pub fn load_with_overrides(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_relative(base);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.temperature);
        fix(&mut self.paths.cases);
        fix(&mut self.paths.output_dir);
        if let Some(t) = self.paths.traits.as_mut() {
            fix(t);
        }
    }

    /// Output directory after applying the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.paths.output_dir.clone(),
        }
    }

    /// Checks field ranges and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        if !self.paths.temperature.is_file() {
            return Err(Error::config("paths.temperature", format!("{} not found", self.paths.temperature.display())));
        }
        if !self.paths.cases.is_file() {
            return Err(Error::config("paths.cases", format!("{} not found", self.paths.cases.display())));
        }
        if let Some(t) = &self.paths.traits {
            if !t.is_file() {
                return Err(Error::config("paths.traits", format!("{} not found", t.display())));
            }
        }
        self.model
            .validate()
            .map_err(|e| Error::config("model", e.to_string()))?;
        self.forecast.validate()?;
        Ok(())
    }

    /// Model parameters with the trait table from `paths.traits` applied.
    pub fn params(&self) -> Result<ModelParams> {
        let mut p = self.model.clone();
        if let Some(path) = &self.paths.traits {
            p.traits = MosquitoTraits::load(path).map_err(|e| Error::config("paths.traits", e.to_string()))?;
        }
        Ok(p)
    }

    /// Validates and loads the county's inputs.
    pub fn load_county(&self) -> Result<County> {
        self.validate()?;
        let mut temps = load_temperature_csv(&self.paths.temperature, &self.temperature_schema)?;
        let mut cases = load_cases_csv(&self.paths.cases, &self.case_schema)?;
        if !self.location_id.is_empty() {
            temps.location_id = self.location_id.clone();
            cases.location_id = self.location_id.clone();
        }
        Ok(County {
            params: self.params()?,
            temps,
            cases,
        })
    }

    /// Training years for a forecast of `target`.
    pub fn training_years_for(&self, county: &County, target: i32) -> Result<Vec<i32>> {
        if self.training_years.is_empty() {
            return Ok(county.evaluable_years().into_iter().filter(|&y| y < target).collect());
        }
        let available = county.evaluable_years();
        if let Some(y) = self.training_years.iter().find(|y| !available.contains(y)) {
            return Err(Error::config("training_years", format!("{y} has no complete temperature and case record")));
        }
        Ok(self.training_years.clone())
    }

    /// Calibration settings sharing the forecast's simulation choices.
    pub fn calibration_settings(&self) -> CalibrationSettings {
        CalibrationSettings {
            init: self.forecast.init,
            dt: self.forecast.dt,
            metric: self.forecast.metric,
            week_convention: self.forecast.week_convention,
            first_week: self.forecast.first_week,
            last_week: self.forecast.last_week,
            seed: self.seed,
            ..self.calibration.clone()
        }
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config("--set", format!("expected key=value, got `{spec}`")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config("--set", format!("bad key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config("--set", format!("`{part}` in `{key}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
