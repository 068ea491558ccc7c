//! `key = value` experiment files.
//!
//! Blank lines and `#` comments are ignored; omitted keys keep their
//! defaults. Unknown keys, malformed values and out-of-range values are
//! reported with their line number.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::model::DelayAggregation;
use crate::orchestrator::{Scheme, SolverOptions};

use super::scenario::ScenarioParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Scenario parameter varied across the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NumVts,
    NumSaps,
    /// Mean task size in MB.
    TaskBits,
    MaxPrecoderPower,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NumVts => "num_vts",
            SweepParam::NumSaps => "num_saps",
            SweepParam::TaskBits => "task_bits",
            SweepParam::MaxPrecoderPower => "max_precoder_power_w",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepParam::NumVts | SweepParam::NumSaps)
    }

    /// Checks one sweep value; counts must be positive integers.
    pub fn check(self, value: f64) -> Result<(), String> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(format!("{} values must be positive, got {value}", self.name()));
        }
        if self.is_count() && value.fract() != 0.0 {
            return Err(format!("{} values must be integers, got {value}", self.name()));
        }
        Ok(())
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioParams, value: f64) -> ScenarioParams {
        let mut p = base.clone();
        match self {
            SweepParam::NumVts => p.num_vts = value as usize,
            SweepParam::NumSaps => p.num_saps = value as usize,
            SweepParam::TaskBits => p.task_mb_mean = value,
            SweepParam::MaxPrecoderPower => p.max_precoder_power_w = value,
        }
        p
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            SweepParam::NumVts,
            SweepParam::NumSaps,
            SweepParam::TaskBits,
            SweepParam::MaxPrecoderPower,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| format!("unknown sweep parameter `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioParams,
    pub sweep_param: SweepParam,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub output_path: PathBuf,
    pub emit_trace: bool,
    /// Off by default so that output bytes depend only on the spec.
    pub record_wall_time: bool,
    pub solver: SolverOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            scenario: ScenarioParams::default(),
            sweep_param: SweepParam::TaskBits,
            sweep_values: vec![1.0],
            trials: 10,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            output_path: PathBuf::from("results.csv"),
            emit_trace: false,
            record_wall_time: false,
            solver: SolverOptions::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::global("trials must be at least 1"));
        }
        if self.sweep_values.is_empty() {
            return Err(ConfigError::global("sweep_values is empty"));
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::global("schemes is empty"));
        }
        for &v in &self.sweep_values {
            self.sweep_param.check(v).map_err(ConfigError::global)?;
        }
        let s = &self.scenario;
        if s.vt_distance_min_m > s.vt_distance_max_m {
            return Err(ConfigError::global("vt_distance_min_m exceeds vt_distance_max_m"));
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, format!("`{key}` expects a number, got `{raw}`")))
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = match raw {
        "inf" | "infinity" => f64::INFINITY,
        _ => parse_num(line, key, raw)?,
    };
    if v.is_nan() {
        return Err(ConfigError::at(line, format!("`{key}` must not be NaN")));
    }
    Ok(v)
}

fn positive(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(line, key, raw)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::at(
            line,
            format!("`{key}` must be positive, got {v}"),
        ))
    }
}

fn nonnegative(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(line, key, raw)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::at(
            line,
            format!("`{key}` must be finite and nonnegative, got {v}"),
        ))
    }
}

fn finite_positive(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = positive(line, key, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::at(line, format!("`{key}` must be finite")))
    }
}

fn count(line: usize, key: &str, raw: &str) -> Result<usize, ConfigError> {
    let v: usize = raw
        .parse()
        .map_err(|_| ConfigError::at(line, format!("`{key}` expects a positive integer, got `{raw}`")))?;
    if v == 0 {
        return Err(ConfigError::at(line, format!("`{key}` must be at least 1")));
    }
    Ok(v)
}

fn boolean(line: usize, key: &str, raw: &str) -> Result<bool, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, format!("`{key}` expects true or false, got `{raw}`")))
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses an experiment file; the result is validated.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut spec = ExperimentSpec::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(
                line,
                format!("expected `key = value`, got `{content}`"),
            ));
        };
        apply_key(&mut spec, line, key.trim(), value.trim())?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Sets one key; shared by the file parser and command-line overrides.
pub fn apply_key(spec: &mut ExperimentSpec, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
    let s = &mut spec.scenario;
    match key {
        "num_vts" => s.num_vts = count(line, key, v)?,
        "num_saps" => s.num_saps = count(line, key, v)?,
        "beta" => {
            let b = parse_f64(line, key, v)?;
            if !(0.0..=1.0).contains(&b) {
                return Err(ConfigError::at(
                    line,
                    format!("`beta` must lie in [0, 1], got {b}"),
                ));
            }
            s.beta = b;
        }
        "total_bandwidth_hz" => s.total_bandwidth_hz = finite_positive(line, key, v)?,
        "sat_bandwidth_hz" => s.sat_bandwidth_hz = finite_positive(line, key, v)?,
        "vt_tx_power_w" => s.vt_tx_power_w = finite_positive(line, key, v)?,
        "max_precoder_power_w" => s.max_precoder_power_w = finite_positive(line, key, v)?,
        "rsu_freq_hz" => s.rsu_freq_hz = finite_positive(line, key, v)?,
        "cpu_freq_hz" => s.cpu_freq_hz = finite_positive(line, key, v)?,
        "kappa_rsu" => s.kappa_rsu = nonnegative(line, key, v)?,
        "kappa_sap" => s.kappa_sap = nonnegative(line, key, v)?,
        "noise_density_dbm_hz" => {
            let n = parse_f64(line, key, v)?;
            if !n.is_finite() {
                return Err(ConfigError::at(line, "`noise_density_dbm_hz` must be finite"));
            }
            s.noise_density_dbm_hz = n;
        }
        "max_delay_s" => s.max_delay_s = positive(line, key, v)?,
        "task_mb_mean" => s.task_mb_mean = finite_positive(line, key, v)?,
        "task_mb_spread" => {
            let x = nonnegative(line, key, v)?;
            if x >= 1.0 {
                return Err(ConfigError::at(
                    line,
                    format!("`task_mb_spread` must be below 1, got {x}"),
                ));
            }
            s.task_mb_spread = x;
        }
        "carrier_frequency_hz" => s.carrier_frequency_hz = finite_positive(line, key, v)?,
        "altitude_km" => s.altitude_km = finite_positive(line, key, v)?,
        "altitude_jitter_km" => s.altitude_jitter_km = nonnegative(line, key, v)?,
        "max_boresight_deg" => {
            let x = nonnegative(line, key, v)?;
            if x >= 90.0 {
                return Err(ConfigError::at(
                    line,
                    format!("`max_boresight_deg` must be below 90, got {x}"),
                ));
            }
            s.max_boresight_deg = x;
        }
        "antenna_factor" => s.antenna_factor = finite_positive(line, key, v)?,
        "rician_k_db" => {
            let x = parse_f64(line, key, v)?;
            if x == f64::NEG_INFINITY {
                return Err(ConfigError::at(line, "`rician_k_db` must not be -inf"));
            }
            s.rician_k_db = x;
        }
        "shadow_std_db" => s.shadow_std_db = nonnegative(line, key, v)?,
        "vt_distance_min_m" => s.vt_distance_min_m = finite_positive(line, key, v)?,
        "vt_distance_max_m" => s.vt_distance_max_m = finite_positive(line, key, v)?,
        "terrestrial_path_loss_exp" => s.terrestrial_path_loss_exp = nonnegative(line, key, v)?,
        "delay_aggregation" => {
            s.delay_aggregation = match v {
                "sum" => DelayAggregation::Sum,
                "max" => DelayAggregation::Max,
                _ => {
                    return Err(ConfigError::at(
                        line,
                        format!("`delay_aggregation` is sum or max, got `{v}`"),
                    ))
                }
            }
        }
        "seed" => spec.seed = parse_num(line, key, v)?,
        "trials" => spec.trials = count(line, key, v)?,
        "sweep_param" => spec.sweep_param = v.parse().map_err(|e: String| ConfigError::at(line, e))?,
        "sweep_values" => {
            let values = list(v)
                .map(|x| parse_f64(line, key, x))
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(ConfigError::at(line, "`sweep_values` is empty"));
            }
            spec.sweep_values = values;
        }
        "schemes" => {
            let schemes = list(v)
                .map(|x| {
                    x.parse::<Scheme>()
                        .map_err(|e| ConfigError::at(line, e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if schemes.is_empty() {
                return Err(ConfigError::at(line, "`schemes` is empty"));
            }
            spec.schemes = schemes;
        }
        "output_path" => {
            if v.is_empty() {
                return Err(ConfigError::at(line, "`output_path` is empty"));
            }
            spec.output_path = PathBuf::from(v);
        }
        "emit_trace" => spec.emit_trace = boolean(line, key, v)?,
        "record_wall_time" => spec.record_wall_time = boolean(line, key, v)?,
        "ao_tolerance" => spec.solver.tolerance = finite_positive(line, key, v)?,
        "ao_max_iter" => spec.solver.max_iter = count(line, key, v)?,
        "fp_tolerance" => spec.solver.fp_tolerance = finite_positive(line, key, v)?,
        "fp_max_rounds" => spec.solver.fp_max_rounds = count(line, key, v)?,
        _ => return Err(ConfigError::at(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}
