//! Plain-text experiment configuration.
//!
//! One `key = value` per line, `#` starts a comment, keys are dotted:
//!
//! ```text
//! # Fig. 3 style sweep at desk scale
//! irs.elements = 64
//! irs.b = 2
//! sweep.variable = distance_d
//! sweep.values = 5, 15, 30, 45, 55
//! sweep.schemes = proposed, baseline1, baseline2, upper_bound
//! sweep.trials = 20
//! ```
//!
//! Every key has a default, so an empty file yields the reference scenario.

use std::path::{Path, PathBuf};

use irs_core::channel::{LosModel, ScenarioConfig};
use irs_core::schemes::{MrtBasis, SchemeKind, SchemeParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Swept scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DistanceD,
    NumElementsN,
    BitResolutionB,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::DistanceD => "distance_d",
            SweepVariable::NumElementsN => "num_elements_N",
            SweepVariable::BitResolutionB => "bit_resolution_b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SweepVariable::DistanceD, SweepVariable::NumElementsN, SweepVariable::BitResolutionB]
            .into_iter()
            .find(|v| v.name() == s)
    }

    /// Axis label for plots.
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::DistanceD => "AP-IRS horizontal distance d (m)",
            SweepVariable::NumElementsN => "Number of IRS elements N",
            SweepVariable::BitResolutionB => "Phase resolution b (bits)",
        }
    }

    /// Applies one sweep value to a scenario.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            SweepVariable::DistanceD => cfg.d = value,
            SweepVariable::NumElementsN => {
                cfg.elements = value as usize;
                cfg.irs_rows = 0;
            }
            SweepVariable::BitResolutionB => cfg.bits = value as u32,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub output_path: Option<PathBuf>,
    /// Record wall time in the table; off keeps the CSV reproducible.
    pub timing: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            variable: SweepVariable::DistanceD,
            values: vec![5.0, 15.0, 30.0, 45.0, 55.0],
            schemes: vec![SchemeKind::Proposed, SchemeKind::Baseline1, SchemeKind::Baseline2, SchemeKind::UpperBound],
            trials: 20,
            base: ScenarioConfig::default(),
            output_path: None,
            timing: false,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::Invalid("sweep.values must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(ConfigError::Invalid("sweep.trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::Invalid("sweep.schemes must not be empty".into()));
        }
        for v in &self.values {
            if matches!(self.variable, SweepVariable::NumElementsN | SweepVariable::BitResolutionB)
                && (v.fract() != 0.0 || *v < 1.0)
            {
                return Err(ConfigError::Invalid(format!("{} values must be positive integers, got {v}", self.variable.name())));
            }
            self.variable
                .apply(&self.base, *v)
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("{} = {v}: {e}", self.variable.name())))?;
        }
        Ok(())
    }

    /// Largest element count any grid point uses.
    pub fn max_elements(&self) -> usize {
        match self.variable {
            SweepVariable::NumElementsN => self.values.iter().fold(0, |m, v| m.max(*v as usize)),
            _ => self.base.elements,
        }
    }
}

/// Everything a configuration file can set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSpec,
    pub schemes: SchemeParams,
}

const KEYS: &[&str] = &[
    "seed",
    "ap.antennas",
    "ap.p_max_dbm",
    "ap.gain_dbi",
    "irs.elements",
    "irs.rows",
    "irs.b",
    "irs.p_irs_dbm",
    "irs.eta_h",
    "irs.gain_dbi",
    "users.count",
    "users.gain_dbi",
    "geometry.d0",
    "geometry.d",
    "geometry.d_y",
    "geometry.radius",
    "radio.carrier_hz",
    "radio.bandwidth_hz",
    "channel.alpha_AU",
    "channel.alpha_AI",
    "channel.alpha_IU",
    "channel.beta_AU",
    "channel.beta_AI",
    "channel.beta_IU",
    "channel.los",
    "noise.thermal_dbm",
    "noise.quantization_dbm",
    "noise.irs_dbm",
    "scheme.max_outer",
    "scheme.tol",
    "scheme.mrt_basis",
    "sweep.variable",
    "sweep.values",
    "sweep.schemes",
    "sweep.trials",
    "sweep.output",
    "sweep.timing",
];

/// Every recognised key.
pub fn known_keys() -> &'static [&'static str] {
    KEYS
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.parse::<T>().map_err(|_| format!("cannot parse `{value}` as a number"))
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(item).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Line { line, message: format!("expected `key = value`, found `{content}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(ConfigError::Line { line, message: format!("missing value for `{key}`") });
            }
            cfg.set(key, value).map_err(|message| ConfigError::Line { line, message })?;
        }
        cfg.scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.sweep.base = cfg.scenario.clone();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.scenario;
        match key {
            "seed" => s.seed = parse_num(value)?,
            "ap.antennas" => s.antennas = parse_num(value)?,
            "ap.p_max_dbm" => s.p_max_dbm = parse_num(value)?,
            "ap.gain_dbi" => s.gain_ap_dbi = parse_num(value)?,
            "irs.elements" => s.elements = parse_num(value)?,
            "irs.rows" => s.irs_rows = parse_num(value)?,
            "irs.b" => s.bits = parse_num(value)?,
            "irs.p_irs_dbm" => s.p_irs_dbm = parse_num(value)?,
            "irs.eta_h" => s.eta_h = parse_num(value)?,
            "irs.gain_dbi" => s.gain_irs_dbi = parse_num(value)?,
            "users.count" => s.users = parse_num(value)?,
            "users.gain_dbi" => s.gain_user_dbi = parse_num(value)?,
            "geometry.d0" => s.d0 = parse_num(value)?,
            "geometry.d" => s.d = parse_num(value)?,
            "geometry.d_y" => s.d_y = parse_num(value)?,
            "geometry.radius" => s.radius = parse_num(value)?,
            "radio.carrier_hz" => s.carrier_hz = parse_num(value)?,
            "radio.bandwidth_hz" => s.bandwidth_hz = parse_num(value)?,
            "channel.alpha_AU" => s.exponents.ap_user = parse_num(value)?,
            "channel.alpha_AI" => s.exponents.ap_irs = parse_num(value)?,
            "channel.alpha_IU" => s.exponents.irs_user = parse_num(value)?,
            "channel.beta_AU" => s.rician.ap_user = parse_num(value)?,
            "channel.beta_AI" => s.rician.ap_irs = parse_num(value)?,
            "channel.beta_IU" => s.rician.irs_user = parse_num(value)?,
            "channel.los" => {
                s.los = match value {
                    "geometric" => LosModel::Geometric,
                    "iid" => LosModel::Iid,
                    _ => return Err(format!("channel.los must be `geometric` or `iid`, got `{value}`")),
                }
            }
            "noise.thermal_dbm" => s.thermal_noise_dbm = parse_num(value)?,
            "noise.quantization_dbm" => s.quantization_noise_dbm = parse_num(value)?,
            "noise.irs_dbm" => s.irs_noise_dbm = parse_num(value)?,
            "scheme.max_outer" => self.schemes.max_outer = parse_num(value)?,
            "scheme.tol" => {
                let tol: f64 = parse_num(value)?;
                if !(tol > 0.0) {
                    return Err(format!("scheme.tol must be positive, got {value}"));
                }
                self.schemes.tol = tol;
            }
            "scheme.mrt_basis" => {
                self.schemes.mrt_basis = match value {
                    "direct" => MrtBasis::Direct,
                    "effective" => MrtBasis::Effective,
                    _ => return Err(format!("scheme.mrt_basis must be `direct` or `effective`, got `{value}`")),
                }
            }
            "sweep.variable" => {
                self.sweep.variable =
                    SweepVariable::parse(value).ok_or_else(|| format!("unknown sweep variable `{value}`"))?
            }
            "sweep.values" => self.sweep.values = parse_list(value, parse_num)?,
            "sweep.schemes" => {
                self.sweep.schemes =
                    parse_list(value, |s| SchemeKind::parse(s).ok_or_else(|| format!("unknown scheme `{s}`")))?
            }
            "sweep.trials" => self.sweep.trials = parse_num(value)?,
            "sweep.output" => self.sweep.output_path = Some(PathBuf::from(value)),
            "sweep.timing" => {
                self.sweep.timing = value.parse().map_err(|_| format!("sweep.timing must be true or false, got `{value}`"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::default());
        assert_eq!(cfg.sweep.base, ScenarioConfig::default());
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = ExperimentConfig::parse("# header\nirs.b = 2   # two bits\n\nchannel.alpha_AU = 3.0\n").unwrap();
        assert_eq!(cfg.scenario.bits, 2);
        assert_eq!(cfg.scenario.exponents.ap_user, 3.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        assert_eq!(
            ExperimentConfig::parse("foo").unwrap_err(),
            ConfigError::Line { line: 1, message: "expected `key = value`, found `foo`".into() }
        );
        let err = ExperimentConfig::parse("irs.b = 2\nirs.bogus = 1").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 2, .. }));
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(matches!(ExperimentConfig::parse("irs.eta_h = 1.5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("ap.antennas = two"), Err(ConfigError::Line { line: 1, .. })));
    }

    #[test]
    fn every_known_key_parses() {
        for key in known_keys() {
            let value = match *key {
                "channel.los" => "iid",
                "scheme.mrt_basis" => "direct",
                "sweep.variable" => "num_elements_N",
                "sweep.schemes" => "proposed",
                "sweep.output" => "out.csv",
                "sweep.timing" => "false",
                "irs.eta_h" => "0.5",
                "irs.rows" => "1",
                "irs.b" | "ap.antennas" | "users.count" | "irs.elements" | "sweep.trials" => "2",
                _ => "3",
            };
            ExperimentConfig::parse(&format!("{key} = {value}")).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }

    #[test]
    fn sweep_keys() {
        let cfg = ExperimentConfig::parse(
            "sweep.variable = num_elements_N\nsweep.values = 16, 32,64\nsweep.schemes = proposed, upper_bound_continuous\nsweep.trials = 3",
        )
        .unwrap();
        assert_eq!(cfg.sweep.variable, SweepVariable::NumElementsN);
        assert_eq!(cfg.sweep.values, vec![16.0, 32.0, 64.0]);
        assert_eq!(cfg.sweep.schemes, vec![SchemeKind::Proposed, SchemeKind::UpperBoundContinuous]);
        assert_eq!(cfg.sweep.trials, 3);
        assert_eq!(cfg.sweep.max_elements(), 64);
        cfg.sweep.validate().unwrap();
    }
}
