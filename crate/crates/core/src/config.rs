//! Run configuration, read from JSON.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::ledger::ClassifierConfig;
use crate::nonlinearity::NonlinearityConfig;
use crate::reduction::ReductionConfig;
use crate::solvers::SolverConfig;
use crate::spectrum::{Domain, DomainKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Parses a length such as `3.5`, `pi`, `2pi`, `2*pi` or `pi/2`.
pub fn parse_length(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_lowercase();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (s.as_str(), None),
    };
    let numerator = match num.strip_suffix("pi") {
        Some("") => PI,
        Some(coef) => {
            coef.trim_end_matches('*')
                .parse::<f64>()
                .map_err(|_| format!("cannot parse length {text:?}"))?
                * PI
        }
        None => num
            .parse::<f64>()
            .map_err(|_| format!("cannot parse length {text:?}"))?,
    };
    match den {
        Some(d) => d
            .parse::<f64>()
            .map(|d| numerator / d)
            .map_err(|_| format!("cannot parse length {text:?}")),
        None => Ok(numerator),
    }
}

fn lengths<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Length {
        Number(f64),
        Text(String),
    }
    Vec::<Length>::deserialize(d)?
        .into_iter()
        .map(|l| match l {
            Length::Number(v) => Ok(v),
            Length::Text(s) => parse_length(&s).map_err(serde::de::Error::custom),
        })
        .collect()
}

fn default_modes() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSection {
    pub kind: DomainKind,
    /// Side lengths; strings like `"pi"` or `"pi/2"` are accepted.
    #[serde(deserialize_with = "lengths")]
    pub lengths: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Quadrature points per axis; defaults to 16 per cosine plus one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_points: Option<Vec<usize>>,
}

impl DomainSection {
    pub fn domain(&self) -> Domain {
        Domain {
            kind: self.kind,
            lengths: self.lengths.clone(),
            quad_points: self.quad_points.clone().unwrap_or_default(),
        }
    }
}

fn default_stage8_budget() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSection {
    #[serde(flatten)]
    pub classifier: ClassifierConfig,
    /// Random starts available to the deficiency-driven search.
    #[serde(default = "default_stage8_budget")]
    pub stage8_budget: usize,
}

impl Default for LedgerSection {
    fn default() -> Self {
        Self {
            classifier: ClassifierConfig::default(),
            stage8_budget: default_stage8_budget(),
        }
    }
}

fn default_report() -> String {
    "report.json".into()
}
fn default_summary() -> String {
    "summary.csv".into()
}
fn default_plot() -> String {
    "profiles.svg".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_plot")]
    pub plot: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            report: default_report(),
            summary: default_summary(),
            plot: default_plot(),
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn all_stages() -> Vec<u8> {
    (1..=9).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub domain: DomainSection,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub ledger: LedgerSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Stage numbers 1 to 9; stage 1 always runs.
    #[serde(default = "all_stages")]
    pub stages: Vec<u8>,
}

impl RunConfig {
    /// The five-zero reference instance on `[0, pi]` with 16 modes.
    pub fn ref5() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            domain: DomainSection {
                kind: DomainKind::Interval,
                lengths: vec![PI],
                modes: 16,
                quad_points: None,
            },
            nonlinearity: NonlinearityConfig::ref5(),
            solver: SolverConfig::default(),
            reduction: ReductionConfig::default(),
            ledger: LedgerSection::default(),
            output: OutputSection::default(),
            stages: all_stages(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        self.domain
            .domain()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.domain.modes < 2 {
            return Err(ConfigError::Invalid(format!(
                "domain.modes must be at least 2, got {}",
                self.domain.modes
            )));
        }
        crate::nonlinearity::NonlinearitySpec::build(&self.nonlinearity)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(s) = self.stages.iter().find(|s| !(1..=9).contains(*s)) {
            return Err(ConfigError::Invalid(format!(
                "unknown stage {s}; stages are 1 to 9"
            )));
        }
        Ok(())
    }

    pub fn runs(&self, stage: u8) -> bool {
        stage == 1 || self.stages.contains(&stage)
    }
}

/// Parses a stage list such as `2,3,4` or `2-5,7`.
pub fn parse_stages(text: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<u8>()
                .ok()
                .filter(|v| (1..=9).contains(v))
                .ok_or_else(|| format!("invalid stage {s:?}; stages are 1 to 9"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty stage range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
