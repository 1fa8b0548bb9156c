//! Flat `key=value` run configuration.
//!
//! Keys are grouped by prefix: `fw.*` for the Frank-Wolfe solver, `ialm.*`
//! for the IALM baselines and `synth.*` for the synthetic scene. Blank lines
//! and `#` comments are ignored. Later assignments override earlier ones,
//! which is how command-line flags are applied.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use bgsub_core::video::{Cleanup, FrameFormat, DEFAULT_THRESHOLD};
use bgsub_core::{FwConfig, IalmConfig, StepRule};
use serde::{Deserialize, Serialize};

use crate::synth::SyntheticSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// `(key, value)` pairs in file order.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

/// `a,b` pairs.
pub fn parse_pair<T: FromStr>(key: &str, value: &str) -> Result<(T, T), ConfigError> {
    let bad = || ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    let (a, b) = value.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Frmc,
    RpcaIalm,
    RmcIalm,
}

impl FromStr for SolverKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "frmc" => Ok(SolverKind::Frmc),
            "rpca-ialm" => Ok(SolverKind::RpcaIalm),
            "rmc-ialm" => Ok(SolverKind::RmcIalm),
            _ => Err(ConfigError::BadValue {
                key: "solver".into(),
                value: s.into(),
            }),
        }
    }
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Frmc => "frmc",
            SolverKind::RpcaIalm => "rpca-ialm",
            SolverKind::RmcIalm => "rmc-ialm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(ConfigError::BadValue {
                key: "format".into(),
                value: s.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Synthetic(SyntheticSpec),
    Frames {
        path: PathBuf,
        format: FrameFormat,
        /// Directory of ground-truth mask PGMs, if any.
        truth: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub solver: SolverKind,
    pub fw: FwConfig,
    pub ialm: IalmConfig,
    pub threshold: f64,
    pub cleanup: Cleanup,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub seed: u64,
    pub repeat: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: Input::Synthetic(SyntheticSpec::timing_default()),
            solver: SolverKind::Frmc,
            fw: FwConfig::default(),
            ialm: IalmConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            cleanup: Cleanup::Median3,
            out: None,
            format: ReportFormat::Json,
            seed: 0,
            repeat: 3,
        }
    }
}

impl RunConfig {
    /// Applies `pairs` on top of the defaults.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut builder = Builder::default();
        for (k, v) in pairs {
            builder.set(k, v)?;
        }
        builder.finish()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_key_values(text)?)
    }

    /// Settings that determine the result, as `key -> value`. The output
    /// directory and report format are not part of it.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        let opt = |x: Option<f64>| x.map_or_else(|| "auto".to_string(), |v| v.to_string());
        match &self.input {
            Input::Synthetic(s) => {
                put("input", "synthetic".into());
                put("synth.width", s.width.to_string());
                put("synth.height", s.height.to_string());
                put("synth.frame_count", s.frame_count.to_string());
                put("synth.background_rank", s.background_rank.to_string());
                put("synth.block_width", s.block_width.to_string());
                put("synth.block_height", s.block_height.to_string());
                put("synth.block_intensity", s.block_intensity.to_string());
                put("synth.block_velocity", format!("{},{}", s.block_velocity.0, s.block_velocity.1));
                put("synth.block_origin", format!("{},{}", s.block_origin.0, s.block_origin.1));
                put("synth.noise_sigma", s.noise_sigma.to_string());
            }
            Input::Frames { path, format, truth } => {
                put("input", path.display().to_string());
                put(
                    "input_format",
                    match format {
                        FrameFormat::PgmDir => "pgm-dir".into(),
                        FrameFormat::RawPlanar => "raw-planar".into(),
                    },
                );
                if let Some(t) = truth {
                    put("truth", t.display().to_string());
                }
            }
        }
        put("solver", self.solver.name().into());
        put("threshold", self.threshold.to_string());
        put(
            "cleanup",
            match self.cleanup {
                Cleanup::None => "none".into(),
                Cleanup::Median3 => "median3".into(),
            },
        );
        put("seed", self.seed.to_string());
        put("repeat", self.repeat.to_string());
        let fw = &self.fw;
        put("fw.delta", opt(fw.delta));
        put("fw.gamma1", fw.gamma1.to_string());
        put("fw.gamma2", fw.gamma2.to_string());
        put("fw.lipschitz", fw.lipschitz.to_string());
        put("fw.diameter", opt(fw.diameter));
        put("fw.max_iter", fw.max_iter.to_string());
        put("fw.gap_tol", fw.gap_tol.to_string());
        put(
            "fw.step_rule",
            match fw.step_rule {
                StepRule::ExactLineSearch => "exact-line-search".into(),
                StepRule::Harmonic => "harmonic".into(),
            },
        );
        put("fw.rank_tol", fw.rank_tol.to_string());
        put("fw.boundary_tol", fw.boundary_tol.to_string());
        put("fw.in_face", fw.in_face.to_string());
        let ialm = &self.ialm;
        put("ialm.lambda", opt(ialm.lambda));
        put("ialm.rho0", opt(ialm.rho0));
        put("ialm.rho_scale", ialm.rho_scale.to_string());
        put("ialm.rho_max", opt(ialm.rho_max));
        put("ialm.primal_tol", ialm.primal_tol.to_string());
        put("ialm.max_iter", ialm.max_iter.to_string());
        m
    }
}

#[derive(Default)]
struct Builder {
    config: RunConfig,
    input: Option<String>,
    input_format: Option<FrameFormat>,
    truth: Option<PathBuf>,
    synth: Vec<(String, String)>,
}

impl Builder {
    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let c = &mut self.config;
        if let Some(k) = key.strip_prefix("synth.") {
            self.synth.push((k.to_string(), value.to_string()));
            return Ok(());
        }
        match key {
            "input" => self.input = Some(value.to_string()),
            "input_format" => {
                self.input_format = Some(match value {
                    "pgm-dir" => FrameFormat::PgmDir,
                    "raw-planar" => FrameFormat::RawPlanar,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                })
            }
            "truth" => self.truth = Some(PathBuf::from(value)),
            "solver" => c.solver = value.parse()?,
            "threshold" => c.threshold = parse_value(key, value)?,
            "cleanup" => {
                c.cleanup = match value {
                    "none" => Cleanup::None,
                    "median3" => Cleanup::Median3,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "out" => c.out = Some(PathBuf::from(value)),
            "format" => c.format = value.parse()?,
            "seed" => c.seed = parse_value(key, value)?,
            "repeat" => c.repeat = parse_value(key, value)?,
            "fw.delta" => c.fw.delta = parse_optional(key, value)?,
            "fw.gamma1" => c.fw.gamma1 = parse_value(key, value)?,
            "fw.gamma2" => c.fw.gamma2 = parse_value(key, value)?,
            "fw.lipschitz" => c.fw.lipschitz = parse_value(key, value)?,
            "fw.diameter" => c.fw.diameter = parse_optional(key, value)?,
            "fw.max_iter" => c.fw.max_iter = parse_value(key, value)?,
            "fw.gap_tol" => c.fw.gap_tol = parse_value(key, value)?,
            "fw.step_rule" => {
                c.fw.step_rule = match value {
                    "exact-line-search" => StepRule::ExactLineSearch,
                    "harmonic" => StepRule::Harmonic,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "fw.rank_tol" => c.fw.rank_tol = parse_value(key, value)?,
            "fw.boundary_tol" => c.fw.boundary_tol = parse_value(key, value)?,
            "fw.in_face" => c.fw.in_face = parse_value(key, value)?,
            "ialm.lambda" => c.ialm.lambda = parse_optional(key, value)?,
            "ialm.rho0" => c.ialm.rho0 = parse_optional(key, value)?,
            "ialm.rho_scale" => c.ialm.rho_scale = parse_value(key, value)?,
            "ialm.rho_max" => c.ialm.rho_max = parse_optional(key, value)?,
            "ialm.primal_tol" => c.ialm.primal_tol = parse_value(key, value)?,
            "ialm.max_iter" => c.ialm.max_iter = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn finish(mut self) -> Result<RunConfig, ConfigError> {
        let synthetic = self.input.as_deref().is_none_or(|i| i == "synthetic");
        self.config.input = if synthetic {
            if self.input_format.is_some() || self.truth.is_some() {
                return Err(ConfigError::Invalid(
                    "input_format and truth apply to file input, not the synthetic scene".into(),
                ));
            }
            let mut spec = SyntheticSpec::timing_default();
            for (k, v) in &self.synth {
                spec.set(k, v)?;
            }
            spec.validate()?;
            Input::Synthetic(spec)
        } else {
            if !self.synth.is_empty() {
                return Err(ConfigError::Invalid(
                    "give either a file input or synth.* keys, not both".into(),
                ));
            }
            Input::Frames {
                path: PathBuf::from(self.input.expect("checked above")),
                format: self.input_format.unwrap_or(FrameFormat::PgmDir),
                truth: self.truth,
            }
        };
        let c = &self.config;
        c.fw.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.ialm.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(c.threshold > 0.0 && c.threshold < 1.0) {
            return Err(ConfigError::Invalid("threshold must lie in (0, 1)".into()));
        }
        if c.repeat == 0 {
            return Err(ConfigError::Invalid("repeat must be at least 1".into()));
        }
        Ok(self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_echo() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        let pairs: Vec<(String, String)> = c.echo().into_iter().collect();
        assert_eq!(RunConfig::from_pairs(&pairs).unwrap(), c);
    }

    #[test]
    fn later_keys_override() {
        let c = RunConfig::parse("solver=rpca-ialm\nsolver=rmc-ialm\nfw.delta=3.5 # radius\n").unwrap();
        assert_eq!(c.solver, SolverKind::RmcIalm);
        assert_eq!(c.fw.delta, Some(3.5));
    }

    #[test]
    fn rejects_two_inputs_and_bad_values() {
        assert!(RunConfig::parse("input=frames/\nsynth.width=8").is_err());
        assert!(matches!(RunConfig::parse("nope=1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse("threshold=abc"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RunConfig::parse("threshold"), Err(ConfigError::Syntax { line: 1 })));
        assert!(RunConfig::parse("fw.gamma1=0.5\nfw.gamma2=0.1").is_err());
    }

    #[test]
    fn file_input() {
        let c = RunConfig::parse("input=data/video\ninput_format=raw-planar\ntruth=data/gt").unwrap();
        assert_eq!(
            c.input,
            Input::Frames {
                path: "data/video".into(),
                format: FrameFormat::RawPlanar,
                truth: Some("data/gt".into()),
            }
        );
    }
}
