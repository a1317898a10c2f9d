//! TOML configuration files.
//!
//! Robot file:
//!
//! ```toml
//! [[section]]              # exactly four, base to tip; omit for the defaults
//! backbone_length = 0.24   # m
//! actuator_pitch_radius = 0.02
//! skin_radius = 0.02
//! trailing_offset = 0.05   # 0 for the last section
//!
//! [bounds]
//! contraction_strain = 0.05
//! extension_strain = 0.35
//! ```
//!
//! Gait file: `[gait]` (with `kind = "sidewinding"` or `kind = "rolling"`),
//! `[ik]`, `[pressure]`, `[schedule]`, `[run]` and `[sweep]`; every table and
//! key is optional and falls back to its default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::actuation::{ControlSchedule, PressureMap};
use crate::gait::GaitSpec;
use crate::ik::IkSettings;
use crate::kinematics::{JointBounds, RobotConfig, SectionConfig, SECTION_COUNT};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotFile {
    pub section: Vec<SectionConfig>,
    pub bounds: JointBounds,
}

impl RobotFile {
    pub fn to_config(&self) -> Result<RobotConfig, ConfigError> {
        let mut config = RobotConfig::default().with_bounds(self.bounds);
        match self.section.len() {
            0 => {}
            SECTION_COUNT => config.sections.copy_from_slice(&self.section),
            n => {
                return Err(ConfigError::Invalid(format!(
                    "expected {SECTION_COUNT} [[section]] tables, found {n}"
                )))
            }
        }
        config.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(config)
    }
}

/// Output-stage options of `run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Multiplier on joint amplitudes before pressure mapping.
    pub amplitude_scale: f64,
    /// Replay frequency in hertz; the gait period is used when absent.
    pub frequency: Option<f64>,
    /// Largest tolerated fraction of non-converged IK frames.
    pub max_nonconverged_fraction: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            amplitude_scale: 1.0,
            frequency: None,
            max_nonconverged_fraction: 0.0,
        }
    }
}

/// Inclusive range `start, start + step, …, stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "sweep range {} to {} step {} is empty or malformed",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// Pressure ceiling × replay frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Bar.
    pub ceilings: SweepRange,
    /// Hertz.
    pub frequencies: SweepRange,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            ceilings: SweepRange {
                start: 3.0,
                stop: 4.0,
                step: 0.25,
            },
            frequencies: SweepRange {
                start: 0.25,
                stop: 1.0,
                step: 0.05,
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitFile {
    pub gait: GaitSpec,
    pub ik: IkSettings,
    pub pressure: PressureMap,
    pub schedule: ControlSchedule,
    pub run: RunSettings,
    pub sweep: SweepSettings,
}

impl GaitFile {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.gait.validate().map_err(|e| invalid(&e))?;
        self.ik.validate().map_err(|e| invalid(&e))?;
        self.pressure.validate().map_err(|e| invalid(&e))?;
        self.schedule.validate().map_err(|e| invalid(&e))?;
        if !(self.run.amplitude_scale >= 0.0 && self.run.amplitude_scale.is_finite()) {
            return Err(ConfigError::Invalid("amplitude_scale must be non-negative".into()));
        }
        if let Some(f) = self.run.frequency {
            if !(f > 0.0 && f.is_finite()) {
                return Err(ConfigError::Invalid(format!("frequency must be positive, got {f}")));
            }
        }
        if !(0.0..=1.0).contains(&self.run.max_nonconverged_fraction) {
            return Err(ConfigError::Invalid("max_nonconverged_fraction must lie in [0, 1]".into()));
        }
        self.sweep.ceilings.values()?;
        self.sweep.frequencies.values()?;
        Ok(())
    }
}

/// A loaded file with the SHA-256 of its bytes.
#[derive(Clone, Debug)]
pub struct Loaded<T> {
    pub value: T,
    pub sha256: String,
    pub source: Option<PathBuf>,
}

impl<T: Default> Loaded<T> {
    pub fn builtin() -> Self {
        Self {
            value: T::default(),
            sha256: "builtin".to_string(),
            source: None,
        }
    }
}

fn read(path: &Path) -> Result<(String, String), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((text, hash))
}

pub fn parse_robot(text: &str) -> Result<RobotConfig, ConfigError> {
    let file: RobotFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<string>"),
        message: e.to_string(),
    })?;
    file.to_config()
}

pub fn parse_gait(text: &str) -> Result<GaitFile, ConfigError> {
    let file: GaitFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<string>"),
        message: e.to_string(),
    })?;
    file.validate()?;
    Ok(file)
}

fn with_path(e: ConfigError, path: &Path) -> ConfigError {
    match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    }
}

pub fn load_robot(path: &Path) -> Result<Loaded<RobotConfig>, ConfigError> {
    let (text, sha256) = read(path)?;
    Ok(Loaded {
        value: parse_robot(&text).map_err(|e| with_path(e, path))?,
        sha256,
        source: Some(path.to_path_buf()),
    })
}

pub fn load_gait(path: &Path) -> Result<Loaded<GaitFile>, ConfigError> {
    let (text, sha256) = read(path)?;
    Ok(Loaded {
        value: parse_gait(&text).map_err(|e| with_path(e, path))?,
        sha256,
        source: Some(path.to_path_buf()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{GaitKind, RollingParams};

    #[test]
    fn empty_files_give_defaults() {
        assert_eq!(parse_robot("").unwrap(), RobotConfig::default());
        let g = parse_gait("").unwrap();
        assert_eq!(g, GaitFile::default());
        assert_eq!(g.gait.kind(), GaitKind::Sidewinding);
    }

    #[test]
    fn rolling_gait_with_overrides() {
        let g = parse_gait(
            r#"
            [gait]
            kind = "rolling"
            section_phase = 0.0
            arc_angle = 0.4

            [ik]
            seed = 7

            [schedule]
            rate = 50
            "#,
        )
        .unwrap();
        assert_eq!(
            g.gait,
            GaitSpec::Rolling(RollingParams {
                arc_angle: 0.4,
                ..RollingParams::planar()
            })
        );
        assert_eq!(g.ik.seed, 7);
        assert_eq!(g.schedule.rate, 50.0);
        assert_eq!(g.schedule.duration, 12.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(parse_gait("[gait]\nkind = \"sidewinding\"\namplitude = 1").is_err());
        assert!(parse_gait("[pressure]\nbias = 9").is_err());
        assert!(parse_gait("[gait]\nkind = \"crawl\"").is_err());
        assert!(parse_robot("[[section]]\nbackbone_length = 0.2").is_err());
    }

    #[test]
    fn four_sections_replace_the_geometry() {
        let one = "[[section]]\nbackbone_length = 0.2\nactuator_pitch_radius = 0.02\nskin_radius = 0.025\ntrailing_offset = 0.04\n";
        let r = parse_robot(&one.repeat(4)).unwrap();
        assert!((r.bending_length() - 0.8).abs() < 1e-12);
        assert!((r.total_length() - 0.96).abs() < 1e-12);
    }

    #[test]
    fn sweep_ranges_are_inclusive() {
        let s = SweepSettings::default();
        assert_eq!(s.ceilings.values().unwrap(), vec![3.0, 3.25, 3.5, 3.75, 4.0]);
        let f = s.frequencies.values().unwrap();
        assert_eq!(f.len(), 16);
        assert!((f[15] - 1.0).abs() < 1e-12);
        assert_eq!(SweepRange::single(0.5).values().unwrap(), vec![0.5]);
    }
}
