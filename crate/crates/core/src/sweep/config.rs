//! Sweep configuration document.
//!
//! A single JSON document describes one experiment:
//!
//! ```json
//! {
//!   "potential": {"type": "rectangular", "V": 2.0, "b": 25.0},
//!   "energy": 1.0,
//!   "periodic": {"N": [2, 3, 5], "L": [0.5, 2.0, 10.0]},
//!   "format": "csv"
//! }
//! ```
//!
//! `energy` is either a single value or `{"min": .., "max": .., "points": ..}`.

use serde::{Deserialize, Serialize};

use crate::potential::{CantorVariant, PiecewiseConstantPotential, Segment};

/// Problem with a configuration field, reported as a one-line diagnostic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CantorKind {
    Standard,
    Svc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PotentialSpec {
    Rectangular {
        #[serde(rename = "V")]
        height: f64,
        b: f64,
    },
    Segments {
        segments: Vec<[f64; 2]>,
    },
    Cantor {
        variant: CantorKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<f64>,
        level: u32,
        #[serde(rename = "V")]
        height: f64,
        width: f64,
    },
}

impl PotentialSpec {
    /// Builds the unit cell described by this spec.
    pub fn build(&self) -> Result<PiecewiseConstantPotential, ConfigError> {
        let field = "potential";
        match self {
            PotentialSpec::Rectangular { height, b } => {
                PiecewiseConstantPotential::rectangular(*height, *b)
            }
            PotentialSpec::Segments { segments } => PiecewiseConstantPotential::from_segments(
                segments.iter().map(|&[w, v]| Segment::new(w, v)).collect(),
            ),
            PotentialSpec::Cantor {
                level,
                height,
                width,
                ..
            } => {
                PiecewiseConstantPotential::cantor(self.cantor_variant()?, *level, *height, *width)
            }
        }
        .map_err(|e| ConfigError::new(field, e.to_string()))
    }

    /// The same family member at total width `width`.
    pub fn build_with_width(&self, width: f64) -> Result<PiecewiseConstantPotential, ConfigError> {
        match self {
            PotentialSpec::Rectangular { height, .. } => PotentialSpec::Rectangular {
                height: *height,
                b: width,
            }
            .build(),
            PotentialSpec::Segments { .. } => self
                .build()?
                .scaled_to_width(width)
                .map_err(|e| ConfigError::new("thickness", e.to_string())),
            PotentialSpec::Cantor {
                variant,
                ratio,
                level,
                height,
                ..
            } => PotentialSpec::Cantor {
                variant: *variant,
                ratio: *ratio,
                level: *level,
                height: *height,
                width,
            }
            .build(),
        }
    }

    fn cantor_variant(&self) -> Result<CantorVariant, ConfigError> {
        match self {
            PotentialSpec::Cantor {
                variant: CantorKind::Standard,
                ratio,
                ..
            } => {
                let ratio = ratio.ok_or_else(|| {
                    ConfigError::new(
                        "potential.ratio",
                        "required for the standard Cantor variant",
                    )
                })?;
                Ok(CantorVariant::Standard { ratio })
            }
            PotentialSpec::Cantor {
                variant: CantorKind::Svc,
                ratio,
                ..
            } => {
                if ratio.is_some() {
                    return Err(ConfigError::new(
                        "potential.ratio",
                        "not used by the svc variant",
                    ));
                }
                Ok(CantorVariant::SmithVolterra)
            }
            _ => Err(ConfigError::new("potential.type", "expected cantor")),
        }
    }

    /// Barrier height when the spec is a single rectangle.
    pub fn rectangular_height(&self) -> Option<f64> {
        match self {
            PotentialSpec::Rectangular { height, .. } => Some(*height),
            _ => None,
        }
    }

    pub fn is_cantor(&self) -> bool {
        matches!(self, PotentialSpec::Cantor { .. })
    }

    /// Replaces the total width of a rectangular or Cantor spec.
    pub fn set_width(&mut self, new_width: f64) -> Result<(), ConfigError> {
        match self {
            PotentialSpec::Rectangular { b, .. } => *b = new_width,
            PotentialSpec::Cantor { width, .. } => *width = new_width,
            PotentialSpec::Segments { .. } => {
                return Err(ConfigError::new(
                    "b",
                    "cannot override the width of an explicit segment list",
                ))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    Single(f64),
    Grid { min: f64, max: f64, points: usize },
}

impl EnergySpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            EnergySpec::Single(e) => vec![e],
            EnergySpec::Grid { min, points, .. } if points < 2 => vec![min; points],
            EnergySpec::Grid { min, max, points } => {
                let last = (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            max
                        } else {
                            min + (max - min) * (i as f64 / last)
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            EnergySpec::Single(e) => {
                if !(e.is_finite() && e > 0.0) {
                    return Err(ConfigError::new("energy", format!("must be > 0, got {e}")));
                }
            }
            EnergySpec::Grid { min, max, points } => {
                if !(min.is_finite() && min > 0.0) {
                    return Err(ConfigError::new(
                        "energy.min",
                        format!("must be > 0, got {min}"),
                    ));
                }
                if !(max.is_finite() && max > min) {
                    return Err(ConfigError::new(
                        "energy.max",
                        format!("must exceed energy.min, got {max}"),
                    ));
                }
                if points < 2 {
                    return Err(ConfigError::new(
                        "energy.points",
                        format!("must be at least 2, got {points}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    #[serde(rename = "N")]
    pub repetitions: Vec<usize>,
    #[serde(rename = "L")]
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FractalMode {
    Ttime,
    Hartman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_saturation")]
    pub saturation: f64,
}

fn default_saturation() -> f64 {
    crate::spm::SATURATION_TOLERANCE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            saturation: default_saturation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_step: Option<f64>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractal_mode: Option<FractalMode>,
}

/// What a subcommand needs from the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Requirements {
    pub energy: bool,
    pub single_energy: bool,
    pub periodic: bool,
    pub thickness: bool,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = if msg.contains("EnergySpec") {
                "energy".to_string()
            } else {
                backticked(&msg).unwrap_or_else(|| "<document>".to_string())
            };
            ConfigError::new(field, msg)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn energies(&self) -> Vec<f64> {
        self.energy
            .as_ref()
            .map(EnergySpec::values)
            .unwrap_or_default()
    }

    pub fn validate(&self, needs: Requirements) -> Result<(), ConfigError> {
        self.potential.build()?;
        match &self.energy {
            Some(e) => {
                e.validate()?;
                if needs.single_energy && !matches!(e, EnergySpec::Single(_)) {
                    return Err(ConfigError::new(
                        "energy",
                        "this subcommand takes a single energy",
                    ));
                }
            }
            None if needs.energy || needs.single_energy => {
                return Err(ConfigError::new("energy", "missing"))
            }
            None => {}
        }
        if let Some(h) = self.derivative_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::new(
                    "derivative_step",
                    format!("must be > 0, got {h}"),
                ));
            }
        }
        if !(self.tolerance.saturation.is_finite() && self.tolerance.saturation > 0.0) {
            return Err(ConfigError::new("tolerance.saturation", "must be > 0"));
        }
        if needs.periodic {
            let grid = self
                .periodic
                .as_ref()
                .ok_or_else(|| ConfigError::new("periodic", "missing"))?;
            if grid.repetitions.is_empty() {
                return Err(ConfigError::new("periodic.N", "must be non-empty"));
            }
            if grid.repetitions.contains(&0) {
                return Err(ConfigError::new("periodic.N", "entries must be >= 1"));
            }
            if grid.gaps.is_empty() {
                return Err(ConfigError::new("periodic.L", "must be non-empty"));
            }
            if let Some(l) = grid.gaps.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
                return Err(ConfigError::new(
                    "periodic.L",
                    format!("entries must be >= 0, got {l}"),
                ));
            }
        }
        if needs.thickness {
            let grid = self
                .thickness
                .as_ref()
                .ok_or_else(|| ConfigError::new("thickness", "missing"))?;
            if grid.len() < 4 {
                return Err(ConfigError::new("thickness", "needs at least 4 values"));
            }
            if grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return Err(ConfigError::new("thickness", "values must be > 0"));
            }
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(ConfigError::new("thickness", "must be strictly increasing"));
            }
        }
        Ok(())
    }
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}
