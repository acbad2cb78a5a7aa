//! The JSON configuration document consumed by the CLI.
//!
//! ```json
//! {
//!   "memory":   { "n": 64, "m": 1, "ports": 1 },
//!   "field":    { "m": 1, "poly": "0x3" },
//!   "lfsr":     { "taps": [1, 1] },
//!   "schedule": [
//!     { "init": [0, 1],
//!       "trajectory": { "kind": "ascending" },
//!       "compare": "oracle",
//!       "port_mode": "single",
//!       "lane_mode": { "kind": "whole_word" } }
//!   ],
//!   "universe": { "classes": ["stuck_at"], "d_max": null }
//! }
//! ```
//!
//! The register is given either as explicit `taps` or as a raw `generator`
//! coefficient list (normalized by the leading coefficient). Unknown keys
//! anywhere in the document are rejected. `universe` is only needed by the
//! campaign and search commands.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{CampaignError, FaultClass, FaultUniverse};
use crate::galois::{FieldSpec, GaloisError, GfElement};
use crate::lfsr::{LfsrDef, LfsrError, LfsrState};
use crate::memory::{MemoryConfig, MemoryError};
use crate::pi::{CompareMode, LaneMode, PiTestConfig, PortMode, Trajectory};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignDocument {
    pub memory: MemorySection,
    pub field: FieldSection,
    pub lfsr: LfsrSection,
    pub schedule: Vec<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<UniverseSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorySection {
    pub n: usize,
    pub m: u8,
    #[serde(default = "default_ports")]
    pub ports: u8,
}

fn default_ports() -> u8 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub m: u8,
    /// Reduction polynomial as a hex bitmask, e.g. `"0x13"`.
    pub poly: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfsrSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub init: Vec<u32>,
    #[serde(default = "TrajectorySection::ascending")]
    pub trajectory: TrajectorySection,
    /// `"oracle"` (default) or `"ring"`.
    #[serde(default = "default_compare")]
    pub compare: String,
    /// `"single"` (default) or `"dual"`.
    #[serde(default = "default_port_mode")]
    pub port_mode: String,
    #[serde(default = "LaneModeSection::whole_word")]
    pub lane_mode: LaneModeSection,
}

fn default_compare() -> String {
    "oracle".to_string()
}

fn default_port_mode() -> String {
    "single".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// `"ascending"`, `"descending"` or `"random"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TrajectorySection {
    fn ascending() -> Self {
        Self {
            kind: "ascending".to_string(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneModeSection {
    /// `"whole_word"`, `"parallel"` or `"random"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LaneModeSection {
    fn whole_word() -> Self {
        Self {
            kind: "whole_word".to_string(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseSection {
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<usize>,
}

/// The document translated into engine types.
#[derive(Debug, Clone)]
pub struct RealizedConfig {
    pub memory: MemoryConfig,
    pub field: FieldSpec,
    pub lfsr: LfsrDef,
    pub schedule: Vec<PiTestConfig>,
    pub universe: Option<FaultUniverse>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON for this schema: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad polynomial literal {0:?}: expected a hex bitmask like \"0x13\"")]
    BadPoly(String),
    #[error("field width {field} does not match memory cell width {mem}")]
    FieldWidthMismatch { field: u8, mem: u8 },
    #[error("lfsr section needs exactly one of `taps` or `generator`")]
    TapsOrGenerator,
    #[error("unknown {what} {got:?}; expected one of {allowed}")]
    UnknownKind {
        what: &'static str,
        got: String,
        allowed: &'static str,
    },
    #[error("{0} of kind \"random\" needs a `seed`")]
    MissingSeed(&'static str),
    #[error("config names no universe section")]
    NoUniverse,
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error(transparent)]
    Lfsr(#[from] LfsrError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

/// Parses a hex polynomial literal with optional `0x`/`0X` prefix.
pub fn parse_poly(text: &str) -> Result<u32, ConfigError> {
    let digits = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    u32::from_str_radix(digits, 16).map_err(|_| ConfigError::BadPoly(text.to_string()))
}

impl CampaignDocument {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    /// Validates the document and builds the engine-side objects.
    pub fn realize(&self) -> Result<RealizedConfig, ConfigError> {
        let memory = MemoryConfig::new(self.memory.n, self.memory.m, self.memory.ports)?;
        let field = FieldSpec::new(self.field.m, parse_poly(&self.field.poly)?)?;
        if field.width() != memory.m {
            return Err(ConfigError::FieldWidthMismatch {
                field: field.width(),
                mem: memory.m,
            });
        }

        let lfsr = match (&self.lfsr.taps, &self.lfsr.generator) {
            (Some(taps), None) => {
                let taps = elements(&field, taps)?;
                LfsrDef::new(field, taps)?
            }
            (None, Some(coeffs)) => {
                let coeffs = elements(&field, coeffs)?;
                LfsrDef::from_generator(field, &coeffs)?
            }
            _ => return Err(ConfigError::TapsOrGenerator),
        };

        let mut schedule = Vec::with_capacity(self.schedule.len());
        for entry in &self.schedule {
            let init = LfsrState::new(elements(&field, &entry.init)?);
            let trajectory = match entry.trajectory.kind.as_str() {
                "ascending" => Trajectory::Ascending,
                "descending" => Trajectory::Descending,
                "random" => Trajectory::Random {
                    seed: entry
                        .trajectory
                        .seed
                        .ok_or(ConfigError::MissingSeed("trajectory"))?,
                },
                other => {
                    return Err(ConfigError::UnknownKind {
                        what: "trajectory kind",
                        got: other.to_string(),
                        allowed: "ascending, descending, random",
                    })
                }
            };
            let compare = match entry.compare.as_str() {
                "oracle" => CompareMode::OracleCompare,
                "ring" => CompareMode::RingCompare,
                other => {
                    return Err(ConfigError::UnknownKind {
                        what: "compare mode",
                        got: other.to_string(),
                        allowed: "oracle, ring",
                    })
                }
            };
            let port_mode = match entry.port_mode.as_str() {
                "single" => PortMode::SinglePort,
                "dual" => PortMode::DualPort,
                other => {
                    return Err(ConfigError::UnknownKind {
                        what: "port mode",
                        got: other.to_string(),
                        allowed: "single, dual",
                    })
                }
            };
            let lane_mode = match entry.lane_mode.kind.as_str() {
                "whole_word" => LaneMode::WholeWord,
                "parallel" => LaneMode::ParallelLanes,
                "random" => LaneMode::RandomLanes {
                    seed: entry
                        .lane_mode
                        .seed
                        .ok_or(ConfigError::MissingSeed("lane_mode"))?,
                },
                other => {
                    return Err(ConfigError::UnknownKind {
                        what: "lane mode",
                        got: other.to_string(),
                        allowed: "whole_word, parallel, random",
                    })
                }
            };
            schedule.push(PiTestConfig {
                field,
                lfsr: lfsr.clone(),
                init,
                trajectory,
                compare,
                port_mode,
                lane_mode,
            });
        }

        let universe = match &self.universe {
            None => None,
            Some(section) => {
                let mut classes = Vec::with_capacity(section.classes.len());
                for name in &section.classes {
                    classes.push(name.parse::<FaultClass>()?);
                }
                Some(FaultUniverse::new(memory, &classes, section.d_max)?)
            }
        };

        Ok(RealizedConfig {
            memory,
            field,
            lfsr,
            schedule,
            universe,
        })
    }
}

fn elements(field: &FieldSpec, values: &[u32]) -> Result<Vec<GfElement>, ConfigError> {
    values
        .iter()
        .map(|&v| field.element(v).map_err(ConfigError::from))
        .collect()
}
