//! The versioned JSON record of a run.

use convex_core::body::BodyFile;
use convex_core::covering::CoveringProfile;
use convex_core::inequalities::SweepTable;
use convex_core::{InequalityRecord, PositionReport, RegularityProfile, ScanReport};
use serde::{Deserialize, Serialize};

use crate::config::{Command, ExperimentConfig, PositionMode};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub config_hash: String,
    pub crate_version: String,
    pub command: Command,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyRecord {
    pub id: String,
    pub body: BodyFile,
    pub volume: Option<f64>,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRecord {
    pub body_id: String,
    pub mode: PositionMode,
    pub report: PositionReport,
    pub profile: Option<RegularityProfile>,
    pub body: BodyFile,
    /// `exact` for pure positioning, `sampled` when a covering profile was estimated.
    pub method: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub body_id: String,
    pub report: ScanReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub body_id: String,
    pub against_id: String,
    pub samples: usize,
    pub seed: u64,
    pub profile: CoveringProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Records {
    pub bodies: Vec<BodyRecord>,
    pub positions: Vec<PositionRecord>,
    pub scans: Vec<ScanRecord>,
    pub profiles: Vec<ProfileRecord>,
    pub inequalities: Vec<InequalityRecord>,
    pub sweeps: Vec<SweepTable>,
}

impl Records {
    pub fn len(&self) -> usize {
        self.bodies.len()
            + self.positions.len()
            + self.scans.len()
            + self.profiles.len()
            + self.inequalities.len()
            + self.sweeps.iter().map(|s| s.rows.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Constant-free inequality violations, including sweep cells.
    pub fn failures(&self) -> usize {
        self.inequalities.iter().filter(|r| r.failed()).count() + self.sweeps.iter().map(|s| s.failures()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub records: usize,
    pub failures: usize,
    /// Per-item errors that did not abort the run.
    pub errors: Vec<String>,
    /// Items not applicable to the requested parameters.
    pub skipped: Vec<String>,
    /// Some items failed to execute.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub config: ExperimentConfig,
    pub records: Records,
    pub summary: Summary,
}

impl ReportBundle {
    pub fn new(config: &ExperimentConfig, records: Records, errors: Vec<String>, skipped: Vec<String>) -> Self {
        let summary = Summary { records: records.len(), failures: records.failures(), partial: !errors.is_empty(), errors, skipped };
        ReportBundle {
            metadata: RunMetadata {
                schema_version: SCHEMA_VERSION,
                config_hash: config.hash(),
                crate_version: env!("CARGO_PKG_VERSION").into(),
                command: config.command,
                seed: config.seed,
            },
            config: config.clone(),
            records,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialises")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let b: ReportBundle = serde_json::from_str(text)?;
        if b.metadata.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "metadata.schema_version",
                format!("bundle has schema {}, this build reads {SCHEMA_VERSION}", b.metadata.schema_version),
            ));
        }
        Ok(b)
    }

    /// 0 all-pass, 2 constant-free violation, 3 partial execution failure.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failures > 0 {
            2
        } else if self.summary.partial {
            3
        } else {
            0
        }
    }
}
