//! Experiment configuration: what to run, on which bodies, with which seeds.

use std::path::{Path, PathBuf};

use convex_core::models::ModelFamily;
use convex_core::{BodyHandle, InequalityKind, ModelSpec, Tolerances};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CONVEX_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Gen,
    Position,
    Scan,
    Cover,
    Check,
    Report,
}

/// A body read from disk or generated from a recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodySource {
    File { file: PathBuf },
    Model(ModelSpec),
}

impl BodySource {
    pub fn id(&self) -> String {
        match self {
            BodySource::File { file } => file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "body".into()),
            BodySource::Model(spec) => spec.id(),
        }
    }

    pub fn load(&self) -> CliResult<BodyHandle> {
        match self {
            BodySource::File { file } => {
                let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
                Ok(BodyHandle::from_json(&text)?)
            }
            BodySource::Model(spec) => Ok(spec.build()?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PositionMode {
    #[default]
    Santalo,
    #[serde(alias = "centre")]
    Barycentre,
    Isotropic,
    /// Santaló position followed by the regularisation pipeline.
    Regularize,
    /// Barycentre position followed by the regularisation pipeline.
    RegularizeCentred,
}

/// A family-wide inequality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: ModelFamily,
    pub ns: Vec<usize>,
    #[serde(default)]
    pub ls: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub dedup: Option<f64>,
    #[serde(default)]
    pub exact_cap: Option<usize>,
}

impl ToleranceOverrides {
    pub fn apply(&self, body: BodyHandle) -> BodyHandle {
        if self.dedup.is_none() && self.exact_cap.is_none() {
            return body;
        }
        let base = body.tolerances();
        body.with_tolerances(Tolerances { dedup: self.dedup.unwrap_or(base.dedup), exact_cap: self.exact_cap.unwrap_or(base.exact_cap) })
    }
}

fn default_tgrid() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0, 32.0]
}

fn default_samples() -> usize {
    10_000
}

fn default_subspaces() -> usize {
    10
}

/// Everything a run depends on. Identical configs give identical bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub bodies: Vec<BodySource>,
    /// Second body for `cover` (default: the unit ball).
    #[serde(default)]
    pub against: Option<BodySource>,
    #[serde(default = "default_tgrid")]
    pub tgrid: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Subspace dimension for `scan` and `check`.
    #[serde(default)]
    pub l: Option<usize>,
    /// Random subspaces per body for `check`.
    #[serde(default = "default_subspaces")]
    pub subspaces: usize,
    /// Inequality name for `check`, or `all` for the whole suite.
    #[serde(default)]
    pub inequality: Option<String>,
    #[serde(default)]
    pub position: Option<PositionMode>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    /// Input bundle for `report`.
    #[serde(default)]
    pub bundle: Option<PathBuf>,
    /// Views emitted as CSV (default: every view with records).
    #[serde(default)]
    pub views: Vec<String>,
    /// Where outputs go; not part of the run's identity, so never serialised or hashed.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            bodies: Vec::new(),
            against: None,
            tgrid: default_tgrid(),
            samples: default_samples(),
            seed: None,
            l: None,
            subspaces: default_subspaces(),
            inequality: None,
            position: None,
            sweep: None,
            tolerances: None,
            bundle: None,
            views: Vec::new(),
            out_dir: None,
        }
    }

    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Output directory: explicit, else the environment default, else `./out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn inequality_kinds(&self) -> CliResult<Vec<InequalityKind>> {
        match self.inequality.as_deref() {
            None => Err(CliError::invalid("inequality", "required for check")),
            Some("all") => Ok(InequalityKind::ALL.to_vec()),
            Some("constant-free") | Some("constant_free") => Ok(InequalityKind::CONSTANT_FREE.to_vec()),
            Some(name) => name
                .split(',')
                .map(|s| s.trim().parse::<InequalityKind>().map_err(|e| CliError::invalid("inequality", e.to_string())))
                .collect(),
        }
    }

    fn stochastic(&self) -> bool {
        match self.command {
            Command::Scan | Command::Cover => true,
            Command::Position => matches!(self.position, Some(PositionMode::Regularize | PositionMode::RegularizeCentred)),
            Command::Check => true,
            Command::Gen | Command::Report => false,
        }
    }

    /// Checks the config, naming the offending field.
    pub fn validate(&self) -> CliResult<()> {
        if self.stochastic() && self.seed.is_none() {
            return Err(CliError::invalid("seed", "mandatory for sampled steps"));
        }
        if self.tgrid.is_empty() {
            return Err(CliError::invalid("tgrid", "must be non-empty"));
        }
        if self.tgrid.windows(2).any(|w| !(w[0] < w[1])) || self.tgrid.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::invalid("tgrid", "must be positive and strictly increasing"));
        }
        if self.samples == 0 {
            return Err(CliError::invalid("samples", "must be positive"));
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if let BodySource::Model(spec) = b {
                if spec.n == 0 {
                    return Err(CliError::invalid(format!("bodies[{i}].n"), "must be ≥ 1"));
                }
                if spec.family == ModelFamily::RandomVertexPolytope {
                    let m = spec.m.unwrap_or(2 * spec.n);
                    if m < spec.n + 1 {
                        return Err(CliError::invalid(format!("bodies[{i}].m"), "random polytopes need m ≥ n + 1"));
                    }
                }
            }
        }
        match self.command {
            Command::Gen | Command::Position | Command::Scan | Command::Cover => {
                if self.bodies.is_empty() {
                    return Err(CliError::invalid("bodies", "at least one body is required"));
                }
            }
            Command::Check => {
                self.inequality_kinds()?;
                if self.bodies.is_empty() && self.sweep.is_none() {
                    return Err(CliError::invalid("bodies", "give bodies or a sweep"));
                }
                if let Some(s) = &self.sweep {
                    if s.ns.is_empty() {
                        return Err(CliError::invalid("sweep.ns", "must be non-empty"));
                    }
                }
            }
            Command::Report => {
                if self.bundle.is_none() {
                    return Err(CliError::invalid("bundle", "report needs an input bundle"));
                }
            }
        }
        if self.command == Command::Scan && self.l.is_none() {
            return Err(CliError::invalid("l", "scan needs a subspace dimension"));
        }
        if self.command == Command::Gen {
            if let Some(i) = self.bodies.iter().position(|b| matches!(b, BodySource::File { .. })) {
                return Err(CliError::invalid(format!("bodies[{i}]"), "gen takes model specs, not files"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_fields() {
        let mut c = ExperimentConfig::new(Command::Scan);
        c.bodies.push(BodySource::Model(ModelSpec::new(ModelFamily::Cube, 3)));
        c.l = Some(2);
        let err = c.validate().unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "seed"));
        c.seed = Some(1);
        c.tgrid = vec![4.0, 2.0];
        assert!(matches!(c.validate().unwrap_err(), CliError::Validation { ref field, .. } if field == "tgrid"));
        c.tgrid = vec![2.0];
        c.validate().unwrap();
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let mut a = ExperimentConfig::new(Command::Gen);
        a.bodies.push(BodySource::Model(ModelSpec::new(ModelFamily::RegularSimplex, 4)));
        let b = a.clone();
        assert_eq!(a.hash(), b.hash());
        a.out_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        a.seed = Some(3);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{"command": "check", "inequality": "rogers_shephard", "seed": 1,
                      "bodies": [{"family": "regular-simplex", "n": 4}, {"file": "k.json"}]}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.tgrid, default_tgrid());
        assert!(matches!(c.bodies[1], BodySource::File { .. }));
        assert_eq!(c.bodies[0].id(), "simplex-n4");
        c.validate().unwrap();
    }
}
