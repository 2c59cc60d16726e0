//! Run configuration: a TOML file, overridden by `PCUQ_WORKERS` and then by
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

/// Environment variable overriding `run.workers`.
pub const WORKERS_ENV: &str = "PCUQ_WORKERS";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub parameters: ParameterSection,
    pub chaos: ChaosSection,
    pub time: TimeSection,
    pub model: ModelSection,
    pub circuit: CircuitSection,
    pub transformer: TransformerSection,
    pub newton: NewtonSection,
    pub sparsify: SparsifySection,
    pub pod: PodSection,
    pub output: OutputSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterSection {
    /// Defaults to the model's own means.
    pub means: Option<Vec<f64>>,
    /// Relative half-width of the uniform box around each mean.
    pub halfwidth: f64,
}

impl Default for ParameterSection {
    fn default() -> Self {
        Self {
            means: None,
            halfwidth: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosSection {
    pub degree: u32,
    /// `stroud5` or `tensor:<points per axis>`.
    pub rule: String,
}

impl Default for ChaosSection {
    fn default() -> Self {
        Self {
            degree: 3,
            rule: "stroud5".into(),
        }
    }
}

/// Unset entries are filled from the model profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// `field-circuit` or `synthetic:<constant|linear|quadratic|decay>`.
    pub kind: String,
    /// `default` or `fast`.
    pub profile: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: "field-circuit".into(),
            profile: "default".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub amplitude: f64,
    pub period: f64,
    pub primary_resistance: f64,
    pub secondary_resistance: f64,
    pub capacitance: f64,
    pub load: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self {
            amplitude: 10.0,
            period: 0.02,
            primary_resistance: 0.5,
            secondary_resistance: 0.5,
            capacitance: 100e-6,
            load: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerSection {
    pub module: f64,
    /// Mesh cells per module; the profile decides when unset.
    pub refine: Option<usize>,
    pub primary_turns: f64,
    pub secondary_turns: f64,
    pub depth: f64,
}

impl Default for TransformerSection {
    fn default() -> Self {
        Self {
            module: 0.01,
            refine: None,
            primary_turns: 40.0,
            secondary_turns: 40.0,
            depth: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            max_halvings: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsifySection {
    pub tolerances: Vec<f64>,
}

impl Default for SparsifySection {
    fn default() -> Self {
        Self {
            tolerances: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PodSection {
    /// Empty means every rank from 1 to 30, clipped to `min(m, k)`.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("pcuq-out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Zero uses one worker per available core.
    pub workers: usize,
}

/// Command-line overrides, applied after the file and the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `section.key=value` pairs; values use TOML syntax, bare words are strings.
    pub set: Vec<String>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub profile: Option<String>,
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key just parsed"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn apply_set(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!("expected section.key=value, got `{assignment}`"))
    })?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| CliError::Config(format!("key `{key}` needs the form section.key")))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    let Value::Table(sec) = entry else {
        return Err(CliError::Config(format!("`{section}` is not a section")));
    };
    sec.insert(field.to_string(), parse_value(value));
    Ok(())
}

impl RunConfig {
    /// Reads `path` (or starts from defaults) and applies environment and
    /// command-line overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for s in &overrides.set {
            apply_set(&mut table, s)?;
        }
        let mut cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            cfg.run.workers = v.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "{WORKERS_ENV} must be a non-negative integer, got `{v}`"
                ))
            })?;
        }
        if let Some(w) = overrides.workers {
            cfg.run.workers = w;
        }
        if let Some(o) = &overrides.output {
            cfg.output.directory = o.clone();
        }
        if let Some(p) = &overrides.profile {
            cfg.model.profile = p.clone();
        }
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Hash of everything that affects results; worker count and output
    /// directory are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run = RunSection::default();
        c.output = OutputSection::default();
        digest(&toml::to_string(&c).expect("config serializes"))
    }
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
