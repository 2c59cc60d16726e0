//! Turns a [`RunConfig`] into the objects a run needs: parameter space,
//! cubature rule, index set, model, and the hashes that tag every output.

use pcuq_core::collocation::{ModelError, ParametricModel};
use pcuq_core::{stroud5, tensor_gauss, CubatureRule, IndexSet, ParameterSpace, UniformBox};
use pcuq_fieldcircuit::mesh::TransformerGeometry;
use pcuq_fieldcircuit::model::{BenchmarkConfig, BenchmarkModel, N_PARAMETERS};
use pcuq_fieldcircuit::netlist::RectifierValues;
use pcuq_fieldcircuit::transient::{NewtonSettings, TimeGrid};

use crate::config::{digest, RunConfig};
use crate::error::CliError;

/// Closed-form test models on the reference coordinates `x` of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// `y = 1`
    Constant,
    /// `y = 1 + t sum_j x_j / j`
    Linear,
    /// `y = 1 + t x_1 + t^2 x_1 x_q + x_q^2`
    Quadratic,
    /// `y = exp(-t (1 + sum_j x_j / (2q)))`
    Decay,
}

impl SyntheticKind {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "constant" => Self::Constant,
            "linear" => Self::Linear,
            "quadratic" => Self::Quadratic,
            "decay" => Self::Decay,
            _ => return None,
        })
    }

    fn value(self, t: f64, x: &[f64]) -> f64 {
        let q = x.len();
        match self {
            Self::Constant => 1.0,
            Self::Linear => {
                1.0 + t * x
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v / (j + 1) as f64)
                    .sum::<f64>()
            }
            Self::Quadratic => 1.0 + t * x[0] + t * t * x[0] * x[q - 1] + x[q - 1] * x[q - 1],
            Self::Decay => (-t * (1.0 + x.iter().sum::<f64>() / (2.0 * q as f64))).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub kind: SyntheticKind,
    pub space: ParameterSpace,
    pub times: Vec<f64>,
}

impl ParametricModel for SyntheticModel {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        let x = self.space.to_reference(p)?;
        Ok(self.times.iter().map(|&t| self.kind.value(t, &x)).collect())
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    FieldCircuit(Box<BenchmarkModel>),
    Synthetic(SyntheticModel),
}

impl ParametricModel for Model {
    fn times(&self) -> &[f64] {
        match self {
            Model::FieldCircuit(m) => m.times(),
            Model::Synthetic(m) => m.times(),
        }
    }

    fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        match self {
            Model::FieldCircuit(m) => m.evaluate(p),
            Model::Synthetic(m) => m.evaluate(p),
        }
    }
}

/// Everything derived from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    /// The configuration with profile defaults filled in.
    pub config: RunConfig,
    pub space: ParameterSpace,
    pub rule: CubatureRule,
    pub set: IndexSet,
    pub model: Model,
    pub pod_ranks: Vec<usize>,
    pub workers: usize,
    pub config_hash: String,
    /// Identifies the node solutions: rule, model, parameter box and grid.
    pub cache_key: String,
}

const SYNTHETIC_MEANS: [f64; 2] = [1.0, 2.0];
const SYNTHETIC_GRID: TimeGrid = TimeGrid {
    t_end: 1.0,
    dt: 0.1,
    snapshot_every: 1,
};
const DEFAULT_MAX_RANK: usize = 30;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn parse_rule(name: &str, q: usize) -> Result<CubatureRule, CliError> {
    if name == "stroud5" {
        return stroud5(q).map_err(config_err);
    }
    if let Some(n) = name.strip_prefix("tensor:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::Config(format!("bad point count in rule `{name}`")))?;
        return tensor_gauss(q, n).map_err(config_err);
    }
    Err(CliError::Config(format!(
        "unknown rule `{name}`, expected stroud5 or tensor:<n>"
    )))
}

/// Fills profile defaults into `cfg` and returns the benchmark settings.
fn benchmark_config(cfg: &mut RunConfig) -> Result<BenchmarkConfig, CliError> {
    let base = match cfg.model.profile.as_str() {
        "default" => BenchmarkConfig::default(),
        "fast" => BenchmarkConfig::fast(),
        p => {
            return Err(CliError::Config(format!(
                "unknown profile `{p}`, expected default or fast"
            )))
        }
    };
    let grid = fill_grid(cfg, base.grid);
    let tr = &mut cfg.transformer;
    let c = &cfg.circuit;
    Ok(BenchmarkConfig {
        geometry: TransformerGeometry {
            module: tr.module,
            refine: *tr.refine.get_or_insert(base.geometry.refine),
        },
        turns: [tr.primary_turns, tr.secondary_turns],
        depth: tr.depth,
        circuit: RectifierValues {
            amplitude: c.amplitude,
            period: c.period,
            primary_resistance: c.primary_resistance,
            secondary_resistance: c.secondary_resistance,
            capacitance: c.capacitance,
            load: c.load,
        },
        grid,
        newton: NewtonSettings {
            tolerance: cfg.newton.tolerance,
            max_iterations: cfg.newton.max_iterations,
            max_halvings: cfg.newton.max_halvings,
        },
    })
}

fn fill_grid(cfg: &mut RunConfig, base: TimeGrid) -> TimeGrid {
    let t = &mut cfg.time;
    TimeGrid {
        t_end: *t.t_end.get_or_insert(base.t_end),
        dt: *t.dt.get_or_insert(base.dt),
        snapshot_every: *t.snapshot_every.get_or_insert(base.snapshot_every),
    }
}

impl Setup {
    pub fn model_times(&self) -> &[f64] {
        self.model.times()
    }

    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let mut cfg = config.clone();
        let (means, model_kind) = match cfg.model.kind.as_str() {
            "field-circuit" => (BenchmarkConfig::parameter_means(), None),
            k => match k.strip_prefix("synthetic:").map(SyntheticKind::parse) {
                Some(Some(kind)) => (SYNTHETIC_MEANS.to_vec(), Some(kind)),
                _ => {
                    return Err(CliError::Config(format!(
                        "unknown model `{k}`, expected field-circuit or \
                         synthetic:<constant|linear|quadratic|decay>"
                    )))
                }
            },
        };
        let means = cfg.parameters.means.get_or_insert(means).clone();
        let space = UniformBox::new(means)
            .with_halfwidth(cfg.parameters.halfwidth)
            .to_space()
            .map_err(config_err)?;
        let q = space.dim();

        let model = match model_kind {
            None => {
                if q != N_PARAMETERS {
                    return Err(CliError::Config(format!(
                        "the field-circuit model has {N_PARAMETERS} parameters, {q} means given"
                    )));
                }
                let bc = benchmark_config(&mut cfg)?;
                Model::FieldCircuit(Box::new(BenchmarkModel::new(bc).map_err(config_err)?))
            }
            Some(kind) => {
                let times = fill_grid(&mut cfg, SYNTHETIC_GRID)
                    .snapshot_times()
                    .map_err(config_err)?;
                Model::Synthetic(SyntheticModel {
                    kind,
                    space: space.clone(),
                    times,
                })
            }
        };

        let rule = parse_rule(&cfg.chaos.rule, q)?;
        let set = IndexSet::total_degree(q, cfg.chaos.degree).map_err(config_err)?;
        if let Some(e) = cfg
            .sparsify
            .tolerances
            .iter()
            .find(|e| !(**e > 0.0 && **e < 1.0))
        {
            return Err(CliError::Config(format!(
                "sparsification tolerance {e} outside (0, 1)"
            )));
        }
        let max_rank = set.len().min(model.times().len());
        let pod_ranks = if cfg.pod.ranks.is_empty() {
            (1..=max_rank.min(DEFAULT_MAX_RANK)).collect()
        } else {
            cfg.pod.ranks.clone()
        };
        if let Some(r) = pod_ranks.iter().find(|&&r| r == 0 || r > max_rank) {
            return Err(CliError::Config(format!(
                "POD rank {r} outside [1, {max_rank}]"
            )));
        }
        let workers = match cfg.run.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            w => w,
        };

        let config_hash = cfg.hash();
        let cache_key = {
            let mut c = cfg.clone();
            c.chaos.degree = 0;
            c.sparsify = Default::default();
            c.pod = Default::default();
            digest(&format!("{}\n{}", rule.fingerprint(), c.hash()))
        };
        Ok(Self {
            config: cfg,
            space,
            rule,
            set,
            model,
            pod_ranks,
            workers,
            config_hash,
            cache_key,
        })
    }
}
