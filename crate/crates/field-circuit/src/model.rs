//! The rectifier benchmark as a parametric model.
//!
//! Parameter order: `I_S1, U_TH1, ..., I_S4, U_TH4, k1, k2, k3`.

use std::sync::Arc;

use pcuq_core::collocation::{ModelError, ParametricModel};
use pcuq_core::space::UniformBox;

use crate::brauer::BrauerParams;
use crate::coupled::CoupledSystem;
use crate::diode::DiodeParams;
use crate::error::{Error, Result};
use crate::fem::{FemField, FieldDiscretization};
use crate::mesh::TransformerGeometry;
use crate::netlist::{rectifier, CircuitNetlist, RectifierValues};
use crate::transient::{integrate, NewtonSettings, TimeGrid, TransientStats};

pub const N_PARAMETERS: usize = 11;

pub const PARAMETER_NAMES: [&str; N_PARAMETERS] = [
    "I_S1", "U_TH1", "I_S2", "U_TH2", "I_S3", "U_TH3", "I_S4", "U_TH4", "k1", "k2", "k3",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub geometry: TransformerGeometry,
    pub turns: [f64; 2],
    /// Axial length of the transformer in m.
    pub depth: f64,
    pub circuit: RectifierValues,
    pub grid: TimeGrid,
    pub newton: NewtonSettings,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            geometry: TransformerGeometry::default(),
            turns: [40.0, 40.0],
            depth: 0.05,
            circuit: RectifierValues::default(),
            grid: TimeGrid::DEFAULT,
            newton: NewtonSettings::default(),
        }
    }
}

impl BenchmarkConfig {
    /// Coarser mesh and doubled step, 201 snapshots.
    pub fn fast() -> Self {
        Self {
            geometry: TransformerGeometry {
                refine: 1,
                ..TransformerGeometry::default()
            },
            grid: TimeGrid {
                dt: 2e-4,
                ..TimeGrid::DEFAULT
            },
            ..Self::default()
        }
    }

    /// Parameter means: `I_S = 1e-6 A`, `U_TH = 0.02585 V` for every diode
    /// and the Brauer constants `0.3774 m/H, 2.97 T^-2, 388.33 m/H`.
    pub fn parameter_means() -> Vec<f64> {
        let mut m = Vec::with_capacity(N_PARAMETERS);
        for _ in 0..4 {
            m.extend([1e-6, 0.02585]);
        }
        m.extend([0.3774, 2.97, 388.33]);
        m
    }

    pub fn default_box() -> UniformBox {
        UniformBox::new(Self::parameter_means())
    }
}

/// Shared mesh and netlist; every evaluation builds its own solver state.
#[derive(Debug, Clone)]
pub struct BenchmarkModel {
    config: BenchmarkConfig,
    disc: Arc<FieldDiscretization>,
    netlist: Arc<CircuitNetlist>,
    times: Vec<f64>,
}

impl BenchmarkModel {
    pub fn new(config: BenchmarkConfig) -> Result<Self> {
        let mesh = config.geometry.mesh()?;
        let disc = Arc::new(FieldDiscretization::new(mesh, &config.turns, config.depth)?);
        let netlist = Arc::new(rectifier(&config.circuit));
        netlist.validate()?;
        let times = config.grid.snapshot_times()?;
        Ok(Self {
            config,
            disc,
            netlist,
            times,
        })
    }

    pub fn config(&self) -> &BenchmarkConfig {
        &self.config
    }

    pub fn discretization(&self) -> &FieldDiscretization {
        &self.disc
    }

    /// Coupled system at the physical parameter point `p`.
    pub fn system(&self, p: &[f64]) -> Result<CoupledSystem> {
        if p.len() != N_PARAMETERS {
            return Err(Error::Parameter(format!(
                "expected {N_PARAMETERS} parameters, got {}",
                p.len()
            )));
        }
        let diodes = (0..4)
            .map(|k| DiodeParams::new(p[2 * k], p[2 * k + 1]))
            .collect();
        let field = FemField::new(self.disc.clone(), BrauerParams::new(p[8], p[9], p[10]))?;
        CoupledSystem::new(self.netlist.clone(), Some(field), diodes)
    }

    /// Output voltage at the snapshot times and solver statistics.
    pub fn run(&self, p: &[f64]) -> Result<(Vec<f64>, TransientStats)> {
        let sys = self.system(p)?;
        let mut out = Vec::with_capacity(self.times.len());
        let stats = integrate(&sys, &self.config.grid, &self.config.newton, |_, x| {
            out.push(sys.output(x))
        })?;
        Ok((out, stats))
    }
}

impl ParametricModel for BenchmarkModel {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn evaluate(&self, p: &[f64]) -> std::result::Result<Vec<f64>, ModelError> {
        Ok(self.run(p)?.0)
    }
}
