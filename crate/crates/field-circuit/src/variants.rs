//! Small linear configurations with known behaviour, used to check the
//! solver.

use std::sync::Arc;

use crate::brauer::{BrauerParams, NU_0};
use crate::coupled::CoupledSystem;
use crate::error::Result;
use crate::fem::{FemField, FieldDiscretization};
use crate::mesh::{Mesh, Region};
use crate::netlist::{Branch, CircuitNetlist, Waveform};

/// Step source `volts` in series with `ohms` driving a two-terminal
/// element between node 1 and ground. Node 0 is the source terminal.
fn step_rl(volts: f64, ohms: f64) -> CircuitNetlist {
    let mut n = CircuitNetlist::empty(2, Branch::grounded(1));
    n.voltage_sources.push((
        Branch::grounded(0),
        Waveform::Step {
            amplitude: volts,
            at: 0.0,
        },
    ));
    n.resistors.push((Branch::new(Some(0), Some(1)), ohms));
    n
}

/// Step-driven RL circuit with a lumped inductor; the inductor current is
/// state entry 2.
pub fn lumped_rl(volts: f64, ohms: f64, henry: f64) -> Result<CoupledSystem> {
    let mut n = step_rl(volts, ohms);
    n.inductors.push((Branch::grounded(1), henry));
    CoupledSystem::new(Arc::new(n), None, Vec::new())
}

/// A square `[0, side]^2` with `cells x cells` cells, entirely filled by the
/// go side of one winding with `turns` turns, in air.
pub fn square_winding(
    side: f64,
    cells: usize,
    turns: f64,
    depth: f64,
) -> Result<FieldDiscretization> {
    let mesh = Mesh::structured(side, side, cells, cells, |_, _| Region::Winding {
        winding: 0,
        orientation: 1,
    })?;
    FieldDiscretization::new(mesh, &[turns], depth)
}

/// Step-driven RL circuit whose inductor is the field model `disc` with
/// linear material. The winding current is state entry 3.
pub fn field_rl(volts: f64, ohms: f64, disc: Arc<FieldDiscretization>) -> Result<CoupledSystem> {
    let mut n = step_rl(volts, ohms);
    n.windings.push(Branch::grounded(1));
    let field = FemField::new(disc, BrauerParams::linear(NU_0))?;
    CoupledSystem::new(Arc::new(n), Some(field), Vec::new())
}
