//! Circuit topology for modified nodal analysis.
//!
//! Nodes are numbered `0..n_nodes` with ground implicit (`None`). A branch
//! current flows from `pos` to `neg` through the element, so the incidence
//! column of a branch has `+1` at `pos` and `-1` at `neg`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub pos: Option<usize>,
    pub neg: Option<usize>,
}

impl Branch {
    pub const fn new(pos: Option<usize>, neg: Option<usize>) -> Self {
        Self { pos, neg }
    }

    /// `pos` to ground.
    pub const fn grounded(pos: usize) -> Self {
        Self {
            pos: Some(pos),
            neg: None,
        }
    }

    /// Branch voltage `u[pos] - u[neg]`.
    pub fn voltage(&self, u: &[f64]) -> f64 {
        self.pos.map_or(0.0, |n| u[n]) - self.neg.map_or(0.0, |n| u[n])
    }

    /// `|u[pos]| + |u[neg]|`, the scale of the rounding error in
    /// [`Branch::voltage`].
    pub fn voltage_scale(&self, u: &[f64]) -> f64 {
        self.pos.map_or(0.0, |n| u[n].abs()) + self.neg.map_or(0.0, |n| u[n].abs())
    }

    /// Nonzero incidence entries `(node, sign)`.
    pub fn stamps(&self) -> impl Iterator<Item = (usize, f64)> {
        self.pos
            .map(|n| (n, 1.0))
            .into_iter()
            .chain(self.neg.map(|n| (n, -1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Constant(f64),
    /// `amplitude * sin(2 pi t / period)`
    Sine {
        amplitude: f64,
        period: f64,
    },
    /// `0` before `at`, `amplitude` from `at` on.
    Step {
        amplitude: f64,
        at: f64,
    },
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Constant(v) => v,
            Waveform::Sine { amplitude, period } => {
                amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
            }
            Waveform::Step { amplitude, at } => {
                if t >= at {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Waveform::Constant(v) => v.is_finite(),
            Waveform::Sine { amplitude, period } => amplitude.is_finite() && period > 0.0,
            Waveform::Step { amplitude, at } => amplitude.is_finite() && at.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Capacitor,
    Resistor,
    Inductor,
    VoltageSource,
    Winding,
    Diode,
    CurrentSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitNetlist {
    pub n_nodes: usize,
    /// Capacitance in F.
    pub capacitors: Vec<(Branch, f64)>,
    /// Resistance in Ohm.
    pub resistors: Vec<(Branch, f64)>,
    /// Inductance in H.
    pub inductors: Vec<(Branch, f64)>,
    pub voltage_sources: Vec<(Branch, Waveform)>,
    pub current_sources: Vec<(Branch, Waveform)>,
    /// Terminals of the field-model windings, in winding order.
    pub windings: Vec<Branch>,
    /// `pos` is the anode.
    pub diodes: Vec<Branch>,
    /// Node pair whose voltage is reported as the output.
    pub output: Branch,
}

impl CircuitNetlist {
    pub fn empty(n_nodes: usize, output: Branch) -> Self {
        Self {
            n_nodes,
            capacitors: Vec::new(),
            resistors: Vec::new(),
            inductors: Vec::new(),
            voltage_sources: Vec::new(),
            current_sources: Vec::new(),
            windings: Vec::new(),
            diodes: Vec::new(),
            output,
        }
    }

    fn branches(&self, kind: ElementKind) -> Vec<Branch> {
        match kind {
            ElementKind::Capacitor => self.capacitors.iter().map(|e| e.0).collect(),
            ElementKind::Resistor => self.resistors.iter().map(|e| e.0).collect(),
            ElementKind::Inductor => self.inductors.iter().map(|e| e.0).collect(),
            ElementKind::VoltageSource => self.voltage_sources.iter().map(|e| e.0).collect(),
            ElementKind::CurrentSource => self.current_sources.iter().map(|e| e.0).collect(),
            ElementKind::Winding => self.windings.clone(),
            ElementKind::Diode => self.diodes.clone(),
        }
    }

    /// Node-by-branch incidence matrix of one element kind.
    pub fn incidence(&self, kind: ElementKind) -> DMatrix<f64> {
        let branches = self.branches(kind);
        let mut a = DMatrix::zeros(self.n_nodes, branches.len());
        for (k, b) in branches.iter().enumerate() {
            for (n, s) in b.stamps() {
                a[(n, k)] = s;
            }
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        use ElementKind::*;
        let kinds = [
            Capacitor,
            Resistor,
            Inductor,
            VoltageSource,
            Winding,
            Diode,
            CurrentSource,
        ];
        let mut touched = vec![false; self.n_nodes];
        for kind in kinds {
            for (k, b) in self.branches(kind).iter().enumerate() {
                for n in [b.pos, b.neg].into_iter().flatten() {
                    if n >= self.n_nodes {
                        return Err(Error::Netlist(format!(
                            "{kind:?} {k} references node {n}, only {} nodes",
                            self.n_nodes
                        )));
                    }
                    touched[n] = true;
                }
                if b.pos == b.neg {
                    return Err(Error::Netlist(format!(
                        "{kind:?} {k} connects a node to itself"
                    )));
                }
            }
        }
        if let Some(n) = touched.iter().position(|t| !t) {
            return Err(Error::Netlist(format!("node {n} has no connected element")));
        }
        for (name, list) in [
            ("capacitance", &self.capacitors),
            ("resistance", &self.resistors),
            ("inductance", &self.inductors),
        ] {
            if let Some((k, (_, v))) = list
                .iter()
                .enumerate()
                .find(|(_, (_, v))| !(*v > 0.0 && v.is_finite()))
            {
                return Err(Error::Netlist(format!(
                    "{name} {k} must be positive and finite, got {v}"
                )));
            }
        }
        let sources = self.voltage_sources.iter().chain(&self.current_sources);
        if let Some((_, w)) = sources.clone().find(|(_, w)| !w.is_valid()) {
            return Err(Error::Netlist(format!("invalid source waveform {w:?}")));
        }
        for n in [self.output.pos, self.output.neg].into_iter().flatten() {
            if n >= self.n_nodes {
                return Err(Error::Netlist(format!("output node {n} does not exist")));
            }
        }
        Ok(())
    }
}

/// Element values of the bridge rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifierValues {
    /// Source amplitude in V.
    pub amplitude: f64,
    /// Source period in s.
    pub period: f64,
    pub primary_resistance: f64,
    pub secondary_resistance: f64,
    pub capacitance: f64,
    pub load: f64,
}

impl Default for RectifierValues {
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

/// Sine source feeding winding 1 through a resistor; winding 2 drives a
/// four-diode bridge that charges a smoothing capacitor across the load.
///
/// Nodes: 0 source, 1 primary terminal, 2 and 3 secondary terminals,
/// 4 bridge input, 5 output.
pub fn rectifier(values: &RectifierValues) -> CircuitNetlist {
    let mut n = CircuitNetlist::empty(6, Branch::grounded(5));
    n.voltage_sources.push((
        Branch::grounded(0),
        Waveform::Sine {
            amplitude: values.amplitude,
            period: values.period,
        },
    ));
    n.resistors
        .push((Branch::new(Some(0), Some(1)), values.primary_resistance));
    n.windings.push(Branch::grounded(1));
    n.windings.push(Branch::new(Some(2), Some(3)));
    n.resistors
        .push((Branch::new(Some(2), Some(4)), values.secondary_resistance));
    n.diodes.push(Branch::new(Some(4), Some(5)));
    n.diodes.push(Branch::new(Some(3), Some(5)));
    n.diodes.push(Branch::new(None, Some(4)));
    n.diodes.push(Branch::new(None, Some(3)));
    n.capacitors.push((Branch::grounded(5), values.capacitance));
    n.resistors.push((Branch::grounded(5), values.load));
    n
}
