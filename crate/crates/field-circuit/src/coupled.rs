//! Implicit-Euler residual of the circuit equations coupled to the field
//! model.
//!
//! State layout: `[u, j_L, j_V, j_M, A]`. Rows follow the same order:
//! Kirchhoff current law per node, inductor voltages, source voltages,
//! winding voltages (`depth X^T dA/dt = A_M^T u`), then the field equations.

use std::sync::Arc;

use crate::diode::{shockley, DiodeParams};
use crate::error::{Error, Result};
use crate::fem::FemField;
use crate::linsolve::BorderedMatrix;
use crate::netlist::{Branch, CircuitNetlist};

/// Conductance in S placed in parallel with every diode so that a node
/// isolated by reverse-biased diodes keeps a defined potential.
pub const DEFAULT_GMIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_u: usize,
    pub n_l: usize,
    pub n_v: usize,
    pub n_m: usize,
    pub n_a: usize,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        self.n_circuit() + self.n_a
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unknowns before the field block.
    pub fn n_circuit(&self) -> usize {
        self.n_u + self.n_l + self.n_v + self.n_m
    }

    pub fn l_offset(&self) -> usize {
        self.n_u
    }

    pub fn v_offset(&self) -> usize {
        self.n_u + self.n_l
    }

    pub fn m_offset(&self) -> usize {
        self.n_u + self.n_l + self.n_v
    }

    pub fn a_offset(&self) -> usize {
        self.n_circuit()
    }
}

/// Residual, row magnitudes and (optionally) the Jacobian at one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    /// Sum of the absolute values of the terms forming each residual row.
    pub magnitude: Vec<f64>,
    pub jacobian: Option<BorderedMatrix>,
}

impl Evaluation {
    /// `max_i |r_i| / magnitude_i`, with rows of zero magnitude counting as
    /// exactly satisfied when their residual is zero.
    pub fn scaled_norm(&self) -> f64 {
        self.worst_row().1
    }

    /// Row attaining [`Evaluation::scaled_norm`] and its value.
    pub fn worst_row(&self) -> (usize, f64) {
        self.residual
            .iter()
            .zip(&self.magnitude)
            .map(|(r, m)| {
                if *r == 0.0 {
                    0.0
                } else {
                    r.abs() / m.max(f64::MIN_POSITIVE)
                }
            })
            .enumerate()
            .fold(
                (0, 0.0),
                |best, (i, v)| if v > best.1 { (i, v) } else { best },
            )
    }
}

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub netlist: Arc<CircuitNetlist>,
    pub field: Option<FemField>,
    pub diodes: Vec<DiodeParams>,
    pub gmin: f64,
    layout: StateLayout,
}

impl CoupledSystem {
    pub fn new(
        netlist: Arc<CircuitNetlist>,
        field: Option<FemField>,
        diodes: Vec<DiodeParams>,
    ) -> Result<Self> {
        netlist.validate()?;
        if diodes.len() != netlist.diodes.len() {
            return Err(Error::Parameter(format!(
                "netlist has {} diodes, {} parameter sets given",
                netlist.diodes.len(),
                diodes.len()
            )));
        }
        if let Some((k, d)) = diodes.iter().enumerate().find(|(_, d)| !d.is_valid()) {
            return Err(Error::Parameter(format!(
                "diode {} needs positive saturation current and thermal voltage, got {d:?}",
                k + 1
            )));
        }
        let n_windings = field.as_ref().map_or(0, |f| f.disc.n_windings());
        if n_windings != netlist.windings.len() {
            return Err(Error::Netlist(format!(
                "netlist has {} windings, field model has {n_windings}",
                netlist.windings.len()
            )));
        }
        let layout = StateLayout {
            n_u: netlist.n_nodes,
            n_l: netlist.inductors.len(),
            n_v: netlist.voltage_sources.len(),
            n_m: n_windings,
            n_a: field.as_ref().map_or(0, |f| f.disc.n_dofs()),
        };
        Ok(Self {
            netlist,
            field,
            diodes,
            gmin: DEFAULT_GMIN,
            layout,
        })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    /// Output voltage of a state.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.netlist.output.voltage(&x[..self.layout.n_u])
    }

    /// Diode voltages `A_D^T u` of a state.
    pub fn diode_voltages(&self, x: &[f64]) -> Vec<f64> {
        self.netlist
            .diodes
            .iter()
            .map(|b| b.voltage(&x[..self.layout.n_u]))
            .collect()
    }

    /// Implicit-Euler residual for the step from `prev` at `t - dt` to `x`
    /// at `t`.
    pub fn evaluate(
        &self,
        x: &[f64],
        prev: &[f64],
        dt: f64,
        t: f64,
        with_jacobian: bool,
    ) -> Result<Evaluation> {
        self.evaluate_linearized(x, prev, dt, t, with_jacobian, None)
    }

    /// As [`CoupledSystem::evaluate`], but with every diode replaced by its
    /// tangent line at the voltage `linearize_at[k]` when given.
    pub fn evaluate_linearized(
        &self,
        x: &[f64],
        prev: &[f64],
        dt: f64,
        t: f64,
        with_jacobian: bool,
        linearize_at: Option<&[f64]>,
    ) -> Result<Evaluation> {
        let lay = self.layout;
        let n = lay.len();
        if x.len() != n || prev.len() != n {
            return Err(Error::Numerical(format!(
                "state has {} entries, layout needs {n}",
                x.len()
            )));
        }
        let net = &*self.netlist;
        let mut res = vec![0.0; n];
        let mut mag = vec![0.0; n];
        let mut jac = with_jacobian.then(|| {
            BorderedMatrix::zeros(
                lay.n_circuit(),
                lay.n_a,
                self.field.as_ref().map_or(0, |f| f.disc.half_bandwidth()),
            )
        });
        let u = &x[..lay.n_u];
        let u_prev = &prev[..lay.n_u];

        // branch current made of `terms`, with conductance `g`; the row
        // magnitude also counts the node voltages the terms were formed from
        let stamp = |res: &mut [f64],
                     mag: &mut [f64],
                     jac: &mut Option<BorderedMatrix>,
                     b: &Branch,
                     terms: &[f64],
                     g: f64,
                     scale: f64| {
            let i: f64 = terms.iter().sum();
            let size: f64 = terms.iter().map(|v| v.abs()).sum::<f64>() + scale;
            for (row, s) in b.stamps() {
                res[row] += s * i;
                mag[row] += size;
                if let Some(j) = jac.as_mut() {
                    for (col, sc) in b.stamps() {
                        j.cc[(row, col)] += s * sc * g;
                    }
                }
            }
        };

        for (b, c) in &net.capacitors {
            let (v, vp) = (b.voltage(u), b.voltage(u_prev));
            let scale = c / dt * (b.voltage_scale(u) + b.voltage_scale(u_prev));
            stamp(
                &mut res,
                &mut mag,
                &mut jac,
                b,
                &[c * v / dt, -c * vp / dt],
                c / dt,
                scale,
            );
        }
        for (b, r) in &net.resistors {
            let scale = b.voltage_scale(u) / r;
            stamp(
                &mut res,
                &mut mag,
                &mut jac,
                b,
                &[b.voltage(u) / r],
                1.0 / r,
                scale,
            );
        }
        for (k, (b, d)) in net.diodes.iter().zip(&self.diodes).enumerate() {
            let v = b.voltage(u);
            let v0 = linearize_at.map_or(v, |l| l[k]);
            let (i, g) = shockley(v0, d);
            let is = d.saturation_current;
            let scale = (g + self.gmin) * b.voltage_scale(u);
            let terms = [i + is, -is, g * (v - v0), self.gmin * v];
            stamp(
                &mut res,
                &mut mag,
                &mut jac,
                b,
                &terms,
                g + self.gmin,
                scale,
            );
        }
        for (b, w) in &net.current_sources {
            stamp(&mut res, &mut mag, &mut jac, b, &[w.value(t)], 0.0, 0.0);
        }

        // branch currents that are unknowns: KCL columns
        let current_unknowns = net
            .inductors
            .iter()
            .map(|e| e.0)
            .chain(net.voltage_sources.iter().map(|e| e.0))
            .chain(net.windings.iter().copied())
            .enumerate();
        for (k, b) in current_unknowns {
            let col = lay.l_offset() + k;
            for (row, s) in b.stamps() {
                res[row] += s * x[col];
                mag[row] += x[col].abs();
                if let Some(j) = jac.as_mut() {
                    j.cc[(row, col)] += s;
                }
            }
        }

        // subtracts the branch voltage from a row
        let voltage_row = |res: &mut [f64],
                           mag: &mut [f64],
                           jac: &mut Option<BorderedMatrix>,
                           row: usize,
                           b: &Branch| {
            res[row] -= b.voltage(u);
            mag[row] += b.voltage_scale(u);
            if let Some(j) = jac.as_mut() {
                for (col, s) in b.stamps() {
                    j.cc[(row, col)] -= s;
                }
            }
        };

        for (k, (b, l)) in net.inductors.iter().enumerate() {
            let row = lay.l_offset() + k;
            let (cur, old) = (l * x[row] / dt, l * prev[row] / dt);
            res[row] += cur - old;
            mag[row] += cur.abs() + old.abs();
            if let Some(j) = jac.as_mut() {
                j.cc[(row, row)] += l / dt;
            }
            voltage_row(&mut res, &mut mag, &mut jac, row, b);
        }
        for (k, (b, w)) in net.voltage_sources.iter().enumerate() {
            let row = lay.v_offset() + k;
            let src = w.value(t);
            res[row] += b.voltage(u) - src;
            mag[row] += b.voltage_scale(u) + src.abs();
            if let Some(j) = jac.as_mut() {
                for (col, s) in b.stamps() {
                    j.cc[(row, col)] += s;
                }
            }
        }

        if let Some(field) = &self.field {
            let disc = &*field.disc;
            let (a, a_prev) = (&x[lay.a_offset()..], &prev[lay.a_offset()..]);
            let depth = disc.depth();
            for (w, b) in net.windings.iter().enumerate() {
                let row = lay.m_offset() + w;
                let col = disc.coupling_column(w);
                let psi: f64 = col.iter().zip(a).map(|(c, v)| c * v).sum::<f64>() * depth;
                let psi_prev: f64 = col.iter().zip(a_prev).map(|(c, v)| c * v).sum::<f64>() * depth;
                res[row] += (psi - psi_prev) / dt;
                mag[row] += (psi.abs() + psi_prev.abs()) / dt;
                if let Some(j) = jac.as_mut() {
                    for (i, c) in col.iter().enumerate() {
                        j.cf[(row, i)] += depth * c / dt;
                        j.fc[(i, row)] -= c;
                    }
                }
                voltage_row(&mut res, &mut mag, &mut jac, row, b);
            }
            let j_m = &x[lay.m_offset()..lay.a_offset()];
            let (res_a, mag_a) = (&mut res[lay.a_offset()..], &mut mag[lay.a_offset()..]);
            field.assemble_into(a, j_m, res_a, mag_a, jac.as_mut().map(|j| &mut j.ff));
        }

        if let Some(row) = res.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence { row, time: t });
        }
        Ok(Evaluation {
            residual: res,
            magnitude: mag,
            jacobian: jac,
        })
    }
}
