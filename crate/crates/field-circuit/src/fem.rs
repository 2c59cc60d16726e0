//! Nonlinear 2D magnetostatics with piecewise-linear triangles.
//!
//! Weak form of `-div(nu(|grad A|) grad A) = chi^T j_M` with `A = 0` on the
//! outer boundary. Iron follows the Brauer curve; air and conductors use
//! the free-space reluctivity. Flux linkages are `depth * X^T A` where
//! `X[a, w] = int chi_w phi_a`.

use std::sync::Arc;

use crate::brauer::{BrauerParams, NU_0};
use crate::error::{Error, Result};
use crate::linsolve::BandMatrix;
use crate::mesh::{Mesh, Region};

#[derive(Debug, Clone)]
struct Element {
    dofs: [Option<usize>; 3],
    grads: [[f64; 2]; 3],
    area: f64,
    iron: bool,
}

/// Mesh-derived data shared by every parameter realization.
#[derive(Debug, Clone)]
pub struct FieldDiscretization {
    mesh: Mesh,
    elements: Vec<Element>,
    dof_of_node: Vec<Option<usize>>,
    n_dofs: usize,
    n_windings: usize,
    /// Column-major `n_dofs x n_windings`.
    coupling: Vec<f64>,
    depth: f64,
    bandwidth: usize,
}

impl FieldDiscretization {
    /// `turns[w]` is the number of turns of winding `w`. Each side of a
    /// winding carries the turn density `turns / side_area` with the sign
    /// of its orientation. `depth` is the axial length in metres.
    pub fn new(mesh: Mesh, turns: &[f64], depth: f64) -> Result<Self> {
        mesh.validate()?;
        if depth.is_nan() || depth <= 0.0 {
            return Err(Error::Parameter(format!(
                "axial depth must be positive, got {depth}"
            )));
        }
        let mut dof_of_node = vec![None; mesh.nodes.len()];
        let mut n_dofs = 0;
        for (n, &b) in mesh.boundary.iter().enumerate() {
            if !b {
                dof_of_node[n] = Some(n_dofs);
                n_dofs += 1;
            }
        }

        let n_windings = turns.len();
        let mut density = vec![[0.0f64; 2]; n_windings];
        for w in 0..n_windings {
            if turns[w].is_nan() || turns[w] <= 0.0 {
                return Err(Error::Parameter(format!(
                    "winding {w} needs a positive turn count"
                )));
            }
            for (k, o) in [1i8, -1].into_iter().enumerate() {
                let area = mesh.region_area(Region::Winding {
                    winding: w,
                    orientation: o,
                });
                if area > 0.0 {
                    density[w][k] = f64::from(o) * turns[w] / area;
                }
            }
            if density[w] == [0.0, 0.0] {
                return Err(Error::Mesh(format!(
                    "winding {} has no conductor area",
                    w + 1
                )));
            }
        }

        let mut coupling = vec![0.0; n_dofs * n_windings];
        let mut elements = Vec::with_capacity(mesh.triangles.len());
        let mut bandwidth = 0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|n| mesh.nodes[n]);
            let area = mesh.signed_area(t);
            let mut grads = [[0.0; 2]; 3];
            for (a, g) in grads.iter_mut().enumerate() {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                *g = [
                    (p[b][1] - p[c][1]) / (2.0 * area),
                    (p[c][0] - p[b][0]) / (2.0 * area),
                ];
            }
            let dofs = tri.map(|n| dof_of_node[n]);
            let present: Vec<usize> = dofs.iter().flatten().copied().collect();
            for &a in &present {
                for &b in &present {
                    bandwidth = bandwidth.max(a.abs_diff(b));
                }
            }
            match mesh.regions[t] {
                Region::Winding {
                    winding,
                    orientation,
                } if winding < n_windings => {
                    let chi = density[winding][usize::from(orientation < 0)];
                    for &a in &present {
                        coupling[winding * n_dofs + a] += chi * area / 3.0;
                    }
                }
                Region::Winding { winding, .. } => {
                    return Err(Error::Mesh(format!(
                        "triangle {t} belongs to winding {} but only {n_windings} turn counts given",
                        winding + 1
                    )));
                }
                _ => {}
            }
            elements.push(Element {
                dofs,
                grads,
                area,
                iron: mesh.regions[t] == Region::Iron,
            });
        }
        Ok(Self {
            mesh,
            elements,
            dof_of_node,
            n_dofs,
            n_windings,
            coupling,
            depth,
            bandwidth,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_windings(&self) -> usize {
        self.n_windings
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    /// `X[dof, winding]`.
    pub fn coupling(&self, dof: usize, winding: usize) -> f64 {
        self.coupling[winding * self.n_dofs + dof]
    }

    pub fn coupling_column(&self, winding: usize) -> &[f64] {
        &self.coupling[winding * self.n_dofs..(winding + 1) * self.n_dofs]
    }
}

/// A discretization together with the iron material of one realization.
#[derive(Debug, Clone)]
pub struct FemField {
    pub disc: Arc<FieldDiscretization>,
    pub brauer: BrauerParams,
}

impl FemField {
    pub fn new(disc: Arc<FieldDiscretization>, brauer: BrauerParams) -> Result<Self> {
        if !brauer.is_valid() {
            return Err(Error::Parameter(format!(
                "Brauer parameters must be nonnegative with k1 + k3 > 0, got {brauer:?}"
            )));
        }
        Ok(Self { disc, brauer })
    }

    fn grad(el: &Element, a: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            if let Some(d) = el.dofs[k] {
                g[0] += a[d] * el.grads[k][0];
                g[1] += a[d] * el.grads[k][1];
            }
        }
        g
    }

    /// Accumulates `K(A) A - X j_M` into `res` (and the absolute size of every
    /// contribution into `mag`), plus the consistent tangent if requested.
    pub(crate) fn assemble_into(
        &self,
        a: &[f64],
        j_m: &[f64],
        res: &mut [f64],
        mag: &mut [f64],
        mut tangent: Option<&mut BandMatrix>,
    ) {
        let disc = &*self.disc;
        for el in &disc.elements {
            let g = Self::grad(el, a);
            let (nu, dnu) = if el.iron {
                self.brauer.eval_b2(g[0] * g[0] + g[1] * g[1])
            } else {
                (NU_0, 0.0)
            };
            let proj: [f64; 3] =
                std::array::from_fn(|k| el.grads[k][0] * g[0] + el.grads[k][1] * g[1]);
            for k in 0..3 {
                let Some(i) = el.dofs[k] else { continue };
                let v = el.area * nu * proj[k];
                res[i] += v;
                mag[i] += v.abs();
                if let Some(t) = tangent.as_deref_mut() {
                    for l in 0..3 {
                        let Some(j) = el.dofs[l] else { continue };
                        let dot = el.grads[k][0] * el.grads[l][0] + el.grads[k][1] * el.grads[l][1];
                        t.add(i, j, el.area * (nu * dot + 2.0 * dnu * proj[k] * proj[l]));
                    }
                }
            }
        }
        for (w, &j) in j_m.iter().enumerate() {
            for (i, x) in disc.coupling_column(w).iter().enumerate() {
                let v = x * j;
                res[i] -= v;
                mag[i] += v.abs();
            }
        }
    }

    /// Residual `K(A) A - X j_M` and its Jacobian with respect to `A`.
    pub fn assemble(&self, a: &[f64], j_m: &[f64]) -> Result<(Vec<f64>, BandMatrix)> {
        let n = self.disc.n_dofs;
        if a.len() != n || j_m.len() != self.disc.n_windings {
            return Err(Error::Numerical(format!(
                "expected {n} dofs and {} winding currents, got {} and {}",
                self.disc.n_windings,
                a.len(),
                j_m.len()
            )));
        }
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite vector potential at dof {i}"
            )));
        }
        let mut res = vec![0.0; n];
        let mut mag = vec![0.0; n];
        let mut tangent = BandMatrix::zeros(n, self.disc.bandwidth);
        self.assemble_into(a, j_m, &mut res, &mut mag, Some(&mut tangent));
        Ok((res, tangent))
    }

    /// `depth * X^T A`.
    pub fn flux_linkage(&self, a: &[f64]) -> Vec<f64> {
        (0..self.disc.n_windings)
            .map(|w| {
                self.disc.depth
                    * self
                        .disc
                        .coupling_column(w)
                        .iter()
                        .zip(a)
                        .map(|(x, v)| x * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// `depth/2 * int nu |grad A|^2`; equals `depth/2 A^T K A` for linear material.
    pub fn magnetic_energy(&self, a: &[f64]) -> f64 {
        self.disc
            .elements
            .iter()
            .map(|el| {
                let g = Self::grad(el, a);
                let b2 = g[0] * g[0] + g[1] * g[1];
                let nu = if el.iron {
                    self.brauer.eval_b2(b2).0
                } else {
                    NU_0
                };
                0.5 * el.area * nu * b2
            })
            .sum::<f64>()
            * self.disc.depth
    }

    /// Maximum element flux density `|grad A|` in the iron.
    pub fn max_iron_flux_density(&self, a: &[f64]) -> f64 {
        self.disc
            .elements
            .iter()
            .filter(|el| el.iron)
            .map(|el| {
                let g = Self::grad(el, a);
                (g[0] * g[0] + g[1] * g[1]).sqrt()
            })
            .fold(0.0, f64::max)
    }
}
