//! Structured triangulations of a rectangle with region tags.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Air,
    Iron,
    /// Conductor area of winding `winding`; `orientation` is +1 for the
    /// go side and -1 for the return side.
    Winding {
        winding: usize,
        orientation: i8,
    },
}

impl Region {
    pub fn tag(&self) -> String {
        match self {
            Region::Air => "air".into(),
            Region::Iron => "iron-core".into(),
            Region::Winding {
                winding,
                orientation,
            } => format!(
                "winding-{}{}",
                winding + 1,
                if *orientation > 0 { "+" } else { "-" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Nodes carrying the homogeneous Dirichlet condition.
    pub boundary: Vec<bool>,
}

impl Mesh {
    /// `nx x ny` cells on `[0, width] x [0, height]`, each split along the
    /// diagonal from lower-left to upper-right. Region of each triangle
    /// chosen from its centroid. Nodes are numbered row by row.
    pub fn structured<F>(
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        region_at: F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64) -> Region,
    {
        if nx == 0 || ny == 0 || !(width > 0.0 && height > 0.0) {
            return Err(Error::Mesh(format!(
                "structured mesh needs positive extents and cell counts, got {width}x{height}, {nx}x{ny}"
            )));
        }
        let (hx, hy) = (width / nx as f64, height / ny as f64);
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([i as f64 * hx, j as f64 * hy]);
                boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        let mut regions = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                for tri in [[a, b, c], [a, c, d]] {
                    let cx = tri.iter().map(|&n| nodes[n][0]).sum::<f64>() / 3.0;
                    let cy = tri.iter().map(|&n| nodes[n][1]).sum::<f64>() / 3.0;
                    triangles.push(tri);
                    regions.push(region_at(cx, cy));
                }
            }
        }
        let mesh = Self {
            nodes,
            triangles,
            regions,
            boundary,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Signed area of triangle `t` (positive for counter-clockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Positive orientation and area at least `1e-14` of the domain area.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.len() != self.regions.len() || self.nodes.len() != self.boundary.len() {
            return Err(Error::Mesh("inconsistent mesh array lengths".into()));
        }
        if let Some(t) = self
            .triangles
            .iter()
            .position(|tri| tri.iter().any(|&n| n >= self.nodes.len()))
        {
            return Err(Error::Mesh(format!(
                "triangle {t} references a missing node"
            )));
        }
        let total: f64 = (0..self.triangles.len())
            .map(|t| self.signed_area(t).abs())
            .sum();
        for t in 0..self.triangles.len() {
            let a = self.signed_area(t);
            if a.is_nan() || a <= 1e-14 * total {
                return Err(Error::Mesh(format!(
                    "triangle {t} is degenerate or clockwise (signed area {a:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.signed_area(t))
            .sum()
    }

    /// Plain-text dump: a `nodes` block (`x y boundary`), then a
    /// `triangles` block (`a b c region-tag`).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (p, b) in self.nodes.iter().zip(&self.boundary) {
            let _ = writeln!(out, "{} {} {}", p[0], p[1], u8::from(*b));
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], r.tag());
        }
        out
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

/// Cross-section of a two-winding core-type transformer: a rectangular iron
/// frame in an air box, winding 1 around the left leg and winding 2 around
/// the right leg. All coordinates are multiples of `module` so that any
/// integer `refine` gives a conforming region partition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerGeometry {
    /// Grid module in metres.
    pub module: f64,
    /// Mesh cells per module.
    pub refine: usize,
}

impl Default for TransformerGeometry {
    fn default() -> Self {
        Self {
            module: 0.01,
            refine: 2,
        }
    }
}

impl TransformerGeometry {
    // Layout in modules: air box 24 x 16, core 16 x 12 with 2-module legs.
    const BOX: (f64, f64) = (24.0, 16.0);
    const CORE_OUTER: Rect = Rect::new(4.0, 2.0, 20.0, 14.0);
    const WINDOW: Rect = Rect::new(6.0, 4.0, 18.0, 12.0);
    const W1_GO: Rect = Rect::new(6.0, 5.0, 8.0, 11.0);
    const W1_RETURN: Rect = Rect::new(2.0, 5.0, 4.0, 11.0);
    const W2_GO: Rect = Rect::new(16.0, 5.0, 18.0, 11.0);
    const W2_RETURN: Rect = Rect::new(20.0, 5.0, 22.0, 11.0);

    pub fn region_at(&self, x: f64, y: f64) -> Region {
        let (x, y) = (x / self.module, y / self.module);
        let winding = |w, o| Region::Winding {
            winding: w,
            orientation: o,
        };
        if Self::W1_GO.contains(x, y) {
            winding(0, 1)
        } else if Self::W1_RETURN.contains(x, y) {
            winding(0, -1)
        } else if Self::W2_GO.contains(x, y) {
            winding(1, 1)
        } else if Self::W2_RETURN.contains(x, y) {
            winding(1, -1)
        } else if Self::CORE_OUTER.contains(x, y) && !Self::WINDOW.contains(x, y) {
            Region::Iron
        } else {
            Region::Air
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        if self.refine == 0 || self.module.is_nan() || self.module <= 0.0 {
            return Err(Error::Mesh(
                "geometry needs refine >= 1 and module > 0".into(),
            ));
        }
        let (bx, by) = Self::BOX;
        Mesh::structured(
            bx * self.module,
            by * self.module,
            bx as usize * self.refine,
            by as usize * self.refine,
            |x, y| self.region_at(x, y),
        )
    }
}
