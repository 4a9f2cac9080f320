use std::io::Write;

use super::{DomainSpec, Point};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Robin,
}

/// One boundary segment of the mesh, oriented counter-clockwise.
#[derive(Clone, Debug)]
pub struct BoundaryFacet {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub normal: Point,
    pub edge: usize,
}

/// Structured mesh of bilinear quadrilaterals covering a four-sided domain.
///
/// Node `(i, j)` has index `j * (nx + 1) + i` and element `(i, j)` lists its
/// nodes counter-clockwise starting from `(i, j)`.
#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    elements: Vec<[usize; 4]>,
    facets: Vec<BoundaryFacet>,
    nx: usize,
    ny: usize,
    corners: [Point; 4],
    axis_aligned: bool,
    h: f64,
}

/// Meshes `spec` with grid spacing at most `h_target` along every block edge.
///
/// Only four-sided domains are supported: the quadrilateral is mapped
/// bilinearly from the unit square.
pub fn build_domain_mesh(spec: &DomainSpec, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::Geometry(format!("mesh size must be positive, got {h_target}")));
    }
    spec.validate()?;
    if spec.edge_count() != 4 {
        return Err(Error::Geometry(format!(
            "structured meshing needs a four-sided domain, got {} edges",
            spec.edge_count()
        )));
    }
    let v = spec.vertices();
    let corners = [v[0], v[1], v[2], v[3]];
    let len = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
    let divisions = |l: f64| ((l / h_target) - 1e-9).ceil().max(1.0) as usize;
    let nx = divisions(len(v[0], v[1]).max(len(v[3], v[2])));
    let ny = divisions(len(v[1], v[2]).max(len(v[0], v[3])));
    Mesh::structured(spec, corners, nx, ny)
}

impl Mesh {
    pub(crate) fn structured(spec: &DomainSpec, corners: [Point; 4], nx: usize, ny: usize) -> Result<Self> {
        for (xi, eta) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            if block_jacobian(&corners, xi, eta).0 <= 0.0 {
                return Err(Error::Geometry(
                    "quadrilateral is not convex; bilinear map folds over".into(),
                ));
            }
        }
        let axis_aligned = corners[0][1] == corners[1][1]
            && corners[1][0] == corners[2][0]
            && corners[2][1] == corners[3][1]
            && corners[3][0] == corners[0][0];

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(block_map(&corners, i as f64 / nx as f64, j as f64 / ny as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut h: f64 = 0.0;
        for e in &elements {
            let d1 = dist(nodes[e[0]], nodes[e[2]]);
            let d2 = dist(nodes[e[1]], nodes[e[3]]);
            h = h.max(d1).max(d2);
        }

        let mut facets = Vec::with_capacity(2 * (nx + ny));
        let mut push = |a: usize, b: usize, edge: usize| {
            let (p, q) = (nodes[a], nodes[b]);
            let l = dist(p, q);
            facets.push(BoundaryFacet {
                nodes: [a, b],
                tag: if spec.is_robin(edge) { BoundaryTag::Robin } else { BoundaryTag::Dirichlet },
                normal: [(q[1] - p[1]) / l, -(q[0] - p[0]) / l],
                edge,
            });
        };
        for i in 0..nx {
            push(id(i, 0), id(i + 1, 0), 0);
        }
        for j in 0..ny {
            push(id(nx, j), id(nx, j + 1), 1);
        }
        for i in (0..nx).rev() {
            push(id(i + 1, ny), id(i, ny), 2);
        }
        for j in (0..ny).rev() {
            push(id(0, j + 1), id(0, j), 3);
        }

        Ok(Self { nodes, elements, facets, nx, ny, corners, axis_aligned, h })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub(crate) fn clear_facets(&mut self) {
        self.facets.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid divisions along the first and second block directions.
    pub fn divisions(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Nodes lying on a Dirichlet facet.
    pub fn dirichlet_nodes(&self) -> Vec<bool> {
        let mut flags = vec![false; self.nodes.len()];
        for f in &self.facets {
            if f.tag == BoundaryTag::Dirichlet {
                flags[f.nodes[0]] = true;
                flags[f.nodes[1]] = true;
            }
        }
        flags
    }

    /// Element containing `x` and the local coordinates of `x` in `[0, 1]^2`.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 2])> {
        let (xi, eta) = self.block_coordinates(x)?;
        let tol = 1e-10;
        if xi < -tol || xi > 1.0 + tol || eta < -tol || eta > 1.0 + tol {
            return None;
        }
        let (xi, eta) = (xi.clamp(0.0, 1.0), eta.clamp(0.0, 1.0));
        let gi = xi * self.nx as f64;
        let gj = eta * self.ny as f64;
        let i = (gi.floor() as usize).min(self.nx - 1);
        let j = (gj.floor() as usize).min(self.ny - 1);
        Some((j * self.nx + i, [gi - i as f64, gj - j as f64]))
    }

    fn block_coordinates(&self, x: Point) -> Option<(f64, f64)> {
        let c = &self.corners;
        if self.axis_aligned {
            return Some((
                (x[0] - c[0][0]) / (c[1][0] - c[0][0]),
                (x[1] - c[0][1]) / (c[3][1] - c[0][1]),
            ));
        }
        let (mut xi, mut eta) = (0.5, 0.5);
        for _ in 0..50 {
            let p = block_map(c, xi, eta);
            let r = [p[0] - x[0], p[1] - x[1]];
            let (det, j) = block_jacobian(c, xi, eta);
            let dxi = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let deta = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            xi -= dxi;
            eta -= deta;
            if dxi.abs() + deta.abs() < 1e-15 {
                break;
            }
        }
        (xi.is_finite() && eta.is_finite()).then_some((xi, eta))
    }

    /// Plain-text dump: node list, element list and boundary facets.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nodes {}", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(w, "{:e} {:e}", p[0], p[1])?;
        }
        writeln!(w, "elements {}", self.elements.len())?;
        for e in &self.elements {
            writeln!(w, "{} {} {} {}", e[0], e[1], e[2], e[3])?;
        }
        writeln!(w, "facets {}", self.facets.len())?;
        for f in &self.facets {
            let tag = match f.tag {
                BoundaryTag::Dirichlet => "dirichlet",
                BoundaryTag::Robin => "robin",
            };
            writeln!(w, "{} {} {} {}", f.nodes[0], f.nodes[1], tag, f.edge)?;
        }
        Ok(())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn block_map(c: &[Point; 4], xi: f64, eta: f64) -> Point {
    let w = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta];
    let mut p = [0.0; 2];
    for a in 0..4 {
        p[0] += w[a] * c[a][0];
        p[1] += w[a] * c[a][1];
    }
    p
}

/// Determinant and matrix `d x_r / d (xi, eta)_s` of the block map.
fn block_jacobian(c: &[Point; 4], xi: f64, eta: f64) -> (f64, [[f64; 2]; 2]) {
    let dxi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
    let deta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            j[r][0] += c[a][r] * dxi[a];
            j[r][1] += c[a][r] * deta[a];
        }
    }
    (j[0][0] * j[1][1] - j[0][1] * j[1][0], j)
}
