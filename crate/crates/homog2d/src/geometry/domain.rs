use super::Point;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Rectangle,
    Polygon,
}

/// A bounded polygonal domain with counter-clockwise vertices.
///
/// Edge `i` runs from vertex `i` to vertex `i + 1`. Each edge is either a
/// Dirichlet edge (the default) or a Robin edge.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    kind: DomainKind,
    vertices: Vec<Point>,
    robin: Vec<bool>,
}

const RECT_EDGE_NAMES: [&str; 4] = ["bottom", "right", "top", "left"];

impl DomainSpec {
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Self {
            kind: DomainKind::Rectangle,
            vertices: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            robin: vec![false; 4],
        })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0).expect("unit square is valid")
    }

    /// A simple polygon. Vertices must be listed counter-clockwise.
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        let spec = Self {
            kind: DomainKind::Polygon,
            robin: vec![false; vertices.len()],
            vertices,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite vertex coordinate".into()));
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::Geometry(
                "polygon vertices must be counter-clockwise with positive area".into(),
            ));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Marks the listed edges as Robin edges; the others become Dirichlet.
    pub fn with_robin_edges(mut self, edges: &[usize]) -> Result<Self> {
        self.robin = vec![false; self.vertices.len()];
        for &e in edges {
            if e >= self.vertices.len() {
                return Err(Error::Geometry(format!(
                    "edge {e} out of range (domain has {} edges)",
                    self.vertices.len()
                )));
            }
            self.robin[e] = true;
        }
        Ok(self)
    }

    pub fn with_all_robin(mut self) -> Self {
        self.robin = vec![true; self.vertices.len()];
        self
    }

    /// Resolves an edge name (`bottom`, `right`, `top`, `left` on rectangles)
    /// or a decimal index.
    pub fn edge_index(&self, name: &str) -> Result<usize> {
        if let Ok(i) = name.parse::<usize>() {
            if i < self.edge_count() {
                return Ok(i);
            }
        }
        if self.vertices.len() == 4 {
            if let Some(i) = RECT_EDGE_NAMES.iter().position(|n| *n == name) {
                return Ok(i);
            }
        }
        Err(Error::Geometry(format!("unknown edge `{name}`")))
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn is_robin(&self, edge: usize) -> bool {
        self.robin[edge]
    }

    pub fn robin_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&e| self.robin[e]).collect()
    }

    pub fn has_robin(&self) -> bool {
        self.robin.iter().any(|&r| r)
    }

    /// True when the whole boundary carries the Robin condition.
    pub fn all_robin(&self) -> bool {
        self.robin.iter().all(|&r| r)
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    /// Closed-set membership: boundary points count as inside.
    pub fn contains(&self, x: Point) -> bool {
        if self.distance_to_edges(x).0 <= 1e-13 * self.diameter().max(1.0) {
            return true;
        }
        let mut inside = false;
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let t = (x[1] - a[1]) / (b[1] - a[1]);
                if x[0] < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance to the boundary for points inside, zero elsewhere.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.distance_to_edges(x).0
    }

    /// Gradient of [`Self::boundary_distance`] where it is differentiable:
    /// the unit vector pointing away from the nearest boundary point.
    pub fn boundary_distance_gradient(&self, x: Point) -> Point {
        if !self.contains(x) {
            return [0.0, 0.0];
        }
        let (d, p) = self.distance_to_edges(x);
        if d <= 0.0 {
            return [0.0, 0.0];
        }
        [(x[0] - p[0]) / d, (x[1] - p[1]) / d]
    }

    /// Distance to the nearest edge and the nearest boundary point.
    fn distance_to_edges(&self, x: Point) -> (f64, Point) {
        let mut best = (f64::INFINITY, x);
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let p = project_onto_segment(x, a, b);
            let d = dist(x, p);
            if d < best.0 {
                best = (d, p);
            }
        }
        best
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn project_onto_segment(x: Point, a: Point, b: Point) -> Point {
    let e = [b[0] - a[0], b[1] - a[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let t = (((x[0] - a[0]) * e[0] + (x[1] - a[1]) * e[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * e[0], a[1] + t * e[1]]
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}
