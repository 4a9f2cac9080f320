use std::sync::OnceLock;

use crate::fem::quadrature::gauss_legendre;
use crate::fem::SolutionField;
use crate::geometry::Point;

/// The unnormalized bump `exp(-1 / (1 - r^2))` on the unit disc.
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Integral of [`bump`] over the plane.
pub fn bump_integral() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        // pi * int_0^1 exp(-1 / (1 - s)) ds with s = r^2, composite Gauss.
        let (x, w) = gauss_legendre(10);
        let panels = 200;
        let mut total = 0.0;
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                let s = (p as f64 + xi) / panels as f64;
                total += wi / panels as f64 * (-1.0 / (1.0 - s)).exp();
            }
        }
        std::f64::consts::PI * total
    })
}

/// A weighted point cloud carrying several channels of values, used as a
/// midpoint rule for `int rho_delta(x - y) f(y) dy`.
#[derive(Clone, Debug, Default)]
pub struct Samples {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `values[p * channels + c]`.
    pub values: Vec<f64>,
    pub channels: usize,
}

impl Samples {
    /// Element-centre gradients of a field: channel `alpha * 2 + k` holds
    /// `d_k u^alpha`, weights are element areas.
    pub fn gradients(u: &SolutionField) -> Self {
        let mesh = u.space().mesh();
        let n = u.components();
        let mut s = Samples { channels: 2 * n, ..Default::default() };
        for e in 0..mesh.element_count() {
            let nodes = mesh.elements()[e].map(|i| mesh.nodes()[i]);
            let (c, area) = quad_centre_area(&nodes);
            s.points.push(c);
            s.weights.push(area);
            for g in u.element_gradient(e) {
                s.values.extend_from_slice(&g);
            }
        }
        s
    }

    /// Element-centre values of a field, one channel per component.
    pub fn values(u: &SolutionField) -> Self {
        let mesh = u.space().mesh();
        let n = u.components();
        let mut s = Samples { channels: n, ..Default::default() };
        for e in 0..mesh.element_count() {
            let ids = mesh.elements()[e];
            let nodes = ids.map(|i| mesh.nodes()[i]);
            let (c, area) = quad_centre_area(&nodes);
            s.points.push(c);
            s.weights.push(area);
            for a in 0..n {
                s.values.push(0.25 * ids.iter().map(|&i| u.nodal(i, a)).sum::<f64>());
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Merges samples of a structured `nx x ny` element grid into
    /// `factor x factor` blocks, keeping total weight and weighted means.
    pub fn coarsen(&self, nx: usize, ny: usize, factor: usize) -> Self {
        if factor <= 1 || self.len() != nx * ny {
            return self.clone();
        }
        let bx = nx.div_ceil(factor);
        let by = ny.div_ceil(factor);
        let c = self.channels;
        let mut w = vec![0.0; bx * by];
        let mut p = vec![[0.0; 2]; bx * by];
        let mut v = vec![0.0; bx * by * c];
        for j in 0..ny {
            for i in 0..nx {
                let src = j * nx + i;
                let dst = (j / factor) * bx + i / factor;
                let ws = self.weights[src];
                w[dst] += ws;
                p[dst][0] += ws * self.points[src][0];
                p[dst][1] += ws * self.points[src][1];
                for k in 0..c {
                    v[dst * c + k] += ws * self.values[src * c + k];
                }
            }
        }
        for b in 0..bx * by {
            p[b] = [p[b][0] / w[b], p[b][1] / w[b]];
            for k in 0..c {
                v[b * c + k] /= w[b];
            }
        }
        Samples { points: p, weights: w, values: v, channels: c }
    }
}

fn quad_centre_area(p: &[Point; 4]) -> (Point, f64) {
    let c = [
        0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
        0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
    ];
    let area = 0.5 * ((p[2][0] - p[0][0]) * (p[3][1] - p[1][1]) - (p[3][0] - p[1][0]) * (p[2][1] - p[0][1]));
    (c, area)
}

/// `S_delta f = rho_delta * f` for a sampled `f`, where
/// `rho_delta(z) = rho(z / delta) / delta^2` and `rho` is the normalized bump.
///
/// With `renormalize` the convolution is divided by the kernel mass that
/// falls on sample points, which keeps constants exact up to the boundary.
#[derive(Clone, Debug)]
pub struct Mollified {
    samples: Samples,
    delta: f64,
    renormalize: bool,
    origin: Point,
    bins: Vec<Vec<u32>>,
    nbx: usize,
    nby: usize,
}

impl Mollified {
    pub fn new(samples: Samples, delta: f64, renormalize: bool) -> Self {
        assert!(delta > 0.0, "mollifier radius must be positive");
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &samples.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if samples.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let nbx = (((hi[0] - lo[0]) / delta).floor() as usize + 1).max(1);
        let nby = (((hi[1] - lo[1]) / delta).floor() as usize + 1).max(1);
        let mut bins = vec![Vec::new(); nbx * nby];
        for (k, p) in samples.points.iter().enumerate() {
            let i = (((p[0] - lo[0]) / delta) as usize).min(nbx - 1);
            let j = (((p[1] - lo[1]) / delta) as usize).min(nby - 1);
            bins[j * nbx + i].push(k as u32);
        }
        Self { samples, delta, renormalize, origin: lo, bins, nbx, nby }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn channels(&self) -> usize {
        self.samples.channels
    }

    fn for_each_near(&self, x: Point, mut f: impl FnMut(usize, f64, [f64; 2])) {
        let d = self.delta;
        let fi = ((x[0] - self.origin[0]) / d).floor() as i64;
        let fj = ((x[1] - self.origin[1]) / d).floor() as i64;
        for j in fj - 1..=fj + 1 {
            if j < 0 || j >= self.nby as i64 {
                continue;
            }
            for i in fi - 1..=fi + 1 {
                if i < 0 || i >= self.nbx as i64 {
                    continue;
                }
                for &k in &self.bins[j as usize * self.nbx + i as usize] {
                    let k = k as usize;
                    let p = self.samples.points[k];
                    let z = [(x[0] - p[0]) / d, (x[1] - p[1]) / d];
                    let r2 = z[0] * z[0] + z[1] * z[1];
                    if r2 < 1.0 {
                        f(k, r2, z);
                    }
                }
            }
        }
    }

    /// `S_delta f(x)` for every channel.
    pub fn value(&self, x: Point, out: &mut [f64]) {
        let c = self.samples.channels;
        out.fill(0.0);
        let mut mass = 0.0;
        self.for_each_near(x, |k, r2, _| {
            let w = self.samples.weights[k] * bump(r2);
            mass += w;
            for (o, v) in out.iter_mut().zip(&self.samples.values[k * c..(k + 1) * c]) {
                *o += w * v;
            }
        });
        let scale = if self.renormalize {
            if mass > 0.0 {
                1.0 / mass
            } else {
                0.0
            }
        } else {
            1.0 / (bump_integral() * self.delta * self.delta)
        };
        out.iter_mut().for_each(|o| *o *= scale);
    }

    /// Gradient of `S_delta f(x)`: `out[c * 2 + k]` is `d_k` of channel `c`.
    pub fn gradient(&self, x: Point, out: &mut [f64]) {
        let c = self.samples.channels;
        let d = self.delta;
        let mut num = vec![0.0; c];
        let mut dnum = vec![0.0; 2 * c];
        let mut mass = 0.0;
        let mut dmass = [0.0; 2];
        self.for_each_near(x, |k, r2, z| {
            let w = self.samples.weights[k] * bump(r2);
            let s = 1.0 - r2;
            // d/dx rho(z) with z = (x - p) / delta.
            let g = [-2.0 * z[0] / (s * s) / d, -2.0 * z[1] / (s * s) / d];
            mass += w;
            dmass[0] += w * g[0];
            dmass[1] += w * g[1];
            for ch in 0..c {
                let v = self.samples.values[k * c + ch];
                num[ch] += w * v;
                dnum[ch * 2] += w * g[0] * v;
                dnum[ch * 2 + 1] += w * g[1] * v;
            }
        });
        for ch in 0..c {
            for k in 0..2 {
                out[ch * 2 + k] = if self.renormalize {
                    if mass > 0.0 {
                        (dnum[ch * 2 + k] - num[ch] / mass * dmass[k]) / mass
                    } else {
                        0.0
                    }
                } else {
                    dnum[ch * 2 + k] / (bump_integral() * d * d)
                };
            }
        }
    }
}

/// Bilinear interpolation table of a vector-valued function on a grid.
#[derive(Clone, Debug)]
pub struct Tabulated {
    origin: Point,
    spacing: [f64; 2],
    nx: usize,
    ny: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tabulated {
    /// Samples `f` on a grid covering `[lo, hi]` with spacing at most `h`.
    pub fn build(lo: Point, hi: Point, h: f64, channels: usize, f: impl Fn(Point, &mut [f64])) -> Self {
        let nx = (((hi[0] - lo[0]) / h).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / h).ceil() as usize).max(1);
        let spacing = [(hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64];
        let mut data = vec![0.0; (nx + 1) * (ny + 1) * channels];
        for j in 0..=ny {
            for i in 0..=nx {
                let x = [lo[0] + i as f64 * spacing[0], lo[1] + j as f64 * spacing[1]];
                let k = (j * (nx + 1) + i) * channels;
                f(x, &mut data[k..k + channels]);
            }
        }
        Self { origin: lo, spacing, nx, ny, channels, data }
    }

    pub fn eval(&self, x: Point, out: &mut [f64]) {
        let gx = ((x[0] - self.origin[0]) / self.spacing[0]).clamp(0.0, self.nx as f64);
        let gy = ((x[1] - self.origin[1]) / self.spacing[1]).clamp(0.0, self.ny as f64);
        let i = (gx.floor() as usize).min(self.nx - 1);
        let j = (gy.floor() as usize).min(self.ny - 1);
        let (a, b) = (gx - i as f64, gy - j as f64);
        let c = self.channels;
        let at = |ii: usize, jj: usize, ch: usize| self.data[(jj * (self.nx + 1) + ii) * c + ch];
        for (ch, o) in out.iter_mut().enumerate().take(c) {
            *o = (1.0 - a) * (1.0 - b) * at(i, j, ch)
                + a * (1.0 - b) * at(i + 1, j, ch)
                + a * b * at(i + 1, j + 1, ch)
                + (1.0 - a) * b * at(i, j + 1, ch);
        }
    }
}
