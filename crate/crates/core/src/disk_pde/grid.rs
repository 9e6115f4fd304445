use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Polar grid on the closed unit disk: the pole plus rings `i = 1..=nr` of
/// `ntheta` nodes each, `r_i = i / nr`, `theta_j = 2 pi j / ntheta`. Ring `nr`
/// is the Dirichlet boundary.
#[derive(Clone, Debug)]
pub struct DiskGrid {
    nr: usize,
    ntheta: usize,
    dr: f64,
    dtheta: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PartialEq for DiskGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nr == other.nr && self.ntheta == other.ntheta
    }
}

impl DiskGrid {
    pub fn new(nr: usize, ntheta: usize) -> Result<Arc<Self>> {
        if nr < 8 {
            return Err(Error::InvalidArgument(format!("nr must be at least 8, got {nr}")));
        }
        if ntheta < 16 || ntheta % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "ntheta must be even and at least 16, got {ntheta}"
            )));
        }
        let dtheta = 2.0 * PI / ntheta as f64;
        let cos = (0..ntheta).map(|j| (j as f64 * dtheta).cos()).collect();
        let sin = (0..ntheta).map(|j| (j as f64 * dtheta).sin()).collect();
        Ok(Arc::new(Self { nr, ntheta, dr: 1.0 / nr as f64, dtheta, cos, sin }))
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn n_nodes(&self) -> usize {
        1 + self.nr * self.ntheta
    }

    /// Node index of ring `i >= 1`, angle `j` (taken cyclically).
    pub fn index(&self, i: usize, j: isize) -> usize {
        if i == 0 {
            return 0;
        }
        let n = self.ntheta as isize;
        1 + (i - 1) * self.ntheta + j.rem_euclid(n) as usize
    }

    /// `(ring, angle)` of a node; the pole is `(0, 0)`.
    pub fn ring_angle(&self, node: usize) -> (usize, usize) {
        if node == 0 {
            (0, 0)
        } else {
            (1 + (node - 1) / self.ntheta, (node - 1) % self.ntheta)
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.ring_angle(node).0 == self.nr
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn cos(&self, j: usize) -> f64 {
        self.cos[j]
    }

    pub fn sin(&self, j: usize) -> f64 {
        self.sin[j]
    }

    pub fn xy(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.ring_angle(node);
        let r = self.radius(i);
        (r * self.cos[j], r * self.sin[j])
    }
}

/// Values and Cartesian derivatives of a grid function at a node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeJet {
    pub w: f64,
    pub wx: f64,
    pub wy: f64,
    pub wxx: f64,
    pub wxy: f64,
    pub wyy: f64,
}

impl NodeJet {
    fn from_polar(w: f64, r: f64, c: f64, s: f64, d: [f64; 5]) -> Self {
        let [wr, wt, wrr, wtt, wrt] = d;
        let a = wr / r + wtt / (r * r);
        let b = wrt / r - wt / (r * r);
        Self {
            w,
            wx: c * wr - s * wt / r,
            wy: s * wr + c * wt / r,
            wxx: c * c * wrr + s * s * a - 2.0 * c * s * b,
            wyy: s * s * wrr + c * c * a + 2.0 * c * s * b,
            wxy: c * s * (wrr - a) + (c * c - s * s) * b,
        }
    }
}

/// Nodal function on a [`DiskGrid`], zero on the boundary ring unless set.
#[derive(Clone, Debug)]
pub struct GraphFunction {
    grid: Arc<DiskGrid>,
    values: Vec<f64>,
}

fn catmull_rom(p: [f64; 4], f: f64) -> (f64, f64) {
    let a = 0.5 * (p[2] - p[0]);
    let b = p[0] - 2.5 * p[1] + 2.0 * p[2] - 0.5 * p[3];
    let c = -0.5 * p[0] + 1.5 * p[1] - 1.5 * p[2] + 0.5 * p[3];
    (p[1] + f * (a + f * (b + f * c)), a + f * (2.0 * b + 3.0 * f * c))
}

impl GraphFunction {
    pub fn zeros(grid: &Arc<DiskGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.n_nodes()] }
    }

    /// Samples `f(x, y)` at interior nodes; boundary values are set to zero.
    pub fn from_fn(grid: &Arc<DiskGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = Self::zeros(grid);
        for node in 0..grid.n_nodes() {
            if !grid.is_boundary(node) {
                let (x, y) = grid.xy(node);
                g.values[node] = f(x, y);
            }
        }
        g
    }

    pub fn from_values(grid: &Arc<DiskGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: isize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Second-order finite-difference jet at a node. Boundary nodes use
    /// one-sided radial differences.
    pub fn jet(&self, node: usize) -> NodeJet {
        let g = &*self.grid;
        let (i, j) = g.ring_angle(node);
        if i == 0 {
            return self.pole_jet();
        }
        let ji = j as isize;
        let dr = g.dr;
        let dt = g.dtheta;
        let w = self.values[node];
        let c = g.cos[j];
        let s = g.sin[j];
        let r = g.radius(i);
        let wt = (self.at(i, ji + 1) - self.at(i, ji - 1)) / (2.0 * dt);
        let wtt = (self.at(i, ji + 1) - 2.0 * w + self.at(i, ji - 1)) / (dt * dt);
        let (wr, wrr, wrt) = if i < g.nr {
            let up = self.at(i + 1, ji);
            let dn = self.at(i - 1, ji);
            let wrt = (self.at(i + 1, ji + 1) - self.at(i + 1, ji - 1) - self.at(i - 1, ji + 1)
                + self.at(i - 1, ji - 1))
                / (4.0 * dr * dt);
            ((up - dn) / (2.0 * dr), (up - 2.0 * w + dn) / (dr * dr), wrt)
        } else {
            let a = |k: usize, jj: isize| self.at(i - k, jj);
            let rad = |jj: isize| (3.0 * a(0, jj) - 4.0 * a(1, jj) + a(2, jj)) / (2.0 * dr);
            let wrr = (2.0 * a(0, ji) - 5.0 * a(1, ji) + 4.0 * a(2, ji) - a(3, ji)) / (dr * dr);
            (rad(ji), wrr, (rad(ji + 1) - rad(ji - 1)) / (2.0 * dt))
        };
        NodeJet::from_polar(w, r, c, s, [wr, wt, wrr, wtt, wrt])
    }

    fn pole_jet(&self) -> NodeJet {
        let g = &*self.grid;
        let n = g.ntheta as f64;
        let dr = g.dr;
        let w0 = self.values[0];
        let (mut mean, mut c1, mut s1, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..g.ntheta {
            let a = self.values[1 + j];
            let (c, s) = (g.cos[j], g.sin[j]);
            mean += a;
            c1 += a * c;
            s1 += a * s;
            c2 += a * (c * c - s * s);
            s2 += a * 2.0 * c * s;
        }
        mean /= n;
        let lap = 4.0 * (mean - w0) / (dr * dr);
        let diff = 8.0 * c2 / (n * dr * dr);
        NodeJet {
            w: w0,
            wx: 2.0 * c1 / (n * dr),
            wy: 2.0 * s1 / (n * dr),
            wxx: 0.5 * (lap + diff),
            wyy: 0.5 * (lap - diff),
            wxy: 4.0 * s2 / (n * dr * dr),
        }
    }

    /// Largest nodal gradient norm.
    pub fn max_gradient(&self) -> f64 {
        (0..self.grid.n_nodes())
            .map(|k| {
                let j = self.jet(k);
                j.wx.hypot(j.wy)
            })
            .fold(0.0, f64::max)
    }

    fn ring_value(&self, k: isize, theta: f64) -> (f64, f64) {
        let g = &*self.grid;
        let nr = g.nr as isize;
        if k == 0 {
            return (self.values[0], 0.0);
        }
        if k < 0 {
            return self.ring_value(-k, theta + PI);
        }
        if k > nr {
            let (a, da) = self.ring_value(nr, theta);
            let (b, db) = self.ring_value(nr - 1, theta);
            let m = (k - nr) as f64;
            return (a + m * (a - b), da + m * (da - db));
        }
        let t = theta.rem_euclid(2.0 * PI) / g.dtheta;
        let j0 = t.floor();
        let f = t - j0;
        let j0 = j0 as isize;
        let i = k as usize;
        let p = [self.at(i, j0 - 1), self.at(i, j0), self.at(i, j0 + 1), self.at(i, j0 + 2)];
        let (v, dv) = catmull_rom(p, f);
        (v, dv / g.dtheta)
    }

    fn sample_polar(&self, r: f64, theta: f64) -> (f64, f64, f64) {
        let g = &*self.grid;
        let s = r / g.dr;
        let i0 = s.floor();
        let f = s - i0;
        let i0 = i0 as isize;
        let mut vals = [0.0; 4];
        let mut dth = [0.0; 4];
        for (m, k) in (i0 - 1..=i0 + 2).enumerate() {
            let (v, d) = self.ring_value(k, theta);
            vals[m] = v;
            dth[m] = d;
        }
        let (v, dv) = catmull_rom(vals, f);
        let (wt, _) = catmull_rom(dth, f);
        (v, dv / g.dr, wt)
    }

    /// C^1 Catmull-Rom interpolant in `(r, theta)`, mirrored through the pole
    /// and linearly extrapolated past the rim.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        self.sample_polar(r, y.atan2(x)).0
    }

    /// Interpolated value and Cartesian gradient.
    pub fn sample_with_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let r = x.hypot(y);
        let eps = 1e-4 * self.grid.dr;
        if r < eps {
            let fx = (self.sample(x + eps, y) - self.sample(x - eps, y)) / (2.0 * eps);
            let fy = (self.sample(x, y + eps) - self.sample(x, y - eps)) / (2.0 * eps);
            return (self.sample(x, y), fx, fy);
        }
        let (c, s) = (x / r, y / r);
        let (v, wr, wt) = self.sample_polar(r, y.atan2(x));
        (v, c * wr - s * wt / r, s * wr + c * wt / r)
    }
}
