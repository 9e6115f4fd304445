use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::metric::{bump_psi, Vec3};

use super::CounterexampleParams;

#[derive(Clone, Copy, Debug)]
struct Element {
    area: f64,
    /// Gradients of the three barycentric coordinates.
    grad: [[f64; 2]; 3],
    /// Whether the element meets the footprint of the bump metric.
    bumped: bool,
}

/// Polar triangulation of the quarter disk `{x, y >= 0, x^2 + y^2 <= R^2}`:
/// the corner node, then rings `1..=nr` with `ntheta + 1` angles from 0 to
/// `pi/2`. Nodes on the two axes and the arc carry zero Dirichlet data.
#[derive(Clone, Debug)]
pub struct QuarterGrid {
    radius: f64,
    nr: usize,
    ntheta: usize,
    nodes: Vec<[f64; 2]>,
    boundary: Vec<bool>,
    triangles: Vec<[usize; 3]>,
    elements: Vec<Element>,
    mass: Vec<f64>,
}

impl QuarterGrid {
    pub fn new(params: &CounterexampleParams, nr: usize, ntheta: usize) -> Result<Self> {
        if nr < 2 || ntheta < 2 {
            return Err(Error::InvalidArgument("quarter grid needs nr >= 2 and ntheta >= 2".into()));
        }
        let radius = params.big_r;
        let dr = radius / nr as f64;
        let dth = FRAC_PI_2 / ntheta as f64;
        let mut nodes = vec![[0.0, 0.0]];
        let mut boundary = vec![true];
        for i in 1..=nr {
            for j in 0..=ntheta {
                let (s, c) = (j as f64 * dth).sin_cos();
                let r = i as f64 * dr;
                nodes.push([r * c, r * s]);
                boundary.push(i == nr || j == 0 || j == ntheta);
            }
        }
        let idx = |i: usize, j: usize| if i == 0 { 0 } else { 1 + (i - 1) * (ntheta + 1) + j };
        let mut triangles = Vec::new();
        for j in 0..ntheta {
            triangles.push([0, idx(1, j), idx(1, j + 1)]);
        }
        for i in 1..nr {
            for j in 0..ntheta {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let centre = params.bump_center();
        let reach = 1.0 + 2.0 * dr.max(radius * dth);
        let mut mass = vec![0.0; nodes.len()];
        let elements = triangles
            .iter()
            .map(|t| {
                let [p0, p1, p2] = t.map(|k| nodes[k]);
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let area = 0.5 * det;
                let edge = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
                let grad = [edge(p1, p2), edge(p2, p0), edge(p0, p1)];
                let near = t.iter().any(|&k| {
                    let (dx, dy) = (nodes[k][0] - centre[0], nodes[k][1] - centre[1]);
                    dx * dx + dy * dy < reach * reach
                });
                for &k in t {
                    mass[k] += area / 3.0;
                }
                Element { area, grad, bumped: near && params.eps > 0.0 }
            })
            .collect();
        Ok(Self { radius, nr, ntheta, nodes, boundary, triangles, elements, mass })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Nodal values of `f`, zero on the boundary.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.boundary)
            .map(|(p, &b)| if b { 0.0 } else { f(p[0], p[1]) })
            .collect()
    }

    /// Area of the polygonal flat domain.
    pub fn flat_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }
}

/// Excess of the discrete functional `sum_T |T| sqrt(1 + |grad u|^2) W_T`
/// over the flat area, where `W_T` averages `(1 + psi(x, y, u))^2` over the
/// edge midpoints. Returns the gradient with respect to the nodal values when
/// asked.
pub fn plateau_excess(params: &CounterexampleParams, grid: &QuarterGrid, u: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = if want_grad { vec![0.0; u.len()] } else { Vec::new() };
    for (t, e) in grid.triangles.iter().zip(&grid.elements) {
        let uv = t.map(|k| u[k]);
        let gx: f64 = (0..3).map(|k| uv[k] * e.grad[k][0]).sum();
        let gy: f64 = (0..3).map(|k| uv[k] * e.grad[k][1]).sum();
        let g2 = gx * gx + gy * gy;
        let root = (1.0 + g2).sqrt();
        let stretch = g2 / (root + 1.0);
        let (mut weight_excess, mut dweight) = (0.0, [0.0; 3]);
        if e.bumped {
            for k in 0..3 {
                let (a, b) = (k, (k + 1) % 3);
                let p = [0.5 * (grid.nodes[t[a]][0] + grid.nodes[t[b]][0]), 0.5 * (grid.nodes[t[a]][1] + grid.nodes[t[b]][1])];
                let z = 0.5 * (uv[a] + uv[b]);
                let (psi, dpsi) = bump_psi(params.r, params.eps, &Vec3::new(p[0], p[1], z));
                weight_excess += (psi * (2.0 + psi)) / 3.0;
                let dw = 2.0 * (1.0 + psi) * dpsi[2] / 3.0 * 0.5;
                dweight[a] += dw;
                dweight[b] += dw;
            }
        }
        total += e.area * (stretch * (1.0 + weight_excess) + weight_excess);
        if want_grad {
            let w = 1.0 + weight_excess;
            for k in 0..3 {
                let dg = (gx * e.grad[k][0] + gy * e.grad[k][1]) / root;
                grad[t[k]] += e.area * (dg * w + root * dweight[k]);
            }
        }
    }
    if want_grad {
        for (k, g) in grad.iter_mut().enumerate() {
            if grid.boundary[k] {
                *g = 0.0;
            }
        }
    }
    (total, grad)
}

#[derive(Clone, Debug)]
pub struct PlateauResult {
    pub heights: Vec<f64>,
    /// Discrete excess over the flat quarter disk.
    pub excess: f64,
    /// `pi R^2 / 4 + excess`, an upper bound for the Plateau value in the graph class.
    pub area: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Excess after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Projected steepest descent on the discrete functional with values kept in
/// `[0, eps]`, the mass-lumped gradient as search direction and Armijo
/// backtracking. Stops once the mass-weighted norm of the projected step
/// direction is below `tol`.
pub fn plateau_graph_minimize(
    params: &CounterexampleParams,
    grid: &QuarterGrid,
    initial: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<PlateauResult> {
    if initial.len() != grid.n_nodes() {
        return Err(Error::InvalidArgument("initial heights do not match the grid".into()));
    }
    let eps = params.eps;
    if initial.iter().any(|&v| !(v >= -1e-15 && v <= eps + 1e-15)) {
        return Err(Error::Precondition("initial heights must lie in [0, eps]".into()));
    }
    let clamp = |v: f64| v.clamp(0.0, eps);
    let mut u: Vec<f64> = initial
        .iter()
        .enumerate()
        .map(|(k, &v)| if grid.boundary[k] { 0.0 } else { clamp(v) })
        .collect();
    let (mut f, mut g) = plateau_excess(params, grid, &u, true);
    let mut history = vec![f];
    let h = grid.radius / grid.nr as f64;
    let mut alpha = h * h;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let d: Vec<f64> = g.iter().zip(&grid.mass).map(|(gi, m)| -gi / m).collect();
        let pnorm = u
            .iter()
            .zip(&d)
            .zip(&grid.mass)
            .map(|((ui, di), m)| {
                let s = clamp(ui + di) - ui;
                m * s * s
            })
            .sum::<f64>()
            .sqrt();
        if pnorm <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut step = (2.0 * alpha).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(ui, di)| clamp(ui + step * di)).collect();
            let slope: f64 = trial.iter().zip(&u).zip(&g).map(|((t, ui), gi)| gi * (t - ui)).sum();
            if slope >= 0.0 {
                break;
            }
            let (ft, _) = plateau_excess(params, grid, &trial, false);
            if ft <= f + 1e-4 * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            converged = true;
            break;
        };
        alpha = step;
        u = trial;
        f = ft;
        g = plateau_excess(params, grid, &u, true).1;
        history.push(f);
    }
    Ok(PlateauResult {
        area: 0.25 * std::f64::consts::PI * params.big_r * params.big_r + f,
        excess: f,
        heights: u,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64) -> CounterexampleParams {
        CounterexampleParams::with_default_radius(4.0, eps).unwrap()
    }

    #[test]
    fn grid_shape() {
        let p = params(0.05);
        let g = QuarterGrid::new(&p, 10, 8).unwrap();
        assert_eq!(g.n_nodes(), 1 + 10 * 9);
        assert_eq!(g.triangles().len(), 8 + 2 * 9 * 8);
        assert!(g.elements.iter().all(|e| e.area > 0.0));
        let m: f64 = g.mass.iter().sum();
        assert!((m - g.flat_area()).abs() < 1e-9);
        let quarter = 0.25 * std::f64::consts::PI * p.big_r * p.big_r;
        assert!(g.flat_area() < quarter && g.flat_area() > 0.99 * quarter);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = params(0.05);
        let g = QuarterGrid::new(&p, 40, 32).unwrap();
        let c = p.bump_center();
        let u = g.interpolate(|x, y| {
            let d = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
            0.04 * (-(d * d) / 2.0).exp()
        });
        let (_, grad) = plateau_excess(&p, &g, &u, true);
        let mut checked = 0;
        for k in 0..g.n_nodes() {
            if g.is_boundary(k) || grad[k].abs() < 1e-6 {
                continue;
            }
            let h = 1e-7;
            let (mut up, mut um) = (u.clone(), u.clone());
            up[k] += h;
            um[k] -= h;
            let fd = (plateau_excess(&p, &g, &up, false).0 - plateau_excess(&p, &g, &um, false).0) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6 * grad[k].abs().max(1e-3), "{k}: {fd} vs {}", grad[k]);
            checked += 1;
            if checked > 40 {
                break;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn euclidean_limit_keeps_flat_disk() {
        let p = CounterexampleParams::with_default_radius(4.0, 0.0).unwrap();
        let g = QuarterGrid::new(&p, 20, 16).unwrap();
        let res = plateau_graph_minimize(&p, &g, &vec![0.0; g.n_nodes()], 10, 1e-12).unwrap();
        assert_eq!(res.excess, 0.0);
        assert!(res.converged);
        assert_eq!(res.area, 0.25 * std::f64::consts::PI * p.big_r * p.big_r);
    }

    #[test]
    fn descent_is_monotone() {
        let p = params(0.05);
        let g = QuarterGrid::new(&p, 60, 48).unwrap();
        let u0 = super::super::competitor_heights(&p, &g);
        let res = plateau_graph_minimize(&p, &g, &u0, 30, 0.0).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(res.history.len() > 5);
        assert!(res.heights.iter().all(|&v| (0.0..=0.05).contains(&v)));
    }

    #[test]
    fn rejects_infeasible_start() {
        let p = params(0.05);
        let g = QuarterGrid::new(&p, 10, 8).unwrap();
        assert!(plateau_graph_minimize(&p, &g, &vec![0.1; g.n_nodes()], 1, 1e-9).is_err());
        assert!(plateau_graph_minimize(&p, &g, &[0.0], 1, 1e-9).is_err());
    }
}
