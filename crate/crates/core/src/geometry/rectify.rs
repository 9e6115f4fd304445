use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::disk_pde::DiskGrid;
use crate::error::{Error, Result};
use crate::family::DiskSolution;
use crate::metric::Vec3;

type V2 = Vector2<f64>;

// One-sided first-derivative weights at the last point, fourth and sixth order.
const BACK4: [f64; 5] = [25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25];
const BACK6: [f64; 7] = [49.0 / 20.0, -6.0, 7.5, -20.0 / 3.0, 3.75, -1.2, 1.0 / 6.0];

#[derive(Clone, Debug)]
pub struct RectifyOptions {
    pub r0_start: f64,
    pub r0_min: f64,
    /// Start points `a` of the quintic transition of `psi` on `[a, 1]`, tried in order.
    pub transition_starts: Vec<f64>,
}

impl Default for RectifyOptions {
    fn default() -> Self {
        Self { r0_start: 0.5, r0_min: 1.0 / 64.0, transition_starts: vec![0.5, 0.25, 0.75, 0.875] }
    }
}

/// Node map `Y` of the closed disk, equal to the identity on the boundary.
#[derive(Clone, Debug)]
pub struct DiskDiffeo {
    grid: Arc<DiskGrid>,
    points: Vec<V2>,
    boundary_field: Vec<V2>,
    jacobian: Vec<f64>,
    r0: f64,
    transition_start: f64,
}

impl DiskDiffeo {
    pub fn identity(grid: &Arc<DiskGrid>) -> Self {
        let n = grid.n_nodes();
        let points = (0..n).map(|k| xy(grid, k)).collect();
        let boundary_field = (0..grid.ntheta()).map(|j| V2::new(grid.cos(j), grid.sin(j))).collect();
        Self {
            grid: grid.clone(),
            points,
            boundary_field,
            jacobian: vec![1.0; n],
            r0: 0.0,
            transition_start: 0.5,
        }
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    pub fn points(&self) -> &[V2] {
        &self.points
    }

    /// The prescribed `d_r Y` on the boundary, indexed by angle.
    pub fn boundary_field(&self) -> &[V2] {
        &self.boundary_field
    }

    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn transition_start(&self) -> f64 {
        self.transition_start
    }

    pub fn boundary_identity_error(&self) -> f64 {
        let g = &self.grid;
        (0..g.ntheta())
            .map(|j| {
                let k = g.index(g.nr(), j as isize);
                (self.points[k] - xy(g, k)).amax()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_displacement(&self) -> f64 {
        (0..self.grid.n_nodes())
            .map(|k| (self.points[k] - xy(&self.grid, k)).norm())
            .fold(0.0, f64::max)
    }

    /// Sixth-order one-sided `d_r Y` at the boundary nodes.
    pub fn radial_derivative_at_boundary(&self) -> Vec<V2> {
        let g = &self.grid;
        (0..g.ntheta()).map(|j| radial_back(g, j, &BACK6, |k| self.points[k])).collect()
    }
}

fn xy(g: &DiskGrid, k: usize) -> V2 {
    let (x, y) = g.xy(k);
    V2::new(x, y)
}

fn radial_back<T>(g: &DiskGrid, j: usize, w: &[f64], f: impl Fn(usize) -> T) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let nr = g.nr();
    let mut acc = f(g.index(nr, j as isize)) * w[0];
    for (k, c) in w.iter().enumerate().skip(1) {
        acc = acc + f(g.index(nr - k, j as isize)) * *c;
    }
    acc * (1.0 / g.dr())
}

/// Derivative at every angle of the trigonometric interpolant of periodic
/// samples (even count, Nyquist mode dropped).
fn spectral_derivative<T>(values: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = values.len();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let weights: Vec<f64> = (0..n)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                let s = if d % 2 == 0 { 0.5 } else { -0.5 };
                s / (0.5 * d as f64 * h).tan()
            }
        })
        .collect();
    (0..n)
        .map(|j| {
            let mut acc = values[j] * 0.0;
            for (k, v) in values.iter().enumerate() {
                if k != j {
                    acc = acc + *v * weights[(j + n - k) % n];
                }
            }
            acc
        })
        .collect()
}

fn boundary_ring(g: &DiskGrid) -> impl Iterator<Item = usize> + '_ {
    (0..g.ntheta()).map(move |j| g.index(g.nr(), j as isize))
}

/// `(F_x, F_y)` at every boundary node, with one-sided radial differences of
/// the given order (4 or 6) and spectral angular derivatives.
fn boundary_tangents(sol: &DiskSolution, order: usize) -> Vec<(Vec3, Vec3)> {
    let g = sol.grid();
    let u = sol.heights.values();
    let back: &[f64] = if order >= 6 { &BACK6 } else { &BACK4 };
    let ring: Vec<f64> = boundary_ring(g).map(|k| u[k]).collect();
    let ut = spectral_derivative(&ring);
    let fp = &sol.params;
    let rad = fp.radius();
    (0..g.ntheta())
        .map(|j| {
            let ur = radial_back(g, j, back, |k| u[k]);
            let (c, s) = (g.cos(j), g.sin(j));
            let (ux, uy) = (c * ur - s * ut[j], s * ur + c * ut[j]);
            (fp.v * rad + fp.p * ux, fp.w() * rad + fp.p * uy)
        })
        .collect()
}

/// Coefficients of `w` in the basis `(F_x, F_y)` of the tangent plane.
fn tangent_coordinates(fx: &Vec3, fy: &Vec3, w: &Vec3) -> Option<V2> {
    let m = Matrix2::new(fx.dot(fx), fx.dot(fy), fx.dot(fy), fy.dot(fy));
    m.try_inverse().map(|mi| mi * V2::new(fx.dot(w), fy.dot(w)))
}

/// `X = DF^{-1}(rot(d_theta F))` on the boundary, with `rot(w) = w ^ nu` the
/// quarter turn that sends `d_theta F` to `d_r F` on flat disks.
pub fn boundary_field(sol: &DiskSolution) -> Result<Vec<V2>> {
    let g = sol.grid();
    let tangents = boundary_tangents(sol, 4);
    (0..g.ntheta())
        .map(|j| {
            let (fx, fy) = tangents[j];
            let nu = fx.cross(&fy);
            let node = g.index(g.nr(), j as isize);
            if !(nu.norm() > 1e-14) {
                return Err(Error::ImmersionDegenerate { node });
            }
            let nu = nu.normalize();
            let ft = fy * g.cos(j) - fx * g.sin(j);
            tangent_coordinates(&fx, &fy, &ft.cross(&nu)).ok_or(Error::ImmersionDegenerate { node })
        })
        .collect()
}

/// `psi(s)`: 1 on `[0, a]`, quintic smoothstep down to 0 on `[a, 1]`; returns
/// the value and derivative.
fn psi(s: f64, a: f64) -> (f64, f64) {
    if s <= a {
        return (1.0, 0.0);
    }
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - a;
    let tau = (s - a) / w;
    let q = tau * tau * tau * (tau * (6.0 * tau - 15.0) + 10.0);
    let dq = 30.0 * tau * tau * (tau - 1.0) * (tau - 1.0);
    (1.0 - q, -dq / w)
}

/// `(s psi + (1 - psi)(1 + lambda0 (s - 1)))' > 0` on `[1/2, 1]`.
fn psi_admissible(a: f64, lambda0: f64) -> bool {
    (0..=2000).all(|k| {
        let s = 0.5 + 0.5 * k as f64 / 2000.0;
        let (p, dp) = psi(s, a);
        p + s * dp - dp * (1.0 + lambda0 * (s - 1.0)) + (1.0 - p) * lambda0 > 0.0
    })
}

/// Value, `d_r` and `d_theta` of `Y(r, theta) = r phi e_r + (1 - phi)(e_r + (r - 1) X)`.
fn eval_y(r: f64, er: V2, et: V2, x: V2, xt: V2, r0: f64, a: f64) -> (V2, V2, V2) {
    let (p, dps) = psi(1.0 + (r - 1.0) / r0, a);
    let dp = dps / r0;
    let base = er + x * (r - 1.0);
    let y = er * (r * p) + base * (1.0 - p);
    let yr = er * (p + r * dp) - base * dp + x * (1.0 - p);
    let yt = et * (r * p) + (et + xt * (r - 1.0)) * (1.0 - p);
    (y, yr, yt)
}

fn build(g: &Arc<DiskGrid>, x: &[V2], xt: &[V2], r0: f64, a: f64) -> DiskDiffeo {
    let n = g.n_nodes();
    let mut points = Vec::with_capacity(n);
    let mut jacobian = Vec::with_capacity(n);
    for node in 0..n {
        let (i, j) = g.ring_angle(node);
        if i == 0 {
            points.push(V2::zeros());
            jacobian.push(1.0);
            continue;
        }
        let r = g.radius(i);
        let er = V2::new(g.cos(j), g.sin(j));
        let et = V2::new(-g.sin(j), g.cos(j));
        let (mut y, yr, yt) = eval_y(r, er, et, x[j], xt[j], r0, a);
        if i == g.nr() {
            y = er;
        }
        points.push(y);
        jacobian.push((yr[0] * yt[1] - yr[1] * yt[0]) / r);
    }
    DiskDiffeo { grid: g.clone(), points, boundary_field: x.to_vec(), jacobian, r0, transition_start: a }
}

/// Diffeomorphism `Y` of the disk fixing the boundary with `d_r Y = X` there,
/// so that `F o Y` is conformal along the boundary. The cutoff radius `r0` is
/// halved from `r0_start` until the nodal Jacobian is positive.
pub fn boundary_conformalizing_diffeo(sol: &DiskSolution, opts: &RectifyOptions) -> Result<DiskDiffeo> {
    let g = sol.grid().clone();
    let x = boundary_field(sol)?;
    for (j, xj) in x.iter().enumerate() {
        let er = V2::new(g.cos(j), g.sin(j));
        if !(xj.dot(&er) > 0.0) {
            return Err(Error::Precondition(format!(
                "<X, e_r> = {:.3e} <= 0 at boundary angle index {j}",
                xj.dot(&er)
            )));
        }
    }
    let xt = spectral_derivative(&x);
    let lambda0 = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let a = opts
        .transition_starts
        .iter()
        .copied()
        .find(|&a| a > 0.0 && a < 1.0 && psi_admissible(a, lambda0))
        .ok_or_else(|| Error::Construction(format!("no admissible cutoff for lambda0 = {lambda0:.3}")))?;
    let mut r0 = opts.r0_start;
    let mut worst = f64::NAN;
    while r0 >= opts.r0_min * (1.0 - 1e-12) {
        let y = build(&g, &x, &xt, r0, a);
        worst = y.min_jacobian();
        if worst > 0.0 {
            return Ok(y);
        }
        r0 *= 0.5;
    }
    Err(Error::Construction(format!(
        "Jacobian still non-positive ({worst:.3e}) at r0 = {}",
        opts.r0_min
    )))
}

/// Maximum over boundary nodes of the angle defect
/// `|<d_r G, d_theta G>|/(|d_r G||d_theta G|)` plus the stretch defect
/// `||d_r G| - |d_theta G||/|d_theta G|` of `G = F o Y`, with sixth-order
/// radial differences and spectral angular derivatives.
pub fn conformal_defect(sol: &DiskSolution, y: &DiskDiffeo) -> Result<f64> {
    let g = sol.grid();
    if g.as_ref() != y.grid.as_ref() {
        return Err(Error::InvalidArgument("diffeomorphism and solution grids differ".into()));
    }
    let yr = y.radial_derivative_at_boundary();
    let ring: Vec<V2> = boundary_ring(g).map(|k| y.points[k]).collect();
    let yt = spectral_derivative(&ring);
    let tangents = boundary_tangents(sol, 6);
    let mut worst: f64 = 0.0;
    for j in 0..g.ntheta() {
        let (fx, fy) = tangents[j];
        let tr = fx * yr[j][0] + fy * yr[j][1];
        let tt = fx * yt[j][0] + fy * yt[j][1];
        let (a, b) = (tr.norm(), tt.norm());
        worst = worst.max(tr.dot(&tt).abs() / (a * b) + (a - b).abs() / b);
    }
    Ok(worst)
}
