//! Riemannian metric fields on a neighbourhood of the closed unit ball, and the
//! pulled-back chart metrics used by the graph equation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Sym3 = Matrix3<f64>;

type EvalFn = dyn Fn(&Vec3) -> Sym3 + Send + Sync;
type DerivFn = dyn Fn(&Vec3) -> [Sym3; 3] + Send + Sync;

#[derive(Clone)]
enum Kind {
    Euclidean,
    Bump { r: f64, eps: f64 },
    Schwarzschild { m: f64 },
    Conical { alpha: f64 },
    Scaled { inner: Arc<MetricField>, factor: f64 },
    Translated { inner: Arc<MetricField>, offset: Vec3 },
    Custom { eval: Arc<EvalFn>, deriv: Option<Arc<DerivFn>> },
}

/// A smooth symmetric positive definite matrix field `x -> G(x)`.
#[derive(Clone)]
pub struct MetricField {
    label: String,
    kind: Kind,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField").field("label", &self.label).finish()
    }
}

/// Smooth monotone step, 0 for `tau <= 0` and 1 for `tau >= 1`.
pub fn smooth_step(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / tau).exp();
    let b = (-1.0 / (1.0 - tau)).exp();
    a / (a + b)
}

pub fn smooth_step_derivative(tau: f64) -> f64 {
    if tau <= 0.0 || tau >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / tau).exp();
    let b = (-1.0 / (1.0 - tau)).exp();
    let s = a + b;
    a * b * (1.0 / (tau * tau) + 1.0 / ((1.0 - tau) * (1.0 - tau))) / (s * s)
}

/// Cutoff equal to 1 on [0, 9/10], 0 on [1, inf).
pub fn bump_profile(s: f64) -> f64 {
    smooth_step((1.0 - s) / 0.1)
}

pub fn bump_profile_derivative(s: f64) -> f64 {
    -10.0 * smooth_step_derivative((1.0 - s) / 0.1)
}

fn bump_centers(r: f64) -> [(f64, f64); 4] {
    let c = 1.0 + r;
    [(c, c), (c, -c), (-c, c), (-c, -c)]
}

/// Conformal perturbation `psi` of the bump metric and its gradient.
pub fn bump_psi(r: f64, eps: f64, x: &Vec3) -> (f64, Vec3) {
    let mut psi = 0.0;
    let mut grad = Vec3::zeros();
    if eps == 0.0 {
        return (psi, grad);
    }
    for (cx, cy) in bump_centers(r) {
        let dx = x[0] - cx;
        let dy = x[1] - cy;
        let dz = x[2] / eps;
        let s2 = dx * dx + dy * dy + dz * dz;
        if s2 >= 1.0 {
            continue;
        }
        let s = s2.sqrt();
        psi += eps * eps * bump_profile(s);
        if s > 0.9 {
            let d = eps * eps * bump_profile_derivative(s) / s;
            grad[0] += d * dx;
            grad[1] += d * dy;
            grad[2] += d * dz / eps;
        }
    }
    (psi, grad)
}

/// Interior profile of the Schwarzschild radius: `r` outside the unit ball, a
/// polynomial in `r^2` matching `r` to third order at `r = 1` inside.
fn schwarzschild_rho(r: f64) -> (f64, f64) {
    if r >= 1.0 {
        return (r, 1.0);
    }
    let d = r * r - 1.0;
    let p = 1.0 + d / 2.0 - d * d / 8.0 + d * d * d / 16.0;
    let dp = 0.5 - d / 4.0 + 3.0 * d * d / 16.0;
    (p, 2.0 * r * dp)
}

fn schwarzschild_factor(m: f64, x: &Vec3) -> (f64, Vec3) {
    let r = x.norm();
    let (rho, drho) = schwarzschild_rho(r);
    let b = 1.0 + m / (2.0 * rho);
    let f = b.powi(4);
    if r == 0.0 {
        return (f, Vec3::zeros());
    }
    let df = 4.0 * b.powi(3) * (-m / (2.0 * rho * rho)) * drho;
    (f, x * (df / r))
}

fn conical_eval(alpha: f64, x: &Vec3) -> Sym3 {
    let r = x.norm();
    if r <= 0.5 {
        return Sym3::identity();
    }
    let a = 1.0 + (alpha - 1.0) * smooth_step((r - 0.5) / 0.5);
    let n = x / r;
    let nn = n * n.transpose();
    nn + (Sym3::identity() - nn) * (a * a)
}

/// Central finite-difference derivative `[dG/dx_0, dG/dx_1, dG/dx_2]`.
pub fn fd_derivative(field: &MetricField, x: &Vec3, h: f64) -> [Sym3; 3] {
    let mut out = [Sym3::zeros(); 3];
    for (k, dk) in out.iter_mut().enumerate() {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += h;
        xm[k] -= h;
        *dk = (field.eval(&xp) - field.eval(&xm)) / (2.0 * h);
    }
    out
}

impl MetricField {
    pub fn euclidean() -> Self {
        Self { label: "euclidean".into(), kind: Kind::Euclidean }
    }

    pub fn conformal_bump(r: f64, eps: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("bump radius must be positive, got {r}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("bump eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { label: format!("conformal_bump(r={r},eps={eps})"), kind: Kind::Bump { r, eps } })
    }

    pub fn schwarzschild(m: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass must be non-negative, got {m}")));
        }
        Ok(Self { label: format!("schwarzschild(m={m})"), kind: Kind::Schwarzschild { m } })
    }

    pub fn conical(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("cone factor must be positive, got {alpha}")));
        }
        Ok(Self { label: format!("conical(alpha={alpha})"), kind: Kind::Conical { alpha } })
    }

    pub fn custom<F>(label: &str, eval: F) -> Self
    where
        F: Fn(&Vec3) -> Sym3 + Send + Sync + 'static,
    {
        Self { label: label.into(), kind: Kind::Custom { eval: Arc::new(eval), deriv: None } }
    }

    pub fn custom_with_derivative<F, D>(label: &str, eval: F, deriv: D) -> Self
    where
        F: Fn(&Vec3) -> Sym3 + Send + Sync + 'static,
        D: Fn(&Vec3) -> [Sym3; 3] + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            kind: Kind::Custom { eval: Arc::new(eval), deriv: Some(Arc::new(deriv)) },
        }
    }

    /// Homothetic pull-back `x -> G(R x)`, so that the unit ball sees `B(R)`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {factor}")));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        Ok(Self {
            label: format!("{}@R={factor}", self.label),
            kind: Kind::Scaled { inner: Arc::new(self.clone()), factor },
        })
    }

    /// `x -> G(x + offset)`.
    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            label: format!("{}+({},{},{})", self.label, offset[0], offset[1], offset[2]),
            kind: Kind::Translated { inner: Arc::new(self.clone()), offset },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_euclidean(&self) -> bool {
        match &self.kind {
            Kind::Euclidean => true,
            Kind::Scaled { inner, .. } | Kind::Translated { inner, .. } => inner.is_euclidean(),
            _ => false,
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        match &self.kind {
            Kind::Euclidean | Kind::Bump { .. } | Kind::Schwarzschild { .. } => true,
            Kind::Conical { .. } => false,
            Kind::Scaled { inner, .. } | Kind::Translated { inner, .. } => {
                inner.has_analytic_derivative()
            }
            Kind::Custom { deriv, .. } => deriv.is_some(),
        }
    }

    /// Unchecked evaluation.
    pub fn eval(&self, x: &Vec3) -> Sym3 {
        match &self.kind {
            Kind::Euclidean => Sym3::identity(),
            Kind::Bump { r, eps } => {
                let (psi, _) = bump_psi(*r, *eps, x);
                let c = 1.0 + psi;
                Sym3::identity() * (c * c)
            }
            Kind::Schwarzschild { m } => Sym3::identity() * schwarzschild_factor(*m, x).0,
            Kind::Conical { alpha } => conical_eval(*alpha, x),
            Kind::Scaled { inner, factor } => inner.eval(&(x * *factor)),
            Kind::Translated { inner, offset } => inner.eval(&(x + offset)),
            Kind::Custom { eval, .. } => eval(x),
        }
    }

    /// `[dG/dx_0, dG/dx_1, dG/dx_2]`, analytic where available.
    pub fn derivative(&self, x: &Vec3) -> [Sym3; 3] {
        match &self.kind {
            Kind::Euclidean => [Sym3::zeros(); 3],
            Kind::Bump { r, eps } => {
                let (psi, g) = bump_psi(*r, *eps, x);
                let c = 2.0 * (1.0 + psi);
                [0, 1, 2].map(|k| Sym3::identity() * (c * g[k]))
            }
            Kind::Schwarzschild { m } => {
                let (_, g) = schwarzschild_factor(*m, x);
                [0, 1, 2].map(|k| Sym3::identity() * g[k])
            }
            Kind::Scaled { inner, factor } => {
                inner.derivative(&(x * *factor)).map(|d| d * *factor)
            }
            Kind::Translated { inner, offset } => inner.derivative(&(x + offset)),
            Kind::Custom { deriv: Some(d), .. } => d(x),
            Kind::Conical { .. } | Kind::Custom { deriv: None, .. } => {
                fd_derivative(self, x, 1e-5 * (1.0 + x.norm()))
            }
        }
    }
}

/// Checked evaluation: fails when `G(x)` is not positive definite.
pub fn eval_metric(field: &MetricField, x: &Vec3) -> Result<Sym3> {
    let g = field.eval(x);
    if is_spd(&g) {
        Ok(g)
    } else {
        Err(Error::MetricDegenerate { x: x[0], y: x[1], z: x[2] })
    }
}

pub fn metric_derivative(field: &MetricField, x: &Vec3) -> [Sym3; 3] {
    field.derivative(x)
}

/// Sylvester criterion on a symmetric 3x3 matrix.
pub fn is_spd(g: &Sym3) -> bool {
    let m1 = g[(0, 0)];
    let m2 = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    let m3 = g.determinant();
    let sym = (g - g.transpose()).abs().max() <= 1e-12 * (1.0 + g.abs().max());
    sym && m1 > 0.0 && m2 > 0.0 && m3 > 0.0 && m3.is_finite()
}

/// Divergence, in the metric `g`, of the unit normal field `grad_g f / |grad_g f|`
/// at a point where `df = n`, `Hess f = w`, `G = g` and `dG = dg`.
pub fn normal_divergence(g: &Sym3, dg: &[Sym3; 3], n: &Vec3, w: &Sym3) -> f64 {
    let ginv = match g.try_inverse() {
        Some(m) => m,
        None => return f64::NAN,
    };
    let m = ginv * n;
    let a = n.dot(&m);
    let ia = 1.0 / a.sqrt();
    let mut second = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            second += (ginv[(i, j)] - m[i] * m[j] / a) * w[(i, j)];
        }
    }
    second *= ia;
    let mut first = 0.0;
    for (k, d) in dg.iter().enumerate() {
        let gd = ginv * d;
        let dm = gd * m;
        first += 0.5 * gd.trace() * ia * m[k] + 0.5 * ia * ia * ia * m.dot(&(d * m)) * m[k]
            - ia * dm[k];
    }
    second + first
}

/// Mean curvature (trace convention, outward normal) of the round sphere of
/// radius `|x|` at `x`.
pub fn sphere_mean_curvature_at(field: &MetricField, x: &Vec3) -> f64 {
    let r = x.norm();
    let n = x / r;
    let w = (Sym3::identity() - n * n.transpose()) / r;
    normal_divergence(&field.eval(x), &field.derivative(x), &n, &w)
}

/// Points of an evenly spread Fibonacci lattice on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// Minimum sampled mean curvature of the sphere of the given radius.
pub fn sphere_mean_curvature(field: &MetricField, radius: f64, n_samples: usize) -> f64 {
    sphere_mean_curvature_rotated(field, radius, n_samples, &Sym3::identity())
}

pub fn sphere_mean_curvature_rotated(
    field: &MetricField,
    radius: f64,
    n_samples: usize,
    rotation: &Sym3,
) -> f64 {
    fibonacci_sphere(n_samples.max(1))
        .iter()
        .map(|u| sphere_mean_curvature_at(field, &(rotation * u * radius)))
        .fold(f64::INFINITY, f64::min)
}

/// Metric of `field` read in the graph chart
/// `(x, y, z) -> sin(beta) (x v + y p^v) + (cos(beta) + sin(beta) z) p`,
/// divided by the constant conformal factor `sin(beta)^2`.
#[derive(Clone, Debug)]
pub struct ChartMetric {
    field: MetricField,
    frame: Sym3,
    beta: f64,
    sin_beta: f64,
    cos_beta: f64,
}

impl ChartMetric {
    pub fn field(&self) -> &MetricField {
        &self.field
    }

    /// Columns `v`, `p ^ v`, `p`.
    pub fn frame(&self) -> &Sym3 {
        &self.frame
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sin_beta(&self) -> f64 {
        self.sin_beta
    }

    pub fn cos_beta(&self) -> f64 {
        self.cos_beta
    }

    /// Constant factor relating the chart metric to the true pull-back.
    pub fn conformal_factor(&self) -> f64 {
        1.0 / (self.sin_beta * self.sin_beta)
    }

    pub fn point(&self, x: f64, y: f64, z: f64) -> Vec3 {
        let c = self.frame.column(0) * x + self.frame.column(1) * y;
        c * self.sin_beta + self.frame.column(2) * (self.cos_beta + self.sin_beta * z)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> Sym3 {
        let g = self.field.eval(&self.point(x, y, z));
        self.frame.transpose() * g * self.frame
    }

    pub fn eval_with_derivative(&self, x: f64, y: f64, z: f64) -> (Sym3, [Sym3; 3]) {
        let q = self.point(x, y, z);
        let g = self.field.eval(&q);
        let dg = self.field.derivative(&q);
        let ft = self.frame.transpose();
        let gc = ft * g * self.frame;
        let mut d = [Sym3::zeros(); 3];
        for (k, dk) in d.iter_mut().enumerate() {
            let mut dir = Sym3::zeros();
            for (l, dgl) in dg.iter().enumerate() {
                dir += dgl * self.frame[(l, k)];
            }
            *dk = ft * dir * self.frame * self.sin_beta;
        }
        (gc, d)
    }
}

/// Orthonormal frame `(v, p ^ v, p)` as matrix columns.
pub fn frame_matrix(p: &Vec3, v: &Vec3) -> Sym3 {
    let pv = p.cross(v);
    Sym3::from_columns(&[*v, pv, *p])
}

pub fn pullback_graph_metric(field: &MetricField, p: &Vec3, v: &Vec3, beta: f64) -> Result<ChartMetric> {
    if (p.norm() - 1.0).abs() > 1e-9 || (v.norm() - 1.0).abs() > 1e-9 || p.dot(v).abs() > 1e-9 {
        return Err(Error::InvalidArgument("(p, v) must be orthonormal".into()));
    }
    let s = beta.sin();
    if !(beta > 0.0 && beta < std::f64::consts::PI) || s.abs() < 1e-12 {
        return Err(Error::DegenerateChart(format!("beta = {beta}")));
    }
    Ok(ChartMetric { field: field.clone(), frame: frame_matrix(p, v), beta, sin_beta: s, cos_beta: beta.cos() })
}
