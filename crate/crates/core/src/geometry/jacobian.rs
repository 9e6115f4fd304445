//! Differential of the three-point map
//! `h(p, v, theta, x1, x2, y2, x3, y3) = (F(x1, 0), F(x2, y2), F(x3, y3))`
//! with `F` the flat Euclidean disk at height `cos(theta)`, at the point
//! `(1, 0, 1, -1, 0)`. Columns are the variations `(v, -p)`, `(p ^ v, 0)` and
//! `(0, p ^ v)` of `(p, v)`, then `theta` and the six chart coordinates; rows
//! are the basis `(p,0,0), (p^v,0,0), (0,p,0), (0,0,p), (v,0,0), (0,v,0),
//! (0,p^v,0), (0,0,v), (0,0,p^v)`.

use nalgebra::{Rotation3, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::metric::Vec3;

pub type Mat9 = SMatrix<f64, 9, 9>;
type Vec9 = SVector<f64, 9>;

const BASE: [f64; 5] = [1.0, 0.0, 1.0, -1.0, 0.0];

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, pi/2)")));
    }
    Ok(())
}

fn from_rows(rows: [[f64; 9]; 9]) -> Mat9 {
    Mat9::from_fn(|i, j| rows[i][j])
}

/// The map `h` evaluated after rotating `(p, v)` by `exp([a p^v - b v + c p]_x)`.
fn three_point_map(p: &Vec3, v: &Vec3, x: &[f64; 9]) -> [Vec3; 3] {
    let w = p.cross(v);
    let omega = w * x[0] - v * x[1] + p * x[2];
    let rot = Rotation3::new(omega);
    let (p, v) = (rot * p, rot * v);
    let w = p.cross(&v);
    let (c, s) = (x[3].cos(), x[3].sin());
    let f = |a: f64, b: f64| (v * a + w * b) * s + p * c;
    [f(x[4], 0.0), f(x[5], x[6]), f(x[7], x[8])]
}

fn coordinates(p: &Vec3, v: &Vec3, h: &[Vec3; 3]) -> Vec9 {
    let w = p.cross(v);
    Vec9::from_column_slice(&[
        h[0].dot(p),
        h[0].dot(&w),
        h[1].dot(p),
        h[2].dot(p),
        h[0].dot(v),
        h[1].dot(v),
        h[1].dot(&w),
        h[2].dot(v),
        h[2].dot(&w),
    ])
}

/// Central-difference Jacobian of `h` in the row and column bases above.
pub fn finite_difference_jacobian(p: &Vec3, v: &Vec3, theta: f64, step: f64) -> Mat9 {
    let mut x0 = [0.0; 9];
    x0[3] = theta;
    x0[4..].copy_from_slice(&BASE);
    let mut m = Mat9::zeros();
    for k in 0..9 {
        let (mut xp, mut xm) = (x0, x0);
        xp[k] += step;
        xm[k] -= step;
        let d = (coordinates(p, v, &three_point_map(p, v, &xp)) - coordinates(p, v, &three_point_map(p, v, &xm)))
            / (2.0 * step);
        m.set_column(k, &d);
    }
    m
}

/// Analytic Jacobian for the Euclidean disk family, where the height terms
/// vanish.
pub fn analytic_jacobian(theta: f64) -> Result<Mat9> {
    check_theta(theta)?;
    let (s, c) = theta.sin_cos();
    Ok(from_rows([
        [-s, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, c, s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -s, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0],
        [s, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, c, s, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, -s, 0.0, 0.0, s, 0.0, 0.0, 0.0],
        [0.0, c, 0.0, c, 0.0, 0.0, s, 0.0, 0.0],
        [c, 0.0, 0.0, -c, 0.0, 0.0, 0.0, s, 0.0],
        [0.0, c, -s, 0.0, 0.0, 0.0, 0.0, 0.0, s],
    ]))
}

/// Reference variant of the matrix, height terms set to 0. It
/// differs from [`analytic_jacobian`] at (3,4), (6,4) and (7,2) (1-based).
pub fn reference_jacobian(theta: f64) -> Result<Mat9> {
    check_theta(theta)?;
    let (s, c) = theta.sin_cos();
    Ok(from_rows([
        [-s, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, c, s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [s, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, c, s, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, -s, -s, 0.0, s, 0.0, 0.0, 0.0],
        [0.0, -c, 0.0, c, 0.0, 0.0, s, 0.0, 0.0],
        [c, 0.0, 0.0, -c, 0.0, 0.0, 0.0, s, 0.0],
        [0.0, c, -s, 0.0, 0.0, 0.0, 0.0, 0.0, s],
    ]))
}

/// `L(c)` with `M = sin(theta) L(cot theta)`.
pub fn leading_form(c: f64) -> Mat9 {
    from_rows([
        [-1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, c, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, c, 1.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, c, 0.0, c, 0.0, 0.0, 1.0, 0.0, 0.0],
        [c, 0.0, 0.0, -c, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, c, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// Closed-form inverse of [`leading_form`].
pub fn leading_inverse(c: f64) -> Mat9 {
    from_rows([
        [-0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, -1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.5 * c, 1.0, c, -0.5 * c, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, c, -c, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, c, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -c, 0.0, 0.0, 0.0, 1.0, 0.0],
        [-c, 1.0, 2.0 * c, -c, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// Reference variant of the leading form.
pub fn reference_leading_form(c: f64) -> Mat9 {
    from_rows([
        [-1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, c, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, c, 1.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, -1.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, -c, 0.0, c, 0.0, 0.0, 1.0, 0.0, 0.0],
        [c, 0.0, 0.0, -c, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, c, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// Reference inverse block `N(c)`.
pub fn reference_inverse(c: f64) -> Mat9 {
    from_rows([
        [-0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [c, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.5 * (c - 1.0), 1.0, c, 0.5 * (1.0 - c), 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.5 * c, 0.0, -c, -0.5 * c, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, c, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 2.0 * c, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub theta: f64,
    pub analytic: Mat9,
    /// `max |analytic - FD|`.
    pub max_abs_diff: f64,
    /// `max |reference - FD|`.
    pub reference_max_abs_diff: f64,
    /// `max |M / sin(theta) - L(cot theta)|`.
    pub leading_form_err: f64,
    /// `max |sin(theta) M^-1 - L(cot theta)^-1|`.
    pub corrected_inverse_err: f64,
    /// `max |sin(theta) M^-1 - N(cot theta)|` against the reference inverse.
    pub inverse_err: f64,
    /// `max |L_reference(c) N(c) - I|`.
    pub reference_product_err: f64,
}

impl JacobianReport {
    pub const CSV_HEADER: &'static str = "theta,max_abs_diff,leading_form_err,inverse_err";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            self.theta, self.max_abs_diff, self.leading_form_err, self.inverse_err
        )
    }
}

fn max_abs(m: &Mat9) -> f64 {
    m.abs().max()
}

/// Analytic Jacobian at `theta` with its finite-difference, leading-form and
/// inverse checks.
pub fn three_point_jacobian(p: &Vec3, v: &Vec3, theta: f64) -> Result<JacobianReport> {
    check_theta(theta)?;
    if (p.norm() - 1.0).abs() > 1e-12 || (v.norm() - 1.0).abs() > 1e-12 || p.dot(v).abs() > 1e-12 {
        return Err(Error::InvalidArgument("(p, v) must be orthonormal".into()));
    }
    let m = analytic_jacobian(theta)?;
    let fd = finite_difference_jacobian(p, v, theta, 1e-5);
    let (s, c) = (theta.sin(), 1.0 / theta.tan());
    let minv = m.try_inverse().ok_or(Error::SingularJacobian { pivot: 0 })?;
    Ok(JacobianReport {
        theta,
        analytic: m,
        max_abs_diff: max_abs(&(m - fd)),
        reference_max_abs_diff: max_abs(&(reference_jacobian(theta)? - fd)),
        leading_form_err: max_abs(&(m / s - leading_form(c))),
        corrected_inverse_err: max_abs(&(minv * s - leading_inverse(c))),
        inverse_err: max_abs(&(minv * s - reference_inverse(c))),
        reference_product_err: max_abs(&(reference_leading_form(c) * reference_inverse(c) - Mat9::identity())),
    })
}
