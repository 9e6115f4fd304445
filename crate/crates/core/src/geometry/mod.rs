//! Frames and normals on solutions, the SO(3) identifications, boundary
//! rectification, the degenerate-limit three-point Jacobian and meshes.

pub mod jacobian;
pub mod mesh;
pub mod rectify;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};

use crate::error::{Error, Result};
use crate::family::DiskSolution;
use crate::metric::Vec3;

pub use jacobian::{three_point_jacobian, JacobianReport};
pub use mesh::{export_obj, import_obj, write_obj, SurfaceMesh};
pub use rectify::{boundary_conformalizing_diffeo, conformal_defect, DiskDiffeo, RectifyOptions};

/// Euclidean unit normal `nu = (F_x ^ F_y)/|F_x ^ F_y|` and unit tangent
/// `h = F_x/|F_x|` at every node.
pub fn frame_fields(sol: &DiskSolution) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let n = sol.grid().n_nodes();
    let mut nu = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for node in 0..n {
        let (fx, fy) = sol.node_tangents(node);
        let c = fx.cross(&fy);
        let (cn, xn) = (c.norm(), fx.norm());
        if !(cn > 1e-14 * xn * fy.norm()) || !(xn > 0.0) {
            return Err(Error::ImmersionDegenerate { node });
        }
        nu.push(c / cn);
        h.push(fx / xn);
    }
    Ok((nu, h))
}

/// Rotation attached to the unit quaternion `a + bi + cj + dk`, acting by
/// conjugation.
pub fn quaternion_to_rotation(a: f64, b: f64, c: f64, d: f64) -> Result<Matrix3<f64>> {
    let n2 = a * a + b * b + c * c + d * d;
    if !((n2.sqrt() - 1.0).abs() <= 1e-12) {
        return Err(Error::InvalidArgument(format!("quaternion norm {} is not 1", n2.sqrt())));
    }
    Ok(Matrix3::new(
        a * a + b * b - c * c - d * d,
        2.0 * (b * c - a * d),
        2.0 * (a * c + b * d),
        2.0 * (a * d + b * c),
        a * a - b * b + c * c - d * d,
        2.0 * (c * d - a * b),
        2.0 * (b * d - a * c),
        2.0 * (a * b + c * d),
        a * a - b * b - c * c + d * d,
    ))
}

/// Inverse identification, with the representative `a >= 0`.
pub fn rotation_to_quaternion(r: &Matrix3<f64>) -> [f64; 4] {
    let q = UnitQuaternion::from_matrix(r);
    let q: &Quaternion<f64> = q.as_ref();
    let s = if q.w < 0.0 { -1.0 } else { 1.0 };
    [s * q.w, s * q.i, s * q.j, s * q.k]
}

/// Trace of the rotation with columns `(nu, h, nu ^ h)`.
pub fn trace_invariant(nu: &Vec3, h: &Vec3) -> Result<f64> {
    if (nu.norm() - 1.0).abs() > 1e-9 || (h.norm() - 1.0).abs() > 1e-9 || nu.dot(h).abs() > 1e-9 {
        return Err(Error::InvalidArgument("(nu, h) is not an orthonormal pair".into()));
    }
    Ok(nu[0] + h[1] + nu.cross(h)[2])
}

/// Trace of `(nu, h, nu ^ h)` relative to the frame `(p, v, p ^ v)` at every
/// boundary node; 3 means the frames agree, -1 is the cut locus.
pub fn boundary_traces(sol: &DiskSolution) -> Result<Vec<f64>> {
    let (nu, h) = frame_fields(sol)?;
    let fp = &sol.params;
    let r = Matrix3::from_columns(&[fp.p, fp.v, fp.w()]);
    let rt = r.transpose();
    let grid = sol.grid();
    (0..grid.ntheta())
        .map(|j| {
            let node = grid.index(grid.nr(), j as isize);
            let a = (rt * nu[node]).normalize();
            let b = rt * h[node];
            let b = (b - a * a.dot(&b)).normalize();
            trace_invariant(&a, &b)
        })
        .collect()
}
