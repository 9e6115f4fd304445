use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::disk_pde::DiskGrid;
use crate::error::{Error, Result};
use crate::metric::{MetricField, Vec3};

use super::target::{target_point_plane, target_three_points, TargetOptions, TargetSpec};
use super::disk_area;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticRow {
    pub radius: f64,
    /// Area in `B(R)` of the targeted disk.
    pub area: f64,
    /// `area / (pi R^2)`.
    pub ratio: f64,
    pub p: Vec3,
    pub t: f64,
}

/// For each `R`, targets the rescaled problem in `B(R)` and records the area
/// ratio against the flat disk of radius `R`.
pub fn asymptotic_sweep(
    field: &MetricField,
    target: &TargetSpec,
    radii: &[f64],
    grid: &Arc<DiskGrid>,
    opts: &TargetOptions,
) -> Result<Vec<AsymptoticRow>> {
    if radii.iter().any(|r| !(*r >= 1.0)) {
        return Err(Error::InvalidArgument("radii must be at least 1".into()));
    }
    radii
        .par_iter()
        .map(|&radius| {
            let f = field.scaled(radius)?;
            let res = match target.shrink(radius) {
                TargetSpec::PointPlane { q, normal } => {
                    let (a, b) = plane_span(&normal);
                    target_point_plane(&f, &q, [a, b], grid, opts)?
                }
                TargetSpec::ThreePoints { q } => target_three_points(&f, q, grid, opts)?,
            };
            let unit = disk_area(&res.solution, &f);
            Ok(AsymptoticRow {
                radius,
                area: unit * radius * radius,
                ratio: unit / PI,
                p: res.params.p,
                t: res.params.t,
            })
        })
        .collect()
}

fn plane_span(n: &Vec3) -> (Vec3, Vec3) {
    let a = super::gauge_v(n);
    (a, n.cross(&a))
}
