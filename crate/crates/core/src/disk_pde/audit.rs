use crate::error::{Error, Result};
use crate::family::{solve_disk, FrameParams, SolveOptions};
use crate::metric::MetricField;

use super::grid::DiskGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceAudit {
    /// `(nr, ntheta)` of each refinement level.
    pub grids: Vec<(usize, usize)>,
    pub areas: Vec<f64>,
    pub order: f64,
}

/// Observed order of the disk area from three grids `(nr, ntheta) * {1, 2, 4}`.
pub fn convergence_order(
    field: &MetricField,
    params: &FrameParams,
    nr: usize,
    ntheta: usize,
    opts: &SolveOptions,
) -> Result<ConvergenceAudit> {
    let mut o = opts.clone();
    o.check_embedded = false;
    o.warm_start = None;
    let grids: Vec<(usize, usize)> = (0..3).map(|k| (nr << k, ntheta << k)).collect();
    let mut areas = Vec::new();
    for &(a, b) in &grids {
        let g = DiskGrid::new(a, b)?;
        areas.push(solve_disk(field, params, &g, &o)?.area());
    }
    let d1 = areas[0] - areas[1];
    let d2 = areas[1] - areas[2];
    if d2 == 0.0 || d1 == 0.0 {
        return Err(Error::Precondition(
            "area identical across grids; order undefined for an exactly resolved disk".into(),
        ));
    }
    Ok(ConvergenceAudit { grids, areas, order: (d1 / d2).abs().log2() })
}
