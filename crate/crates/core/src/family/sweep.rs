use std::sync::Arc;

use crate::disk_pde::DiskGrid;
use crate::error::{Error, Result};
use crate::metric::{MetricField, Vec3};

use super::{solve_disk, DiskSolution, FrameParams, SolveOptions};

#[derive(Clone, Copy, Debug)]
pub struct StepControls {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
}

impl StepControls {
    pub fn uniform(dt: f64) -> Self {
        Self { dt, dt_min: 1e-4, dt_max: dt, growth: 1.0 }
    }
}

impl Default for StepControls {
    fn default() -> Self {
        Self { dt: 0.05, dt_min: 1e-4, dt_max: 0.1, growth: 1.5 }
    }
}

/// Members from `t_from` to `t_to`, each warm-started from its predecessor.
/// Failed steps are halved down to `dt_min`.
pub fn continuation_sweep(
    field: &MetricField,
    p: &Vec3,
    v: &Vec3,
    t_from: f64,
    t_to: f64,
    grid: &Arc<DiskGrid>,
    controls: &StepControls,
    opts: &SolveOptions,
) -> Result<Vec<DiskSolution>> {
    if !(controls.dt > 0.0 && controls.dt_min > 0.0) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    let first = solve_disk(field, &FrameParams::new(*p, *v, t_from)?, grid, opts)
        .map_err(|_| Error::ContinuationStalled { last_t: t_from })?;
    let dir = if t_to >= t_from { 1.0 } else { -1.0 };
    let mut out = vec![first];
    let mut t = t_from;
    let mut dt = controls.dt;
    while t != t_to {
        let remaining = (t_to - t).abs();
        let t_next = if remaining <= dt * (1.0 + 1e-9) { t_to } else { t + dir * dt };
        let mut o = opts.clone();
        o.warm_start = Some(out.last().unwrap().heights.clone());
        match solve_disk(field, &FrameParams::new(*p, *v, t_next)?, grid, &o) {
            Ok(sol) => {
                out.push(sol);
                t = t_next;
                dt = (dt * controls.growth).min(controls.dt_max);
            }
            Err(_) => {
                dt *= 0.5;
                if dt < controls.dt_min {
                    return Err(Error::ContinuationStalled { last_t: t });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoliationReport {
    pub monotone: bool,
    pub min_gap: f64,
}

/// Nodewise test that the heights along `p`, `t + u_t(node)`, move strictly in
/// the direction of `t` between consecutive members.
pub fn check_foliation(sols: &[DiskSolution]) -> Result<FoliationReport> {
    let mut min_gap = f64::INFINITY;
    let mut monotone = true;
    let mut dir = 0.0;
    for pair in sols.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.grid().as_ref() != b.grid().as_ref() {
            return Err(Error::InvalidArgument("members live on different grids".into()));
        }
        let dt = b.params.t - a.params.t;
        let s = dt.signum();
        if dt == 0.0 || (dir != 0.0 && s != dir) {
            monotone = false;
        }
        dir = s;
        for (ua, ub) in a.heights.values().iter().zip(b.heights.values()) {
            let gap = (b.params.t + ub) - (a.params.t + ua);
            if gap * s <= 0.0 {
                monotone = false;
            }
            min_gap = min_gap.min(gap.abs());
        }
    }
    Ok(FoliationReport { monotone, min_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_sweep_gaps_equal_steps() {
        let grid = DiskGrid::new(8, 16).unwrap();
        let v = Vec3::x();
        let dt = 0.99 / 25.0;
        let sols = continuation_sweep(
            &MetricField::euclidean(),
            &Vec3::z(),
            &v,
            0.99,
            0.0,
            &grid,
            &StepControls::uniform(dt),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(sols.len(), 26);
        assert_eq!(sols.last().unwrap().params.t, 0.0);
        let rep = check_foliation(&sols).unwrap();
        assert!(rep.monotone);
        assert!((rep.min_gap - dt).abs() < 1e-12);
        let mut shuffled = sols.clone();
        shuffled.swap(3, 4);
        assert!(!check_foliation(&shuffled).unwrap().monotone);
    }

    #[test]
    fn stall_is_reported() {
        let grid = DiskGrid::new(8, 16).unwrap();
        let mut opts = SolveOptions::default();
        opts.newton.max_iter = 0;
        let e = continuation_sweep(
            &MetricField::schwarzschild(0.2).unwrap(),
            &Vec3::z(),
            &Vec3::x(),
            0.9,
            0.5,
            &grid,
            &StepControls::uniform(0.1),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(e, Error::ContinuationStalled { .. }));
    }
}
