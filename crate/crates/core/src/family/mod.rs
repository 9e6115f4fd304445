//! The parallel-circle family of minimal disks `D_{p,v,t}`: solving for a
//! member, continuation in `t`, targeting and the large-ball sweep.

pub mod asymptotic;
pub mod sweep;
pub mod target;

use std::sync::Arc;

use crate::disk_pde::{
    initial_height_coefficient, newton_solve, DiskGrid, GraphFunction, IterationRecord, NewtonOptions,
};
use crate::error::{Error, Result};
use crate::metric::{pullback_graph_metric, ChartMetric, MetricField, Sym3, Vec3};

pub use asymptotic::{asymptotic_sweep, AsymptoticRow};
pub use sweep::{check_foliation, continuation_sweep, FoliationReport, StepControls};
pub use target::{
    target_point_plane, target_three_points, TargetOptions, TargetResult, TargetSpec,
};

/// `(p, v, t)`: `p` unit, `v` unit and orthogonal to `p`, `|t| < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameParams {
    pub p: Vec3,
    pub v: Vec3,
    pub t: f64,
}

impl FrameParams {
    pub fn new(p: Vec3, v: Vec3, t: f64) -> Result<Self> {
        if (p.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("|p| = {} is not 1", p.norm())));
        }
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("|v| = {} is not 1", v.norm())));
        }
        if p.dot(&v).abs() > 1e-9 {
            return Err(Error::InvalidArgument("v is not orthogonal to p".into()));
        }
        if !(t.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("t = {t} must satisfy |t| < 1")));
        }
        Ok(Self { p, v, t })
    }

    /// Normalizes `p` and uses the default gauge for `v`.
    pub fn with_gauge(p: Vec3, t: f64) -> Result<Self> {
        if p.norm() < 1e-12 {
            return Err(Error::InvalidArgument("p must be non-zero".into()));
        }
        let p = p.normalize();
        Self::new(p, gauge_v(&p), t)
    }

    pub fn beta(&self) -> f64 {
        self.t.acos()
    }

    pub fn radius(&self) -> f64 {
        (1.0 - self.t * self.t).sqrt()
    }

    /// `p ^ v`.
    pub fn w(&self) -> Vec3 {
        self.p.cross(&self.v)
    }
}

/// Default in-plane direction: the projection of `e1`, or of `e2` when `p` is
/// close to the `e1` axis.
pub fn gauge_v(p: &Vec3) -> Vec3 {
    gauge_from_axis(p, &gauge_axis(p))
}

pub fn gauge_axis(p: &Vec3) -> Vec3 {
    if p[0].abs() > 0.9 {
        Vec3::y()
    } else {
        Vec3::x()
    }
}

/// Normalized projection of `axis` onto the plane orthogonal to `p`.
pub fn gauge_from_axis(p: &Vec3, axis: &Vec3) -> Vec3 {
    (axis - p * p.dot(axis)).normalize()
}

/// `Phi(theta) = sqrt(1 - t^2)(cos(theta) v + sin(theta) p^v) + t p`.
pub fn parallel_circle(params: &FrameParams, theta: f64) -> Vec3 {
    (params.v * theta.cos() + params.w() * theta.sin()) * params.radius() + params.p * params.t
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub newton: NewtonOptions,
    pub check_embedded: bool,
    /// Heights `u` to start from instead of the near-pole seed.
    pub warm_start: Option<GraphFunction>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), check_embedded: true, warm_start: None }
    }
}

#[derive(Clone, Debug)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub residual_inf: f64,
    pub area: f64,
    pub embedded: Option<bool>,
    pub max_chart_gradient: f64,
    pub seed_coefficient: f64,
    pub log: Vec<IterationRecord>,
}

/// One member of the family: heights `u` over the unit disk along `p`, with
/// `F(x, y) = sqrt(1 - t^2)(x v + y p^v) + (t + u(x, y)) p`.
#[derive(Clone, Debug)]
pub struct DiskSolution {
    pub params: FrameParams,
    pub heights: GraphFunction,
    pub field: MetricField,
    pub diagnostics: SolveDiagnostics,
}

impl DiskSolution {
    /// Wraps given heights without solving; diagnostics describe the input.
    pub fn from_heights(field: &MetricField, params: &FrameParams, heights: GraphFunction) -> Result<Self> {
        pullback_graph_metric(field, &params.p, &params.v, params.beta())?;
        let mut sol = DiskSolution {
            params: *params,
            field: field.clone(),
            diagnostics: SolveDiagnostics {
                iterations: 0,
                residual_inf: f64::NAN,
                area: 0.0,
                embedded: None,
                max_chart_gradient: heights.scaled(1.0 / params.radius()).max_gradient(),
                seed_coefficient: f64::NAN,
                log: Vec::new(),
            },
            heights,
        };
        sol.diagnostics.area = disk_area(&sol, field);
        Ok(sol)
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        self.heights.grid()
    }

    pub fn metric_label(&self) -> &str {
        self.field.label()
    }

    pub fn chart(&self) -> Result<ChartMetric> {
        pullback_graph_metric(&self.field, &self.params.p, &self.params.v, self.params.beta())
    }

    pub fn chart_heights(&self) -> GraphFunction {
        self.heights.scaled(1.0 / self.params.radius())
    }

    fn embed(&self, x: f64, y: f64, u: f64) -> Vec3 {
        let fp = &self.params;
        (fp.v * x + fp.w() * y) * fp.radius() + fp.p * (fp.t + u)
    }

    /// Immersion through the interpolated heights.
    pub fn point(&self, x: f64, y: f64) -> Vec3 {
        self.embed(x, y, self.heights.sample(x, y))
    }

    /// `(F, dF/dx, dF/dy)` through the interpolated heights.
    pub fn point_and_tangents(&self, x: f64, y: f64) -> (Vec3, Vec3, Vec3) {
        let (u, ux, uy) = self.heights.sample_with_gradient(x, y);
        let fp = &self.params;
        let s = fp.radius();
        (self.embed(x, y, u), fp.v * s + fp.p * ux, fp.w() * s + fp.p * uy)
    }

    pub fn node_position(&self, node: usize) -> Vec3 {
        let (x, y) = self.grid().xy(node);
        self.embed(x, y, self.heights.values()[node])
    }

    /// Nodal `(dF/dx, dF/dy)` from finite differences of the heights.
    pub fn node_tangents(&self, node: usize) -> (Vec3, Vec3) {
        let j = self.heights.jet(node);
        let fp = &self.params;
        let s = fp.radius();
        (fp.v * s + fp.p * j.wx, fp.w() * s + fp.p * j.wy)
    }

    pub fn area(&self) -> f64 {
        self.diagnostics.area
    }
}

fn seed_heights(field: &MetricField, params: &FrameParams, grid: &Arc<DiskGrid>) -> Result<(GraphFunction, f64)> {
    let s2 = 1.0 - params.t * params.t;
    let (lam, sign) = if params.t >= 0.0 {
        (initial_height_coefficient(field, &params.p, &params.v)?, 1.0)
    } else {
        (initial_height_coefficient(field, &(-params.p), &params.v)?, -1.0)
    };
    let u = GraphFunction::from_fn(grid, |x, y| sign * s2 * lam * (1.0 - x * x - y * y));
    Ok((u, lam))
}

/// Solves for `D_{p,v,t}` on the given grid.
pub fn solve_disk(
    field: &MetricField,
    params: &FrameParams,
    grid: &Arc<DiskGrid>,
    opts: &SolveOptions,
) -> Result<DiskSolution> {
    let chart = pullback_graph_metric(field, &params.p, &params.v, params.beta())?;
    let s = params.radius();
    let (u0, lam) = match &opts.warm_start {
        Some(u) if u.grid().as_ref() == grid.as_ref() => (u.clone(), f64::NAN),
        Some(_) => return Err(Error::InvalidArgument("warm start lives on a different grid".into())),
        None => seed_heights(field, params, grid)?,
    };
    let (w, rep) = newton_solve(&chart, &u0.scaled(1.0 / s), &opts.newton)?;
    let max_chart_gradient = w.max_gradient();
    let mut sol = DiskSolution {
        params: *params,
        heights: w.scaled(s),
        field: field.clone(),
        diagnostics: SolveDiagnostics {
            iterations: rep.iterations,
            residual_inf: rep.residual_inf,
            area: 0.0,
            embedded: None,
            max_chart_gradient,
            seed_coefficient: lam,
            log: rep.log,
        },
    };
    sol.diagnostics.area = disk_area(&sol, field);
    if opts.check_embedded {
        let mesh = crate::geometry::SurfaceMesh::from_solution(&sol);
        sol.diagnostics.embedded = Some(mesh.is_embedded());
    }
    Ok(sol)
}

/// Area of the solution surface in `field`: trapezoidal rule in `r` with weight
/// `r`, periodic in `theta`, applied to the induced area density.
pub fn disk_area(sol: &DiskSolution, field: &MetricField) -> f64 {
    let grid = sol.grid();
    let nr = grid.nr();
    let mut total = 0.0;
    for node in 1..grid.n_nodes() {
        let (i, _) = grid.ring_angle(node);
        let weight = if i == nr { 0.5 } else { 1.0 } * grid.radius(i);
        total += weight * area_density(sol, field, node);
    }
    total * grid.dr() * grid.dtheta()
}

pub fn area_density(sol: &DiskSolution, field: &MetricField, node: usize) -> f64 {
    let (fx, fy) = sol.node_tangents(node);
    let g: Sym3 = field.eval(&sol.node_position(node));
    let e = fx.dot(&(g * fx));
    let f = fx.dot(&(g * fy));
    let h = fy.dot(&(g * fy));
    (e * h - f * f).max(0.0).sqrt()
}
