use crate::error::{Error, Result};
use crate::metric::{normal_divergence, ChartMetric, MetricField, Sym3, Vec3};

use super::grid::{GraphFunction, NodeJet};

/// Minimal-surface operator of the graph `z = w(x, y)` at a point: divergence of
/// the downward unit normal, in the chart metric.
pub fn graph_operator(chart: &ChartMetric, x: f64, y: f64, jet: &NodeJet) -> f64 {
    let (g, dg) = chart.eval_with_derivative(x, y, jet.w);
    let n = Vec3::new(jet.wx, jet.wy, -1.0);
    let w = Sym3::new(jet.wxx, jet.wxy, 0.0, jet.wxy, jet.wyy, 0.0, 0.0, 0.0, 0.0);
    normal_divergence(&g, &dg, &n, &w)
}

pub fn node_residual(chart: &ChartMetric, w: &GraphFunction, node: usize) -> f64 {
    let (x, y) = w.grid().xy(node);
    graph_operator(chart, x, y, &w.jet(node))
}

/// Nodal residual of the graph equation; zero on the boundary ring.
pub fn residual(chart: &ChartMetric, w: &GraphFunction) -> Result<GraphFunction> {
    let grid = w.grid().clone();
    let mut out = GraphFunction::zeros(&grid);
    for node in 0..grid.n_nodes() {
        if grid.is_boundary(node) {
            continue;
        }
        let v = node_residual(chart, w, node);
        if !v.is_finite() {
            let (x, y) = grid.xy(node);
            let q = chart.point(x, y, w.values()[node]);
            return Err(Error::MetricDegenerate { x: q[0], y: q[1], z: q[2] });
        }
        out.values_mut()[node] = v;
    }
    Ok(out)
}

/// Principal coefficients `A_ij = (G^ij G^33 - G^i3 G^j3) / (G^33)^(3/2)` of the
/// linearization at `w = 0` for a constant chart metric.
pub fn linearization_coefficients(g0: &Sym3) -> Result<[[f64; 2]; 2]> {
    let gi = g0
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("constant metric is singular".into()))?;
    let g33 = gi[(2, 2)];
    if g33 <= 0.0 {
        return Err(Error::InvalidArgument("constant metric is not positive definite".into()));
    }
    let d = g33 * g33.sqrt();
    let a = |i: usize, j: usize| (gi[(i, j)] * g33 - gi[(i, 2)] * gi[(j, 2)]) / d;
    Ok([[a(0, 0), a(0, 1)], [a(1, 0), a(1, 1)]])
}

/// Linearized operator `h -> A_ij h_ij` of the graph equation at `w = 0`.
pub fn linearized_constant_operator(g0: &Sym3, h: &GraphFunction) -> Result<GraphFunction> {
    let a = linearization_coefficients(g0)?;
    let grid = h.grid().clone();
    let mut out = GraphFunction::zeros(&grid);
    for node in 0..grid.n_nodes() {
        if grid.is_boundary(node) {
            continue;
        }
        let j = h.jet(node);
        out.values_mut()[node] = a[0][0] * j.wxx + 2.0 * a[0][1] * j.wxy + a[1][1] * j.wyy;
    }
    Ok(out)
}

/// Leading coefficient `lambda` of the near-pole expansion
/// `u_{p,v,t} ~ (1 - t^2) lambda (1 - r^2)`.
pub fn initial_height_coefficient(field: &MetricField, p: &Vec3, v: &Vec3) -> Result<f64> {
    let frame = crate::metric::frame_matrix(p, v);
    let gp = field.eval(p);
    let a = linearization_coefficients(&(frame.transpose() * gp * frame))?;
    let shape = Sym3::identity() - p * p.transpose();
    let h_g = normal_divergence(&gp, &field.derivative(p), p, &shape);
    let h_0 = normal_divergence(&gp, &[Sym3::zeros(); 3], p, &shape);
    let d_beta = -(h_g - h_0);
    Ok(d_beta / (2.0 * (a[0][0] + a[1][1])))
}
