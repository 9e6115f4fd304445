use crate::error::{Error, Result};
use crate::metric::ChartMetric;

use super::banded::BandMatrix;
use super::grid::{DiskGrid, GraphFunction};
use super::operator::{node_residual, residual};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Chart gradient above which the graph ansatz is abandoned.
    pub gradient_limit: f64,
    pub fd_step: f64,
    /// Residual accepted as converged when no damped step can reduce it.
    pub stagnation_floor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 30, max_halvings: 20, gradient_limit: 10.0, fd_step: 1e-6, stagnation_floor: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_inf: f64,
    pub step_scale: f64,
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_inf: f64,
    pub log: Vec<IterationRecord>,
}

/// Unknown ordering: pole first, then rings `1..nr`, angles interleaved as
/// `0, 1, N-1, 2, N-2, ...` so cyclic neighbours stay within two slots.
#[derive(Clone, Debug)]
pub struct UnknownMap {
    to_node: Vec<usize>,
    to_unknown: Vec<Option<usize>>,
    ntheta: usize,
}

impl UnknownMap {
    pub fn new(grid: &DiskGrid) -> Self {
        let n = grid.ntheta();
        let mut order = vec![0usize];
        for k in 1..=n / 2 {
            order.push(k);
            if k != n - k {
                order.push(n - k);
            }
        }
        let mut to_node = vec![0usize];
        for i in 1..grid.nr() {
            for &j in &order {
                to_node.push(grid.index(i, j as isize));
            }
        }
        let mut to_unknown = vec![None; grid.n_nodes()];
        for (u, &node) in to_node.iter().enumerate() {
            to_unknown[node] = Some(u);
        }
        Self { to_node, to_unknown, ntheta: n }
    }

    pub fn len(&self) -> usize {
        self.to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_node.is_empty()
    }

    pub fn node(&self, u: usize) -> usize {
        self.to_node[u]
    }

    pub fn unknown(&self, node: usize) -> Option<usize> {
        self.to_unknown[node]
    }

    pub fn bandwidth(&self) -> usize {
        self.ntheta + 2
    }
}

/// Rows (nodes) whose residual depends on the value at `node`, pole excluded.
fn dependent_rows(grid: &DiskGrid, node: usize, out: &mut Vec<usize>) {
    out.clear();
    let nr = grid.nr();
    let (i, j) = grid.ring_angle(node);
    if i == 0 {
        out.extend((0..grid.ntheta()).map(|jj| grid.index(1, jj as isize)));
        return;
    }
    for ii in i.saturating_sub(1)..=(i + 1).min(nr - 1) {
        if ii == 0 {
            continue;
        }
        for dj in -1..=1 {
            out.push(grid.index(ii, j as isize + dj));
        }
    }
}

/// Greedy distance-2 coloring of the non-pole unknowns.
fn color_groups(grid: &DiskGrid, map: &UnknownMap) -> Vec<Vec<usize>> {
    let n = grid.ntheta() as isize;
    let nodes = grid.n_nodes();
    let mut color = vec![usize::MAX; nodes];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut used = Vec::new();
    for u in 1..map.len() {
        let node = map.node(u);
        let (i, j) = grid.ring_angle(node);
        used.clear();
        for ii in i.saturating_sub(2)..=(i + 2).min(grid.nr() - 1) {
            if ii == 0 {
                continue;
            }
            for dj in -2..=2 {
                let jj = (j as isize + dj).rem_euclid(n);
                let c = color[grid.index(ii, jj)];
                if c != usize::MAX {
                    used.push(c);
                }
            }
        }
        let c = (0..).find(|c| !used.contains(c)).unwrap();
        color[node] = c;
        if c == groups.len() {
            groups.push(Vec::new());
        }
        groups[c].push(node);
    }
    groups.insert(0, vec![0]);
    groups
}

/// Finite-difference Jacobian of the nodal residual in the unknown ordering.
pub fn assemble_jacobian(
    chart: &ChartMetric,
    w: &GraphFunction,
    map: &UnknownMap,
    step: f64,
) -> BandMatrix {
    let grid = w.grid().clone();
    let bw = map.bandwidth();
    let mut jac = BandMatrix::zeros(map.len(), bw, bw);
    let mut work = w.clone();
    let mut rows = Vec::new();
    let mut plus = Vec::new();
    for group in color_groups(&grid, map) {
        let hs: Vec<f64> = group.iter().map(|&c| step * (1.0 + w.values()[c].abs())).collect();
        for (k, &c) in group.iter().enumerate() {
            work.values_mut()[c] = w.values()[c] + hs[k];
        }
        plus.clear();
        for &c in &group {
            dependent_rows(&grid, c, &mut rows);
            plus.extend(rows.iter().map(|&r| node_residual(chart, &work, r)));
        }
        for (k, &c) in group.iter().enumerate() {
            work.values_mut()[c] = w.values()[c] - hs[k];
        }
        let mut idx = 0;
        for (k, &c) in group.iter().enumerate() {
            dependent_rows(&grid, c, &mut rows);
            let col = map.unknown(c).unwrap();
            for &r in &rows {
                let d = (plus[idx] - node_residual(chart, &work, r)) / (2.0 * hs[k]);
                idx += 1;
                let row = map.unknown(r).unwrap();
                jac.set(row, col, d);
            }
        }
        for &c in &group {
            work.values_mut()[c] = w.values()[c];
        }
    }
    let pole_cols = std::iter::once(0).chain((0..grid.ntheta()).map(|j| grid.index(1, j as isize)));
    for c in pole_cols {
        let h = step * (1.0 + w.values()[c].abs());
        work.values_mut()[c] = w.values()[c] + h;
        let a = node_residual(chart, &work, 0);
        work.values_mut()[c] = w.values()[c] - h;
        let b = node_residual(chart, &work, 0);
        work.values_mut()[c] = w.values()[c];
        jac.set(0, map.unknown(c).unwrap(), (a - b) / (2.0 * h));
    }
    jac
}

fn unknown_residual(chart: &ChartMetric, w: &GraphFunction, map: &UnknownMap) -> Option<Vec<f64>> {
    let r = residual(chart, w).ok()?;
    Some((0..map.len()).map(|u| r.values()[map.node(u)]).collect())
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration for the graph equation with zero boundary values.
pub fn newton_solve(
    chart: &ChartMetric,
    initial: &GraphFunction,
    opts: &NewtonOptions,
) -> Result<(GraphFunction, NewtonReport)> {
    let grid = initial.grid().clone();
    let map = UnknownMap::new(&grid);
    let mut w = initial.clone();
    for node in 0..grid.n_nodes() {
        if grid.is_boundary(node) {
            w.values_mut()[node] = 0.0;
        }
    }
    let mut r = unknown_residual(chart, &w, &map)
        .ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })?;
    let mut rn = inf_norm(&r);
    let mut r2 = l2_norm(&r);
    let mut log = vec![IterationRecord { iter: 0, residual_inf: rn, step_scale: 0.0 }];
    let mut iter = 0;
    while rn > opts.tol {
        if iter >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: iter, residual: rn });
        }
        iter += 1;
        let jac = assemble_jacobian(chart, &w, &map, opts.fd_step);
        let delta = jac.solve(&r)?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = w.clone();
            for (u, d) in delta.iter().enumerate() {
                trial.values_mut()[map.node(u)] -= scale * d;
            }
            if let Some(rt) = unknown_residual(chart, &trial, &map) {
                let t2 = l2_norm(&rt);
                if t2.is_finite() && t2 < r2 {
                    accepted = Some((trial, rt, t2));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((trial, rt, t2)) = accepted else {
            if rn <= opts.stagnation_floor {
                break;
            }
            return Err(Error::NoConvergence { iterations: iter, residual: rn });
        };
        w = trial;
        rn = inf_norm(&rt);
        r = rt;
        r2 = t2;
        log.push(IterationRecord { iter, residual_inf: rn, step_scale: scale });
        let gmax = w.max_gradient();
        if gmax > opts.gradient_limit {
            return Err(Error::GraphBreakdown { gradient: gmax, limit: opts.gradient_limit });
        }
    }
    Ok((w, NewtonReport { iterations: iter, residual_inf: rn, log }))
}
