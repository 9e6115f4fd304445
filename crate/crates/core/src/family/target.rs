use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::disk_pde::{DiskGrid, GraphFunction};
use crate::error::{Error, Result};
use crate::metric::{MetricField, Vec3};

use super::{gauge_axis, gauge_from_axis, solve_disk, DiskSolution, FrameParams, SolveOptions};

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    /// Pass through `q` with tangent plane orthogonal to `normal`.
    PointPlane { q: Vec3, normal: Vec3 },
    /// Pass through the three points.
    ThreePoints { q: [Vec3; 3] },
}

impl TargetSpec {
    pub fn point_plane(q: Vec3, span: [Vec3; 2]) -> Result<Self> {
        let n = span[0].cross(&span[1]);
        if n.norm() < 1e-12 {
            return Err(Error::InvalidArgument("plane vectors are parallel".into()));
        }
        Ok(Self::PointPlane { q, normal: n.normalize() })
    }

    /// The same target read in the unit ball after shrinking by `factor`.
    pub fn shrink(&self, factor: f64) -> Self {
        match self {
            Self::PointPlane { q, normal } => Self::PointPlane { q: q / factor, normal: *normal },
            Self::ThreePoints { q } => Self::ThreePoints { q: q.map(|x| x / factor) },
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetOptions {
    pub solve: SolveOptions,
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub multistart: bool,
}

impl Default for TargetOptions {
    fn default() -> Self {
        let mut solve = SolveOptions { check_embedded: false, ..Default::default() };
        solve.newton.tol = 1e-12;
        solve.newton.stagnation_floor = 1e-10;
        Self { solve, tol: 1e-10, max_iter: 30, fd_step: 1e-6, multistart: true }
    }
}

#[derive(Clone, Debug)]
pub struct TargetResult {
    /// Reported disk parameters; for three points, `v` is the solved frame
    /// direction after canonicalization.
    pub params: FrameParams,
    /// Chart locations of the targets in the reported frame.
    pub locations: Vec<(f64, f64)>,
    /// Solved member in the reported frame `params`.
    pub solution: DiskSolution,
    pub residual: f64,
    pub iterations: usize,
}

/// Unknowns: the disk parameters `(p, t)` plus problem-specific extras.
struct State {
    axis: Vec3,
    p: Vec3,
    t: f64,
    extra: Vec<f64>,
}

trait Problem {
    fn n_extra(&self) -> usize;
    fn n_residual(&self) -> usize;
    fn residual(&self, sol: &DiskSolution, extra: &[f64]) -> Vec<f64>;
    fn clamp(&self, extra: &mut [f64]);
}

struct PointPlane {
    q: Vec3,
    normal: Vec3,
}

impl Problem for PointPlane {
    fn n_extra(&self) -> usize {
        2
    }
    fn n_residual(&self) -> usize {
        6
    }
    fn residual(&self, sol: &DiskSolution, e: &[f64]) -> Vec<f64> {
        let (f, fx, fy) = sol.point_and_tangents(e[0], e[1]);
        let n = fx.cross(&fy).normalize();
        let d = f - self.q;
        let c = n.cross(&self.normal);
        vec![d[0], d[1], d[2], c[0], c[1], c[2]]
    }
    fn clamp(&self, e: &mut [f64]) {
        clamp_disk(&mut e[0..2], 1.0);
    }
}

/// Extras: `alpha, x1, x2, y2, x3, y3`; locations are rotated by `alpha`
/// before evaluating the gauge immersion.
struct ThreePoints {
    q: [Vec3; 3],
}

fn rotate(alpha: f64, x: f64, y: f64) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    (c * x - s * y, s * x + c * y)
}

impl ThreePoints {
    fn locations(e: &[f64]) -> [(f64, f64); 3] {
        [(e[1], 0.0), (e[2], e[3]), (e[4], e[5])]
    }
}

impl Problem for ThreePoints {
    fn n_extra(&self) -> usize {
        6
    }
    fn n_residual(&self) -> usize {
        9
    }
    fn residual(&self, sol: &DiskSolution, e: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(9);
        for (k, (x, y)) in Self::locations(e).iter().enumerate() {
            let (a, b) = rotate(e[0], *x, *y);
            let d = sol.point(a, b) - self.q[k];
            out.extend_from_slice(d.as_slice());
        }
        out
    }
    fn clamp(&self, e: &mut [f64]) {
        e[1] = e[1].clamp(-1.05, 1.05);
        clamp_disk(&mut e[2..4], 1.05);
        clamp_disk(&mut e[4..6], 1.05);
    }
}

fn clamp_disk(xy: &mut [f64], rmax: f64) {
    let r = xy[0].hypot(xy[1]);
    if r > rmax {
        xy[0] *= rmax / r;
        xy[1] *= rmax / r;
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Solver<'a> {
    field: &'a MetricField,
    grid: &'a Arc<DiskGrid>,
    opts: &'a TargetOptions,
}

impl Solver<'_> {
    fn solve_at(&self, axis: &Vec3, p: &Vec3, t: f64, warm: Option<&DiskSolution>) -> Result<DiskSolution> {
        let fp = FrameParams::new(*p, gauge_from_axis(p, axis), t)?;
        let mut o = self.opts.solve.clone();
        o.warm_start = warm.map(|w| w.heights.clone());
        solve_disk(self.field, &fp, self.grid, &o)
    }

    fn moved(axis: &Vec3, p: &Vec3, a: f64, b: f64) -> Vec3 {
        let e1 = gauge_from_axis(p, axis);
        let e2 = p.cross(&e1);
        (p + e1 * a + e2 * b).normalize()
    }

    fn run(&self, prob: &dyn Problem, start: State) -> Result<(State, DiskSolution, f64, usize)> {
        let ne = prob.n_extra();
        let mut st = start;
        let ax = st.axis;
        let mut sol = self.solve_at(&ax, &st.p, st.t, None)?;
        let mut r = prob.residual(&sol, &st.extra);
        let mut rn = norm(&r);
        let h = self.opts.fd_step;
        for iter in 0..self.opts.max_iter {
            if rn <= self.opts.tol {
                return Ok((st, sol, rn, iter));
            }
            let n = 3 + ne;
            let mut jac = DMatrix::zeros(prob.n_residual(), n);
            for k in 0..3 {
                let (p, t) = match k {
                    0 => (Self::moved(&ax, &st.p, h, 0.0), st.t),
                    1 => (Self::moved(&ax, &st.p, 0.0, h), st.t),
                    _ => (st.p, st.t + h),
                };
                let s2 = self.solve_at(&ax, &p, t, Some(&sol))?;
                let rk = prob.residual(&s2, &st.extra);
                for i in 0..rk.len() {
                    jac[(i, k)] = (rk[i] - r[i]) / h;
                }
            }
            for k in 0..ne {
                let mut e = st.extra.clone();
                e[k] += h;
                let rp = prob.residual(&sol, &e);
                e[k] -= 2.0 * h;
                let rm = prob.residual(&sol, &e);
                for i in 0..rp.len() {
                    jac[(i, 3 + k)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let rhs = DVector::from_vec(r.iter().map(|x| -x).collect());
            let step = jac
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|_| Error::TargetNotReached { residual: rn })?;
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let p = Self::moved(&ax, &st.p, scale * step[0], scale * step[1]);
                let t = (st.t + scale * step[2]).clamp(-0.999, 0.999);
                let mut extra: Vec<f64> =
                    (0..ne).map(|k| st.extra[k] + scale * step[3 + k]).collect();
                prob.clamp(&mut extra);
                if let Ok(s2) = self.solve_at(&ax, &p, t, Some(&sol)) {
                    let r2 = prob.residual(&s2, &extra);
                    let n2 = norm(&r2);
                    if n2.is_finite() && n2 < rn {
                        accepted = Some((State { axis: ax, p, t, extra }, s2, r2, n2));
                        break;
                    }
                }
                scale *= 0.5;
            }
            let Some((s, s2, r2, n2)) = accepted else {
                return Err(Error::TargetNotReached { residual: rn });
            };
            st = s;
            sol = s2;
            r = r2;
            rn = n2;
        }
        if rn <= self.opts.tol {
            Ok((st, sol, rn, self.opts.max_iter))
        } else {
            Err(Error::TargetNotReached { residual: rn })
        }
    }

    fn multistart(
        &self,
        prob: &dyn Problem,
        seeds: Vec<State>,
    ) -> Result<(State, DiskSolution, f64, usize)> {
        let mut best = f64::INFINITY;
        let mut tried = 0;
        for s in seeds {
            if tried > 0 && !self.opts.multistart {
                break;
            }
            tried += 1;
            match self.run(prob, s) {
                Ok(out) => return Ok(out),
                Err(Error::TargetNotReached { residual }) => best = best.min(residual),
                Err(_) => {}
            }
        }
        Err(Error::TargetNotReached { residual: best })
    }
}

fn cube_directions() -> Vec<Vec3> {
    let mut out = Vec::new();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                out.push(Vec3::new(sx, sy, sz).normalize());
            }
        }
    }
    out
}

fn plane_seed(p: &Vec3, t: f64, q: &Vec3) -> (f64, f64) {
    let e1 = gauge_from_axis(p, &gauge_axis(p));
    let e2 = p.cross(&e1);
    let s = (1.0 - t * t).sqrt();
    let d = q - p * t;
    (d.dot(&e1) / s, d.dot(&e2) / s)
}

/// Finds `D_{p,v,t}` through `q` with tangent plane `V` at a chart point.
pub fn target_point_plane(
    field: &MetricField,
    q: &Vec3,
    span: [Vec3; 2],
    grid: &Arc<DiskGrid>,
    opts: &TargetOptions,
) -> Result<TargetResult> {
    if q.norm() >= 1.0 {
        return Err(Error::InvalidArgument("target point must lie in the open ball".into()));
    }
    let TargetSpec::PointPlane { normal, .. } = TargetSpec::point_plane(*q, span)? else {
        unreachable!()
    };
    let prob = PointPlane { q: *q, normal };
    let mut seeds = Vec::new();
    let t0 = q.dot(&normal);
    let (x, y) = plane_seed(&normal, t0, q);
    seeds.push(State { axis: gauge_axis(&normal), p: normal, t: t0, extra: vec![x, y] });
    for p in cube_directions() {
        let t = (-9..=9)
            .map(|k| k as f64 * 0.1)
            .min_by(|a, b| {
                let f = |t: f64| {
                    let (x, y) = plane_seed(&p, t, q);
                    (x.hypot(y) - 0.5).abs() + (q.dot(&p) - t).abs()
                };
                f(*a).total_cmp(&f(*b))
            })
            .unwrap();
        let (x, y) = plane_seed(&p, t, q);
        seeds.push(State { axis: gauge_axis(&p), p, t, extra: vec![x, y] });
    }
    let solver = Solver { field, grid, opts };
    let (st, sol, res, iters) = solver.multistart(&prob, seeds)?;
    Ok(TargetResult {
        params: sol.params,
        locations: vec![(st.extra[0], st.extra[1])],
        solution: sol,
        residual: res,
        iterations: iters,
    })
}

/// Finds `D_{p,v,t}` through three points with the first on the positive real
/// axis of the chart, canonicalized to `t > 0` and `x1 > 0`.
pub fn target_three_points(
    field: &MetricField,
    q: [Vec3; 3],
    grid: &Arc<DiskGrid>,
    opts: &TargetOptions,
) -> Result<TargetResult> {
    if q.iter().any(|x| x.norm() > 1.0 + 1e-12) {
        return Err(Error::InvalidArgument("target points must lie in the closed ball".into()));
    }
    let n = (q[1] - q[0]).cross(&(q[2] - q[0]));
    let scale = (q[1] - q[0]).norm() * (q[2] - q[0]).norm();
    if n.norm() <= 1e-10 * scale.max(1e-300) {
        return Err(Error::CollinearPoints);
    }
    let prob = ThreePoints { q };
    let seed_for = |p: Vec3| -> Option<State> {
        let t = q[0].dot(&p);
        if t.abs() >= 0.999 {
            return None;
        }
        let s = (1.0 - t * t).sqrt();
        let e1 = gauge_from_axis(&p, &gauge_axis(&p));
        let e2 = p.cross(&e1);
        let loc = |x: &Vec3| {
            let d = (x - p * t) / s;
            (d.dot(&e1), d.dot(&e2))
        };
        let (a1, b1) = loc(&q[0]);
        let alpha = b1.atan2(a1);
        let x1 = a1.hypot(b1);
        let (x2, y2) = {
            let (a, b) = loc(&q[1]);
            rotate(-alpha, a, b)
        };
        let (x3, y3) = {
            let (a, b) = loc(&q[2]);
            rotate(-alpha, a, b)
        };
        Some(State { axis: gauge_axis(&p), p, t, extra: vec![alpha, x1, x2, y2, x3, y3] })
    };
    let mut seeds: Vec<State> = seed_for(n.normalize()).into_iter().collect();
    seeds.extend(cube_directions().into_iter().filter_map(seed_for));
    let solver = Solver { field, grid, opts };
    let (st, sol, res, iters) = solver.multistart(&prob, seeds)?;

    let e = &st.extra;
    let p0 = sol.params.p;
    let v0 = sol.params.v;
    let (sa, ca) = e[0].sin_cos();
    let mut p = p0;
    let mut v = v0 * ca + p0.cross(&v0) * sa;
    let mut t = st.t;
    let mut locs: Vec<(f64, f64)> = ThreePoints::locations(e).to_vec();
    if t < 0.0 {
        p = -p;
        t = -t;
        locs.iter_mut().for_each(|l| l.1 = -l.1);
    }
    if locs[0].0 < 0.0 {
        v = -v;
        locs.iter_mut().for_each(|l| *l = (-l.0, -l.1));
    }
    let params = FrameParams::new(p, v, t)?;
    let solution = if params == sol.params { sol } else { reframe(field, &sol, &params, grid, &opts.solve)? };
    Ok(TargetResult {
        params,
        locations: locs,
        solution,
        residual: res,
        iterations: iters,
    })
}

/// The same disk in a frame with `p' = +-p`: heights are resampled on the new
/// chart and polished by a warm-started solve.
fn reframe(
    field: &MetricField,
    sol: &DiskSolution,
    params: &FrameParams,
    grid: &Arc<DiskGrid>,
    opts: &SolveOptions,
) -> Result<DiskSolution> {
    let (v0, w0) = (sol.params.v, sol.params.w());
    let (v1, w1) = (params.v, params.w());
    let sigma = sol.params.p.dot(&params.p).signum();
    let warm = GraphFunction::from_fn(grid, |x, y| {
        let b = v1 * x + w1 * y;
        sigma * sol.heights.sample(b.dot(&v0), b.dot(&w0))
    });
    let mut o = opts.clone();
    o.warm_start = Some(warm);
    solve_disk(field, params, grid, &o)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<DiskGrid> {
        DiskGrid::new(12, 24).unwrap()
    }

    #[test]
    fn euclidean_point_plane_recovers_horizontal_disk() {
        let r = target_point_plane(
            &MetricField::euclidean(),
            &Vec3::new(0.2, 0.1, 0.3),
            [Vec3::x(), Vec3::y()],
            &grid(),
            &TargetOptions::default(),
        )
        .unwrap();
        assert!(r.residual <= 1e-8);
        assert!((r.params.p[2].abs() - 1.0).abs() < 1e-8);
        assert!((r.params.t * r.params.p[2] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn collinear_points_rejected() {
        let q = [Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.2, 0.0, 0.0), Vec3::new(0.3, 0.0, 0.0)];
        let e = target_three_points(&MetricField::euclidean(), q, &grid(), &TargetOptions::default());
        assert!(matches!(e, Err(Error::CollinearPoints)));
    }

    #[test]
    fn near_pole_triple_is_canonical() {
        let t: f64 = 0.95;
        let s = (1.0 - t * t).sqrt();
        let q = [Vec3::new(s, 0.0, t), Vec3::new(0.0, s, t), Vec3::new(-s, 0.0, t)];
        let r = target_three_points(&MetricField::euclidean(), q, &grid(), &TargetOptions::default())
            .unwrap();
        assert!(r.residual <= 1e-8);
        assert!((r.params.p - Vec3::z()).norm() < 1e-8);
        assert!((r.params.t - t).abs() < 1e-8);
        let want = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
        for (l, w) in r.locations.iter().zip(want) {
            assert!((l.0 - w.0).abs() < 1e-7 && (l.1 - w.1).abs() < 1e-7, "{l:?}");
        }
    }

    #[test]
    fn canonical_three_point_solution_passes_through_targets() {
        let q = [Vec3::new(0.5, 0.1, -0.1), Vec3::new(-0.1, 0.6, 0.0), Vec3::new(0.0, -0.3, 0.4)];
        for f in [MetricField::euclidean(), MetricField::schwarzschild(0.1).unwrap()] {
            let r = target_three_points(&f, q, &grid(), &TargetOptions::default()).unwrap();
            assert_eq!(r.solution.params, r.params);
            assert!(r.params.t > 0.0 && r.locations[0].0 > 0.0);
            for (x, (a, b)) in q.iter().zip(&r.locations) {
                assert!((r.solution.point(*a, *b) - x).norm() < 1e-8, "{}", f.label());
            }
        }
    }

    #[test]
    fn curved_point_plane_converges() {
        let f = MetricField::schwarzschild(0.1).unwrap();
        let q = Vec3::new(0.3, -0.2, 0.25);
        let r = target_point_plane(
            &f,
            &q,
            [Vec3::new(1.0, 0.0, 0.2), Vec3::new(0.0, 1.0, -0.1)],
            &grid(),
            &TargetOptions::default(),
        )
        .unwrap();
        assert!(r.residual <= 1e-8);
        let (x, y) = r.locations[0];
        assert!((r.solution.point(x, y) - q).norm() < 1e-8);
    }
}
