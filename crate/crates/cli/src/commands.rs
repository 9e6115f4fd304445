use std::f64::consts::SQRT_2;
use std::path::Path;

use mindisk::counterexample::{verify_counterexample, CounterexampleParams, CounterexampleReport, VerifyOptions};
use mindisk::disk_pde::{DiskGrid, GraphFunction};
use mindisk::family::{
    asymptotic_sweep, check_foliation, continuation_sweep, gauge_v, solve_disk, target_point_plane,
    target_three_points, DiskSolution, FrameParams, SolveOptions, StepControls, TargetOptions, TargetResult,
    TargetSpec,
};
use mindisk::geometry::{
    boundary_conformalizing_diffeo, conformal_defect, export_obj, three_point_jacobian, JacobianReport,
    RectifyOptions, SurfaceMesh,
};
use mindisk::{Error, Vec3};

use crate::config::{read_text, CliError, CliResult, Settings};
use crate::output::{num, vec3, write_csv};
use crate::{
    AsymptoticArgs, CounterexampleArgs, DiskArgs, ExportArgs, JacobianArgs, SweepArgs, TargetArgs, ThreePointArgs,
};

const SOLUTION_HEADER: &str = "p1,p2,p3,v1,v2,v3,t,nr,ntheta,area,residual_inf,iterations,embedded";
const NODES_HEADER: &str = "node,ring,angle,x,y,u,X,Y,Z";
const TARGET_HEADER: &str = "status,residual,p1,p2,p3,t,iters";

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn unit(key: &str, v: Vec3) -> CliResult<Vec3> {
    let n = v.norm();
    if !(n > 1e-12) {
        return Err(bad(format!("`{key}` must be non-zero")));
    }
    Ok(v / n)
}

fn frame(s: &Settings, p: &Option<String>, v: &Option<String>, t: f64) -> CliResult<FrameParams> {
    let p = unit("p", s.vec3("p", p)?.unwrap_or_else(Vec3::z))?;
    let built = match s.vec3("v", v)? {
        Some(v) => FrameParams::new(p, unit("v", v - p * p.dot(&v))?, t),
        None => FrameParams::with_gauge(p, t),
    };
    built.map_err(|e| bad(e.to_string()))
}

fn solve_options(s: &Settings) -> CliResult<SolveOptions> {
    let mut o = SolveOptions::default();
    if let Some(t) = s.tol()? {
        o.newton.tol = t;
    }
    Ok(o)
}

fn target_options(s: &Settings) -> CliResult<TargetOptions> {
    let mut o = TargetOptions::default();
    if let Some(t) = s.tol()? {
        o.tol = t;
    }
    Ok(o)
}

fn write_mesh(dir: &Path, sol: &DiskSolution) -> CliResult<()> {
    let path = dir.join("disk.obj");
    export_obj(&SurfaceMesh::from_solution(sol), &path).map_err(|e| match e {
        Error::Io(source) => CliError::Io { path, source },
        other => CliError::Run(other),
    })
}

fn solution_row(sol: &DiskSolution) -> String {
    let fp = &sol.params;
    let d = &sol.diagnostics;
    let embedded = match d.embedded {
        Some(true) => "true",
        Some(false) => "false",
        None => "unchecked",
    };
    format!(
        "{},{},{},{},{},{},{},{},{embedded}",
        vec3(&fp.p),
        vec3(&fp.v),
        num(fp.t),
        sol.grid().nr(),
        sol.grid().ntheta(),
        num(sol.area()),
        num(d.residual_inf),
        d.iterations,
    )
}

fn node_rows(sol: &DiskSolution) -> Vec<String> {
    let g = sol.grid();
    (0..g.n_nodes())
        .map(|k| {
            let (i, j) = g.ring_angle(k);
            let (x, y) = g.xy(k);
            format!(
                "{k},{i},{j},{},{},{},{}",
                num(x),
                num(y),
                num(sol.heights.values()[k]),
                vec3(&sol.node_position(k))
            )
        })
        .collect()
}

pub fn solve(s: &Settings, a: &DiskArgs) -> CliResult<()> {
    let t = s.require("t", a.t)?;
    let params = frame(s, &a.p, &a.v, t)?;
    let (field, grid, opts) = (s.metric()?, s.grid()?, solve_options(s)?);
    let dir = s.out_dir()?;
    let sol = solve_disk(&field, &params, &grid, &opts)?;
    write_csv(&dir, "solution.csv", SOLUTION_HEADER, &[solution_row(&sol)])?;
    write_csv(&dir, "nodes.csv", NODES_HEADER, &node_rows(&sol))?;
    let log: Vec<String> = sol
        .diagnostics
        .log
        .iter()
        .map(|r| format!("{},{},{}", r.iter, num(r.residual_inf), num(r.step_scale)))
        .collect();
    write_csv(&dir, "newton.csv", "iter,residual_inf,step_scale", &log)?;
    write_mesh(&dir, &sol)?;
    println!("area = {}", num(sol.area()));
    Ok(())
}

pub fn sweep(s: &Settings, a: &SweepArgs) -> CliResult<()> {
    let t_from = s.or("t-from", a.t_from, 0.5)?;
    let t_to = s.or("t-to", a.t_to, 0.99)?;
    let dt = s.or("dt", a.dt, 0.05)?;
    if !(dt > 0.0) {
        return Err(bad("--dt must be positive"));
    }
    let params = frame(s, &a.p, &a.v, t_from)?;
    let (field, grid, opts) = (s.metric()?, s.grid()?, solve_options(s)?);
    let dir = s.out_dir()?;
    let sols = continuation_sweep(&field, &params.p, &params.v, t_from, t_to, &grid, &StepControls::uniform(dt), &opts)?;
    let mut rows = Vec::new();
    for (k, sol) in sols.iter().enumerate() {
        let gap = if k == 0 { f64::NAN } else { check_foliation(&sols[k - 1..=k])?.min_gap };
        rows.push(format!(
            "{},{},{},{}",
            num(sol.params.t),
            num(sol.diagnostics.residual_inf),
            num(sol.area()),
            num(gap)
        ));
    }
    write_csv(&dir, "sweep.csv", "t,residual,area,min_gap", &rows)?;
    let rep = check_foliation(&sols)?;
    println!("members = {}, foliation = {}, min_gap = {}", sols.len(), rep.monotone, num(rep.min_gap));
    Ok(())
}

fn write_target(dir: &Path, res: Result<TargetResult, Error>) -> CliResult<()> {
    match res {
        Ok(r) => {
            let row = format!("ok,{},{},{},{}", num(r.residual), vec3(&r.params.p), num(r.params.t), r.iterations);
            write_csv(dir, "target.csv", TARGET_HEADER, &[row])?;
            let locs: Vec<String> =
                r.locations.iter().enumerate().map(|(k, (x, y))| format!("{k},{},{}", num(*x), num(*y))).collect();
            write_csv(dir, "locations.csv", "k,x,y", &locs)?;
            write_mesh(dir, &r.solution)?;
            println!("p = ({}), t = {}, residual = {}", vec3(&r.params.p), num(r.params.t), num(r.residual));
            Ok(())
        }
        Err(e) => {
            let residual = match e {
                Error::TargetNotReached { residual } => residual,
                _ => f64::NAN,
            };
            let nan = num(f64::NAN);
            let row = format!("failed,{},{nan},{nan},{nan},{nan},0", num(residual));
            write_csv(dir, "target.csv", TARGET_HEADER, &[row])?;
            Err(e.into())
        }
    }
}

fn plane(s: &Settings, flag: &Option<String>) -> CliResult<Option<[Vec3; 2]>> {
    match s.list("plane", flag)? {
        None => Ok(None),
        Some(v) if v.len() == 6 => Ok(Some([Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])])),
        Some(_) => Err(bad("`plane` expects six comma-separated numbers")),
    }
}

pub fn target(s: &Settings, a: &TargetArgs) -> CliResult<()> {
    let q = s.vec3("q", &a.q)?.ok_or_else(|| bad("missing required `--q`"))?;
    let span = plane(s, &a.plane)?.ok_or_else(|| bad("missing required `--plane`"))?;
    let (field, grid, opts) = (s.metric()?, s.grid()?, target_options(s)?);
    let dir = s.out_dir()?;
    write_target(&dir, target_point_plane(&field, &q, span, &grid, &opts))
}

pub fn three_points(s: &Settings, a: &ThreePointArgs) -> CliResult<()> {
    let mut q = [Vec3::zeros(); 3];
    for (k, flag) in [&a.q1, &a.q2, &a.q3].into_iter().enumerate() {
        let key = format!("q{}", k + 1);
        q[k] = s.vec3(&key, flag)?.ok_or_else(|| bad(format!("missing required `--{key}`")))?;
    }
    let (field, grid, opts) = (s.metric()?, s.grid()?, target_options(s)?);
    let dir = s.out_dir()?;
    write_target(&dir, target_three_points(&field, q, &grid, &opts))
}

pub fn asymptotic(s: &Settings, a: &AsymptoticArgs) -> CliResult<()> {
    let q = s.vec3("q", &a.q)?.unwrap_or_else(Vec3::z);
    let span = plane(s, &a.plane)?.unwrap_or([Vec3::x(), Vec3::y()]);
    let radii = s.list("radii", &a.radii)?.unwrap_or_else(|| vec![5.0, 10.0, 20.0, 40.0]);
    let spec = TargetSpec::point_plane(q, span).map_err(|e| bad(e.to_string()))?;
    let (field, grid, opts) = (s.base_metric()?, s.grid()?, target_options(s)?);
    let dir = s.out_dir()?;
    let rows: Vec<String> = asymptotic_sweep(&field, &spec, &radii, &grid, &opts)?
        .iter()
        .map(|r| format!("{},{},{},{},{}", num(r.radius), num(r.area), num(r.ratio), vec3(&r.p), num(r.t)))
        .collect();
    write_csv(&dir, "asymptotic.csv", "R,area,ratio,p1,p2,p3,t", &rows)
}

pub fn counterexample(s: &Settings, a: &CounterexampleArgs) -> CliResult<()> {
    let r = s.r()?.unwrap_or(4.0);
    let eps = s.eps()?.unwrap_or(0.05);
    let big_r = s.or("big-r", a.big_r, (SQRT_2 + 1.0) * (1.0 + r))?;
    let params = CounterexampleParams::new(r, eps, big_r).map_err(|e| bad(e.to_string()))?;
    let d = VerifyOptions::default();
    let opts = VerifyOptions {
        nr: s.or("plateau-nr", a.plateau_nr, d.nr)?,
        ntheta: s.or("plateau-ntheta", a.plateau_ntheta, d.ntheta)?,
        max_iter: s.or("max-iter", a.max_iter, d.max_iter)?,
        tol: s.tol()?.unwrap_or(d.tol),
        seed: s.seed()?,
        ..d
    };
    let dir = s.out_dir()?;
    let rep = verify_counterexample(&params, &opts)?;
    write_csv(&dir, "counterexample.csv", CounterexampleReport::CSV_HEADER, &[rep.csv_row()])?;
    println!("verdict = {}", rep.verdict);
    Ok(())
}

pub fn verify_jacobian(s: &Settings, a: &JacobianArgs) -> CliResult<()> {
    let thetas = s.list("theta", &a.theta)?.unwrap_or_else(|| vec![0.1, 0.3, 0.6]);
    let p = unit("p", s.vec3("p", &a.p)?.unwrap_or_else(|| Vec3::new(0.3, -0.2, 0.9)))?;
    let v = match s.vec3("v", &a.v)? {
        Some(v) => unit("v", v - p * p.dot(&v))?,
        None => gauge_v(&p),
    };
    let dir = s.out_dir()?;
    let mut rows = Vec::new();
    for theta in thetas {
        let rep = three_point_jacobian(&p, &v, theta).map_err(|e| bad(e.to_string()))?;
        rows.push(rep.csv_row());
    }
    write_csv(&dir, "jacobian.csv", JacobianReport::CSV_HEADER, &rows)
}

pub fn rectify(s: &Settings, a: &DiskArgs) -> CliResult<()> {
    let t = s.require("t", a.t)?;
    let params = frame(s, &a.p, &a.v, t)?;
    let (field, grid, opts) = (s.metric()?, s.grid()?, solve_options(s)?);
    let dir = s.out_dir()?;
    let sol = solve_disk(&field, &params, &grid, &opts)?;
    let y = boundary_conformalizing_diffeo(&sol, &RectifyOptions::default())?;
    let defect = conformal_defect(&sol, &y)?;
    let rows: Vec<String> = (0..grid.n_nodes())
        .map(|k| {
            let (x, yy) = grid.xy(k);
            let p = y.points()[k];
            format!("{k},{},{},{},{},{}", num(x), num(yy), num(p[0]), num(p[1]), num(y.jacobian()[k]))
        })
        .collect();
    write_csv(&dir, "rectify.csv", "node,x,y,Y1,Y2,jacobian", &rows)?;
    let summary = format!(
        "{},{},{},{},{}",
        num(y.r0()),
        num(y.transition_start()),
        num(y.min_jacobian()),
        num(y.boundary_identity_error()),
        num(defect)
    );
    write_csv(
        &dir,
        "rectify_summary.csv",
        "r0,transition_start,min_jacobian,boundary_identity_error,conformal_defect",
        &[summary],
    )?;
    println!("conformal defect = {}, min jacobian = {}", num(defect), num(y.min_jacobian()));
    Ok(())
}

fn csv_body<'a>(text: &'a str, header: &str, name: &str) -> CliResult<Vec<Vec<&'a str>>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(bad(format!("{name}: unexpected header")));
    }
    Ok(lines.map(|l| l.split(',').collect()).collect())
}

fn field(cell: Option<&&str>, name: &str) -> CliResult<f64> {
    cell.and_then(|c| c.parse().ok()).ok_or_else(|| bad(format!("{name}: malformed number")))
}

pub fn export(s: &Settings, a: &ExportArgs) -> CliResult<()> {
    let from = s.pick("from", a.from.clone())?.ok_or_else(|| bad("missing required `--from`"))?;
    let sol_text = read_text(&from.join("solution.csv"))?;
    let rows = csv_body(&sol_text, SOLUTION_HEADER, "solution.csv")?;
    let [row] = &rows[..] else {
        return Err(bad("solution.csv: expected one row"));
    };
    let n = |k: usize| field(row.get(k), "solution.csv");
    let p = Vec3::new(n(0)?, n(1)?, n(2)?);
    let v = Vec3::new(n(3)?, n(4)?, n(5)?);
    let params = FrameParams::new(p, v, n(6)?).map_err(|e| bad(e.to_string()))?;
    let dims = |k: usize| row.get(k).and_then(|c| c.parse::<usize>().ok()).ok_or_else(|| bad("solution.csv: grid size"));
    let grid = DiskGrid::new(dims(7)?, dims(8)?).map_err(|e| bad(e.to_string()))?;
    let nodes_text = read_text(&from.join("nodes.csv"))?;
    let heights = csv_body(&nodes_text, NODES_HEADER, "nodes.csv")?
        .iter()
        .map(|r| field(r.get(5), "nodes.csv"))
        .collect::<CliResult<Vec<f64>>>()?;
    let heights = GraphFunction::from_values(&grid, heights).map_err(|e| bad(e.to_string()))?;
    let sol = DiskSolution::from_heights(&s.metric()?, &params, heights).map_err(|e| bad(e.to_string()))?;
    let dir = s.out_dir()?;
    write_mesh(&dir, &sol)
}
