//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use mindisk::counterexample::{
    competitor_area, crossover_threshold, excess_trapezoid, quarter_disk_area, verify_counterexample,
    CounterexampleParams, Verdict, VerifyOptions,
};
use mindisk::disk_pde::{convergence_order, DiskGrid};
use mindisk::family::{
    asymptotic_sweep, check_foliation, continuation_sweep, gauge_v, solve_disk, target_point_plane,
    target_three_points, FrameParams, SolveOptions, StepControls, TargetOptions, TargetSpec,
};
use mindisk::geometry::{
    boundary_conformalizing_diffeo, boundary_traces, conformal_defect, quaternion_to_rotation,
    rotation_to_quaternion, three_point_jacobian, trace_invariant, RectifyOptions,
};
use mindisk::quadrature::observed_order;
use mindisk::{MetricField, Vec3};
use nalgebra::{Matrix3, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, msg: String, fails: &mut Vec<String>) {
    if !cond {
        fails.push(msg);
    }
}

fn outcome(fails: Vec<String>, summary: String) -> Outcome {
    if fails.is_empty() {
        Outcome { pass: true, detail: summary }
    } else {
        Outcome { pass: false, detail: fails.join("; ") }
    }
}

fn grid(nr: usize, nt: usize) -> Arc<DiskGrid> {
    DiskGrid::new(nr, nt).unwrap()
}

fn tilted() -> Vec3 {
    Vec3::new(0.3, -0.2, 0.9).normalize()
}

fn euclidean_exactness() -> Outcome {
    let g = grid(64, 128);
    let f = MetricField::euclidean();
    let mut fails = Vec::new();
    let mut slowest: f64 = 0.0;
    for t in [0.0, 0.3, 0.6, 0.9] {
        let start = Instant::now();
        let sol = solve_disk(&f, &FrameParams::with_gauge(tilted(), t).unwrap(), &g, &SolveOptions::default());
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        match sol {
            Ok(sol) => {
                let u = sol.heights.max_abs();
                let da = (sol.area() - PI * (1.0 - t * t)).abs();
                check(u <= 1e-8, format!("t={t}: |u|={u:.3e}"), &mut fails);
                check(da <= 1e-6, format!("t={t}: area error {da:.3e}"), &mut fails);
            }
            Err(e) => fails.push(format!("t={t}: {e}")),
        }
        check(secs < 5.0, format!("t={t}: {secs:.2}s"), &mut fails);
    }
    outcome(fails, format!("slowest solve {slowest:.2}s"))
}

fn foliation() -> Outcome {
    let g = grid(32, 64);
    let p = tilted();
    let v = gauge_v(&p);
    let mut fails = Vec::new();
    let mut gaps = Vec::new();
    for f in [
        MetricField::euclidean(),
        MetricField::schwarzschild(0.1).unwrap(),
        MetricField::conformal_bump(4.0, 0.05).unwrap(),
    ] {
        let start = Instant::now();
        let sweep = continuation_sweep(&f, &p, &v, 0.5, 0.99, &g, &StepControls::uniform(0.02), &SolveOptions::default());
        let secs = start.elapsed().as_secs_f64();
        match sweep.and_then(|s| check_foliation(&s)) {
            Ok(rep) => {
                check(rep.monotone && rep.min_gap > 0.0, format!("{}: {rep:?}", f.label()), &mut fails);
                gaps.push(format!("{}={:.3e}", f.label(), rep.min_gap));
            }
            Err(e) => fails.push(format!("{}: {e}", f.label())),
        }
        check(secs < 120.0, format!("{}: {secs:.1}s", f.label()), &mut fails);
    }
    outcome(fails, format!("min gaps {}", gaps.join(", ")))
}

fn point_plane_cases() -> [(Vec3, [Vec3; 2]); 5] {
    [
        (Vec3::new(0.2, 0.1, 0.3), [Vec3::x(), Vec3::y()]),
        (Vec3::new(-0.4, 0.2, 0.1), [Vec3::new(1.0, 0.0, 0.3), Vec3::new(0.0, 1.0, 0.2)]),
        (Vec3::new(0.0, 0.5, -0.3), [Vec3::y(), Vec3::z()]),
        (Vec3::new(0.1, -0.6, 0.2), [Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.0, 0.3, 1.0)]),
        (Vec3::new(0.55, 0.0, 0.55), [Vec3::new(1.0, 0.0, -1.0), Vec3::new(0.2, 1.0, 0.1)]),
    ]
}

fn triples() -> [[Vec3; 3]; 5] {
    [
        [Vec3::new(0.3, 0.0, 0.2), Vec3::new(0.0, 0.4, 0.25), Vec3::new(-0.2, -0.1, 0.3)],
        [Vec3::new(0.5, 0.1, -0.1), Vec3::new(-0.1, 0.6, 0.0), Vec3::new(0.0, -0.3, 0.4)],
        [Vec3::new(0.1, 0.1, 0.6), Vec3::new(0.4, -0.2, 0.5), Vec3::new(-0.3, 0.2, 0.55)],
        [Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, 0.6, 0.1), Vec3::new(0.0, 0.0, 0.6)],
        [Vec3::new(-0.2, -0.2, -0.2), Vec3::new(0.3, -0.1, 0.0), Vec3::new(0.1, 0.4, -0.3)],
    ]
}

/// Flat plane through `q` with normal `n`: `p = +-n`, `t = <q, p>`.
fn plane_error(p: &Vec3, t: f64, q: &Vec3, n: &Vec3) -> f64 {
    let n = n.normalize();
    let s = if p.dot(&n) >= 0.0 { 1.0 } else { -1.0 };
    (p - n * s).norm().max((t - q.dot(&n) * s).abs())
}

fn point_plane_targeting() -> Outcome {
    let g = grid(32, 64);
    let opts = TargetOptions::default();
    let mut fails = Vec::new();
    let mut worst_res: f64 = 0.0;
    let mut worst_flat: f64 = 0.0;
    let bump = MetricField::conformal_bump(4.0, 0.01).unwrap();
    for (k, (q, span)) in point_plane_cases().into_iter().enumerate() {
        match target_point_plane(&bump, &q, span, &g, &opts) {
            Ok(r) => {
                worst_res = worst_res.max(r.residual);
                check(r.residual <= 1e-10, format!("bump case {k}: residual {:.3e}", r.residual), &mut fails);
            }
            Err(e) => fails.push(format!("bump case {k}: {e}")),
        }
        match target_point_plane(&MetricField::euclidean(), &q, span, &g, &opts) {
            Ok(r) => {
                let err = plane_error(&r.params.p, r.params.t, &q, &span[0].cross(&span[1]));
                worst_flat = worst_flat.max(err);
                check(err <= 1e-6, format!("euclidean case {k}: error {err:.3e}"), &mut fails);
            }
            Err(e) => fails.push(format!("euclidean case {k}: {e}")),
        }
    }
    outcome(fails, format!("max residual {worst_res:.2e}, max plane error {worst_flat:.2e}"))
}

fn three_point_targeting() -> Outcome {
    let g = grid(32, 64);
    let opts = TargetOptions::default();
    let mut fails = Vec::new();
    let mut worst_res: f64 = 0.0;
    let mut worst_flat: f64 = 0.0;
    let bump = MetricField::conformal_bump(4.0, 0.01).unwrap();
    for (k, q) in triples().into_iter().enumerate() {
        match target_three_points(&MetricField::euclidean(), q, &g, &opts) {
            Ok(r) => {
                let n = (q[1] - q[0]).cross(&(q[2] - q[0]));
                let mut err = plane_error(&r.params.p, r.params.t, &q[0], &n);
                for (x, (a, b)) in q.iter().zip(&r.locations) {
                    err = err.max((r.solution.point(*a, *b) - x).norm());
                }
                worst_flat = worst_flat.max(err);
                check(err <= 1e-6, format!("euclidean triple {k}: error {err:.3e}"), &mut fails);
            }
            Err(e) => fails.push(format!("euclidean triple {k}: {e}")),
        }
        match target_three_points(&bump, q, &g, &opts) {
            Ok(r) => {
                worst_res = worst_res.max(r.residual);
                check(r.residual <= 1e-10, format!("bump triple {k}: residual {:.3e}", r.residual), &mut fails);
            }
            Err(e) => fails.push(format!("bump triple {k}: {e}")),
        }
    }
    let t: f64 = 0.95;
    let s = (1.0 - t * t).sqrt();
    let q = [Vec3::new(s, 0.0, t), Vec3::new(0.0, s, t), Vec3::new(-s, 0.0, t)];
    let mut pole_err = f64::NAN;
    match target_three_points(&MetricField::euclidean(), q, &g, &opts) {
        Ok(r) => {
            pole_err = r
                .locations
                .iter()
                .zip([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)])
                .map(|(l, w)| (l.0 - w.0).hypot(l.1 - w.1))
                .fold(0.0, f64::max);
            check(pole_err <= 1e-4, format!("near-pole locations off by {pole_err:.3e}"), &mut fails);
        }
        Err(e) => fails.push(format!("near-pole triple: {e}")),
    }
    outcome(
        fails,
        format!("max residual {worst_res:.2e}, max flat error {worst_flat:.2e}, near-pole error {pole_err:.2e}"),
    )
}

/// Rate `log(e_k / e_{k+1}) / log(s_k / s_{k+1})`, minimized over the sequence.
fn min_rate(errs: &[f64], sines: &[f64]) -> f64 {
    errs.windows(2)
        .zip(sines.windows(2))
        .map(|(e, s)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .fold(f64::INFINITY, f64::min)
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn decays_like_sine(errs: &[f64], sines: &[f64]) -> bool {
    errs.iter().all(|e| *e <= 1e-12) || min_rate(errs, sines) >= 0.9
}

fn jacobian_check() -> Outcome {
    let start = Instant::now();
    let p = tilted();
    let v = gauge_v(&p);
    let mut fails = Vec::new();
    let mut worst_fd: f64 = 0.0;
    for theta in [0.1, 0.3, 0.6] {
        match three_point_jacobian(&p, &v, theta) {
            Ok(r) => {
                worst_fd = worst_fd.max(r.max_abs_diff);
                check(r.max_abs_diff <= 1e-6, format!("theta={theta}: FD diff {:.3e}", r.max_abs_diff), &mut fails);
            }
            Err(e) => fails.push(format!("theta={theta}: {e}")),
        }
    }
    let thetas = [0.1, 0.05, 0.025];
    let sines: Vec<f64> = thetas.iter().map(|t: &f64| t.sin()).collect();
    let reps: Vec<_> = thetas.iter().filter_map(|&t| three_point_jacobian(&p, &v, t).ok()).collect();
    if reps.len() != thetas.len() {
        fails.push("small-angle reports failed".into());
        return outcome(fails, String::new());
    }
    let lead: Vec<f64> = reps.iter().map(|r| r.leading_form_err).collect();
    let corrected: Vec<f64> = reps.iter().map(|r| r.corrected_inverse_err).collect();
    let displayed: Vec<f64> = reps.iter().map(|r| r.inverse_err).collect();
    check(decays_like_sine(&lead, &sines), format!("leading form errors {}", sci(&lead)), &mut fails);
    check(decays_like_sine(&corrected, &sines), format!("corrected inverse errors {}", sci(&corrected)), &mut fails);
    check(
        decays_like_sine(&displayed, &sines),
        format!("displayed inverse errors {} do not decay (rate {:.2})", sci(&displayed), min_rate(&displayed, &sines)),
        &mut fails,
    );
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("{secs:.2}s"), &mut fails);
    outcome(fails, format!("FD diff {worst_fd:.2e}, leading form {:.2e}, corrected inverse {:.2e}", lead[0], corrected[0]))
}

fn counterexample_chain() -> Outcome {
    let start = Instant::now();
    let mut fails = Vec::new();
    let params = CounterexampleParams::new(4.0, 0.05, (SQRT_2 + 1.0) * 5.0).unwrap();
    let eps2 = 0.05 * 0.05;
    let report = match verify_counterexample(&params, &VerifyOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            fails.push(format!("verification: {e}"));
            return outcome(fails, String::new());
        }
    };
    let lower = 2.0 * PI * 0.81 * eps2 * 0.95;
    let upper = 2.0 * PI * eps2 / 5f64.ln() + 1e-4;
    check(report.excess_flat >= lower, format!("flat excess {:.6e} < {lower:.6e}", report.excess_flat), &mut fails);
    check(
        report.excess_competitor <= upper,
        format!("competitor excess {:.6e} > {upper:.6e}", report.excess_competitor),
        &mut fails,
    );
    let margin = report.excess_flat - report.plateau.excess;
    check(margin >= 1e-3, format!("plateau margin {margin:.3e}"), &mut fails);
    check(report.verdict == Verdict::Certified, format!("verdict {}", report.verdict), &mut fails);
    let half = CounterexampleParams::new(4.0, 0.025, (SQRT_2 + 1.0) * 5.0).unwrap();
    let ratio_flat = report.excess_flat / quarter_disk_area(&half).unwrap().excess;
    let ratio_comp = report.excess_competitor / competitor_area(&half).unwrap().excess;
    for (name, r) in [("flat", ratio_flat), ("competitor", ratio_comp)] {
        check((3.8..=4.2).contains(&r), format!("{name} scaling ratio {r:.4}"), &mut fails);
    }
    // Root of ln(1 + r) = 100/81.
    let oracle = (100.0f64 / 81.0).exp() - 1.0;
    let rstar = crossover_threshold();
    check((rstar - oracle).abs() <= 1e-5, format!("crossover {rstar:.7} vs {oracle:.7}"), &mut fails);
    let secs = start.elapsed().as_secs_f64();
    check(secs < 300.0, format!("{secs:.1}s"), &mut fails);
    outcome(
        fails,
        format!(
            "flat {:.6}, competitor {:.6}, plateau {:.6}, ratios {ratio_flat:.3}/{ratio_comp:.3}, r* {rstar:.6}",
            report.excess_flat, report.excess_competitor, report.plateau.excess
        ),
    )
}

fn area_growth() -> Outcome {
    let start = Instant::now();
    let mut fails = Vec::new();
    let f = MetricField::schwarzschild(0.1).unwrap();
    let spec = TargetSpec::point_plane(Vec3::z(), [Vec3::x(), Vec3::y()]).unwrap();
    let rows = match asymptotic_sweep(&f, &spec, &[5.0, 10.0, 20.0, 40.0], &grid(64, 128), &TargetOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            fails.push(e.to_string());
            return outcome(fails, String::new());
        }
    };
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    for r in &ratios {
        check((0.9..=1.1).contains(r), format!("ratio {r:.6} outside [0.9, 1.1]"), &mut fails);
    }
    for w in ratios.windows(2) {
        check((w[1] - 1.0).abs() <= (w[0] - 1.0).abs(), format!("deviation grew: {ratios:.6?}"), &mut fails);
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 600.0, format!("{secs:.1}s"), &mut fails);
    outcome(fails, format!("ratios {ratios:.6?}"))
}

fn rectification() -> Outcome {
    let p = tilted();
    let s1 = MetricField::schwarzschild(0.1).unwrap();
    let s2 = MetricField::schwarzschild(0.2).unwrap();
    let c95 = MetricField::conical(0.95).unwrap();
    let c90 = MetricField::conical(0.9).unwrap();
    let cases = [
        (&s1, -0.6),
        (&s1, 0.2),
        (&s1, 0.5),
        (&s1, 0.8),
        (&s2, 0.4),
        (&c95, -0.3),
        (&c95, 0.2),
        (&c95, 0.6),
        (&c90, 0.3),
        (&c90, 0.6),
    ];
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for (f, t) in cases {
        let mut defects = Vec::new();
        for (nr, nt) in [(32, 64), (64, 128)] {
            let res = solve_disk(f, &FrameParams::with_gauge(p, t).unwrap(), &grid(nr, nt), &SolveOptions::default())
                .and_then(|sol| {
                    let y = boundary_conformalizing_diffeo(&sol, &RectifyOptions::default())?;
                    Ok((conformal_defect(&sol, &y)?, y))
                });
            match res {
                Ok((d, y)) => {
                    let tag = format!("{} t={t} nr={nr}", f.label());
                    check(y.min_jacobian() > 0.0, format!("{tag}: min Jacobian {:.3e}", y.min_jacobian()), &mut fails);
                    check(
                        y.boundary_identity_error() == 0.0,
                        format!("{tag}: boundary error {:.3e}", y.boundary_identity_error()),
                        &mut fails,
                    );
                    defects.push(d);
                }
                Err(e) => fails.push(format!("{} t={t} nr={nr}: {e}", f.label())),
            }
        }
        if let [coarse, fine] = defects[..] {
            worst = worst.max(fine);
            check(fine < 1e-6, format!("{} t={t}: defect {fine:.3e}", f.label()), &mut fails);
            check(fine < coarse, format!("{} t={t}: defect {coarse:.3e} -> {fine:.3e}", f.label()), &mut fails);
        }
    }
    outcome(fails, format!("max defect at nr=64 {worst:.2e}"))
}

fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return q.map(|x| x / n);
        }
    }
}

fn cut_locus_margin() -> Outcome {
    let mut fails = Vec::new();
    let g = grid(32, 64);
    let f = MetricField::euclidean();
    let mut min_trace = f64::INFINITY;
    for p in [Vec3::z(), tilted(), Vec3::new(-0.6, 0.7, 0.2).normalize()] {
        let v = gauge_v(&p);
        match continuation_sweep(&f, &p, &v, -0.89, 0.89, &g, &StepControls::uniform(0.05), &SolveOptions::default()) {
            Ok(sols) => {
                for sol in &sols {
                    match boundary_traces(sol) {
                        Ok(tr) => min_trace = tr.into_iter().fold(min_trace, f64::min),
                        Err(e) => fails.push(format!("t={}: {e}", sol.params.t)),
                    }
                }
            }
            Err(e) => fails.push(format!("sweep: {e}")),
        }
    }
    check(min_trace > -0.9, format!("min boundary trace {min_trace:.6}"), &mut fails);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = random_unit_quaternion(&mut rng);
        let r = quaternion_to_rotation(q[0], q[1], q[2], q[3]).unwrap();
        let neg = quaternion_to_rotation(-q[0], -q[1], -q[2], -q[3]).unwrap();
        let uq = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
        let back = rotation_to_quaternion(&r);
        let back_r = quaternion_to_rotation(back[0], back[1], back[2], back[3]).unwrap();
        let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
        let angle = uq.angle();
        let rot = Rotation3::from_matrix_unchecked(r);
        let nu = rot * Vec3::x();
        let h = rot * Vec3::y();
        let tr = trace_invariant(&nu, &h).unwrap();
        let errs = [
            orth,
            (r.determinant() - 1.0).abs(),
            (r - neg).abs().max(),
            (r - uq.to_rotation_matrix().into_inner()).abs().max(),
            (back_r - r).abs().max(),
            (r.trace() - (1.0 + 2.0 * angle.cos())).abs(),
            (tr - r.trace()).abs(),
        ];
        worst = errs.into_iter().fold(worst, f64::max);
    }
    check(worst <= 1e-12, format!("quaternion identity error {worst:.3e}"), &mut fails);
    outcome(fails, format!("min boundary trace {min_trace:.6}, identity error {worst:.2e}"))
}

fn discretization_audit() -> Outcome {
    let mut fails = Vec::new();
    let mut orders = Vec::new();
    let params = FrameParams::with_gauge(tilted(), 0.3).unwrap();
    for f in [MetricField::schwarzschild(0.1).unwrap(), MetricField::conical(0.95).unwrap()] {
        match convergence_order(&f, &params, 16, 32, &SolveOptions::default()) {
            Ok(a) => {
                check((1.5..=2.5).contains(&a.order), format!("{}: order {:.3}", f.label(), a.order), &mut fails);
                orders.push(format!("{}={:.3}", f.label(), a.order));
            }
            Err(e) => fails.push(format!("{}: {e}", f.label())),
        }
    }
    let cp = CounterexampleParams::with_default_radius(4.0, 0.05).unwrap();
    let levels: Vec<(f64, f64)> = [64, 128, 256].iter().map(|&n| excess_trapezoid(&cp, n)).collect();
    let flat = observed_order(levels[0].0, levels[1].0, levels[2].0);
    let comp = observed_order(levels[0].1, levels[1].1, levels[2].1);
    check(flat >= 1.5, format!("flat excess order {flat:.3}"), &mut fails);
    check(comp >= 1.5, format!("competitor excess order {comp:.3}"), &mut fails);
    outcome(fails, format!("area orders {}, excess orders {flat:.3}/{comp:.3}", orders.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("euclidean exactness", euclidean_exactness),
        ("foliation", foliation),
        ("point-plane targeting", point_plane_targeting),
        ("three-point targeting", three_point_targeting),
        ("three-point jacobian", jacobian_check),
        ("counterexample chain", counterexample_chain),
        ("quadratic area growth", area_growth),
        ("rectification", rectification),
        ("cut-locus margin", cut_locus_margin),
        ("discretization audit", discretization_audit),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {:>2} {name} ({secs:.1}s): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
