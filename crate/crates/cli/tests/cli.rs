use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mindisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindisk")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    mindisk(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV file as maps from header to cell.
fn csv(path: &Path) -> Vec<Vec<(String, String)>> {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

fn cell(row: &[(String, String)], key: &str) -> f64 {
    row.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

fn text(row: &[(String, String)], key: &str) -> String {
    row.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

#[test]
fn solve_writes_solution_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["solve", "--metric", "euclidean", "--p", "0,0,1", "--t", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv(&dir.path().join("solution.csv"));
    assert!((cell(&rows[0], "area") - 2.356194).abs() < 1e-6);
    assert_eq!(text(&rows[0], "embedded"), "true");
    let obj = fs::read_to_string(dir.path().join("disk.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 1 + 64 * 128);
    assert_eq!(csv(&dir.path().join("nodes.csv")).len(), 1 + 64 * 128);
    assert!(dir.path().join("newton.csv").exists());
}

#[test]
fn seventeen_digit_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["solve", "--t", "0.3", "--nr", "8", "--ntheta", "16"]);
    assert_eq!(code(&o), 0);
    let rows = csv(&dir.path().join("solution.csv"));
    let t = text(&rows[0], "t");
    let mantissa = t.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{t}");
}

#[test]
fn missing_t_is_a_usage_error() {
    let o = mindisk(&["solve", "--metric", "euclidean"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("--t") && err.contains("Usage"), "{err}");
}

#[test]
fn bump_solve_near_the_pole() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["solve", "--metric", "conformal_bump", "--r", "4", "--eps", "0.05", "--t", "0.97", "--nr", "16", "--ntheta", "32"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn counterexample_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["counterexample", "--r", "4", "--eps", "0.05"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv(&dir.path().join("counterexample.csv"));
    assert_eq!(text(&rows[0], "verdict"), "certified");
    assert!(cell(&rows[0], "plateau_area_excess") < cell(&rows[0], "excess_flat"));
}

#[test]
fn counterexample_below_crossover_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["counterexample", "--r", "1", "--plateau-nr", "40", "--plateau-ntheta", "32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(text(&csv(&dir.path().join("counterexample.csv"))[0], "verdict"), "inconclusive");
}

#[test]
fn jacobian_row_matches_differences() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["verify-jacobian", "--theta", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv(&dir.path().join("jacobian.csv"));
    assert_eq!(rows.len(), 1);
    assert!(cell(&rows[0], "max_abs_diff") <= 1e-6);
    assert_eq!(mindisk(&["verify-jacobian", "--theta", "2.0"]).status.code(), Some(1));
}

#[test]
fn euclidean_target_recovers_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["target", "--metric", "euclidean", "--q", "0.2,0.1,0.3", "--plane", "1,0,0,0,1,0", "--nr", "16", "--ntheta", "32"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &csv(&dir.path().join("target.csv"))[0];
    assert_eq!(text(r, "status"), "ok");
    let (p3, t) = (cell(r, "p3"), cell(r, "t"));
    assert!((p3.abs() - 1.0).abs() < 1e-9);
    assert!((p3.signum() * t - 0.3).abs() < 1e-9);
}

#[test]
fn three_points_and_collinear_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["three-points", "--q1", "0.3,0,0.2", "--q2", "0,0.4,0.25", "--q3", "-0.2,-0.1,0.3", "--nr", "16", "--ntheta", "32"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv(&dir.path().join("locations.csv")).len(), 3);
    let o = run_in(dir.path(), &["three-points", "--q1", "0.1,0,0", "--q2", "0.2,0,0", "--q3", "0.3,0,0"]);
    assert_eq!(code(&o), 2);
    assert_eq!(text(&csv(&dir.path().join("target.csv"))[0], "status"), "failed");
}

#[test]
fn asymptotic_ratios_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["asymptotic", "--metric", "schwarzschild", "--radii", "5,10", "--nr", "16", "--ntheta", "32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv(&dir.path().join("asymptotic.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((0.9..=1.1).contains(&cell(r, "ratio")));
    }
}

#[test]
fn sweep_and_rectify_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["sweep", "--metric", "schwarzschild", "--nr", "16", "--ntheta", "32", "--dt", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv(&dir.path().join("sweep.csv"));
    assert_eq!(cell(rows.last().unwrap(), "t"), 0.99);
    assert!(rows[1..].iter().all(|r| cell(r, "min_gap") > 0.0));
    let o = run_in(dir.path(), &["rectify", "--metric", "schwarzschild", "--t", "0.5", "--nr", "16", "--ntheta", "32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = &csv(&dir.path().join("rectify_summary.csv"))[0];
    assert!(cell(s, "min_jacobian") > 0.0);
    assert_eq!(cell(s, "boundary_identity_error"), 0.0);
}

#[test]
fn export_rebuilds_the_same_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["solve", "--metric", "schwarzschild", "--t", "0.4", "--nr", "12", "--ntheta", "24"];
    assert_eq!(code(&run_in(&a, &args)), 0);
    let o = run_in(&b, &["export", "--metric", "schwarzschild", "--from", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(a.join("disk.obj")).unwrap(), fs::read(b.join("disk.obj")).unwrap());
    assert_eq!(code(&mindisk(&["export", "--from", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    fs::write(&ini, "# solve setup\nmetric = euclidean\nnr = 8\nntheta = 16\nt = 0.6\n").unwrap();
    let out = dir.path().join("o");
    let o = run_in(&out, &["solve", "--config", ini.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &csv(&out.join("solution.csv"))[0];
    assert_eq!(cell(r, "t"), 0.6);
    assert_eq!(cell(r, "nr"), 8.0);
    let o = run_in(&out, &["solve", "--config", ini.to_str().unwrap(), "--t", "0.2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(cell(&csv(&out.join("solution.csv"))[0], "t"), 0.2);

    fs::write(&ini, "t = 0.5\nwobble = 3\n").unwrap();
    let o = mindisk(&["solve", "--config", ini.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("wobble"));
    fs::write(&ini, "t = half\n").unwrap();
    assert_eq!(code(&mindisk(&["solve", "--config", ini.to_str().unwrap()])), 1);
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let runs = [dir.path().join("1"), dir.path().join("2")];
    for d in &runs {
        let o = run_in(d, &["sweep", "--metric", "conical", "--nr", "12", "--ntheta", "24", "--seed", "7"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = run_in(
            d,
            &["counterexample", "--plateau-nr", "60", "--plateau-ntheta", "48", "--max-iter", "50", "--seed", "7"],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["sweep.csv", "counterexample.csv"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&mindisk(&["--help"])), 0);
    assert_eq!(code(&mindisk(&["frobnicate"])), 1);
    assert_eq!(code(&mindisk(&["solve", "--t", "0.5", "--metric", "klein"])), 1);
    assert_eq!(code(&mindisk(&["solve", "--t", "1.5"])), 1);
    assert_eq!(code(&mindisk(&["solve", "--t", "0.5", "--nr", "2"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["solve", "--metric", "schwarzschild", "--t", "0.5", "--tol", "1e-30", "--nr", "12", "--ntheta", "24"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no convergence"));
}
