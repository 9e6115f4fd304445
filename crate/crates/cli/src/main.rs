use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{CliError, Settings};

#[derive(Parser, Debug)]
#[command(name = "mindisk", version, about = "Minimal disk families in mean-convex balls")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// euclidean, schwarzschild, conformal_bump or conical.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Schwarzschild mass.
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Cone factor of the conical metric.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Bump radius (conformal_bump, counterexample).
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Bump height (conformal_bump, counterexample).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Work in B(R) rescaled to the unit ball.
    #[arg(long, global = true)]
    pub ball_radius: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub nr: Option<usize>,
    #[arg(long, global = true)]
    pub ntheta: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// INI-style `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one member D(p, v, t) and write solution.csv, nodes.csv, newton.csv, disk.obj.
    Solve(DiskArgs),
    /// Continuation sweep in t; writes sweep.csv.
    Sweep(SweepArgs),
    /// Disk through a point with a prescribed tangent plane.
    Target(TargetArgs),
    /// Disk through three points.
    ThreePoints(ThreePointArgs),
    /// Area ratios of targeted disks in growing balls.
    Asymptotic(AsymptoticArgs),
    /// Bumpy-metric counterexample report.
    Counterexample(CounterexampleArgs),
    /// Degenerate three-point Jacobian checks.
    VerifyJacobian(JacobianArgs),
    /// Boundary-conformalizing diffeomorphism of a solved disk.
    Rectify(DiskArgs),
    /// Rebuild disk.obj from a directory written by `solve`.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
pub struct DiskArgs {
    /// Axis p as x,y,z (normalized).
    #[arg(long)]
    pub p: Option<String>,
    /// In-plane direction v as x,y,z; defaults to the standard gauge.
    #[arg(long)]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_to: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TargetArgs {
    /// Target point x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Two spanning vectors a1,a2,a3,b1,b2,b3.
    #[arg(long, allow_hyphen_values = true)]
    pub plane: Option<String>,
}

#[derive(Args, Debug)]
pub struct ThreePointArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q3: Option<String>,
}

#[derive(Args, Debug)]
pub struct AsymptoticArgs {
    /// Target point in B(R), x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub plane: Option<String>,
    /// Comma-separated ball radii.
    #[arg(long)]
    pub radii: Option<String>,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    /// Ambient radius R; defaults to (sqrt 2 + 1)(1 + r).
    #[arg(long)]
    pub big_r: Option<f64>,
    #[arg(long)]
    pub plateau_nr: Option<usize>,
    #[arg(long)]
    pub plateau_ntheta: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Args, Debug)]
pub struct JacobianArgs {
    /// Comma-separated angles in (0, pi/2).
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Directory holding solution.csv and nodes.csv.
    #[arg(long)]
    pub from: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve(_) => "solve",
            Self::Sweep(_) => "sweep",
            Self::Target(_) => "target",
            Self::ThreePoints(_) => "three-points",
            Self::Asymptotic(_) => "asymptotic",
            Self::Counterexample(_) => "counterexample",
            Self::VerifyJacobian(_) => "verify-jacobian",
            Self::Rectify(_) => "rectify",
            Self::Export(_) => "export",
        }
    }
}

fn usage(command: &str) -> String {
    let mut root = Cli::command();
    root.build();
    match root.find_subcommand_mut(command) {
        Some(sub) => sub.render_usage().to_string(),
        None => root.render_usage().to_string(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let settings = Settings::load(&cli.global, &Cli::command(), name)?;
    match &cli.command {
        Command::Solve(a) => commands::solve(&settings, a),
        Command::Sweep(a) => commands::sweep(&settings, a),
        Command::Target(a) => commands::target(&settings, a),
        Command::ThreePoints(a) => commands::three_points(&settings, a),
        Command::Asymptotic(a) => commands::asymptotic(&settings, a),
        Command::Counterexample(a) => commands::counterexample(&settings, a),
        Command::VerifyJacobian(a) => commands::verify_jacobian(&settings, a),
        Command::Rectify(a) => commands::rectify(&settings, a),
        Command::Export(a) => commands::export(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 1 {
                eprintln!("{}", usage(name));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
