//! The bumpy metric `g = (1 + psi)^2 g0`: area accounting for the flat quarter
//! disk against the logarithmic competitor, the crossover in `r`, and a
//! discrete graph Plateau descent.

pub mod plateau;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{bump_profile, sphere_mean_curvature_rotated, MetricField, Vec3};
use crate::quadrature::{adaptive_simpson, trapezoid};

pub use plateau::{plateau_excess, plateau_graph_minimize, PlateauResult, QuarterGrid};

const QUAD_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleParams {
    pub r: f64,
    pub eps: f64,
    pub big_r: f64,
}

impl CounterexampleParams {
    pub fn new(r: f64, eps: f64, big_r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("r = {r} must be positive")));
        }
        if !(0.0..=0.2).contains(&eps) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must lie in [0, 0.2]")));
        }
        if !(big_r >= min_radius(r) * (1.0 - 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "R = {big_r} is below (sqrt 2 + 1)(1 + r) = {}",
                min_radius(r)
            )));
        }
        Ok(Self { r, eps, big_r })
    }

    pub fn with_default_radius(r: f64, eps: f64) -> Result<Self> {
        Self::new(r, eps, min_radius(r))
    }

    /// Centre `(1 + r)(1, 1)` of the only bump meeting the quarter domain.
    pub fn bump_center(&self) -> [f64; 2] {
        [1.0 + self.r, 1.0 + self.r]
    }

    pub fn metric(&self) -> Result<MetricField> {
        if self.eps == 0.0 {
            return Ok(MetricField::euclidean());
        }
        MetricField::conformal_bump(self.r, self.eps)
    }

    pub fn quarter_area(&self) -> f64 {
        0.25 * PI * self.big_r * self.big_r
    }
}

/// `(sqrt 2 + 1)(1 + r)`.
pub fn min_radius(r: f64) -> f64 {
    (SQRT_2 + 1.0) * (1.0 + r)
}

/// The four-bump sum `psi` at `x`.
pub fn bump_psi(params: &CounterexampleParams, x: &Vec3) -> f64 {
    crate::metric::bump_psi(params.r, params.eps, x).0
}

/// `((1 + eps^2 phi(rho))^2 - 1) rho`, the radial excess density on `{z = 0}`.
fn flat_density(eps: f64, rho: f64) -> f64 {
    let e = eps * eps * bump_profile(rho);
    e * (2.0 + e) * rho
}

/// `sqrt(rho^2 + a^2) - rho` without cancellation.
fn competitor_density(a: f64, rho: f64) -> f64 {
    a * a / ((rho * rho + a * a).sqrt() + rho)
}

fn competitor_slope(params: &CounterexampleParams) -> f64 {
    params.eps / (1.0 + params.r).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaSplit {
    pub total: f64,
    pub excess: f64,
}

/// Area of `{z = 0}` in the quarter domain, split into `pi R^2/4` and the
/// excess over the bump footprint.
pub fn quarter_disk_area(params: &CounterexampleParams) -> Result<AreaSplit> {
    let eps = params.eps;
    let excess = 2.0 * PI * adaptive_simpson(|rho| flat_density(eps, rho), 0.0, 1.0, QUAD_TOL, 60)?;
    Ok(AreaSplit { total: params.quarter_area() + excess, excess })
}

/// Euclidean area of the graph of the logarithmic competitor over the quarter
/// domain.
pub fn competitor_area(params: &CounterexampleParams) -> Result<AreaSplit> {
    let a = competitor_slope(params);
    let excess = 2.0 * PI * adaptive_simpson(|rho| competitor_density(a, rho), 1.0, 1.0 + params.r, QUAD_TOL, 60)?;
    Ok(AreaSplit { total: params.quarter_area() + excess, excess })
}

/// Trapezoid versions of the two excesses on `n` panels, for grid audits.
pub fn excess_trapezoid(params: &CounterexampleParams, n: usize) -> (f64, f64) {
    let a = competitor_slope(params);
    let eps = params.eps;
    (
        2.0 * PI * trapezoid(|rho| flat_density(eps, rho), 0.0, 1.0, n),
        2.0 * PI * trapezoid(|rho| competitor_density(a, rho), 1.0, 1.0 + params.r, n),
    )
}

/// The competitor height: `eps` on `rho <= 1`, `-eps ln(rho/(1+r))/ln(1+r)` up
/// to `rho = 1 + r`, zero beyond, with `rho` the distance to the bump centre.
pub fn competitor_height(params: &CounterexampleParams, x: f64, y: f64) -> f64 {
    let c = params.bump_center();
    let rho = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
    if rho <= 1.0 {
        params.eps
    } else if rho < 1.0 + params.r {
        -params.eps * (rho / (1.0 + params.r)).ln() / (1.0 + params.r).ln()
    } else {
        0.0
    }
}

pub fn competitor_heights(params: &CounterexampleParams, grid: &QuarterGrid) -> Vec<f64> {
    grid.interpolate(|x, y| competitor_height(params, x, y))
}

/// Root `r*` of `ln(1 + r) = 100/81` by bisection; for `r > r*` the competitor
/// bound `2 pi/ln(1 + r)` drops below `2 pi (9/10)^2`.
pub fn crossover_threshold() -> f64 {
    let target = 100.0 / 81.0;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (1.0 + mid).ln() < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    /// `r <= r*`: the sufficient condition behind the argument does not hold.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub nr: usize,
    pub ntheta: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub sphere_samples: usize,
    pub sphere_radii: Vec<f64>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            nr: 240,
            ntheta: 192,
            max_iter: 1000,
            tol: 1e-9,
            sphere_samples: 4000,
            sphere_radii: vec![0.5, 1.0, 2.0, 5.0, 6.2, 7.07, 7.9, 10.0, 15.0],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub excess_flat: f64,
    pub excess_competitor: f64,
    pub plateau: PlateauResult,
    pub h1_min_mean_curv: f64,
    pub verdict: Verdict,
}

impl CounterexampleReport {
    pub const CSV_HEADER: &'static str =
        "r,eps,R,excess_flat,excess_competitor,plateau_area_excess,h1_min_mean_curv,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.params.r,
            self.params.eps,
            self.params.big_r,
            self.excess_flat,
            self.excess_competitor,
            self.plateau.excess,
            self.h1_min_mean_curv,
            self.verdict
        )
    }
}

/// Minimum sampled mean curvature of the round spheres of the given radii,
/// each sampled on a Fibonacci lattice under a seeded random rotation.
pub fn sphere_check(field: &MetricField, radii: &[f64], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    radii
        .iter()
        .map(|&radius| {
            let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let angle = rng.gen_range(0.0..PI);
            let rot = Rotation3::new(axis.normalize() * angle).into_inner();
            sphere_mean_curvature_rotated(field, radius, samples, &rot)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sphere check, both excesses and the Plateau upper bound; all three
/// inequalities must hold strictly.
pub fn verify_counterexample(params: &CounterexampleParams, opts: &VerifyOptions) -> Result<CounterexampleReport> {
    let field = params.metric()?;
    let h1 = sphere_check(&field, &opts.sphere_radii, opts.sphere_samples, opts.seed);
    let flat = quarter_disk_area(params)?.excess;
    let comp = competitor_area(params)?.excess;
    let grid = QuarterGrid::new(params, opts.nr, opts.ntheta)?;
    let start = competitor_heights(params, &grid);
    let plateau = plateau_graph_minimize(params, &grid, &start, opts.max_iter, opts.tol)?;
    let verdict = if params.r > crossover_threshold() { Verdict::Certified } else { Verdict::Inconclusive };
    if verdict == Verdict::Certified {
        if !(h1 > 0.0) {
            return Err(Error::NotCertified { quantity: format!("sphere mean curvature {h1:.3e}") });
        }
        if !(comp < flat) {
            return Err(Error::NotCertified { quantity: format!("competitor excess {comp:.6e} >= {flat:.6e}") });
        }
        if !(plateau.excess < flat) {
            return Err(Error::NotCertified {
                quantity: format!("plateau excess {:.6e} >= {flat:.6e}", plateau.excess),
            });
        }
    }
    Ok(CounterexampleReport {
        params: *params,
        excess_flat: flat,
        excess_competitor: comp,
        plateau,
        h1_min_mean_curv: h1,
        verdict,
    })
}
