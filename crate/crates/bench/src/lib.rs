//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use mindisk::disk_pde::DiskGrid;
use mindisk::family::FrameParams;
use mindisk::{MetricField, Vec3};

pub fn grid(nr: usize, ntheta: usize) -> Arc<DiskGrid> {
    DiskGrid::new(nr, ntheta).expect("valid grid")
}

pub fn metrics() -> Vec<(&'static str, MetricField)> {
    vec![
        ("euclidean", MetricField::euclidean()),
        ("schwarzschild", MetricField::schwarzschild(0.1).expect("mass")),
        ("conical", MetricField::conical(0.95).expect("alpha")),
    ]
}

/// A tilted member at height `t` in the standard gauge.
pub fn tilted(t: f64) -> FrameParams {
    FrameParams::with_gauge(Vec3::new(0.3, -0.2, 0.9).normalize(), t).expect("frame")
}
