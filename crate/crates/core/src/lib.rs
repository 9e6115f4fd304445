//! Minimal disk families in mean-convex Riemannian balls: the graph equation on a
//! polar grid, the parallel-circle family, targeting, rectification of the
//! boundary and the bumpy-metric counterexample.

pub mod counterexample;
pub mod disk_pde;
pub mod error;
pub mod family;
pub mod geometry;
pub mod metric;
pub mod quadrature;

pub use error::{Error, Result};
pub use metric::{ChartMetric, MetricField, Sym3, Vec3};
