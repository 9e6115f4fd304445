//! The graph equation for a minimal disk over a polar grid: nodal residual,
//! its linearization, the near-pole seed and a damped Newton solver.

pub mod audit;
pub mod banded;
pub mod grid;
pub mod newton;
pub mod operator;


pub use audit::{convergence_order, ConvergenceAudit};
pub use banded::BandMatrix;
pub use grid::{DiskGrid, GraphFunction, NodeJet};
pub use newton::{newton_solve, IterationRecord, NewtonOptions, NewtonReport};
pub use operator::{
    graph_operator, initial_height_coefficient, linearization_coefficients,
    linearized_constant_operator, residual,
};
