//! Obstacle-constrained minimization of the bending energy among closed
//! spherical curves of length `2 pi` written as graphs over the equator.

mod band;
pub mod diagnostics;
pub mod graph;
pub mod solver;
pub mod sweep;

pub use diagnostics::{
    diagnostics, estimate_multiplier, fit_multiplier, write_profile_csv, LiftInterval, SolveReport,
};
pub use graph::{discrete_energy, evaluate, EnergyEval, GraphCurve};
pub use solver::{bump_init, minimize, Init, Solution, SolverConfig};
pub use sweep::{sweep_epsilon, SweepRow, SweepTable};
