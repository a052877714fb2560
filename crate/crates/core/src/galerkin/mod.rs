//! Spectral Galerkin approximation on the unit box.

pub mod basis;
pub mod solver;
pub mod system;

pub use basis::{
    evaluate_lattice, evaluate_lattice_hessian, uniform_axis, BasisTables, EigenBasis, LatticeField,
};
pub use solver::{
    build_system, evaluate, project_initial, solve, solve_system, step_implicit, SolveFailure,
    SolverConfig, SpectralState, StepRecord, Trajectory,
};
pub use system::{Forcing, GalerkinSystem, TimeLevel};
