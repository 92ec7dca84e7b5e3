//! Brute-force checks of the analytic results: exact diagonalisation of the
//! relative-coordinate problem, eigenpair residuals, fixed-step integration
//! of the rate equations and a verification suite bundling all of them.

mod integrate;
mod relative;
mod verify;

pub use integrate::{integrate_pumped, integrate_spontaneous, PumpedTrajectory, Trajectory, MAX_STEP};
pub use relative::{
    complex_residual, detached, detached_energy, diagonalize_relative, residual, Eigenpair, TridiagonalProblem, MIN_DIMENSION,
};
pub use verify::{run_all, Check};
