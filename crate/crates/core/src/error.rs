//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("no bound state for K index {k_cm} (|t_K| = {hopping:.6e} >= U = {u:.6e})")]
    BoundStateAbsent { k_cm: i64, hopping: f64, u: f64 },
    #[error("wavenumber {requested:.6} (units 1/a) is off the grid; nearest grid value is {nearest:.6} (index {index})")]
    OffGrid { requested: f64, nearest: f64, index: i64 },
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("time step {0} exceeds the limit 0.01/gamma0")]
    StepTooLarge(f64),
    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
