//! Few-excitation physics of a one-dimensional chain of two-level atoms
//! coupled to a common radiation reservoir.
//!
//! All rates and energies are in units of the bare decay rate `gamma0`;
//! times are in units of `1/gamma0`. Energies are offsets from the bare
//! transition frequency (`omega0` per excitation), which is assumed much
//! larger than every rate.

pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod model;
pub mod momentum;
pub mod oracle;
pub mod pumped;

pub use error::{Error, Result};
