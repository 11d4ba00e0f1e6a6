pub mod deflection;
pub mod dynamics;
pub mod error;
pub mod forces;
pub mod grid;
pub mod limits;
pub mod linalg;
pub mod params;
pub mod permittivity;
pub mod plate;
pub mod potential;
pub mod steady;

pub use deflection::DeflectionField;
pub use error::{Error, Result};
pub use grid::Grid;
pub use params::{LinearBackend, ModelParams, ObstacleMode};
pub use permittivity::{PermittivityProfile, ProfileFamily};
