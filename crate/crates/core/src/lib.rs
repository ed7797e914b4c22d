//! Numerical toolkit for the finite-dimensional reduction of the Nirenberg
//! problem on the half-sphere `S^n_+`.

pub mod bubbles;
pub mod constants;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod predictor;
pub mod quadrature;
pub mod sampling;
pub mod verify;
pub mod vortex;

pub use bubbles::{BubbleParam, InteractionMatrix};
pub use constants::ConstantsTable;
pub use curvature::{CriticalPointRecord, CurvatureField, PointKind};
pub use error::{Error, Result};
pub use geometry::{SpherePoint, TangentVector};
pub use predictor::{BlowupScenario, Prediction, ResidualReport};
pub use vortex::{KirchhoffRouth, VortexConfiguration};
