//! Block diagonalization of matrix-valued phase-space Hamiltonians to second order in ℏ,
//! with Berry connections, curvatures and corrected ray dynamics.

pub mod covariant;
pub mod diagonalizer;
pub mod dynamics;
pub mod error;
pub mod fd;
pub mod field;
pub mod linalg;
pub mod models;
pub mod moyal;
pub mod oracles;
pub mod verify;
pub mod weyl;

pub use diagonalizer::{BandFrame, ConnectionSet, EnergyForm, EnergyReport, PointData, Tolerances};
pub use dynamics::{Method, Trajectory, TrajectoryState};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use linalg::CMat;
pub use models::{ModelConfig, ModelSpec, PhasePoint};
pub use weyl::{OrderedFactorization, WeylExpr};
