//! Prestrained thin-film elasticity.
//!
//! A thin plate `Ω × (−h/2, h/2)` carries a growth tensor
//! `A^h = I + h^γ S + h^{γ/2} x₃ B`. This crate evaluates and minimizes the
//! three-dimensional non-Euclidean elastic energy, builds the recovery
//! sequence associated with an out-of-plane displacement, evaluates and
//! minimizes the limiting bending functional, and checks the energy scaling
//! `E^h ~ h^{γ+2}` numerically.

pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
pub mod harness;
pub mod limit2d;
pub mod material;
pub mod optimize;
pub mod plate3d;
pub mod prestrain;
pub mod recovery;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{AnalyticScalar, PlanarMatrixField};
pub use grid::{PlanarGrid, PlateGrid};
pub use limit2d::{LimitFunctional, LimitMinimum, LimitSolverOptions};
pub use material::{EnergyDensity, IsotropicModuli};
pub use optimize::{LbfgsOptions, Termination};
pub use plate3d::{Deformation3D, PlateEnergy};
pub use prestrain::{PrestrainSpec, Rect};
pub use scalar::{GridScalar, ScalarField2D};
