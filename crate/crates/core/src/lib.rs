//! Phase-field relaxation of the Faber-Krahn problem on a ball.
//!
//! The crate computes principal eigenvalues of `-Laplace + b^eps(phi)` with
//! Dirichlet data, evaluates and minimizes the Ginzburg-Landau regularized
//! objective `lambda_1 + gamma E^eps(phi)` over mass-constrained phase
//! fields, provides discrete symmetric-decreasing rearrangements with checks
//! of the classical rearrangement inequalities, and compares diffuse
//! solutions with their sharp-interface limits.

pub mod coefficient;
pub mod eigen;
pub mod error;
pub mod fields;
pub mod grid;
pub mod objective;
pub mod optimize;
pub mod potential;
pub mod profile;
pub mod rearrange;
pub mod shape;
pub mod stencil;

pub use coefficient::CoefficientFamily;
pub use eigen::{EigenPair, OperatorHandle};
pub use error::{Error, Result};
pub use grid::{BallDomain, CartesianGrid, Grid, PhaseField, RadialGrid, ScalarField};
pub use potential::Potential;
pub use shape::SharpShape;
