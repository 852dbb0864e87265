//! Non-intrusive uncertainty quantification with polynomial chaos.
//!
//! Nested 1D rules are combined into isotropic Smolyak sparse grids. Model
//! outputs sampled at the grid nodes are projected onto an orthonormal
//! Legendre basis with the combination technique applied to the projection
//! operator, so every basis element in the index set is recovered exactly.
//! Moments, covariances and Sobol indices follow from the modes.

pub mod basis;
pub mod error;
mod gp_tables;
pub mod grid;
pub mod pce;
pub mod quadrature;
pub mod sobol;
pub mod space;
pub mod surrogate;

pub use basis::{basis_eval, MultiIndex};
pub use error::UqError;
pub use grid::{build_sparse_grid, SparseGrid};
pub use pce::{correlation, covariance, psp_project, IndexSet, PCExpansion, Projector};
pub use quadrature::{quad_rule_1d, Rule1d, RuleKind};
pub use sobol::{sobol_indices, SobolIndices, SobolReport};
pub use space::{ParameterSpace, UniformParameter};
pub use surrogate::{pdf_estimate, sample_moments, sample_surrogate, surrogate_eval, Histogram, SampleMoments};
