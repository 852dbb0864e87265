//! Coupled single-phase flow, heat transport and mineral precipitation/dissolution
//! in fractured porous media.
//!
//! Fractures are represented as one-dimensional objects embedded in a conforming
//! two-dimensional triangulation. The flow problem is discretised with lowest-order
//! Raviart-Thomas/P0 mixed elements; heat and solute transport use an upwind
//! finite-volume scheme with two-point diffusive fluxes. The [`stepper`] module
//! glues the stages together with a non-iterative operator splitting.

pub mod chemistry;
pub mod darcy;
pub mod error;
pub mod fv;
pub mod heat;
pub mod linsolve;
pub mod mesh;
pub mod params;
pub mod stepper;
pub mod transport;

pub use error::{MeshError, SimError};
pub use mesh::{GeometryCache, MixedMesh};
pub use params::PhysicalParams;
