//! Driver for single simulations and sparse-grid ensembles, and the writers
//! for their VTK, CSV and JSON artifacts.

pub mod aggregate;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod single;
pub mod tracked;

pub use config::{RunConfig, UqConfig};
pub use ensemble::{run_uq, Manifest, Model, SimulationModel, UqOptions};
pub use error::CliError;
pub use single::run_single;
