//! Event-driven simulation of one-dimensional self-gravitating sheet models
//! in comoving coordinates, with a multifractal analysis toolkit.

pub mod cli;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod icgen;
pub mod io;
pub mod mfractal;
pub mod model;

pub use error::{EngineFault, Error, FaultKind, Result};
pub use model::{jeans_scales, preset, preset_by_name, rank_field, ModelKind, ModelParams, Snapshot};
