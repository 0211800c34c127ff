//! File formats, run configuration, SVG plotting and the `iqtomo`
//! command-line front end on top of [`iqtomo_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod repro;
pub mod svg;

pub use error::{Error, Result};
