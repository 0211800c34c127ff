//! Numerical core for qubit state tomography driven by I-Q readout data.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, plotting and the
//! command line live in the `iqtomo` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod math;
pub mod qcore;

pub use error::{Error, Result};
pub mod discriminate;
pub mod readout;
pub mod rng;
pub mod qst;
pub mod qhi;
