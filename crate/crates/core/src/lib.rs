//! Forward model and measurement pipeline for coherent photon routing
//! through an emitter-coupled whispering-gallery-mode resonator.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure
//! functions over immutable value types and safe to call from any number
//! of threads. IO, file formats and the command-line front end live in
//! the companion `routerkit` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod broadening;
pub mod coupling;
pub mod fit;
pub mod merit;
pub mod models;
pub mod params;
pub mod scan;
pub mod scattering;
pub mod spectrum;
pub mod stats;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use params::{CavityParams, Drive, EmitterParams, SystemParams, TWO_PI};
pub use spectrum::{ComplexSpectrum, RealSpectrum};
