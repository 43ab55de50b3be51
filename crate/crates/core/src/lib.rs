//! Mode solvers and cavity figures of merit for GaP-on-diamond photonics.
//!
//! * [`slab`]: guided modes of planar stacks and the diamond/GaP field ratio.
//! * [`modes2d`]: semivectorial finite-difference modes of ridge cross-sections.
//! * [`fitting`]: propagation-loss and air-gap least-squares fits.
//! * [`cavity`]: loss-limited Q, mode volume, coupling rate and Purcell factors.
//! * [`scenario`] and [`cli`]: TOML scenario files and the `gapnv` command.
//!
//! Internally every length is in meters and every loss in 1/m. Nanometers,
//! micrometers and dB/cm appear only in scenario files, CSV and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod cli;
pub mod emitter;
pub mod error;
pub mod fitting;
pub mod modes2d;
pub mod quad;
pub mod scenario;
pub mod slab;
pub mod stack;
pub mod svg;
pub mod units;

pub use emitter::NVEmitter;
pub use error::{Error, Result};
pub use stack::{normalize_stack, Layer, LayerStack, MembraneStack, Polarization};
