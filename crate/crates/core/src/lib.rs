//! Simulation and estimation toolkit for single-molecule magnetic resonance
//! with a continuously driven NV center.
//!
//! Units throughout: frequencies in kHz (ordinary, not angular), times in
//! ms, fields in Gauss, lengths in nm.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod inversion;
pub mod model;
pub mod protocols;
pub mod spin;

pub use dynamics::{SignalTrace, Trajectory};
pub use error::{Error, Result};
pub use model::{FieldConfig, LindbladModel};
pub use protocols::{DirectionMap, ResonanceScan};
pub use spin::{expectation, spin_operators, CompositeSpace, Operator, Spin, SpinSite, State};
