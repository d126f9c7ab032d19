//! From measured spectra to physical parameters.

mod dips;
mod geometry;

pub use dips::{find_dips, find_dips_with, median, pair_deepest, Dip, DipOptions};
pub use geometry::{invert_pair_geometry, NineDeltas, PairDirection, PairGeometry};

pub use crate::model::distance_from_g;
