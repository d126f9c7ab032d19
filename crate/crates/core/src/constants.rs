//! Physical constants in the library's unit system.
//!
//! Frequencies are ordinary frequencies in kHz, fields in Gauss, lengths in
//! nm, times in ms. Gyromagnetic ratios are stored as positive magnitudes;
//! the sign of the electron moment is absorbed by the Hamiltonian builders,
//! which write every Zeeman term as `+gamma * B` along the quantization axis
//! of the corresponding dressed or rotating frame.

use serde::{Deserialize, Serialize};

/// Electron gyromagnetic ratio, kHz/G.
pub const GAMMA_ELECTRON: f64 = 2802.495;
/// Proton, kHz/G.
pub const GAMMA_H1: f64 = 4.257_748;
/// Phosphorus-31, kHz/G.
pub const GAMMA_P31: f64 = 1.723_5;
/// Carbon-13, kHz/G.
pub const GAMMA_C13: f64 = 1.070_8;
/// Nitrogen-14, kHz/G.
pub const GAMMA_N14: f64 = 0.307_7;

/// NV ground-state zero-field splitting, kHz.
pub const NV_ZERO_FIELD_SPLITTING: f64 = 2.87e6;

/// `mu0 hbar / (4 pi)` expressed so that `DIPOLAR_PREFACTOR * g1 * g2 / r^3`
/// is in kHz when gammas are in kHz/G and r is in nm. Numerically it equals
/// Planck's constant times 1e31 in these units.
pub const DIPOLAR_PREFACTOR: f64 = 6.626_070_15e-3;

/// Diamond cubic lattice constant, nm.
pub const DIAMOND_LATTICE_NM: f64 = 0.356_7;
/// Natural abundance of carbon-13.
pub const C13_ABUNDANCE: f64 = 0.011;

/// Spin species with tabulated gyromagnetic ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Electron,
    H1,
    P31,
    C13,
    N14,
}

impl Species {
    pub fn gamma(self) -> f64 {
        match self {
            Species::Electron => GAMMA_ELECTRON,
            Species::H1 => GAMMA_H1,
            Species::P31 => GAMMA_P31,
            Species::C13 => GAMMA_C13,
            Species::N14 => GAMMA_N14,
        }
    }

    /// Spin quantum number times two.
    pub fn twice_spin(self) -> u8 {
        match self {
            Species::N14 => 2,
            _ => 1,
        }
    }

    pub fn larmor(self, field_gauss: f64) -> f64 {
        self.gamma() * field_gauss
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Electron => "e",
            Species::H1 => "1H",
            Species::P31 => "31P",
            Species::C13 => "13C",
            Species::N14 => "14N",
        }
    }
}

/// Field (Gauss) at which `species` precesses at `larmor_khz`.
pub fn field_for_larmor(species: Species, larmor_khz: f64) -> f64 {
    larmor_khz / species.gamma()
}
