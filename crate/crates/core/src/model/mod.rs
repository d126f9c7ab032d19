//! Hamiltonian builders for every scenario the toolkit simulates.
//!
//! All Hamiltonians are static in a declared rotating frame and expressed in
//! kHz. The NV probe is either a two-level system (the `{|0>, |+1>}` pair
//! selected by the microwave carrier) or the full spin-1 triplet.

mod dipolar;
mod nc60;
mod pair;
mod probe;
mod radical;

pub use dipolar::{
    dipolar_constant, distance_from_g, hyperfine_components, hyperfine_vector,
    nv_coupling_operator, nv_target_coupling, position_from_hyperfine, HyperfineVector,
};
pub use nc60::{
    build_nc60, cage_transitions, nv_triplet_block, DressedBasisNC60, NC60Geometry, NC60Model,
};
pub use pair::{
    build_spin_labels, build_spin_pair, label_ladder, secular_pair_terms, LabelLadder,
    PairEigensystem, SpinLabelModel,
};
pub use probe::{
    build_h3po4, build_probe_hamiltonian, effective_nuclear_field, hartmann_hahn_rabi,
    H3po4Geometry,
};
pub use radical::{build_radical_pair, singlet_vector, LindbladModel, RadicalPairModel};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::Species;
use crate::error::{invalid, Result};

/// Unit vector with polar angle `theta` (from +z) and azimuth `phi`, radians.
pub fn unit_vector(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

/// Polar and azimuthal angles of a nonzero vector, with `phi` in `[0, 2pi)`.
pub fn angles_of(v: &Vector3<f64>) -> (f64, f64) {
    let n = v.norm();
    let theta = (v.z / n).clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU);
    (theta, phi)
}

/// Two unit vectors completing `b` to a right-handed orthonormal frame
/// `(e1, e2, b)`. `e1` lies in the x-y plane whenever `b` is not along z.
pub fn transverse_frame(b: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let b = b.normalize();
    let cross = Vector3::z().cross(&b);
    let e1 = if cross.norm() > 1e-9 {
        cross.normalize()
    } else {
        Vector3::x()
    };
    let e2 = b.cross(&e1);
    (e1, e2)
}

/// What a drive acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTarget {
    Nv,
    Species(Species),
}

/// A continuous drive after the rotating-wave approximation.
///
/// `detuning_khz` is the carrier offset from the target's bare Larmor
/// frequency; the target is described in the frame rotating at the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub target: DriveTarget,
    pub rabi_khz: f64,
    pub detuning_khz: f64,
    pub phase_rad: f64,
}

impl Drive {
    pub fn resonant(target: DriveTarget, rabi_khz: f64) -> Self {
        Drive {
            target,
            rabi_khz,
            detuning_khz: 0.0,
            phase_rad: 0.0,
        }
    }
}

/// Applied magnetic field and drives.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    /// Field magnitude, Gauss.
    pub magnitude_gauss: f64,
    direction: Vector3<f64>,
    pub drives: Vec<Drive>,
    /// Whether Hartmann-Hahn tuning accounts for the static shift that the
    /// NV `|+1>` population imprints on the target's effective field.
    pub include_back_action: bool,
}

impl FieldConfig {
    pub fn new(magnitude_gauss: f64, theta: f64, phi: f64) -> Self {
        FieldConfig {
            magnitude_gauss,
            direction: unit_vector(theta, phi),
            drives: Vec::new(),
            include_back_action: true,
        }
    }

    pub fn along(magnitude_gauss: f64, direction: Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("field direction must be a nonzero finite vector"));
        }
        Ok(FieldConfig {
            magnitude_gauss,
            direction: direction / n,
            drives: Vec::new(),
            include_back_action: true,
        })
    }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drives.push(drive);
        self
    }

    pub fn b_hat(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn drive_for(&self, species: Species) -> Option<&Drive> {
        self.drives
            .iter()
            .find(|d| d.target == DriveTarget::Species(species))
    }
}
