use nalgebra::Vector3;

use super::dipolar::{
    dipolar_constant, hyperfine_components, nv_target_coupling, position_from_hyperfine,
};
use super::{transverse_frame, Drive, DriveTarget, FieldConfig};
use crate::constants::{Species, GAMMA_ELECTRON, GAMMA_H1, GAMMA_P31};
use crate::error::{invalid, Result};
use crate::spin::{spin_operators, CompositeSpace, Operator, Spin, SpinSite};

/// Larmor vector (kHz) of a target in the probe frame.
///
/// `coupling` is `g_N sqrt(3 rz^2 + 1) h`, the full hyperfine vector. Because
/// the NV operator in the coupling is the `|+1>` population, half of the
/// coupling acts as a static field on the target; with back-action enabled
/// it is subtracted from the Zeeman vector.
pub fn effective_nuclear_field(
    gamma: f64,
    field: &FieldConfig,
    coupling: &Vector3<f64>,
) -> Vector3<f64> {
    let zeeman = field.b_hat() * (gamma * field.magnitude_gauss);
    if field.include_back_action {
        zeeman - coupling * 0.5
    } else {
        zeeman
    }
}

/// NV Rabi frequency meeting the Hartmann-Hahn condition with one target.
pub fn hartmann_hahn_rabi(gamma: f64, field: &FieldConfig, coupling: &Vector3<f64>) -> f64 {
    effective_nuclear_field(gamma, field, coupling).norm()
}

/// Probe Hamiltonian on the space `[NV (two-level), targets...]`:
/// `Omega S_x` on the NV, Zeeman or drive terms on the targets and the
/// secular NV-target coupling of each target.
///
/// Targets of a species with a drive in `field` are written in the frame
/// rotating at that drive's carrier; the others stay in the lab frame.
pub fn build_probe_hamiltonian(
    omega: f64,
    field: &FieldConfig,
    targets: &[SpinSite],
) -> Result<Operator> {
    let mut sites = vec![SpinSite::nv_two_level()];
    sites.extend_from_slice(targets);
    let space = CompositeSpace::new(sites)?;
    probe_terms(&space, omega, field)
}

fn probe_terms(space: &CompositeSpace, omega: f64, field: &FieldConfig) -> Result<Operator> {
    let b = field.b_hat();
    let (e1, e2) = transverse_frame(&b);
    let nv = spin_operators(Spin::Half);
    let mut h = space.embed(&nv.sx, 0)? * omega;
    for (i, site) in space.sites().iter().enumerate().skip(1) {
        let ops = spin_operators(site.spin);
        let drive = site.species.and_then(|s| field.drive_for(s));
        let local = match drive {
            Some(d) => {
                let axis = e1 * d.phase_rad.cos() + e2 * d.phase_rad.sin();
                ops.along(&(axis * d.rabi_khz - b * d.detuning_khz))
            }
            None => ops.along(&(b * (-site.gamma * field.magnitude_gauss))),
        };
        h += space.embed(&local, i)?;
        h += nv_target_coupling(space, 0, i)?;
    }
    Ok(h)
}

/// Positions of the phosphorus and three protons of a phosphoric acid
/// molecule, in nm relative to the NV.
#[derive(Debug, Clone, PartialEq)]
pub struct H3po4Geometry {
    pub phosphorus: Vector3<f64>,
    pub hydrogens: Vec<Vector3<f64>>,
}

impl H3po4Geometry {
    /// Phosphorus at `distance_nm` along the position whose hyperfine
    /// direction is `(theta0, phi0)`, protons at `ph_nm` from it along three
    /// tetrahedral bonds (the fourth bond points along +z).
    pub fn from_hyperfine(distance_nm: f64, theta0: f64, phi0: f64, ph_nm: f64) -> Result<Self> {
        if !(distance_nm > 0.0) || !(ph_nm > 0.0) {
            return Err(invalid("H3PO4 distances must be positive"));
        }
        let p = position_from_hyperfine(theta0, phi0)? * distance_nm;
        let tet = (-1.0f64 / 3.0).acos();
        let hydrogens = (0..3)
            .map(|k| {
                let az = std::f64::consts::TAU * k as f64 / 3.0;
                p + super::unit_vector(tet, az) * ph_nm
            })
            .collect();
        Ok(H3po4Geometry {
            phosphorus: p,
            hydrogens,
        })
    }

    /// The default molecule: 5 nm from the NV, hyperfine direction
    /// (68.233 deg, 93.841 deg), P-H distance 0.2 nm.
    pub fn reference() -> Self {
        Self::from_hyperfine(5.0, 68.233f64.to_radians(), 93.841f64.to_radians(), 0.2)
            .expect("reference geometry is valid")
    }

    pub fn sites(&self) -> Vec<SpinSite> {
        let mut v = vec![SpinSite::of_species(Species::P31, self.phosphorus)];
        v.extend(
            self.hydrogens
                .iter()
                .map(|&h| SpinSite::of_species(Species::H1, h)),
        );
        v
    }

    /// NV-phosphorus dipolar constant, kHz.
    pub fn g_n(&self) -> f64 {
        dipolar_constant(GAMMA_ELECTRON, GAMMA_P31, self.phosphorus.norm()).unwrap_or(0.0)
    }

    /// Full NV-phosphorus hyperfine vector `g_N sqrt(3 rz^2 + 1) h`, kHz.
    pub fn coupling_vector(&self) -> Vector3<f64> {
        hyperfine_components(&self.phosphorus.normalize()) * self.g_n()
    }
}

/// Phosphoric acid model on `[NV, 31P, 1H x3]`.
///
/// Protons sit in the frame of an RF drive of amplitude `omega_rf` that is
/// resonant with them; the phosphorus stays in the lab frame. Proton-
/// phosphorus couplings are kept in their secular Ising form along the field
/// and the NV couples to the phosphorus only.
pub fn build_h3po4(
    field: &FieldConfig,
    omega_nv: f64,
    omega_rf: f64,
    geometry: &H3po4Geometry,
) -> Result<Operator> {
    if geometry.hydrogens.is_empty() {
        return Err(invalid("H3PO4 geometry needs proton positions"));
    }
    let mut f = field.clone();
    f.drives
        .retain(|d| d.target != DriveTarget::Species(Species::H1));
    f.drives
        .push(Drive::resonant(DriveTarget::Species(Species::H1), omega_rf));
    let mut sites = vec![SpinSite::nv_two_level()];
    sites.extend(geometry.sites());
    let space = CompositeSpace::new(sites)?;
    let mut h = probe_terms(&space, omega_nv, &f)?;

    let b = field.b_hat();
    let half = spin_operators(Spin::Half);
    let ib = half.along(&b);
    for (m, pos) in geometry.hydrogens.iter().enumerate() {
        let d = pos - geometry.phosphorus;
        let g = dipolar_constant(GAMMA_P31, GAMMA_H1, d.norm())?;
        let c = d.normalize().dot(&b);
        let zz = space.embed_many(&[(1, &ib), (2 + m, &ib)])?;
        h += zz * (g * (1.0 - 3.0 * c * c));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::field_for_larmor;

    #[test]
    fn reference_geometry() {
        let g = H3po4Geometry::reference();
        assert!((g.phosphorus.norm() - 5.0).abs() < 1e-12);
        for h in &g.hydrogens {
            assert!(((h - g.phosphorus).norm() - 0.2).abs() < 1e-12);
        }
        let hv = crate::model::hyperfine_vector(&g.phosphorus.normalize()).unwrap();
        assert!((hv.theta.to_degrees() - 68.233).abs() < 1e-9);
        assert!((hv.phi.to_degrees() - 93.841).abs() < 1e-9);
    }

    #[test]
    fn h3po4_is_hermitian_and_sized() {
        let b = field_for_larmor(Species::P31, 500.0);
        let field = FieldConfig::new(b, 0.3, 1.1);
        let h = build_h3po4(&field, 500.0, 20.0, &H3po4Geometry::reference()).unwrap();
        assert_eq!(h.dim(), 32);
        assert!(h.is_hermitian());
    }

    #[test]
    fn probe_without_back_action_tunes_to_larmor() {
        let mut field = FieldConfig::new(290.0, 1.0, 2.0);
        field.include_back_action = false;
        let w = hartmann_hahn_rabi(GAMMA_P31, &field, &Vector3::new(0.1, 0.2, 0.3));
        assert!((w - GAMMA_P31 * 290.0).abs() < 1e-12);
    }
}
