use nalgebra::Vector3;

use crate::constants::DIPOLAR_PREFACTOR;
use crate::error::{invalid, Error, Result};
use crate::spin::{spin_operators, CompositeSpace, Operator, Spin};

/// Magnitude of the point-dipole coupling between two spins, kHz.
///
/// Gyromagnetic ratios in kHz/G, distance in nm.
pub fn dipolar_constant(gamma1: f64, gamma2: f64, r_nm: f64) -> Result<f64> {
    if !(r_nm > 0.0) || !r_nm.is_finite() {
        return Err(invalid(format!("distance must be positive, got {r_nm} nm")));
    }
    Ok(DIPOLAR_PREFACTOR * (gamma1 * gamma2).abs() / r_nm.powi(3))
}

/// Distance (nm) at which two spins have dipolar constant `g` (kHz).
pub fn distance_from_g(g: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(invalid(format!("coupling must be positive, got {g} kHz")));
    }
    Ok((DIPOLAR_PREFACTOR * (gamma1 * gamma2).abs() / g).cbrt())
}

/// Unnormalized hyperfine direction `(3 rx rz, 3 ry rz, 3 rz^2 - 1)` for a
/// unit vector `r`. Its norm is `sqrt(3 rz^2 + 1)`.
pub fn hyperfine_components(r: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(3.0 * r.x * r.z, 3.0 * r.y * r.z, 3.0 * r.z * r.z - 1.0)
}

/// Direction of the effective field a target spin feels from the NV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineVector {
    /// Polar angle, radians.
    pub theta: f64,
    /// Azimuth in `[0, 2pi)`; zero when `degenerate`.
    pub phi: f64,
    /// `sqrt(3 rz^2 + 1)`, between 1 and 2.
    pub amplitude: f64,
    /// Unit vector `h`.
    pub direction: Vector3<f64>,
    /// The azimuth is undefined (target on the NV axis or in its equatorial plane).
    pub degenerate: bool,
}

impl HyperfineVector {
    /// Full coupling strength `g_N * sqrt(3 rz^2 + 1)`.
    pub fn coupling(&self, g_n: f64) -> f64 {
        g_n * self.amplitude
    }
}

pub fn hyperfine_vector(r_hat: &Vector3<f64>) -> Result<HyperfineVector> {
    let n = r_hat.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("r_hat must be a unit vector (norm {n})")));
    }
    let comp = hyperfine_components(r_hat);
    let amplitude = comp.norm();
    let direction = comp / amplitude;
    let transverse = direction.xy().norm();
    let degenerate = transverse < 1e-12;
    let theta = direction.z.clamp(-1.0, 1.0).acos();
    let phi = if degenerate {
        0.0
    } else {
        direction
            .y
            .atan2(direction.x)
            .rem_euclid(std::f64::consts::TAU)
    };
    Ok(HyperfineVector {
        theta,
        phi,
        amplitude,
        direction,
        degenerate,
    })
}

/// Unit position vector whose hyperfine direction is `(theta0, phi0)`.
///
/// `r` and `-r` share a hyperfine direction; the branch with `rz > 0` is
/// returned.
pub fn position_from_hyperfine(theta0: f64, phi0: f64) -> Result<Vector3<f64>> {
    let c = theta0.cos();
    // cos(theta0) = u - 2/u with u = sqrt(3 rz^2 + 1), monotonic on [1, 2].
    let u = 0.5 * (c + (c * c + 8.0).sqrt());
    let rz2 = ((u * u - 1.0) / 3.0).max(0.0);
    let rz = rz2.sqrt();
    if rz < 1e-9 {
        return Err(Error::Degenerate(
            "hyperfine direction along -z leaves the in-plane position undetermined".into(),
        ));
    }
    let s = theta0.sin();
    let r = Vector3::new(
        u * s * phi0.cos() / (3.0 * rz),
        u * s * phi0.sin() / (3.0 * rz),
        rz,
    );
    Ok(r.normalize())
}

/// The NV operator entering its coupling to other spins: the `|+1>`
/// population for the two-level probe, `S_z` for the full triplet.
pub fn nv_coupling_operator(spin: Spin) -> Result<Operator> {
    match spin {
        Spin::Half => Ok(Operator::diagonal(&[1.0, 0.0])),
        Spin::One => Ok(spin_operators(Spin::One).sz),
        other => Err(Error::UnsupportedSpin(other.value())),
    }
}

/// Secular NV-target dipolar coupling
/// `g_N * S_z * [3 rz (rx Ix + ry Iy) + (3 rz^2 - 1) Iz]` in the NV frame.
pub fn nv_target_coupling(
    space: &CompositeSpace,
    nv_index: usize,
    target_index: usize,
) -> Result<Operator> {
    let nv = space.site(nv_index)?;
    let target = space.site(target_index)?;
    let rel = target.position - nv.position;
    let r = rel.norm();
    if r < 1e-12 || nv_index == target_index {
        return Err(invalid(format!(
            "target '{}' coincides with the NV",
            target.label
        )));
    }
    let g = dipolar_constant(nv.gamma, target.gamma, r)?;
    let h = hyperfine_components(&(rel / r)) * g;
    let s = nv_coupling_operator(nv.spin)?;
    let i = spin_operators(target.spin).along(&h);
    space.embed_many(&[(nv_index, &s), (target_index, &i)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::*;
    use crate::spin::SpinSite;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn literature_couplings() {
        let g1 = dipolar_constant(GAMMA_P31, GAMMA_H1, 0.1).unwrap();
        let g2 = dipolar_constant(GAMMA_P31, GAMMA_H1, 0.2).unwrap();
        assert!(rel(g1, 48.6) < 5e-3, "{g1}");
        assert!(rel(g2, 6.075) < 5e-3, "{g2}");
        assert!(rel(g1 / g2, 8.0) < 1e-12);
        assert!(
            rel(
                dipolar_constant(GAMMA_ELECTRON, GAMMA_ELECTRON, 5.0).unwrap(),
                416.1
            ) < 5e-3
        );
        assert!(
            rel(
                dipolar_constant(GAMMA_ELECTRON, GAMMA_ELECTRON, 8.0).unwrap(),
                101.6
            ) < 5e-3
        );
        assert!(dipolar_constant(1.0, 1.0, 0.0).is_err());
        assert!(distance_from_g(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hyperfine_on_axis() {
        let h = hyperfine_vector(&Vector3::z()).unwrap();
        assert!(h.theta.abs() < 1e-12);
        assert!((h.amplitude - 2.0).abs() < 1e-12);
        assert!(h.degenerate);
        let eq = hyperfine_vector(&Vector3::x()).unwrap();
        assert!((eq.theta - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(eq.phi, 0.0);
        assert!(hyperfine_vector(&Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    fn nv_and(site: SpinSite) -> CompositeSpace {
        CompositeSpace::new(vec![SpinSite::nv_two_level(), site]).unwrap()
    }

    #[test]
    fn coupling_reduces_on_axis_and_in_plane() {
        let d = 3.0;
        let g = dipolar_constant(GAMMA_ELECTRON, GAMMA_H1, d).unwrap();
        let p = Operator::diagonal(&[1.0, 0.0]);
        let iz = spin_operators(Spin::Half).sz;

        let sp = nv_and(SpinSite::of_species(Species::H1, Vector3::new(0.0, 0.0, d)));
        let want = sp.embed_many(&[(0, &p), (1, &iz)]).unwrap() * (2.0 * g);
        assert!((nv_target_coupling(&sp, 0, 1).unwrap() - want).norm() < 1e-12);

        let sp = nv_and(SpinSite::of_species(Species::H1, Vector3::new(d, 0.0, 0.0)));
        let want = sp.embed_many(&[(0, &p), (1, &iz)]).unwrap() * (-g);
        assert!((nv_target_coupling(&sp, 0, 1).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn coincident_target_rejected() {
        let sp = nv_and(SpinSite::of_species(Species::H1, Vector3::zeros()));
        assert!(nv_target_coupling(&sp, 0, 1).is_err());
    }

    /// Direct transcription of the component formulas, independent of the
    /// vector implementation above.
    fn scalar_angles(rx: f64, ry: f64, rz: f64) -> (f64, f64, f64) {
        let a = (3.0 * rz * rz + 1.0).sqrt();
        let cos_t = (3.0 * rz * rz - 1.0) / a;
        let sin_t_cos_p = 3.0 * rx * rz / a;
        let sin_t_sin_p = 3.0 * ry * rz / a;
        let theta = cos_t.acos();
        let phi = sin_t_sin_p
            .atan2(sin_t_cos_p)
            .rem_euclid(std::f64::consts::TAU);
        (theta, phi, a)
    }

    proptest! {
        #[test]
        fn hyperfine_is_unit_and_matches_scalar(
            theta in 0.05f64..3.09, phi in 0.0..std::f64::consts::TAU
        ) {
            let r = crate::model::unit_vector(theta, phi);
            prop_assume!(r.z.abs() > 1e-3);
            let h = hyperfine_vector(&r).unwrap();
            prop_assert!((hyperfine_components(&r).norm() - (3.0 * r.z * r.z + 1.0).sqrt()).abs() < 1e-12);
            prop_assert!((h.direction.norm() - 1.0).abs() < 1e-12);
            let (t, p, a) = scalar_angles(r.x, r.y, r.z);
            prop_assert!((h.theta - t).abs() < 1e-9);
            prop_assert!((h.amplitude - a).abs() < 1e-12);
            let dphi = (h.phi - p).rem_euclid(std::f64::consts::TAU);
            prop_assert!(dphi.min(std::f64::consts::TAU - dphi) < 1e-9);
        }

        #[test]
        fn hyperfine_inverts_on_upper_hemisphere(theta in 0.02f64..1.55, phi in 0.0..std::f64::consts::TAU) {
            let r = crate::model::unit_vector(theta, phi);
            let h = hyperfine_vector(&r).unwrap();
            let back = position_from_hyperfine(h.theta, h.phi).unwrap();
            prop_assert!((back - r).norm() < 1e-8, "{back} vs {r}");
        }

        #[test]
        fn coupling_norm_tracks_amplitude(theta in 0.05f64..3.09, phi in 0.0..std::f64::consts::TAU, d in 1.0f64..8.0) {
            let r = crate::model::unit_vector(theta, phi);
            let sp = nv_and(SpinSite::of_species(Species::P31, r * d));
            let op = nv_target_coupling(&sp, 0, 1).unwrap();
            let g = dipolar_constant(GAMMA_ELECTRON, GAMMA_P31, d).unwrap();
            let amp = (3.0 * r.z * r.z + 1.0).sqrt();
            // |+1><+1| has norm 1, a spin-1/2 along a unit axis has eigenvalues +-1/2.
            prop_assert!((op.spectral_radius() - 0.5 * g * amp).abs() < 1e-9 * g);
            prop_assert!(op.is_hermitian());
        }

        #[test]
        fn distance_round_trip(r in 0.05f64..20.0) {
            let g = dipolar_constant(GAMMA_ELECTRON, GAMMA_H1, r).unwrap();
            prop_assert!((distance_from_g(g, GAMMA_ELECTRON, GAMMA_H1).unwrap() - r).abs() < 1e-9 * r);
        }
    }
}
