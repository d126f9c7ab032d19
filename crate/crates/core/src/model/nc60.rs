use nalgebra::Vector3;

use super::dipolar::nv_target_coupling;
use crate::constants::{Species, GAMMA_ELECTRON, GAMMA_N14};
use crate::error::{invalid, Result};
use crate::spin::{c, spin_operators, CVector, CompositeSpace, Operator, Spin, SpinSite};

/// Placement and internal parameters of an endohedral N@C60 molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct NC60Geometry {
    /// NV to cage-electron distance, nm.
    pub distance_nm: f64,
    /// Polar angle of the molecule seen from the NV, radians.
    pub polar: f64,
    /// Azimuth of the molecule, radians.
    pub azimuth: f64,
    /// Isotropic electron-nitrogen hyperfine constant, kHz.
    pub hyperfine_khz: f64,
    /// Nitrogen quadrupole splitting, kHz.
    pub quadrupole_khz: f64,
    /// Keep only `a S_z I_z` instead of the full `a S.I`.
    pub secular_hyperfine: bool,
}

impl Default for NC60Geometry {
    fn default() -> Self {
        NC60Geometry {
            distance_nm: 8.0,
            polar: 45f64.to_radians(),
            azimuth: 0.0,
            hyperfine_khz: 15_880.0,
            quadrupole_khz: 5_100.0,
            secular_hyperfine: false,
        }
    }
}

impl NC60Geometry {
    pub fn position(&self) -> Vector3<f64> {
        super::unit_vector(self.polar, self.azimuth) * self.distance_nm
    }
}

/// Eigenbasis of the driven NV triplet, in the `(+1, 0, -1)` basis.
///
/// `up`, `dark` and `down` have energies `+w`, `0`, `-w` with
/// `w = sqrt(2 Omega^2 + omega_e^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedBasisNC60 {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub up: CVector,
    pub dark: CVector,
    pub down: CVector,
    /// `w`, kHz.
    pub omega1: f64,
    /// `2 w`, kHz.
    pub omega2: f64,
}

impl DressedBasisNC60 {
    pub fn new(omega: f64, omega_e: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(invalid("dressed basis needs a nonzero drive amplitude"));
        }
        let w = (2.0 * omega * omega + omega_e * omega_e).sqrt();
        let eta_plus = (w + omega_e) / omega;
        let eta_minus = (w - omega_e) / omega;
        let vec3 = |a: f64, b: f64, cc: f64, n: f64| {
            CVector::from_vec(vec![c(a / n), c(b / n), c(cc / n)])
        };
        // 4 + 4 eta^2 + eta^4 = (eta^2 + 2)^2 normalizes both bright states.
        let up = vec3(
            2.0,
            2.0 * eta_minus,
            eta_minus * eta_minus,
            eta_minus * eta_minus + 2.0,
        );
        let down = vec3(
            2.0,
            -2.0 * eta_plus,
            eta_plus * eta_plus,
            eta_plus * eta_plus + 2.0,
        );
        let dark = vec3(omega, -omega_e, -omega, w);
        Ok(DressedBasisNC60 {
            eta_plus,
            eta_minus,
            up,
            dark,
            down,
            omega1: w,
            omega2: 2.0 * w,
        })
    }
}

/// The N@C60 readout model on `[NV triplet, cage electron (3/2), 14N (1)]`.
#[derive(Debug, Clone)]
pub struct NC60Model {
    pub hamiltonian: Operator,
    pub space: CompositeSpace,
    /// Absent when the drive is off.
    pub dressed: Option<DressedBasisNC60>,
    /// Electron Larmor frequency, kHz.
    pub omega_e: f64,
}

/// Driven NV triplet block `omega_e (|+1><+1| - |-1><-1|) + Omega (|+1><0| + |-1><0| + h.c.)`.
pub fn nv_triplet_block(omega: f64, omega_e: f64) -> Operator {
    Operator::from_real(
        3,
        &[omega_e, omega, 0.0, omega, 0.0, omega, 0.0, omega, -omega_e],
    )
}

/// Builds the N@C60 model with the field along the NV axis.
///
/// The NV is in the frame of its microwave carrier at the zero-field
/// splitting; the cage electron and nitrogen are in the lab frame.
pub fn build_nc60(omega: f64, field_gauss: f64, geometry: &NC60Geometry) -> Result<NC60Model> {
    if !(omega >= 0.0) {
        return Err(invalid("drive amplitude must be non-negative"));
    }
    let omega_e = GAMMA_ELECTRON * field_gauss;
    let omega_n = GAMMA_N14 * field_gauss;
    let pos = geometry.position();
    let space = CompositeSpace::new(vec![
        SpinSite::nv_triplet(),
        SpinSite::new("e", Spin::ThreeHalves, GAMMA_ELECTRON, pos),
        SpinSite::of_species(Species::N14, pos),
    ])?;

    let s = spin_operators(Spin::ThreeHalves);
    let i = spin_operators(Spin::One);
    let a = geometry.hyperfine_khz;
    let mut h = space.embed(&nv_triplet_block(omega, omega_e), 0)?;
    h += space.embed(&(&s.sz * omega_e), 1)?;
    h += space.embed(
        &(&i.sz * omega_n + &i.sz * &i.sz * geometry.quadrupole_khz),
        2,
    )?;
    h += space.embed_many(&[(1, &s.sz), (2, &i.sz)])? * a;
    if !geometry.secular_hyperfine {
        h += space.embed_many(&[(1, &s.sx), (2, &i.sx)])? * a;
        h += space.embed_many(&[(1, &s.sy), (2, &i.sy)])? * a;
    }
    h += nv_target_coupling(&space, 0, 1)?;

    let dressed = if omega > 0.0 {
        Some(DressedBasisNC60::new(omega, omega_e)?)
    } else {
        None
    };
    Ok(NC60Model {
        hamiltonian: h,
        space,
        dressed,
        omega_e,
    })
}

/// Electron transition frequencies `m_S -> m_S - 1` for a fixed nitrogen
/// state, from exact diagonalization of the cage Hamiltonian alone.
pub fn cage_transitions(field_gauss: f64, geometry: &NC60Geometry, m_i: i32) -> Result<Vec<f64>> {
    let omega_e = GAMMA_ELECTRON * field_gauss;
    let omega_n = GAMMA_N14 * field_gauss;
    let s = spin_operators(Spin::ThreeHalves);
    let i = spin_operators(Spin::One);
    let a = geometry.hyperfine_khz;
    let mut h = s.sz.kron(&Operator::identity(3)) * omega_e
        + Operator::identity(4).kron(&(&i.sz * omega_n + &i.sz * &i.sz * geometry.quadrupole_khz))
        + s.sz.kron(&i.sz) * a;
    if !geometry.secular_hyperfine {
        h += s.sx.kron(&i.sx) * a + s.sy.kron(&i.sy) * a;
    }
    let eig = h.matrix().clone().symmetric_eigen();
    // Label each eigenstate by its dominant product-basis component.
    let k_i = Spin::One
        .index_of(m_i as f64)
        .ok_or_else(|| invalid(format!("m_I = {m_i} is not a spin-1 projection")))?;
    let mut levels = [f64::NAN; 4];
    for col in 0..12 {
        let v = eig.eigenvectors.column(col);
        let (idx, _) = v.iter().enumerate().fold((0, 0.0), |best, (j, z)| {
            if z.norm_sqr() > best.1 {
                (j, z.norm_sqr())
            } else {
                best
            }
        });
        if idx % 3 == k_i {
            levels[idx / 3] = eig.eigenvalues[col];
        }
    }
    Ok(levels.windows(2).map(|w| w[0] - w[1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dressed_states_diagonalize_block() {
        for (om, we) in [(70_700.0, 300_000.0), (1000.0, 10.0), (5.0, 0.0)] {
            let d = DressedBasisNC60::new(om, we).unwrap();
            let h = nv_triplet_block(om, we);
            for (v, e) in [(&d.up, d.omega1), (&d.dark, 0.0), (&d.down, -d.omega1)] {
                assert!((v.norm() - 1.0).abs() < 1e-12);
                let r = h.matrix() * v - v * c(e);
                assert!(r.norm() < 1e-9 * d.omega1, "residual {}", r.norm());
            }
            assert!(d.up.dotc(&d.dark).norm() < 1e-12);
            assert!(d.up.dotc(&d.down).norm() < 1e-12);
            assert!(d.dark.dotc(&d.down).norm() < 1e-12);
        }
        assert!(DressedBasisNC60::new(0.0, 1.0).is_err());
    }

    #[test]
    fn reference_resonance() {
        let d = DressedBasisNC60::new(70_700.0, 300_000.0).unwrap();
        assert!((d.omega1 - 316_200.0).abs() < 50.0, "{}", d.omega1);
        assert_eq!(d.omega2, 2.0 * d.omega1);
    }

    #[test]
    fn model_is_hermitian() {
        let m = build_nc60(70_700.0, 107.0, &NC60Geometry::default()).unwrap();
        assert_eq!(m.hamiltonian.dim(), 36);
        assert!(m.hamiltonian.is_hermitian());
        assert!(build_nc60(0.0, 107.0, &NC60Geometry::default())
            .unwrap()
            .dressed
            .is_none());
    }

    #[test]
    fn satellites_follow_second_order_shifts() {
        let geo = NC60Geometry::default();
        let field = 107.0;
        let t = cage_transitions(field, &geo, 1).unwrap();
        let we = GAMMA_ELECTRON * field;
        let wn = GAMMA_N14 * field;
        let a = geo.hyperfine_khz;
        // |m_S, +1> couples only to |m_S + 1, 0>; second order with the
        // exact energy denominators.
        let level = |m: f64| {
            let v2 = 0.5 * a * a * (3.75 - m * (m + 1.0));
            we * m + wn + geo.quadrupole_khz + a * m + v2 / (-we + a * m + wn + geo.quadrupole_khz)
        };
        let expected = [
            level(1.5) - level(0.5),
            level(0.5) - level(-0.5),
            level(-0.5) - level(-1.5),
        ];
        let unit = a * a / we;
        for (x, e) in t.iter().zip(expected) {
            assert!((x - e).abs() < 0.02 * unit, "{t:?} vs {expected:?}");
        }
        // The mean spacing stays near a^2 / omega_e.
        assert!(((t[0] - t[2]) / 2.0 - unit).abs() < 0.1 * unit);
        let secular = NC60Geometry {
            secular_hyperfine: true,
            ..geo
        };
        let ts = cage_transitions(107.0, &secular, 1).unwrap();
        assert!((ts[0] - ts[2]).abs() < 1e-6);
    }
}
