//! Carbon-13 spin baths around the NV and the continuous-decoupling test.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{Species, C13_ABUNDANCE, DIAMOND_LATTICE_NM};
use crate::dynamics::{Eigensystem, ExpectationPropagator, SignalTrace};
use crate::error::{invalid, Result};
use crate::model::{build_probe_hamiltonian, dipolar_constant, FieldConfig};
use crate::spin::{c, spin_operators, CMatrix, CompositeSpace, Operator, SpinSite, State, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathMode {
    /// Exactly `count` spins, uniform in the shell.
    FixedCount,
    /// Each diamond lattice site in the shell holds a carbon-13 with the
    /// natural abundance.
    NaturalAbundance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub mode: BathMode,
    pub count: usize,
    /// Outer radius, nm.
    pub radius_nm: f64,
    /// No spins closer than this to the NV, nm.
    pub exclusion_nm: f64,
    pub seed: u64,
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig {
            mode: BathMode::FixedCount,
            count: 8,
            radius_nm: 4.0,
            exclusion_nm: 1.0,
            seed: 0,
        }
    }
}

impl BathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exclusion_nm >= 0.0) || !(self.radius_nm > self.exclusion_nm) {
            return Err(invalid(format!(
                "bath radius {} nm must exceed the exclusion radius {} nm",
                self.radius_nm, self.exclusion_nm
            )));
        }
        Ok(())
    }
}

/// Draws bath positions. Deterministic for a given configuration.
pub fn sample_bath(config: &BathConfig) -> Result<Vec<SpinSite>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions = match config.mode {
        BathMode::FixedCount => {
            let (r0, r1) = (config.exclusion_nm.powi(3), config.radius_nm.powi(3));
            (0..config.count)
                .map(|_| {
                    let r = (r0 + (r1 - r0) * rng.random::<f64>()).cbrt();
                    let cos_t: f64 = rng.random_range(-1.0..=1.0);
                    let phi = rng.random_range(0.0..std::f64::consts::TAU);
                    crate::model::unit_vector(cos_t.acos(), phi) * r
                })
                .collect()
        }
        BathMode::NaturalAbundance => lattice_sites(config.exclusion_nm, config.radius_nm)
            .into_iter()
            .filter(|_| rng.random::<f64>() < C13_ABUNDANCE)
            .collect::<Vec<_>>(),
    };
    Ok(positions
        .into_iter()
        .enumerate()
        .map(|(k, p)| SpinSite {
            label: format!("C13_{k}"),
            ..SpinSite::of_species(Species::C13, p)
        })
        .collect())
}

/// Diamond lattice sites with `r_min <= |r| <= r_max`, the vacancy at the
/// origin, in a fixed order.
fn lattice_sites(r_min: f64, r_max: f64) -> Vec<Vector3<f64>> {
    let a = DIAMOND_LATTICE_NM;
    let fcc = [
        [0.0, 0.0, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
    ];
    let n = (r_max / a).ceil() as i64 + 1;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in fcc {
                    for shift in [0.0, 0.25] {
                        let p = Vector3::new(
                            i as f64 + b[0] + shift,
                            j as f64 + b[1] + shift,
                            k as f64 + b[2] + shift,
                        ) * a;
                        let r = p.norm();
                        if r >= r_min && r <= r_max && r > 0.0 {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

/// NV two-level probe with drive `omega` plus the bath: secular NV-bath
/// couplings, full bath-bath dipolar couplings and the bath Zeeman terms.
pub fn build_bath_hamiltonian(
    bath: &[SpinSite],
    omega: f64,
    field: &FieldConfig,
) -> Result<Operator> {
    let mut h = build_probe_hamiltonian(omega, field, bath)?;
    let mut sites = vec![SpinSite::nv_two_level()];
    sites.extend_from_slice(bath);
    let space = CompositeSpace::new(sites)?;
    for i in 1..space.sites().len() {
        for j in (i + 1)..space.sites().len() {
            h += intra_bath_coupling(&space, i, j)?;
        }
    }
    Ok(h)
}

/// `g [I_i . I_j - 3 (I_i . r)(I_j . r)]`, assembled from two-site products
/// so no full-space matrix multiplication is needed.
fn intra_bath_coupling(space: &CompositeSpace, i: usize, j: usize) -> Result<Operator> {
    let (a, b) = (space.site(i)?, space.site(j)?);
    let rel = b.position - a.position;
    let g = dipolar_constant(a.gamma, b.gamma, rel.norm())?;
    let r = rel.normalize();
    let (si, sj) = (spin_operators(a.spin), spin_operators(b.spin));
    let ci = [&si.sx, &si.sy, &si.sz];
    let cj = [&sj.sx, &sj.sy, &sj.sz];
    let mut out = Operator::zeros(space.total_dim());
    for p in 0..3 {
        for q in 0..3 {
            let t = if p == q { 1.0 } else { 0.0 } - 3.0 * r[p] * r[q];
            if t.abs() > 1e-15 {
                out += space.embed_many(&[(i, ci[p]), (j, cj[q])])? * (g * t);
            }
        }
    }
    Ok(out)
}

/// Survival of the NV in `|+x>` with the drive `omega` on and off, bath
/// maximally mixed. Returns `(driven, undriven)`.
pub fn decoupling_signal(
    bath: &[SpinSite],
    omega: f64,
    field: &FieldConfig,
    times: &[f64],
) -> Result<(SignalTrace, SignalTrace)> {
    let driven = driven_trace(bath, omega, field, times)?;
    let undriven = free_trace(bath, field, times)?;
    Ok((
        SignalTrace::new(times.to_vec(), driven, "driven"),
        SignalTrace::new(times.to_vec(), undriven, "undriven"),
    ))
}

fn driven_trace(
    bath: &[SpinSite],
    omega: f64,
    field: &FieldConfig,
    times: &[f64],
) -> Result<Vec<f64>> {
    let h = build_bath_hamiltonian(bath, omega, field)?;
    let d = 1usize << bath.len();
    let rho = State::tensor(&[State::x_up(), State::maximally_mixed(d)]);
    let obs = Operator::from_matrix(State::x_up().density()).kron(&Operator::identity(d));
    let eig = std::sync::Arc::new(Eigensystem::new(&h)?);
    Ok(ExpectationPropagator::new(eig, &rho, &obs)?.values(times))
}

/// Without the drive the NV populations are conserved, and the coherence is
/// `Tr(U_down^dag U_up) / (2 d)` with one bath propagator per NV level.
fn free_trace(bath: &[SpinSite], field: &FieldConfig, times: &[f64]) -> Result<Vec<f64>> {
    let h = build_bath_hamiltonian(bath, 0.0, field)?;
    let d = 1usize << bath.len();
    let m = h.matrix();
    let up = Eigensystem::new(&Operator::from_matrix(m.view((0, 0), (d, d)).into_owned()))?;
    let down = Eigensystem::new(&Operator::from_matrix(m.view((d, d), (d, d)).into_owned()))?;
    let overlap: CMatrix = down.vectors.adjoint() * &up.vectors;
    let weights = overlap.map(|z| z.norm_sqr());
    Ok(times
        .iter()
        .map(|&t| {
            let pu = up.phases(t);
            let pd = down.phases(t);
            let mut s = C64::new(0.0, 0.0);
            for k in 0..d {
                let mut row = C64::new(0.0, 0.0);
                for j in 0..d {
                    row += pu[j] * c(weights[(k, j)]);
                }
                s += pd[k].conj() * row;
            }
            0.5 + s.re / (2.0 * d as f64)
        })
        .collect())
}

/// Field and drive of the two decoupling demonstrations: NV Rabi frequency
/// and field strength in Gauss along the NV axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingPreset {
    pub omega_khz: f64,
    pub field_gauss: f64,
}

impl DecouplingPreset {
    /// Phosphorus Larmor frequency 500 kHz, NV Rabi 500 kHz.
    pub fn phosphorus() -> Self {
        DecouplingPreset {
            omega_khz: 500.0,
            field_gauss: crate::constants::field_for_larmor(Species::P31, 500.0),
        }
    }

    /// Proton Larmor frequency 500 kHz, NV Rabi 400 kHz.
    pub fn proton() -> Self {
        DecouplingPreset {
            omega_khz: 400.0,
            field_gauss: crate::constants::field_for_larmor(Species::H1, 500.0),
        }
    }

    pub fn field(&self) -> FieldConfig {
        FieldConfig::new(self.field_gauss, 0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::linspace;

    #[test]
    fn empty_and_deterministic() {
        let empty = BathConfig {
            count: 0,
            ..Default::default()
        };
        assert!(sample_bath(&empty).unwrap().is_empty());
        let a = sample_bath(&BathConfig::default()).unwrap();
        let b = sample_bath(&BathConfig::default()).unwrap();
        assert_eq!(a.len(), 8);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.position, y.position);
            let r = x.position.norm();
            assert!((1.0..=4.0).contains(&r));
        }
        let other = sample_bath(&BathConfig {
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a[0].position, other[0].position);
    }

    #[test]
    fn natural_abundance_density() {
        let cfg = BathConfig {
            mode: BathMode::NaturalAbundance,
            radius_nm: 2.0,
            ..Default::default()
        };
        let sites = lattice_sites(cfg.exclusion_nm, cfg.radius_nm);
        let volume = 4.0 / 3.0 * std::f64::consts::PI * (8.0 - 1.0);
        let density = sites.len() as f64 / volume;
        let expected = 8.0 / DIAMOND_LATTICE_NM.powi(3);
        assert!(
            (density / expected - 1.0).abs() < 0.05,
            "{density} vs {expected}"
        );
        // About 5200 sites in the shell, 57 carbon-13 on average.
        let bath = sample_bath(&cfg).unwrap();
        let mean = C13_ABUNDANCE * sites.len() as f64;
        assert!(
            (bath.len() as f64 - mean).abs() < 4.0 * mean.sqrt(),
            "{} vs {mean}",
            bath.len()
        );
    }

    #[test]
    fn rejects_inverted_shell() {
        let cfg = BathConfig {
            radius_nm: 0.5,
            ..Default::default()
        };
        assert!(sample_bath(&cfg).is_err());
    }

    #[test]
    fn single_spin_reduces_to_probe() {
        let site = SpinSite::of_species(Species::C13, Vector3::new(0.0, 0.0, 1.5));
        let field = FieldConfig::new(100.0, 0.0, 0.0);
        let h = build_bath_hamiltonian(std::slice::from_ref(&site), 300.0, &field).unwrap();
        let p = build_probe_hamiltonian(300.0, &field, &[site]).unwrap();
        assert!((h - p).norm() < 1e-12);
    }

    #[test]
    fn hermitian_and_block_diagonal_without_drive() {
        let bath = sample_bath(&BathConfig {
            count: 3,
            ..Default::default()
        })
        .unwrap();
        let h =
            build_bath_hamiltonian(&bath, 0.0, &DecouplingPreset::phosphorus().field()).unwrap();
        assert!(h.is_hermitian());
        let d = 8;
        assert!(h.matrix().view((0, d), (d, d)).norm() < 1e-12);
    }

    #[test]
    fn free_trace_matches_full_propagation() {
        let bath = sample_bath(&BathConfig {
            count: 3,
            ..Default::default()
        })
        .unwrap();
        let field = DecouplingPreset::phosphorus().field();
        let times = linspace(0.0, 1.0, 7);
        let fast = free_trace(&bath, &field, &times).unwrap();
        let full = driven_trace(&bath, 0.0, &field, &times).unwrap();
        for (a, b) in fast.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    /// Off-resonant flip-flop with a weakly coupled spin loses contrast as
    /// `(coupling / detuning)^2`.
    #[test]
    fn residual_loss_scales_with_inverse_square_detuning() {
        let pos = Vector3::new(0.6, 0.0, 0.8) * 3.0;
        let site = SpinSite::of_species(Species::C13, pos);
        let field = FieldConfig::new(100.0, 0.0, 0.0);
        let larmor = 100.0 * crate::constants::GAMMA_C13;
        let times = linspace(0.0, 1.0, 4001);
        let loss = |det: f64| {
            let (d, _) =
                decoupling_signal(std::slice::from_ref(&site), larmor + det, &field, &times)
                    .unwrap();
            1.0 - d.min()
        };
        let (l40, l20, l10) = (loss(40.0), loss(20.0), loss(10.0));
        for ratio in [l20 / l40, l10 / l20] {
            assert!(ratio > 4.0 / 1.5 && ratio < 4.0 * 1.5, "ratio {ratio}");
        }
    }

    #[test]
    fn drive_protects_against_small_baths() {
        let times = linspace(0.0, 3.0, 121);
        for preset in [DecouplingPreset::phosphorus(), DecouplingPreset::proton()] {
            let mut worst_undriven: f64 = 1.0;
            for seed in 0..10 {
                let bath = sample_bath(&BathConfig {
                    count: 4,
                    seed,
                    ..Default::default()
                })
                .unwrap();
                let (d, u) =
                    decoupling_signal(&bath, preset.omega_khz, &preset.field(), &times).unwrap();
                let gap = d
                    .values
                    .iter()
                    .zip(&u.values)
                    .map(|(a, b)| a - b)
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    gap > -1e-3,
                    "seed {seed}: driven below undriven by {}",
                    -gap
                );
                worst_undriven = worst_undriven.min(u.min());
            }
            assert!(worst_undriven < 0.9, "bath too weak to test anything");
        }
    }
}
