use nalgebra::Vector3;
use rayon::prelude::*;

use super::{grid, ResonanceScan};
use crate::constants::Species;
use crate::dynamics::{Eigensystem, ExpectationPropagator};
use crate::error::{invalid, Result};
use crate::inversion::{
    find_dips_with, invert_pair_geometry, pair_deepest, Dip, DipOptions, NineDeltas, PairDirection,
    PairGeometry,
};
use crate::model::{nv_target_coupling, secular_pair_terms, transverse_frame, unit_vector};
use crate::spin::{spin_operators, CompositeSpace, Operator, Spin, SpinSite, State};

/// Closed-form splittings `(3g/2)|1 - 3 (r . b)^2|` along the nine directions.
pub fn pair_deltas(g: f64, r_hat: &Vector3<f64>) -> Result<NineDeltas> {
    if (r_hat.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "alignment vector must be a unit vector, |r| = {}",
            r_hat.norm()
        )));
    }
    Ok(NineDeltas::exact(g, r_hat))
}

/// A like-spin pair near the NV, e.g. the protons of one water molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfig {
    pub species: Species,
    /// Intra-pair distance, nm.
    pub separation_nm: f64,
    /// Orientation of the pair axis, degrees.
    pub pair_theta_deg: f64,
    pub pair_phi_deg: f64,
    /// Position of the pair midpoint relative to the NV.
    pub distance_nm: f64,
    pub polar_deg: f64,
    pub azimuth_deg: f64,
    /// Larmor frequency of the pair spins, kHz; fixes the field strength.
    pub larmor_khz: f64,
    /// NV Rabi window around the Larmor frequency, kHz.
    pub half_window_khz: f64,
    pub step_khz: f64,
    /// Readout time override, ms. `None` picks `0.25 / kappa`.
    pub readout_ms: Option<f64>,
    /// Upper bound for the automatic readout time, ms.
    pub max_readout_ms: f64,
}

impl Default for PairConfig {
    /// A single water molecule 5 nm from the NV.
    fn default() -> Self {
        PairConfig {
            species: Species::H1,
            separation_nm: 0.1515,
            pair_theta_deg: 118.2,
            pair_phi_deg: 288.85,
            distance_nm: 5.0,
            polar_deg: 45.0,
            azimuth_deg: 30.0,
            larmor_khz: 500.0,
            half_window_khz: 90.0,
            step_khz: 0.1,
            readout_ms: None,
            max_readout_ms: 20.0,
        }
    }
}

impl PairConfig {
    pub fn r_hat(&self) -> Vector3<f64> {
        unit_vector(
            self.pair_theta_deg.to_radians(),
            self.pair_phi_deg.to_radians(),
        )
    }

    /// Intra-pair dipolar constant, kHz.
    pub fn g(&self) -> Result<f64> {
        let gamma = self.species.gamma();
        crate::model::dipolar_constant(gamma, gamma, self.separation_nm)
    }

    fn space(&self) -> Result<CompositeSpace> {
        if self.species.twice_spin() != 1 {
            return Err(invalid("the pair protocol needs spin-1/2 nuclei"));
        }
        let center = unit_vector(self.polar_deg.to_radians(), self.azimuth_deg.to_radians())
            * self.distance_nm;
        let half = self.r_hat() * (self.separation_nm / 2.0);
        CompositeSpace::new(vec![
            SpinSite::nv_two_level(),
            SpinSite::of_species(self.species, center + half),
            SpinSite::of_species(self.species, center - half),
        ])
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("separation_nm", self.separation_nm),
            ("distance_nm", self.distance_nm),
            ("larmor_khz", self.larmor_khz),
            ("half_window_khz", self.half_window_khz),
            ("step_khz", self.step_khz),
            ("max_readout_ms", self.max_readout_ms),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.half_window_khz >= self.larmor_khz {
            return Err(invalid(
                "the Rabi window must stay below the Larmor frequency",
            ));
        }
        Ok(())
    }

    /// NV-pair Hamiltonian for a field along `b_hat` at NV Rabi frequency `omega0`.
    fn hamiltonian(
        &self,
        space: &CompositeSpace,
        b_hat: &Vector3<f64>,
        omega0: f64,
        g: f64,
    ) -> Result<Operator> {
        let s1 = space.site_spin(1)?;
        let s2 = space.site_spin(2)?;
        let g12 = g * (1.0 - 3.0 * self.r_hat().dot(b_hat).powi(2));
        let nv = spin_operators(Spin::Half);
        Ok(space.embed(&nv.sx, 0)? * omega0
            + secular_pair_terms(&s1, &s2, b_hat, -self.larmor_khz, g12)
            + nv_target_coupling(space, 0, 1)?
            + nv_target_coupling(space, 0, 2)?)
    }
}

/// Readout time `0.25 / kappa` that completes one flip-flop on the stronger
/// of the two pair transitions, capped at `config.max_readout_ms`.
///
/// `kappa = |A1perp + A2perp| / (4 sqrt 2)` with `A_perp` the hyperfine
/// component transverse to the field, in complex form.
pub fn pair_readout_time(config: &PairConfig, direction: PairDirection) -> Result<f64> {
    if let Some(t) = config.readout_ms {
        return Ok(t);
    }
    let space = config.space()?;
    let b = direction.vector();
    let (e1, e2) = transverse_frame(&b);
    let nv = space.site(0)?;
    let mut sum = nalgebra::Complex::new(0.0, 0.0);
    for k in 1..=2 {
        let site = space.site(k)?;
        let rel = site.position - nv.position;
        let a = crate::model::hyperfine_components(&rel.normalize())
            * crate::model::dipolar_constant(nv.gamma, site.gamma, rel.norm())?;
        sum += nalgebra::Complex::new(a.dot(&e1), -a.dot(&e2));
    }
    let kappa = sum.norm() / (4.0 * std::f64::consts::SQRT_2);
    if kappa <= 0.0 {
        return Ok(config.max_readout_ms);
    }
    Ok((0.25 / kappa).min(config.max_readout_ms))
}

/// Survival of the NV in `|+x>` after time `t_ms` versus its Rabi frequency,
/// with the field along `direction` and the pair thermal.
pub fn pair_resonance_experiment(
    config: &PairConfig,
    direction: PairDirection,
    grid_khz: &[f64],
    t_ms: f64,
) -> Result<ResonanceScan> {
    config.validate()?;
    let space = config.space()?;
    let g = config.g()?;
    let b = direction.vector();
    let rho = State::tensor(&[State::x_up(), State::maximally_mixed(4)]);
    let obs = Operator::from_matrix(State::x_up().density()).kron(&Operator::identity(4));
    let values = grid_khz
        .par_iter()
        .map(|&w| {
            let h = config.hamiltonian(&space, &b, w, g)?;
            let eig = std::sync::Arc::new(Eigensystem::new(&h)?);
            Ok(ExpectationPropagator::new(eig, &rho, &obs)?.value(t_ms))
        })
        .collect::<Result<Vec<f64>>>()?;
    ResonanceScan::new("omega_nv", "kHz", grid_khz.to_vec(), values, t_ms)
}

/// Everything a pair geometry run produces.
#[derive(Debug, Clone)]
pub struct PairGeometryRun {
    pub scans: Vec<(PairDirection, ResonanceScan)>,
    /// The dips retained per direction (two, or one when merged).
    pub dips: Vec<(PairDirection, Vec<Dip>)>,
    pub measured: NineDeltas,
    pub geometry: PairGeometry,
    /// Directions whose two dips could not be separated.
    pub unresolved: Vec<PairDirection>,
}

/// Splitting from one scan: the distance between its two deepest dips, or
/// zero when only a single merged dip is visible. Returns the splitting,
/// the dips it was taken from and whether they were unresolved.
pub fn pair_splitting(scan: &ResonanceScan) -> (f64, Vec<Dip>, bool) {
    let width = scan.readout_ms.recip().max(scan.step());
    let found = find_dips_with(
        scan,
        DipOptions {
            depth_threshold: 0.02,
            expected_width: Some(width),
        },
    )
    .unwrap_or_default();
    match pair_deepest(&found) {
        Some((a, b)) => {
            let unresolved = a.unresolved || b.unresolved;
            ((b.center - a.center).abs(), vec![a, b], unresolved)
        }
        None => {
            let single: Vec<Dip> = found.into_iter().take(1).collect();
            (0.0, single, true)
        }
    }
}

/// Runs all nine directions and inverts the splittings.
pub fn run_pair_geometry(config: &PairConfig) -> Result<PairGeometryRun> {
    config.validate()?;
    let g_grid = grid(
        config.larmor_khz - config.half_window_khz,
        config.larmor_khz + config.half_window_khz,
        config.step_khz,
    )?;
    let mut scans = Vec::with_capacity(9);
    let mut dips = Vec::with_capacity(9);
    let mut values = [0.0; 9];
    let mut unresolved = Vec::new();
    for dir in PairDirection::ALL {
        let t = pair_readout_time(config, dir)?;
        let scan = pair_resonance_experiment(config, dir, &g_grid, t)?;
        let (delta, kept, flag) = pair_splitting(&scan);
        values[dir.index()] = delta;
        if flag {
            unresolved.push(dir);
        }
        dips.push((dir, kept));
        scans.push((dir, scan));
    }
    let measured = NineDeltas(values);
    let geometry = invert_pair_geometry(&measured)?;
    Ok(PairGeometryRun {
        scans,
        dips,
        measured,
        geometry,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_alignment_values() {
        let d = pair_deltas(10.0, &Vector3::z()).unwrap();
        assert!((d.get(PairDirection::Z) - 30.0).abs() < 1e-12);
        assert!((d.get(PairDirection::X) - 15.0).abs() < 1e-12);
        assert!(pair_deltas(10.0, &Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn deltas_match_eigengaps() {
        let cfg = PairConfig::default();
        let g = cfg.g().unwrap();
        let r = cfg.r_hat();
        let d = pair_deltas(g, &r).unwrap();
        for dir in PairDirection::ALL {
            let p = crate::model::build_spin_pair(g, r.dot(&dir.vector()), cfg.larmor_khz);
            let (w1, w2) = p.resonances();
            assert!(((w1 - w2).abs() - d.get(dir)).abs() < 1e-9);
        }
    }

    #[test]
    fn water_coupling() {
        let g = PairConfig::default().g().unwrap();
        assert!((g - 34.5).abs() < 0.2, "{g}");
    }

    #[test]
    fn scan_shows_two_dips_at_pair_transitions() {
        let cfg = PairConfig::default();
        let dir = PairDirection::Y;
        let t = pair_readout_time(&cfg, dir).unwrap();
        let g = cfg.g().unwrap();
        let expected = pair_deltas(g, &cfg.r_hat()).unwrap().get(dir);
        let grid = grid(420.0, 580.0, 0.25).unwrap();
        let scan = pair_resonance_experiment(&cfg, dir, &grid, t).unwrap();
        let (delta, _, flag) = pair_splitting(&scan);
        assert!(!flag);
        assert!((delta - expected).abs() < 0.25, "{delta} vs {expected}");
    }
}
