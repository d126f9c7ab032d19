use rayon::prelude::*;

use super::{grid, ResonanceScan};
use crate::dynamics::{Eigensystem, ExpectationPropagator};
use crate::error::{invalid, Result};
use crate::inversion::{find_dips_with, pair_deepest, Dip, DipOptions};
use crate::model::{build_spin_labels, dipolar_constant, LabelLadder};
use crate::spin::{Operator, State};

/// Two electron spin labels probed by the NV while driven at `omega_khz`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelConfig {
    /// Label-label distance, nm.
    pub distance_nm: f64,
    /// Cosine of the angle between the label axis and the field.
    pub cos_theta: f64,
    /// Label drive, kHz.
    pub omega_khz: f64,
    /// NV-label couplings along the field, kHz.
    pub a1_khz: f64,
    pub a2_khz: f64,
    pub readout_ms: f64,
    /// Scan half-width around the label drive and its step, kHz. `None`
    /// derives both from the expected splitting.
    pub half_window_khz: Option<f64>,
    pub step_khz: Option<f64>,
}

impl LabelConfig {
    /// Labels 5 nm apart, read out after 20 us.
    pub fn five_nm() -> Self {
        LabelConfig {
            distance_nm: 5.0,
            cos_theta: 1.0,
            omega_khz: 20_000.0,
            a1_khz: 40.0,
            a2_khz: 20.0,
            readout_ms: 0.02,
            half_window_khz: None,
            step_khz: None,
        }
    }

    /// Labels 8 nm apart, read out after 40 us.
    pub fn eight_nm() -> Self {
        LabelConfig {
            distance_nm: 8.0,
            a1_khz: 20.0,
            a2_khz: 5.0,
            readout_ms: 0.04,
            ..Self::five_nm()
        }
    }

    pub fn g(&self) -> Result<f64> {
        let ge = crate::constants::GAMMA_ELECTRON;
        dipolar_constant(ge, ge, self.distance_nm)
    }

    pub fn ladder(&self) -> Result<LabelLadder> {
        let g12 = self.g()? * (1.0 - 3.0 * self.cos_theta * self.cos_theta);
        Ok(crate::model::label_ladder(self.omega_khz, g12))
    }

    /// Default NV Rabi grid: 1.6 times the outer resonances, at least
    /// 50 kHz each way, 500 intervals.
    pub fn scan_grid(&self) -> Result<Vec<f64>> {
        let ladder = self.ladder()?;
        let half = self
            .half_window_khz
            .unwrap_or_else(|| (1.6 * ladder.delta1() / 2.0).max(50.0));
        let step = self.step_khz.unwrap_or(half / 250.0);
        grid(self.omega_khz - half, self.omega_khz + half, step)
    }

    fn validate(&self) -> Result<()> {
        if !(self.cos_theta.abs() <= 1.0) {
            return Err(invalid("cos_theta must lie in [-1, 1]"));
        }
        if !(self.readout_ms > 0.0) || !(self.omega_khz > 0.0) || !(self.distance_nm > 0.0) {
            return Err(invalid("distance, drive and readout time must be positive"));
        }
        Ok(())
    }
}

/// Survival of the NV in `|+x>` after `config.readout_ms` versus its Rabi
/// frequency, with both labels maximally mixed.
pub fn label_scan(config: &LabelConfig, grid_khz: &[f64]) -> Result<ResonanceScan> {
    config.validate()?;
    let g = config.g()?;
    let rho = State::tensor(&[State::x_up(), State::maximally_mixed(4)]);
    let obs = Operator::from_matrix(State::x_up().density()).kron(&Operator::identity(4));
    let values = grid_khz
        .par_iter()
        .map(|&w| {
            let m = build_spin_labels(
                w,
                config.omega_khz,
                config.a1_khz,
                config.a2_khz,
                g,
                config.cos_theta,
            )?;
            let eig = std::sync::Arc::new(Eigensystem::new(&m.hamiltonian)?);
            Ok(ExpectationPropagator::new(eig, &rho, &obs)?.value(config.readout_ms))
        })
        .collect::<Result<Vec<f64>>>()?;
    ResonanceScan::new(
        "omega_nv",
        "kHz",
        grid_khz.to_vec(),
        values,
        config.readout_ms,
    )
}

/// Label scan with the extracted splittings.
#[derive(Debug, Clone)]
pub struct LabelResonances {
    pub scan: ResonanceScan,
    pub dips: Vec<Dip>,
    /// Separation of the two strongest dips, kHz.
    pub delta1: Option<f64>,
    /// Separation of the weaker inner pair, kHz, when it is visible.
    pub delta2: Option<f64>,
}

/// Minimum depth of the inner satellite dips, relative to the main dips.
const SATELLITE_RELATIVE_DEPTH: f64 = 0.1;

/// Finds the main pair of dips and looks for the inner pair expected at one
/// third of their separation, symmetric about their midpoint.
pub fn label_resonances(config: &LabelConfig, grid_khz: &[f64]) -> Result<LabelResonances> {
    let scan = label_scan(config, grid_khz)?;
    let width = (1.0 / config.readout_ms).max(scan.step());
    let dips = find_dips_with(
        &scan,
        DipOptions {
            depth_threshold: 0.005,
            expected_width: Some(width),
        },
    )?;
    let Some((lo, hi)) = pair_deepest(&dips) else {
        return Ok(LabelResonances {
            scan,
            dips,
            delta1: None,
            delta2: None,
        });
    };
    let delta1 = hi.center - lo.center;
    let mid = 0.5 * (hi.center + lo.center);
    let main_depth = lo.depth.min(hi.depth);
    let tol = (0.25 * width).max(2.0 * scan.step());
    let near = |target: f64| {
        dips.iter()
            .filter(|d| {
                (d.center - target).abs() <= tol && d.depth >= SATELLITE_RELATIVE_DEPTH * main_depth
            })
            .min_by(|a, b| {
                (a.center - target)
                    .abs()
                    .total_cmp(&(b.center - target).abs())
            })
            .copied()
    };
    let delta2 = match (near(mid - delta1 / 6.0), near(mid + delta1 / 6.0)) {
        (Some(a), Some(b)) => Some(b.center - a.center),
        _ => None,
    };
    Ok(LabelResonances {
        scan,
        dips,
        delta1: Some(delta1),
        delta2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_splitting_is_three_halves_of_g() {
        let c = LabelConfig::five_nm();
        let ladder = c.ladder().unwrap();
        assert!((ladder.delta1() - 1.5 * c.g().unwrap()).abs() < 1e-9);
        assert!((c.g().unwrap() - 416.1).abs() / 416.1 < 5e-3);
    }

    #[test]
    fn grid_brackets_outer_resonances() {
        let c = LabelConfig::eight_nm();
        let ladder = c.ladder().unwrap();
        let grid = c.scan_grid().unwrap();
        assert!(grid[0] < ladder.omega2.min(ladder.omega1));
        assert!(*grid.last().unwrap() > ladder.omega2.max(ladder.omega1));
        assert_eq!(grid.len(), 501);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = LabelConfig::five_nm();
        c.cos_theta = 1.5;
        assert!(label_scan(&c, &[20_000.0]).is_err());
        let mut c = LabelConfig::five_nm();
        c.readout_ms = 0.0;
        assert!(label_scan(&c, &[20_000.0]).is_err());
    }

    #[test]
    fn coarse_scan_finds_main_splitting_and_satellites() {
        let mut c = LabelConfig::five_nm();
        c.step_khz = Some(4.0);
        let grid = c.scan_grid().unwrap();
        let r = label_resonances(&c, &grid).unwrap();
        let d1 = r.delta1.expect("main pair resolved");
        assert!((d1 - c.ladder().unwrap().delta1()).abs() <= 4.0, "{d1}");
        assert!(r.delta2.is_some());

        c.a2_khz = c.a1_khz;
        let r = label_resonances(&c, &grid).unwrap();
        assert!(r.delta1.is_some());
        assert!(r.delta2.is_none());
    }
}
