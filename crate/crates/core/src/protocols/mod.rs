//! The experiments: position finding, nuclear-state readout, pair geometry,
//! spin labels and radical-pair monitoring.

mod labels;
mod pair;
mod position;
mod qnd;
mod radical;

pub use labels::{label_resonances, label_scan, LabelConfig, LabelResonances};
pub use pair::{
    pair_deltas, pair_readout_time, pair_resonance_experiment, pair_splitting, run_pair_geometry,
    PairConfig, PairGeometryRun,
};
pub use position::{
    direction_scan, estimate_position, estimate_position_multi, fit_flip_flop_rate, map_maximum,
    orthogonal_direction, orthogonal_trace, orthogonal_traces, trace_times, FlipFlopFit,
    PositionEstimate, PositionScenario, FIT_RMS_TOLERANCE, ORTHOGONAL_DIRECTIONS,
};
pub use qnd::{qnd_repeat, qnd_scan, rabi_for_resonance, QndConfig};
pub use radical::{radical_monitor, radical_scan, slope_metrics, RadicalConfig};

pub use crate::inversion::{NineDeltas, PairDirection};

use nalgebra::Vector3;

use crate::error::{invalid, Result};

/// Survival probability after a flip-flop exchange with a thermal spin-1/2
/// at rate `j` (kHz) for time `t` (ms): `1/2 + (1 + cos(2 pi j t))/4`.
pub fn analytic_signal(j: f64, t: f64) -> f64 {
    0.5 + 0.25 * (1.0 + (std::f64::consts::TAU * j * t).cos())
}

/// Flip-flop rate `J = (g_N/2) sqrt(3 rz^2 + 1) sqrt(1 - (h . b_e)^2)`, kHz.
///
/// `b_e_hat` is the direction of the target's effective field; `r_hat` the
/// unit NV-target vector.
pub fn flip_flop_rate(g_n: f64, r_hat: &Vector3<f64>, b_e_hat: &Vector3<f64>) -> f64 {
    let comp = crate::model::hyperfine_components(r_hat);
    let amp = comp.norm();
    let cos = comp.dot(b_e_hat) / (amp * b_e_hat.norm());
    0.5 * g_n * amp * (1.0 - cos * cos).max(0.0).sqrt()
}

/// A one-dimensional scan of the signal at a fixed readout time.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceScan {
    /// Name of the swept parameter, e.g. `"omega_nv"`.
    pub parameter: String,
    /// Unit of the grid values.
    pub unit: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Readout time, ms.
    pub readout_ms: f64,
}

impl ResonanceScan {
    pub fn new(
        parameter: &str,
        unit: &str,
        grid: Vec<f64>,
        values: Vec<f64>,
        readout_ms: f64,
    ) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(invalid("scan grid and values differ in length"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("scan grid must be strictly increasing"));
        }
        Ok(ResonanceScan {
            parameter: parameter.into(),
            unit: unit.into(),
            grid,
            values,
            readout_ms,
        })
    }

    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            (self.grid[self.grid.len() - 1] - self.grid[0]) / (self.grid.len() - 1) as f64
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evenly spaced grid from `start` to `stop` inclusive with spacing close to `step`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop > start) {
        return Err(invalid(format!("bad grid [{start}, {stop}] step {step}")));
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n)
        .map(|i| start + (stop - start) * i as f64 / n.max(1) as f64)
        .collect())
}

/// Field-direction grid: `n_theta` polar angles spanning `[0, pi]` including
/// both poles, `n_phi` azimuths `2 pi j / n_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl DirectionGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 3 || n_phi < 4 {
            return Err(invalid(
                "direction grid needs at least 3 polar and 4 azimuthal points",
            ));
        }
        Ok(DirectionGrid { n_theta, n_phi })
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta)
            .map(|i| std::f64::consts::PI * i as f64 / (self.n_theta - 1) as f64)
            .collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi)
            .map(|j| std::f64::consts::TAU * j as f64 / self.n_phi as f64)
            .collect()
    }

    /// Polar and azimuthal spacing, radians.
    pub fn cell(&self) -> (f64, f64) {
        (
            std::f64::consts::PI / (self.n_theta - 1) as f64,
            std::f64::consts::TAU / self.n_phi as f64,
        )
    }
}

/// Signal versus field direction at a fixed readout time.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMap {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `values[i][j]` at `(thetas[i], phis[j])`.
    pub values: Vec<Vec<f64>>,
    pub readout_ms: f64,
}

impl DirectionMap {
    pub fn max_location(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x > v {
                    v = x;
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn mean(&self) -> f64 {
        let n: usize = self.values.iter().map(Vec::len).sum();
        self.values.iter().flatten().sum::<f64>() / n as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
