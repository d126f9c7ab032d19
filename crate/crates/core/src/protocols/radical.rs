use rayon::prelude::*;

use super::ResonanceScan;
use crate::dynamics::{evolve_lindblad, SignalTrace};
use crate::error::{invalid, Result};
use crate::model::{build_radical_pair, dipolar_constant, singlet_vector, RadicalPairModel};
use crate::spin::{Operator, State};

/// Radical pair probed by the NV while the pair recombines.
#[derive(Debug, Clone, PartialEq)]
pub struct RadicalConfig {
    /// Radical-radical distance, nm.
    pub distance_nm: f64,
    pub cos_theta: f64,
    /// Radical drive, kHz.
    pub omega_khz: f64,
    /// Recombination rate, 1/us.
    pub k_per_us: f64,
    pub a1_khz: f64,
    pub a2_khz: f64,
    /// Readout time of the resonance scan, ms.
    pub readout_ms: f64,
    /// Scan half-width around the singlet transition and its step, kHz.
    pub half_window_khz: f64,
    pub step_khz: f64,
}

impl Default for RadicalConfig {
    fn default() -> Self {
        RadicalConfig {
            distance_nm: 2.0,
            cos_theta: 1.0,
            omega_khz: 100_000.0,
            k_per_us: 1.0,
            a1_khz: 800.0,
            a2_khz: 200.0,
            readout_ms: 0.001,
            half_window_khz: 3_000.0,
            step_khz: 100.0,
        }
    }
}

impl RadicalConfig {
    pub fn g(&self) -> Result<f64> {
        let ge = crate::constants::GAMMA_ELECTRON;
        dipolar_constant(ge, ge, self.distance_nm)
    }

    /// Singlet transition `Omega + g12/8`, kHz.
    pub fn omega3(&self) -> Result<f64> {
        Ok(self.model(self.omega_khz)?.ladder.omega3)
    }

    pub fn model(&self, omega0: f64) -> Result<RadicalPairModel> {
        build_radical_pair(
            self.g()?,
            self.cos_theta,
            self.omega_khz,
            self.k_per_us,
            self.a1_khz,
            self.a2_khz,
            omega0,
        )
    }

    pub fn scan_grid(&self) -> Result<Vec<f64>> {
        let w3 = self.omega3()?;
        super::grid(
            w3 - self.half_window_khz,
            w3 + self.half_window_khz,
            self.step_khz,
        )
    }
}

/// NV in `|-x>`, radicals in the singlet, charge separated.
fn initial_state() -> State {
    let charge = State::basis(2, 0);
    State::tensor(&[State::x_down(), State::Pure(singlet_vector()), charge])
}

fn nv_down_projector() -> Operator {
    Operator::from_matrix(State::x_down().density()).kron(&Operator::identity(8))
}

/// Survival of the NV in `|-x>` after `config.readout_ms` versus its Rabi
/// frequency.
pub fn radical_scan(config: &RadicalConfig, grid_khz: &[f64]) -> Result<ResonanceScan> {
    if !(config.readout_ms > 0.0) {
        return Err(invalid("readout time must be positive"));
    }
    let rho = initial_state();
    let obs = nv_down_projector();
    let values = grid_khz
        .par_iter()
        .map(|&w| {
            let m = config.model(w)?;
            let traj = evolve_lindblad(&m.model, &rho, &[config.readout_ms])?;
            crate::spin::expectation(&traj.states[0], &obs)
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

/// Time trace of the NV `|-x>` population with the NV tuned to the singlet
/// transition. Also returns the population left in the charge-separated
/// sector.
pub fn radical_monitor(
    config: &RadicalConfig,
    times_ms: &[f64],
) -> Result<(SignalTrace, SignalTrace)> {
    let m = config.model(config.omega3()?)?;
    let traj = evolve_lindblad(&m.model, &initial_state(), times_ms)?;
    let signal = traj.survival(&nv_down_projector())?;
    let separated = traj.survival(&m.separated)?;
    Ok((
        SignalTrace::new(signal.times, signal.values, "nv |-x> population"),
        SignalTrace::new(
            separated.times,
            separated.values,
            "charge-separated population",
        ),
    ))
}

/// `(initial, late)` slopes of a monitor trace, 1/ms.
///
/// The initial slope is the mean slope over the first lifetime `1/k`; the
/// late slope is the largest point-to-point slope after `5/k`.
pub fn slope_metrics(trace: &SignalTrace, k_per_ms: f64) -> Result<(f64, f64)> {
    if !(k_per_ms > 0.0) {
        return Err(invalid("slope metrics need a positive decay rate"));
    }
    let (t, s) = (&trace.times, &trace.values);
    if t.len() < 3 {
        return Err(invalid("trace too short for slope metrics"));
    }
    let life = 1.0 / k_per_ms;
    let at = |x: f64| {
        let i = t.partition_point(|&v| v < x).min(t.len() - 1);
        (t[i], s[i])
    };
    let (t0, s0) = (t[0], s[0]);
    let (t1, s1) = at(t0 + life);
    if t1 <= t0 {
        return Err(invalid("trace does not cover one lifetime"));
    }
    let initial = ((s1 - s0) / (t1 - t0)).abs();
    let start = t0 + 5.0 * life;
    if t[t.len() - 1] <= start {
        return Err(invalid("trace does not extend past five lifetimes"));
    }
    let late = t
        .windows(2)
        .zip(s.windows(2))
        .filter(|(tw, _)| tw[0] >= start)
        .map(|(tw, sw)| ((sw[1] - sw[0]) / (tw[1] - tw[0])).abs())
        .fold(0.0, f64::max);
    Ok((initial, late))
}
