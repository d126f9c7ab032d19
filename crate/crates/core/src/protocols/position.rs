use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{analytic_signal, DirectionGrid, DirectionMap};
use crate::constants::{field_for_larmor, Species, GAMMA_ELECTRON, GAMMA_P31};
use crate::dynamics::{expectation_series, linspace, SignalTrace};
use crate::error::{invalid, Error, Result};
use crate::model::{
    build_h3po4, build_probe_hamiltonian, distance_from_g, hartmann_hahn_rabi,
    position_from_hyperfine, transverse_frame, FieldConfig, H3po4Geometry,
};
use crate::spin::{Operator, SpinSite, State};

/// A target molecule and the field used to locate it.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionScenario {
    pub geometry: H3po4Geometry,
    /// Field magnitude, Gauss.
    pub field_gauss: f64,
    /// Proton decoupling amplitude, kHz.
    pub rf_khz: f64,
    /// Tune the NV drive to the back-action-shifted phosphorus frequency.
    pub include_back_action: bool,
    /// Include the three protons; otherwise the phosphorus alone.
    pub with_protons: bool,
}

impl PositionScenario {
    /// Phosphoric acid 5 nm away, field with a 500 kHz phosphorus Larmor
    /// frequency and 20 kHz proton decoupling.
    pub fn reference() -> Self {
        PositionScenario {
            geometry: H3po4Geometry::reference(),
            field_gauss: field_for_larmor(Species::P31, 500.0),
            rf_khz: 20.0,
            include_back_action: true,
            with_protons: true,
        }
    }

    /// NV and a lone phosphorus at `position` (nm).
    pub fn two_body(position: Vector3<f64>, field_gauss: f64) -> Self {
        PositionScenario {
            geometry: H3po4Geometry {
                phosphorus: position,
                hydrogens: Vec::new(),
            },
            field_gauss,
            rf_khz: 0.0,
            include_back_action: true,
            with_protons: false,
        }
    }

    fn field(&self, b_hat: &Vector3<f64>) -> Result<FieldConfig> {
        let mut f = FieldConfig::along(self.field_gauss, *b_hat)?;
        f.include_back_action = self.include_back_action;
        Ok(f)
    }

    /// Hartmann-Hahn-tuned NV Rabi frequency for a field direction.
    pub fn tuned_rabi(&self, b_hat: &Vector3<f64>) -> Result<f64> {
        let f = self.field(b_hat)?;
        Ok(hartmann_hahn_rabi(
            GAMMA_P31,
            &f,
            &self.geometry.coupling_vector(),
        ))
    }

    pub fn hamiltonian(&self, b_hat: &Vector3<f64>) -> Result<Operator> {
        let field = self.field(b_hat)?;
        let omega = self.tuned_rabi(b_hat)?;
        if self.with_protons {
            build_h3po4(&field, omega, self.rf_khz, &self.geometry)
        } else {
            build_probe_hamiltonian(
                omega,
                &field,
                &[SpinSite::of_species(Species::P31, self.geometry.phosphorus)],
            )
        }
    }

    fn nuclear_dim(&self) -> usize {
        if self.with_protons {
            16
        } else {
            2
        }
    }

    /// NV in the upper dressed state, nuclei maximally mixed; and the
    /// projector on that NV state.
    fn initial_and_probe(&self) -> (State, Operator) {
        let n = self.nuclear_dim();
        let state = State::tensor(&[State::x_up(), State::maximally_mixed(n)]);
        let probe = Operator::from_matrix(State::x_up().density()).kron(&Operator::identity(n));
        (state, probe)
    }

    /// Survival of the NV dressed state along `times` for one field direction.
    pub fn signal(&self, b_hat: &Vector3<f64>, times: &[f64]) -> Result<Vec<f64>> {
        let h = self.hamiltonian(b_hat)?;
        let (rho, probe) = self.initial_and_probe();
        expectation_series(&h, &rho, &probe, times, None)
    }

    /// NV-phosphorus dipolar constant, kHz.
    pub fn g_n(&self) -> f64 {
        self.geometry.g_n()
    }
}

/// Signal at `t_ms` for every direction of `grid`, each point tuned to the
/// Hartmann-Hahn condition. Runs on the rayon pool and returns rows in grid
/// order.
pub fn direction_scan(
    scenario: &PositionScenario,
    grid: &DirectionGrid,
    t_ms: f64,
) -> Result<DirectionMap> {
    let thetas = grid.thetas();
    let phis = grid.phis();
    let values = thetas
        .par_iter()
        .map(|&th| {
            phis.iter()
                .map(|&ph| Ok(scenario.signal(&crate::model::unit_vector(th, ph), &[t_ms])?[0]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectionMap {
        thetas,
        phis,
        values,
        readout_ms: t_ms,
    })
}

/// A field direction orthogonal to `h`, chosen deterministically as the
/// in-plane direction of `h`'s transverse frame.
pub fn orthogonal_direction(h: &Vector3<f64>) -> Vector3<f64> {
    transverse_frame(h).0
}

/// Signal versus time with the field orthogonal to the estimated hyperfine
/// direction `h_est`, where the flip-flop rate is largest.
pub fn orthogonal_trace(
    scenario: &PositionScenario,
    h_est: &Vector3<f64>,
    times: &[f64],
) -> Result<SignalTrace> {
    let b = orthogonal_direction(h_est);
    let values = scenario.signal(&b, times)?;
    Ok(SignalTrace::new(
        times.to_vec(),
        values,
        "orthogonal-field survival",
    ))
}

/// Number of field directions in the plane orthogonal to the hyperfine
/// vector used by [`orthogonal_traces`].
pub const ORTHOGONAL_DIRECTIONS: usize = 6;

/// Traces for `n` fields spread over half a turn in the plane orthogonal to
/// `h_est`, the first one being [`orthogonal_direction`].
///
/// For a lone target every such field gives the same flip-flop rate.
/// Neighbouring spins that stay coupled to the target (protons under a
/// finite decoupling drive) can only slow it, by an amount that depends on
/// the field direction, so the fastest trace is the least biased.
pub fn orthogonal_traces(
    scenario: &PositionScenario,
    h_est: &Vector3<f64>,
    times: &[f64],
    n: usize,
) -> Result<Vec<SignalTrace>> {
    if n == 0 {
        return Err(invalid("need at least one orthogonal direction"));
    }
    let (e1, e2) = transverse_frame(h_est);
    (0..n)
        .into_par_iter()
        .map(|k| {
            let psi = PI * k as f64 / n as f64;
            let b = e1 * psi.cos() + e2 * psi.sin();
            let values = scenario.signal(&b, times)?;
            Ok(SignalTrace::new(
                times.to_vec(),
                values,
                "orthogonal-field survival",
            ))
        })
        .collect()
}

/// Least-squares fit of the flip-flop signal model to a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipFlopFit {
    /// Rate, kHz.
    pub j: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

fn sse(trace: &SignalTrace, j: f64) -> f64 {
    trace
        .times
        .iter()
        .zip(&trace.values)
        .map(|(&t, &v)| (v - analytic_signal(j, t)).powi(2))
        .sum()
}

/// Fits `J` in `(0, j_max]` by a dense grid search followed by golden-section
/// refinement. Among equally good candidates the smallest `J` wins, which
/// resolves aliasing in favour of the slowest consistent rate.
pub fn fit_flip_flop_rate(trace: &SignalTrace, j_max: f64) -> Result<FlipFlopFit> {
    if trace.len() < 3 {
        return Err(invalid("need at least three samples to fit a rate"));
    }
    let span = trace.times.iter().copied().fold(0.0, f64::max);
    if !(span > 0.0) {
        return Err(invalid("trace must extend beyond t = 0"));
    }
    let min_dt = trace
        .times
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let nyquist = 0.5 / min_dt;
    let upper = if j_max > 0.0 {
        j_max.min(nyquist)
    } else {
        nyquist
    };
    let step = 1.0 / (40.0 * span);
    let n = (upper / step).ceil() as usize;
    let mut best = (step, f64::INFINITY);
    for k in 1..=n {
        let j = (k as f64 * step).min(upper);
        let e = sse(trace, j);
        if e < best.1 * (1.0 - 1e-9) {
            best = (j, e);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(1e-12), (best.0 + step).min(upper));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (sse(trace, x1), sse(trace, x2));
    for _ in 0..200 {
        if (b - a) < 1e-14 * b.max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse(trace, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse(trace, x2);
        }
    }
    let j = 0.5 * (a + b);
    let j = if sse(trace, j) <= best.1 { j } else { best.0 };
    Ok(FlipFlopFit {
        j,
        rms: (sse(trace, j) / trace.len() as f64).sqrt(),
    })
}

/// Estimated target position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    /// Hyperfine polar angle, radians, folded to `<= pi/2`.
    pub theta0: f64,
    /// Hyperfine azimuth, radians.
    pub phi0: f64,
    /// Flip-flop rate at orthogonal field, kHz.
    pub j_est: f64,
    /// Unit NV-target vector on the `rz > 0` branch.
    pub r_hat: Vector3<f64>,
    /// NV-target distance, nm.
    pub r_est: f64,
    pub fit_rms: f64,
    /// The rate fit left a residual above tolerance.
    pub low_confidence: bool,
}

/// Residual above which a rate fit is flagged.
pub const FIT_RMS_TOLERANCE: f64 = 0.02;

fn parabolic_offset(ym: f64, y0: f64, yp: f64) -> f64 {
    let den = ym - 2.0 * y0 + yp;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (ym - yp) / den).clamp(-0.5, 0.5)
    }
}

/// Locates the signal maximum of `map` and refines it with separable
/// parabolic fits over the neighbouring cells.
pub fn map_maximum(map: &DirectionMap) -> (f64, f64) {
    let (i, j) = map.max_location();
    let nt = map.thetas.len();
    let np = map.phis.len();
    let dth = map.thetas[1] - map.thetas[0];
    let dph = TAU / np as f64;
    let row = &map.values[i];
    let theta = if i > 0 && i + 1 < nt {
        map.thetas[i] + dth * parabolic_offset(map.values[i - 1][j], row[j], map.values[i + 1][j])
    } else {
        map.thetas[i]
    };
    let phi = if i > 0 && i + 1 < nt {
        map.phis[j] + dph * parabolic_offset(row[(j + np - 1) % np], row[j], row[(j + 1) % np])
    } else {
        map.phis[j]
    };
    (theta, phi.rem_euclid(TAU))
}

/// Turns a direction map and an orthogonal-field trace into a position.
///
/// The map maximum marks the field direction with vanishing flip-flop rate,
/// i.e. the hyperfine direction (or its antipode; the upper hemisphere is
/// reported). The trace fit gives `J = g_N sqrt(3 rz^2 + 1) / 2`, which with
/// the direction yields `g_N` and hence the distance for a target of
/// gyromagnetic ratio `gamma_target`.
pub fn estimate_position(
    map: &DirectionMap,
    orthogonal: &SignalTrace,
    gamma_target: f64,
    j_max: f64,
) -> Result<PositionEstimate> {
    estimate_position_multi(map, std::slice::from_ref(orthogonal), gamma_target, j_max)
}

/// Like [`estimate_position`] with several orthogonal-field traces; the
/// fastest fitted rate is kept (see [`orthogonal_traces`]).
pub fn estimate_position_multi(
    map: &DirectionMap,
    traces: &[SignalTrace],
    gamma_target: f64,
    j_max: f64,
) -> Result<PositionEstimate> {
    if traces.is_empty() {
        return Err(invalid("need at least one orthogonal-field trace"));
    }
    let (mut theta, mut phi) = map_maximum(map);
    if theta > PI / 2.0 {
        theta = PI - theta;
        phi = (phi + PI).rem_euclid(TAU);
    }
    let mut fit = fit_flip_flop_rate(&traces[0], j_max)?;
    for tr in &traces[1..] {
        let f = fit_flip_flop_rate(tr, j_max)?;
        if f.j > fit.j {
            fit = f;
        }
    }
    let r_hat = position_from_hyperfine(theta, phi)?;
    let amp = (3.0 * r_hat.z * r_hat.z + 1.0).sqrt();
    let g_n = 2.0 * fit.j / amp;
    let r_est = distance_from_g(g_n, GAMMA_ELECTRON, gamma_target).map_err(|e| match e {
        Error::InvalidParameter(_) => Error::Degenerate("fitted flip-flop rate is zero".into()),
        other => other,
    })?;
    Ok(PositionEstimate {
        theta0: theta,
        phi0: phi,
        j_est: fit.j,
        r_hat,
        r_est,
        fit_rms: fit.rms,
        low_confidence: fit.rms > FIT_RMS_TOLERANCE,
    })
}

/// Default time grid for the orthogonal-field trace: `n` points over `span_ms`.
pub fn trace_times(span_ms: f64, n: usize) -> Vec<f64> {
    linspace(0.0, span_ms, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_synthetic_rate() {
        let times = trace_times(10.0, 201);
        for j in [0.05, 0.2065, 1.3] {
            let vals = times.iter().map(|&t| analytic_signal(j, t)).collect();
            let tr = SignalTrace::new(times.clone(), vals, "synthetic");
            let fit = fit_flip_flop_rate(&tr, 0.0).unwrap();
            assert!((fit.j - j).abs() / j < 1e-6, "{} vs {j}", fit.j);
            assert!(fit.rms < 1e-6);
        }
    }

    #[test]
    fn fit_rejects_short_traces() {
        let tr = SignalTrace::new(vec![0.0, 1.0], vec![1.0, 1.0], "x");
        assert!(fit_flip_flop_rate(&tr, 1.0).is_err());
    }

    #[test]
    fn parabola_vertex() {
        // y = -(x - 0.2)^2 sampled at -1, 0, 1.
        let f = |x: f64| -(x - 0.2f64).powi(2);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.2).abs() < 1e-12);
    }
}
