use rayon::prelude::*;

use super::ResonanceScan;
use crate::dynamics::{evolve_static, expectation_series, SignalTrace};
use crate::error::{invalid, Result};
use crate::model::{build_nc60, NC60Geometry, NC60Model};
use crate::spin::{CMatrix, Operator, Spin, State};

/// Settings for reading out the nitrogen spin of N@C60.
#[derive(Debug, Clone, PartialEq)]
pub struct QndConfig {
    /// Field along the NV axis, Gauss. The default puts the electron Larmor
    /// frequency at exactly 300 MHz.
    pub field_gauss: f64,
    pub geometry: NC60Geometry,
}

impl Default for QndConfig {
    fn default() -> Self {
        QndConfig {
            field_gauss: 300_000.0 / crate::constants::GAMMA_ELECTRON,
            geometry: NC60Geometry::default(),
        }
    }
}

/// NV Rabi frequency placing the dressed transition `sqrt(2 Omega^2 + omega_e^2)`
/// at `omega_target` (both kHz).
pub fn rabi_for_resonance(omega_target: f64, omega_e: f64) -> Result<f64> {
    if !(omega_target > omega_e) {
        return Err(invalid(format!(
            "target frequency {omega_target} kHz must exceed the electron Larmor frequency {omega_e} kHz"
        )));
    }
    Ok(((omega_target * omega_target - omega_e * omega_e) / 2.0).sqrt())
}

fn nuclear_state(m_i: i32) -> Result<(State, usize)> {
    let k = Spin::One
        .index_of(m_i as f64)
        .ok_or_else(|| invalid(format!("m_I = {m_i} is not a spin-1 projection")))?;
    Ok((State::basis(3, k), k))
}

/// Initial state `|D> (x) 1/4 (x) |m_I>` and the two observables: the dark
/// state projector and the nuclear projector.
fn setup(model: &NC60Model, m_i: i32) -> Result<(State, Operator, Operator)> {
    let dressed = model
        .dressed
        .as_ref()
        .ok_or_else(|| invalid("nuclear readout needs a driven NV"))?;
    let (nuc, k) = nuclear_state(m_i)?;
    let dark = State::Pure(dressed.dark.clone());
    let rho = State::tensor(&[dark.clone(), State::maximally_mixed(4), nuc]);
    let p_dark = Operator::from_matrix(dark.density()).kron(&Operator::identity(12));
    let mut p = vec![0.0; 3];
    p[k] = 1.0;
    let p_nuc = Operator::identity(12).kron(&Operator::diagonal(&p));
    Ok((rho, p_dark, p_nuc))
}

/// Dark-state population after `t_ms` versus the dressed NV frequency
/// `omega_nv` (kHz), with the nitrogen prepared in `m_i`.
pub fn qnd_scan(
    config: &QndConfig,
    m_i: i32,
    grid_khz: &[f64],
    t_ms: f64,
) -> Result<ResonanceScan> {
    let omega_e = crate::constants::GAMMA_ELECTRON * config.field_gauss;
    let values = grid_khz
        .par_iter()
        .map(|&w| {
            let omega = rabi_for_resonance(w, omega_e)?;
            let model = build_nc60(omega, config.field_gauss, &config.geometry)?;
            let (rho, p_dark, _) = setup(&model, m_i)?;
            Ok(expectation_series(&model.hamiltonian, &rho, &p_dark, &[t_ms], None)?[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    ResonanceScan::new("omega_nv", "kHz", grid_khz.to_vec(), values, t_ms)
}

/// Repeated readouts at dressed frequency `omega_nv` (kHz).
///
/// Each readout lasts `t_each_ms` and is sampled `samples` times; after each
/// the NV is measured and re-prepared in `|D>` while the cage spins carry
/// over. Returns the dark-state population and the nuclear fidelity
/// `<m_I|rho_N|m_I>` on a common, continuous time axis.
pub fn qnd_repeat(
    config: &QndConfig,
    m_i: i32,
    omega_nv: f64,
    n_readouts: usize,
    t_each_ms: f64,
    samples: usize,
) -> Result<(SignalTrace, SignalTrace)> {
    if samples < 2 || n_readouts == 0 {
        return Err(invalid(
            "need at least one readout and two samples per readout",
        ));
    }
    let omega_e = crate::constants::GAMMA_ELECTRON * config.field_gauss;
    let omega = rabi_for_resonance(omega_nv, omega_e)?;
    let model = build_nc60(omega, config.field_gauss, &config.geometry)?;
    let (mut rho, p_dark, p_nuc) = setup(&model, m_i)?;
    let dark = model
        .dressed
        .as_ref()
        .map(|d| d.dark.clone())
        .unwrap_or_default();
    let dark_rho = &dark * dark.adjoint();
    let local: Vec<f64> = (0..samples)
        .map(|s| t_each_ms * s as f64 / (samples - 1) as f64)
        .collect();
    let (mut ts, mut sig, mut fid) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..n_readouts {
        let traj = evolve_static(&model.hamiltonian, &rho, &local)?;
        for (k, st) in traj.states.iter().enumerate() {
            if r > 0 && k == 0 {
                continue;
            }
            ts.push(r as f64 * t_each_ms + local[k]);
            sig.push(crate::spin::expectation(st, &p_dark)?);
            fid.push(crate::spin::expectation(st, &p_nuc)?);
        }
        let last = traj.states.last().expect("non-empty grid").density();
        rho = State::Mixed(reset_nv(&last, &dark_rho));
    }
    Ok((
        SignalTrace::new(ts.clone(), sig, "dark-state population"),
        SignalTrace::new(ts, fid, "nuclear fidelity"),
    ))
}

/// `|D><D| (x) Tr_NV(rho)` for the `[3, 12]` split of the space.
fn reset_nv(rho: &CMatrix, dark: &CMatrix) -> CMatrix {
    let rest = 12;
    let reduced = CMatrix::from_fn(rest, rest, |a, b| {
        (0..3).map(|n| rho[(n * rest + a, n * rest + b)]).sum()
    });
    dark.kronecker(&reduced)
}
