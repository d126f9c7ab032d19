use std::sync::Arc;

use super::eigen::{EigenCache, Eigensystem};
use super::Trajectory;
use crate::error::{Error, Result};
use crate::spin::{CMatrix, CVector, Operator, State, C64};

fn check_dims(h: &Operator, state: &State) -> Result<()> {
    if h.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: state.dim(),
        });
    }
    Ok(())
}

fn evolve_with(eig: &Eigensystem, initial: &State, times: &[f64]) -> Trajectory {
    let v = &eig.vectors;
    let states = match initial {
        State::Pure(psi) => {
            let coeffs = v.adjoint() * psi;
            times
                .iter()
                .map(|&t| State::Pure(v * coeffs.component_mul(&eig.phases(t))))
                .collect()
        }
        State::Mixed(rho) => {
            let rt = eig.to_eigenbasis(rho);
            times
                .iter()
                .map(|&t| {
                    let ph = eig.phases(t);
                    let evolved = CMatrix::from_fn(rt.nrows(), rt.ncols(), |j, k| {
                        rt[(j, k)] * ph[j] * ph[k].conj()
                    });
                    State::Mixed(v * evolved * v.adjoint())
                })
                .collect()
        }
    };
    Trajectory {
        times: times.to_vec(),
        states,
    }
}

/// Exact evolution under a static Hamiltonian from a single eigendecomposition.
pub fn evolve_static(h: &Operator, initial: &State, times: &[f64]) -> Result<Trajectory> {
    check_dims(h, initial)?;
    let eig = Eigensystem::new(h)?;
    Ok(evolve_with(&eig, initial, times))
}

/// As [`evolve_static`], reusing decompositions stored in `cache`.
pub fn evolve_static_cached(
    h: &Operator,
    initial: &State,
    times: &[f64],
    cache: &EigenCache,
) -> Result<Trajectory> {
    check_dims(h, initial)?;
    let eig = cache.get_or_compute(h)?;
    Ok(evolve_with(&eig, initial, times))
}

/// Expectation values of one observable along a time grid without forming
/// the evolved states.
///
/// In the eigenbasis, `<O>(t) = sum_jk O_kj rho_jk exp(-i 2 pi (E_j - E_k) t)`,
/// which costs `O(d^2)` per time point after an `O(d^3)` setup.
#[derive(Debug, Clone)]
pub struct ExpectationPropagator {
    eig: Arc<Eigensystem>,
    weights: CMatrix,
}

impl ExpectationPropagator {
    pub fn new(eig: Arc<Eigensystem>, initial: &State, obs: &Operator) -> Result<Self> {
        if initial.dim() != eig.dim() || obs.dim() != eig.dim() {
            return Err(Error::DimensionMismatch {
                expected: eig.dim(),
                found: initial.dim().max(obs.dim()),
            });
        }
        obs.ensure_hermitian()?;
        let ot = eig.to_eigenbasis(obs.matrix());
        let rt = match initial {
            State::Pure(psi) => {
                let c = eig.vectors.adjoint() * psi;
                &c * c.adjoint()
            }
            State::Mixed(rho) => eig.to_eigenbasis(rho),
        };
        let weights = rt.component_mul(&ot.transpose());
        Ok(ExpectationPropagator { eig, weights })
    }

    pub fn value(&self, t: f64) -> f64 {
        let ph = self.eig.phases(t);
        let wphi: CVector = &self.weights * ph.map(|z| z.conj());
        let s: C64 = ph.iter().zip(wphi.iter()).map(|(a, b)| a * b).sum();
        s.re
    }

    pub fn values(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.value(t)).collect()
    }
}

/// `<obs>(t)` for a static Hamiltonian, optionally through a cache.
pub fn expectation_series(
    h: &Operator,
    initial: &State,
    obs: &Operator,
    times: &[f64],
    cache: Option<&EigenCache>,
) -> Result<Vec<f64>> {
    check_dims(h, initial)?;
    let eig = match cache {
        Some(c) => c.get_or_compute(h)?,
        None => Arc::new(Eigensystem::new(h)?),
    };
    Ok(ExpectationPropagator::new(eig, initial, obs)?.values(times))
}

/// `sum_i w_i <psi_i(t)|O|psi_i(t)>` for a weighted ensemble of pure states.
///
/// Agrees with propagating the density matrix `sum_i w_i |psi_i><psi_i|`.
pub fn ensemble_expectations(
    h: &Operator,
    members: &[(f64, CVector)],
    obs: &Operator,
    times: &[f64],
) -> Result<Vec<f64>> {
    let eig = Arc::new(Eigensystem::new(h)?);
    let mut out = vec![0.0; times.len()];
    for (w, psi) in members {
        let p = ExpectationPropagator::new(eig.clone(), &State::pure(psi.clone())?, obs)?;
        for (o, v) in out.iter_mut().zip(p.values(times)) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Piecewise-constant propagation of a time-dependent Hamiltonian.
///
/// Each step of length `dt` uses `H` sampled at the step midpoint, which is
/// second-order accurate. `f_max` is the fastest frequency (kHz) present in
/// `H(t)`; steps coarser than `1 / (20 f_max)` are rejected. The returned
/// trajectory samples every step boundary, the last step shortened to land
/// on `t_end`.
pub fn evolve_stepped<F>(
    h: F,
    initial: &State,
    t_end: f64,
    dt: f64,
    f_max: f64,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Operator,
{
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter("need dt > 0 and t_end >= 0".into()));
    }
    let limit = 1.0 / (20.0 * f_max.abs());
    if dt > limit {
        return Err(Error::StepTooCoarse { dt, f_max, limit });
    }
    let n = (t_end / dt).ceil() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut t = 0.0;
    let mut state = initial.clone();
    times.push(t);
    states.push(state.clone());
    for k in 0..n {
        let t_next = if k + 1 == n {
            t_end
        } else {
            (k + 1) as f64 * dt
        };
        let step = t_next - t;
        let hm = h(t + 0.5 * step);
        check_dims(&hm, &state)?;
        let u = Eigensystem::new(&hm)?.propagator(step);
        state = match state {
            State::Pure(v) => State::Pure(&u * v),
            State::Mixed(r) => State::Mixed(&u * r * u.adjoint()),
        };
        t = t_next;
        times.push(t);
        states.push(state.clone());
    }
    Ok(Trajectory { times, states })
}
