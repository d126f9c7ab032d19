use std::collections::HashMap;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::model::LindbladModel;
use crate::spin::{c, CMatrix, CVector, State, C64};

/// Largest Hilbert dimension propagated with the exact superoperator
/// exponential; larger systems use fixed-step RK4.
pub const EXACT_DIM_LIMIT: usize = 32;

const TRACE_TOL: f64 = 1e-6;

/// Liouvillian acting on row-major vectorized density matrices,
/// `vec(rho)[i d + j] = rho[i, j]`, so that `vec(A rho B) = (A (x) B^T) vec(rho)`.
pub fn superoperator(model: &LindbladModel) -> CMatrix {
    let d = model.dim();
    let id = CMatrix::identity(d, d);
    let h = model.hamiltonian.matrix();
    let mi2pi = C64::new(0.0, -std::f64::consts::TAU);
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * mi2pi;
    for jump in &model.jumps {
        let a = jump.matrix();
        let ada = a.adjoint() * a;
        l += a.kronecker(&a.map(|z| z.conj()));
        l -= (ada.kronecker(&id) + id.kronecker(&ada.transpose())) * c(0.5);
    }
    l
}

/// `d rho / dt` in 1/ms.
pub fn lindblad_rhs(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let h = model.hamiltonian.matrix();
    let mut out = (h * rho - rho * h) * C64::new(0.0, -std::f64::consts::TAU);
    for jump in &model.jumps {
        let a = jump.matrix();
        let ada = a.adjoint() * a;
        out += a * rho * a.adjoint() - (&ada * rho + rho * &ada) * c(0.5);
    }
    out
}

fn vectorize(rho: &CMatrix) -> CVector {
    let d = rho.nrows();
    CVector::from_iterator(d * d, (0..d * d).map(|k| rho[(k / d, k % d)]))
}

fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Smallest eigenvalue of the Hermitian part of a density matrix.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let herm = (rho + rho.adjoint()) * c(0.5);
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_trace(rho: &CMatrix, t: f64) -> Result<()> {
    let drift = (rho.trace() - c(1.0)).norm();
    if drift > TRACE_TOL {
        return Err(Error::TraceDrift { drift, t });
    }
    Ok(())
}

/// Solves the Lindblad master equation on a grid of increasing times (ms).
///
/// Uses `exp(L dt)` (cached per distinct interval) up to dimension
/// [`EXACT_DIM_LIMIT`] and classical RK4 beyond. Fails if the trace drifts by
/// more than 1e-6.
pub fn evolve_lindblad(model: &LindbladModel, rho0: &State, times: &[f64]) -> Result<Trajectory> {
    let d = model.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho0.dim(),
        });
    }
    model.hamiltonian.ensure_hermitian()?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "times must be non-negative and increasing".into(),
        ));
    }
    let rho = rho0.density();
    check_trace(&rho, 0.0)?;
    let states = if d <= EXACT_DIM_LIMIT {
        exact_path(model, rho, times)?
    } else {
        rk4_path(model, rho, times)?
    };
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

/// Indices of `vec(rho)` reachable from the support of `v` under the
/// sparsity pattern of `l`. The complement stays exactly zero for all times,
/// so the exponential can be taken on the reachable block alone.
fn reachable(l: &CMatrix, v: &CVector) -> Vec<usize> {
    let n = v.len();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| v[i] != C64::new(0.0, 0.0)).collect();
    for &i in &stack {
        seen[i] = true;
    }
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && l[(j, i)] != C64::new(0.0, 0.0) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

fn exact_path(model: &LindbladModel, rho: CMatrix, times: &[f64]) -> Result<Vec<State>> {
    let d = model.dim();
    let full = superoperator(model);
    let v_full = vectorize(&rho);
    let idx = reachable(&full, &v_full);
    let m = idx.len();
    let l = CMatrix::from_fn(m, m, |a, b| full[(idx[a], idx[b])]);
    let mut v = CVector::from_fn(m, |a, _| v_full[idx[a]]);
    let mut steps: HashMap<u64, CMatrix> = HashMap::new();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let dt = target - t;
        if dt > 0.0 {
            // Intervals equal to within round-off share one exponential.
            let key = ((dt * 1e12).round() as i64) as u64;
            let p = steps.entry(key).or_insert_with(|| (&l * c(dt)).exp());
            v = &*p * v;
            t = target;
        }
        let mut flat = CVector::zeros(d * d);
        for (a, &i) in idx.iter().enumerate() {
            flat[i] = v[a];
        }
        let rho_t = unvectorize(&flat, d);
        check_trace(&rho_t, t)?;
        out.push(State::Mixed(rho_t));
    }
    Ok(out)
}

fn rk4_path(model: &LindbladModel, mut rho: CMatrix, times: &[f64]) -> Result<Vec<State>> {
    // Rate bound from Frobenius norms; RK4 is accurate for rate * h well below 1.
    let rate = 2.0 * std::f64::consts::TAU * model.hamiltonian.norm()
        + 2.0 * model.jumps.iter().map(|j| j.norm().powi(2)).sum::<f64>();
    let h_max = if rate > 0.0 {
        0.05 / rate
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = lindblad_rhs(model, &rho);
                let k2 = lindblad_rhs(model, &(&rho + &k1 * c(0.5 * h)));
                let k3 = lindblad_rhs(model, &(&rho + &k2 * c(0.5 * h)));
                let k4 = lindblad_rhs(model, &(&rho + &k3 * c(h)));
                rho += (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
            }
            t = target;
        }
        check_trace(&rho, t)?;
        out.push(State::Mixed(rho.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_static;
    use crate::spin::{spin_operators, Operator, Spin};

    fn decay_model(k: f64) -> LindbladModel {
        let lower = Operator::from_real(2, &[0.0, 0.0, 1.0, 0.0]);
        LindbladModel {
            hamiltonian: Operator::zeros(2),
            jumps: vec![lower * k.sqrt()],
        }
    }

    #[test]
    fn superoperator_matches_rhs() {
        let o = spin_operators(Spin::Half);
        let model = LindbladModel {
            hamiltonian: &o.sx * 1.3 + &o.sz * 0.4,
            jumps: vec![&o.sminus * 0.8, &o.sz * 0.3],
        };
        let rho = State::x_up().density();
        let direct = lindblad_rhs(&model, &rho);
        let via = unvectorize(&(superoperator(&model) * vectorize(&rho)), 2);
        assert!((direct - via).norm() < 1e-12);
    }

    #[test]
    fn pure_decay_is_exponential() {
        let k = 2.5;
        let times = [0.0, 0.1, 0.2, 0.7];
        let tr = evolve_lindblad(&decay_model(k), &State::basis(2, 0), &times).unwrap();
        for (t, s) in times.iter().zip(&tr.states) {
            assert!((s.density()[(0, 0)].re - (-k * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn no_jumps_matches_unitary() {
        let o = spin_operators(Spin::One);
        let h = &o.sx * 2.0 + &o.sz * 0.5;
        let model = LindbladModel::unitary(h.clone());
        let rho0 = State::mixed(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.6),
            c(0.3),
            c(0.1),
        ])))
        .unwrap();
        let times = [0.0, 0.05, 0.3];
        let a = evolve_lindblad(&model, &rho0, &times).unwrap();
        let b = evolve_static(&h, &rho0, &times).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x.density() - y.density()).norm() < 1e-10);
        }
    }
}
