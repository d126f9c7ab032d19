//! Time evolution of spin systems.
//!
//! Propagators are `exp(-i 2 pi H t)` with `H` in kHz and `t` in ms.

mod eigen;
mod lindblad;
mod unitary;

pub use eigen::{EigenCache, Eigensystem};
pub use lindblad::{evolve_lindblad, lindblad_rhs, min_eigenvalue, superoperator};
pub use unitary::{
    ensemble_expectations, evolve_static, evolve_static_cached, evolve_stepped, expectation_series,
    ExpectationPropagator,
};

use crate::error::{Error, Result};
use crate::spin::{expectation, Operator, State};

/// States sampled along a time grid (ms).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    /// Pointwise expectation of a projector.
    pub fn survival(&self, projector: &Operator) -> Result<SignalTrace> {
        survival(self, projector)
    }
}

/// A measured probability versus time (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl SignalTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Self {
        SignalTrace {
            times,
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Smallest value; `+inf` for an empty trace.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest value; `-inf` for an empty trace.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks that every value is a probability within `slack`.
    pub fn check_probabilities(&self, slack: f64) -> Result<()> {
        match self
            .values
            .iter()
            .position(|&v| !(v >= -slack && v <= 1.0 + slack))
        {
            None => Ok(()),
            Some(i) => Err(Error::InvalidState(format!(
                "signal {} at t = {} ms is not a probability",
                self.values[i], self.times[i]
            ))),
        }
    }
}

pub fn survival(traj: &Trajectory, projector: &Operator) -> Result<SignalTrace> {
    projector.ensure_projector(1e-9)?;
    let values = traj
        .states
        .iter()
        .map(|s| expectation(s, projector))
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalTrace::new(traj.times.clone(), values, "survival"))
}

/// `n` evenly spaced times from `0` to `t_end` inclusive.
pub fn linspace(t_start: f64, t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_start],
        _ => (0..n)
            .map(|i| t_start + (t_end - t_start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
