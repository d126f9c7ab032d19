//! Fixtures shared by the benchmarks.

use nvscope::bath::{build_bath_hamiltonian, sample_bath, BathConfig, DecouplingPreset};
use nvscope::model::unit_vector;
use nvscope::protocols::PositionScenario;
use nvscope::Operator;

/// Phosphoric acid with its three protons, the largest probe Hamiltonian.
pub fn h3po4_hamiltonian() -> Operator {
    PositionScenario::reference()
        .hamiltonian(&unit_vector(1.0, 0.5))
        .expect("reference scenario builds")
}

/// Driven NV with a bath of `count` carbon-13 spins.
pub fn bath_hamiltonian(count: usize) -> Operator {
    let bath = sample_bath(&BathConfig {
        count,
        ..BathConfig::default()
    })
    .expect("default bath samples");
    let p = DecouplingPreset::phosphorus();
    build_bath_hamiltonian(&bath, p.omega_khz, &p.field()).expect("bath builds")
}
