use nalgebra::Vector3;

use super::dipolar::nv_coupling_operator;
use super::pair::{label_ladder, label_pair_terms, LabelLadder};
use crate::error::{invalid, Result};
use crate::spin::{c, spin_operators, CVector, CompositeSpace, Operator, Spin, SpinSite};

/// A Hamiltonian with Lindblad jump operators. Rates are folded into the
/// jump operators as `sqrt(k)` with `k` in 1/ms.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: Operator,
    pub jumps: Vec<Operator>,
}

impl LindbladModel {
    pub fn unitary(hamiltonian: Operator) -> Self {
        LindbladModel {
            hamiltonian,
            jumps: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}

/// Radical pair with recombination, on `[NV, radical 1, radical 2, charge]`.
///
/// The charge register has `|S>` (charge separated) at index 0 and `|P>`
/// (product) at index 1.
#[derive(Debug, Clone)]
pub struct RadicalPairModel {
    pub model: LindbladModel,
    pub space: CompositeSpace,
    /// Singlet projector of the two radicals, embedded in the full space.
    pub q_singlet: Operator,
    /// Triplet projector, `1 - q_singlet`.
    pub q_triplet: Operator,
    /// Projector on the charge-separated sector.
    pub separated: Operator,
    pub ladder: LabelLadder,
}

/// Singlet state of two spin-1/2 in the Kronecker basis.
pub fn singlet_vector() -> CVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![c(0.0), c(r), c(-r), c(0.0)])
}

/// Builds the radical-pair model.
///
/// The NV drive `omega0` acts in both charge sectors. The radical drive
/// `omega`, the radical-radical coupling `g (1 - 3 cos^2 theta)` and the NV
/// couplings `a1`, `a2` act only while the pair is charge separated. Both
/// singlet and triplet recombine at `k_per_us` (1/us).
pub fn build_radical_pair(
    g: f64,
    cos_theta: f64,
    omega: f64,
    k_per_us: f64,
    a1: f64,
    a2: f64,
    omega0: f64,
) -> Result<RadicalPairModel> {
    if !(k_per_us >= 0.0) {
        return Err(invalid(format!(
            "recombination rate must be non-negative, got {k_per_us}"
        )));
    }
    let e = |name: &str| {
        SpinSite::new(
            name,
            Spin::Half,
            crate::constants::GAMMA_ELECTRON,
            Vector3::zeros(),
        )
    };
    let space = CompositeSpace::new(vec![
        SpinSite::nv_two_level(),
        e("radical1"),
        e("radical2"),
        SpinSite::new("charge", Spin::Half, 0.0, Vector3::zeros()),
    ])?;
    let g12 = g * (1.0 - 3.0 * cos_theta * cos_theta);
    let s1 = space.site_spin(1)?;
    let s2 = space.site_spin(2)?;
    let nv = spin_operators(Spin::Half);
    let pop = nv_coupling_operator(Spin::Half)?;
    let sep_local = Operator::diagonal(&[1.0, 0.0]);
    let separated = space.embed(&sep_local, 3)?;

    let spin_part = label_pair_terms(&s1, &s2, omega, g12)
        + space.embed(&pop, 0)? * (&s1.sz * a1 + &s2.sz * a2);
    let hamiltonian = space.embed(&nv.sx, 0)? * omega0 + &spin_part * &separated;

    let q_pair = Operator::projector(&singlet_vector());
    let q_t_pair = Operator::identity(4) - &q_pair;
    let id2 = Operator::identity(2);
    let lower = Operator::from_real(2, &[0.0, 0.0, 1.0, 0.0]); // |P><S|
    let k = k_per_us * 1e3;
    let jump = |q: &Operator| id2.kron(q).kron(&lower) * k.sqrt();
    let q_singlet = id2.kron(&q_pair).kron(&id2);
    let q_triplet = id2.kron(&q_t_pair).kron(&id2);
    Ok(RadicalPairModel {
        model: LindbladModel {
            hamiltonian,
            jumps: vec![jump(&q_pair), jump(&q_t_pair)],
        },
        space,
        q_singlet,
        q_triplet,
        separated,
        ladder: label_ladder(omega, g12),
    })
}
