use nalgebra::Vector3;

use crate::error::Result;
use crate::spin::{
    c, spin_operators, CVector, CompositeSpace, Operator, Spin, SpinOperators, SpinSite,
};

use super::dipolar::nv_coupling_operator;

/// Secular pair coupling `g12 [I1b I2b - (I1e1 I2e1 + I1e2 I2e2)/2]` plus a
/// common Zeeman term `omega_n (I1b + I2b)`, with `b` the field axis.
pub fn secular_pair_terms(
    s1: &SpinOperators,
    s2: &SpinOperators,
    b: &Vector3<f64>,
    omega_n: f64,
    g12: f64,
) -> Operator {
    let (e1, e2) = super::transverse_frame(b);
    let (z1, z2) = (s1.along(b), s2.along(b));
    let (x1, x2) = (s1.along(&e1), s2.along(&e1));
    let (y1, y2) = (s1.along(&e2), s2.along(&e2));
    (&z1 + &z2) * omega_n + (&z1 * &z2 - (&x1 * &x2 + &y1 * &y2) * 0.5) * g12
}

/// Two like spins in a strong field, in the field frame (`z` along the field).
#[derive(Debug, Clone)]
pub struct PairEigensystem {
    pub hamiltonian: Operator,
    /// `g (1 - 3 cos^2 theta)`, kHz.
    pub coupling: f64,
    /// `E0..E3`: `|uu>`, triplet zero, singlet, `|dd>`.
    pub energies: [f64; 4],
    pub states: [CVector; 4],
    /// `omega_n / |g|`; the secular form needs this well above 10.
    pub secular_ratio: f64,
}

impl PairEigensystem {
    pub fn secular_ok(&self) -> bool {
        self.secular_ratio >= 10.0
    }

    /// `(E0 - E1, E1 - E3)`: the two transitions out of and into the
    /// triplet-zero state.
    pub fn resonances(&self) -> (f64, f64) {
        let e = self.energies;
        (e[0] - e[1], e[1] - e[3])
    }
}

/// Closed-form eigensystem of a dipolar pair with coupling `g`, alignment
/// cosine `cos_theta` relative to the field and Larmor frequency `omega_n`.
pub fn build_spin_pair(g: f64, cos_theta: f64, omega_n: f64) -> PairEigensystem {
    let half = spin_operators(Spin::Half);
    let g12 = g * (1.0 - 3.0 * cos_theta * cos_theta);
    let s1 = kron_ops(&half, 0);
    let s2 = kron_ops(&half, 1);
    let hamiltonian = secular_pair_terms(&s1, &s2, &Vector3::z(), omega_n, g12);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: f64, b: f64, cc: f64, d: f64| CVector::from_vec(vec![c(a), c(b), c(cc), c(d)]);
    PairEigensystem {
        hamiltonian,
        coupling: g12,
        energies: [omega_n + g12 / 4.0, -g12 / 2.0, 0.0, -omega_n + g12 / 4.0],
        states: [
            v(1.0, 0.0, 0.0, 0.0),
            v(0.0, r, r, 0.0),
            v(0.0, r, -r, 0.0),
            v(0.0, 0.0, 0.0, 1.0),
        ],
        secular_ratio: if g == 0.0 {
            f64::INFINITY
        } else {
            omega_n.abs() / g.abs()
        },
    }
}

fn kron_ops(o: &SpinOperators, slot: usize) -> SpinOperators {
    let id = Operator::identity(2);
    let f = |op: &Operator| if slot == 0 { op.kron(&id) } else { id.kron(op) };
    SpinOperators {
        sx: f(&o.sx),
        sy: f(&o.sy),
        sz: f(&o.sz),
        splus: f(&o.splus),
        sminus: f(&o.sminus),
    }
}

/// Energies and transitions of two driven, coupled electron spins in the
/// frame of their common drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelLadder {
    /// `E0..E3`: `|ux ux>`, x-triplet zero, singlet, `|dx dx>`.
    pub energies: [f64; 4],
    /// `E1 - E3 = Omega + 3 g12 / 8`.
    pub omega1: f64,
    /// `E0 - E1 = Omega - 3 g12 / 8`.
    pub omega2: f64,
    /// `E2 - E3 = Omega + g12 / 8`.
    pub omega3: f64,
    /// `E0 - E2 = Omega - g12 / 8`.
    pub omega4: f64,
}

impl LabelLadder {
    pub fn delta1(&self) -> f64 {
        (self.omega1 - self.omega2).abs()
    }

    pub fn delta2(&self) -> f64 {
        (self.omega3 - self.omega4).abs()
    }
}

pub fn label_ladder(omega: f64, g12: f64) -> LabelLadder {
    let e = [omega - g12 / 8.0, g12 / 4.0, 0.0, -omega - g12 / 8.0];
    LabelLadder {
        energies: e,
        omega1: e[1] - e[3],
        omega2: e[0] - e[1],
        omega3: e[2] - e[3],
        omega4: e[0] - e[2],
    }
}

/// Driven label pair after secularizing the dipolar coupling against the
/// drive: `Omega (S1x + S2x) - (g12/2) S1x S2x + (g12/4)(S1y S2y + S1z S2z)`.
/// The last term is the flip-flop `g12/8 (|ux><dx| (x) |dx><ux| + h.c.)`.
pub(crate) fn label_pair_terms(
    s1: &SpinOperators,
    s2: &SpinOperators,
    omega: f64,
    g12: f64,
) -> Operator {
    (&s1.sx + &s2.sx) * omega - (&s1.sx * &s2.sx) * (g12 / 2.0)
        + (&s1.sy * &s2.sy + &s1.sz * &s2.sz) * (g12 / 4.0)
}

/// NV probe coupled to two driven spin labels, on `[NV, label 1, label 2]`.
#[derive(Debug, Clone)]
pub struct SpinLabelModel {
    pub hamiltonian: Operator,
    pub space: CompositeSpace,
    pub ladder: LabelLadder,
    /// `Omega / |g|`; the effective label Hamiltonian needs this above 10.
    pub drive_ratio: f64,
}

/// Builds the spin-label Hamiltonian.
///
/// `omega0` is the NV Rabi frequency, `omega` the label drive, `a1`/`a2` the
/// NV-label couplings along the field and `g` the label-label dipolar constant
/// with alignment cosine `cos_theta`. All frequencies in kHz.
pub fn build_spin_labels(
    omega0: f64,
    omega: f64,
    a1: f64,
    a2: f64,
    g: f64,
    cos_theta: f64,
) -> Result<SpinLabelModel> {
    let label = |name: &str| {
        SpinSite::new(
            name,
            Spin::Half,
            crate::constants::GAMMA_ELECTRON,
            Vector3::zeros(),
        )
    };
    let space = CompositeSpace::new(vec![
        SpinSite::nv_two_level(),
        label("label1"),
        label("label2"),
    ])?;
    let g12 = g * (1.0 - 3.0 * cos_theta * cos_theta);
    let s1 = space.site_spin(1)?;
    let s2 = space.site_spin(2)?;
    let nv = spin_operators(Spin::Half);
    let pop = nv_coupling_operator(Spin::Half)?;
    let h = space.embed(&nv.sx, 0)? * omega0
        + label_pair_terms(&s1, &s2, omega, g12)
        + space.embed(&pop, 0)? * (&s1.sz * a1 + &s2.sz * a2);
    Ok(SpinLabelModel {
        hamiltonian: h,
        space,
        ladder: label_ladder(omega, g12),
        drive_ratio: if g == 0.0 {
            f64::INFINITY
        } else {
            omega.abs() / g.abs()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_eigs(op: &Operator) -> Vec<f64> {
        let mut e: Vec<f64> = op
            .matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn magic_angle_collapses_triplet() {
        let p = build_spin_pair(30.0, (1.0f64 / 3.0).sqrt(), 500.0);
        assert!(p.coupling.abs() < 1e-12);
        assert!(p.energies[1].abs() < 1e-12);
    }

    #[test]
    fn ladder_values() {
        let p = build_spin_pair(10.0, 0.3, 500.0);
        let e = p.energies;
        assert!((e[0] + e[3] - p.coupling / 2.0).abs() < 1e-12);
        assert!((e[1] + p.coupling / 2.0).abs() < 1e-12);
        assert!(p.secular_ok());
        assert!(!build_spin_pair(100.0, 0.3, 500.0).secular_ok());
    }

    #[test]
    fn homogeneous_label_coupling_leaves_singlet_dark() {
        let m = build_spin_labels(20_000.0, 20_000.0, 30.0, 30.0, 400.0, 1.0).unwrap();
        // With A1 = A2 the singlet of the labels is an invariant subspace.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = CVector::from_vec(vec![c(0.0), c(r), c(-r), c(0.0)]);
        let proj = Operator::identity(2).kron(&Operator::projector(&singlet));
        assert!(m.hamiltonian.commutator(&proj).norm() < 1e-9);
    }

    proptest! {
        #[test]
        fn pair_closed_form_matches_diagonalization(
            g in 0.1f64..60.0, ct in -1.0f64..1.0, wn in 100.0f64..2000.0
        ) {
            let p = build_spin_pair(g, ct, wn);
            for (k, v) in p.states.iter().enumerate() {
                let r = p.hamiltonian.matrix() * v - v * c(p.energies[k]);
                prop_assert!(r.norm() <= 1e-10 * wn);
            }
            let mut e = p.energies.to_vec();
            e.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(sorted_eigs(&p.hamiltonian)) {
                prop_assert!((a - b).abs() <= 1e-10 * wn);
            }
            let (w1, w2) = p.resonances();
            prop_assert!((w1 - (wn + 0.75 * p.coupling)).abs() < 1e-9 * wn);
            prop_assert!((w2 - (wn - 0.75 * p.coupling)).abs() < 1e-9 * wn);
        }

        #[test]
        fn label_ladder_matches_diagonalization(
            g in 1.0f64..500.0, ct in -1.0f64..1.0, om in 5_000.0f64..30_000.0
        ) {
            let h = spin_operators(Spin::Half);
            let s1 = kron_ops(&h, 0);
            let s2 = kron_ops(&h, 1);
            let g12 = g * (1.0 - 3.0 * ct * ct);
            let ham = label_pair_terms(&s1, &s2, om, g12);
            let ladder = label_ladder(om, g12);
            let mut e = ladder.energies.to_vec();
            e.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(sorted_eigs(&ham)) {
                prop_assert!((a - b).abs() <= 1e-10 * om);
            }
            prop_assert!((ladder.delta1() - 0.75 * g12.abs()).abs() < 1e-9 * om);
            prop_assert!((ladder.delta2() - 0.25 * g12.abs()).abs() < 1e-9 * om);
        }
    }
}
