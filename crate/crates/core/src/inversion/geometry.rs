use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};

/// The nine field directions of the pair-geometry protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairDirection {
    X,
    Y,
    Z,
    XPlusY,
    XMinusY,
    XPlusZ,
    XMinusZ,
    YPlusZ,
    YMinusZ,
}

impl PairDirection {
    pub const ALL: [PairDirection; 9] = [
        PairDirection::X,
        PairDirection::Y,
        PairDirection::Z,
        PairDirection::XPlusY,
        PairDirection::XMinusY,
        PairDirection::XPlusZ,
        PairDirection::XMinusZ,
        PairDirection::YPlusZ,
        PairDirection::YMinusZ,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&d| d == self).expect("listed")
    }

    /// Short label such as `x`, `x+y`, `y-z`.
    pub fn label(self) -> &'static str {
        match self {
            PairDirection::X => "x",
            PairDirection::Y => "y",
            PairDirection::Z => "z",
            PairDirection::XPlusY => "x+y",
            PairDirection::XMinusY => "x-y",
            PairDirection::XPlusZ => "x+z",
            PairDirection::XMinusZ => "x-z",
            PairDirection::YPlusZ => "y+z",
            PairDirection::YMinusZ => "y-z",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label() == s.trim())
    }

    /// Unit field direction.
    pub fn vector(self) -> Vector3<f64> {
        let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
        let v = match self {
            PairDirection::X => x,
            PairDirection::Y => y,
            PairDirection::Z => z,
            PairDirection::XPlusY => x + y,
            PairDirection::XMinusY => x - y,
            PairDirection::XPlusZ => x + z,
            PairDirection::XMinusZ => x - z,
            PairDirection::YPlusZ => y + z,
            PairDirection::YMinusZ => y - z,
        };
        v.normalize()
    }
}

/// Splittings measured along the nine directions, kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NineDeltas(pub [f64; 9]);

impl NineDeltas {
    pub fn get(&self, d: PairDirection) -> f64 {
        self.0[d.index()]
    }

    /// Exact splittings `(3g/2) |1 - 3 (r . b)^2|` for each direction.
    pub fn exact(g: f64, r_hat: &Vector3<f64>) -> Self {
        let mut v = [0.0; 9];
        for d in PairDirection::ALL {
            let c = r_hat.dot(&d.vector());
            v[d.index()] = 1.5 * g * (1.0 - 3.0 * c * c).abs();
        }
        NineDeltas(v)
    }
}

/// Result of the geometry inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    /// Dipolar constant, kHz.
    pub g: f64,
    /// Unit alignment vector, defined up to a global sign; the component of
    /// largest magnitude is reported positive.
    pub r_hat: Vector3<f64>,
    /// `|sum r_i^2 - 1|` before renormalization.
    pub norm_residual: f64,
    /// RMS relative mismatch between the nine inputs and the splittings
    /// predicted by `(g, r_hat)`.
    pub residual: f64,
}

impl PairGeometry {
    /// Pair distance for spins of gyromagnetic ratios `gamma1`, `gamma2` (nm).
    pub fn distance(&self, gamma1: f64, gamma2: f64) -> Result<f64> {
        crate::model::distance_from_g(self.g, gamma1, gamma2)
    }

    /// Polar and azimuthal angles of `r_hat`, radians.
    pub fn angles(&self) -> (f64, f64) {
        crate::model::angles_of(&self.r_hat)
    }
}

/// Closed-form inversion of nine splittings into the coupling `g` and the
/// alignment vector.
///
/// With `D_ij = Delta_{i-j}^2 - Delta_{i+j}^2` and `k` the third axis,
/// `((3g/2) r_i r_j)^2 = D_ij^2 / (36 Delta_k^2)`,
/// `g^2 = (2/27) sum Delta_i^2 + (1/27) sum D_ij^2 / Delta_k^2` and
/// `r_i^2 = -1/3 + (4 Delta_i^2 + D_ij^2/Delta_k^2 + D_ik^2/Delta_j^2) / (27 g^2)`.
/// Relative signs of the components are chosen by least squares against the
/// six cross-direction splittings.
///
/// The closed form divides by the axis splittings and amplifies measurement
/// error when one of them is small. The result therefore seeds a weighted
/// least-squares fit of all nine splittings, together with the best cells of
/// a coarse hemisphere grid; the fit with the lowest misfit wins, which for
/// exact inputs is the closed form itself.
pub fn invert_pair_geometry(deltas: &NineDeltas) -> Result<PairGeometry> {
    use PairDirection::*;
    let d = |dir| deltas.get(dir);
    if deltas.0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("splittings must be finite and non-negative"));
    }
    let scale = deltas.0.iter().copied().fold(0.0, f64::max);
    let (dx, dy, dz) = (d(X), d(Y), d(Z));
    for (name, v) in [("x", dx), ("y", dy), ("z", dz)] {
        if v <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(format!(
                "splitting along {name} vanishes (magic angle); repeat the scans in a rotated axis set"
            )));
        }
    }
    let dd = |m: PairDirection, p: PairDirection| d(m).powi(2) - d(p).powi(2);
    let dxy = dd(XMinusY, XPlusY);
    let dxz = dd(XMinusZ, XPlusZ);
    let dyz = dd(YMinusZ, YPlusZ);
    let cxy = dxy * dxy / (dz * dz);
    let cxz = dxz * dxz / (dy * dy);
    let cyz = dyz * dyz / (dx * dx);
    let g2 = (2.0 / 27.0) * (dx * dx + dy * dy + dz * dz) + (cxy + cxz + cyz) / 27.0;
    let g = g2.sqrt();
    let sq = |axis: f64, c1: f64, c2: f64| -1.0 / 3.0 + (4.0 * axis * axis + c1 + c2) / (27.0 * g2);
    let r2 = [sq(dx, cxy, cxz), sq(dy, cxy, cyz), sq(dz, cyz, cxz)];
    let norm_residual = (r2.iter().sum::<f64>() - 1.0).abs();
    let mags: Vec<f64> = r2.iter().map(|v| v.max(0.0).sqrt()).collect();

    let mut closed: Vec<(f64, Vector3<f64>)> = Vec::with_capacity(4);
    for sy in [1.0, -1.0] {
        for sz in [1.0, -1.0] {
            let cand = Vector3::new(mags[0], sy * mags[1], sz * mags[2]);
            if cand.norm() == 0.0 {
                continue;
            }
            let cand = cand.normalize();
            let pred = NineDeltas::exact(g, &cand);
            let err: f64 = [XPlusY, XMinusY, XPlusZ, XMinusZ, YPlusZ, YMinusZ]
                .iter()
                .map(|&k| (pred.get(k) - d(k)).powi(2))
                .sum();
            closed.push((err, cand));
        }
    }
    closed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(&(_, sign_resolved)) = closed.first() else {
        return Err(Error::Degenerate("all components vanished".into()));
    };
    let weights = fit_weights(deltas, scale);
    let mut starts: Vec<Vector3<f64>> = closed.iter().map(|c| c.1).collect();
    starts.extend(coarse_minima(deltas, &weights, 4));
    let mut best = (
        g,
        sign_resolved,
        weighted_cost(deltas, &weights, g, &sign_resolved),
    );
    for start in starts {
        let cand = compass_search(deltas, &weights, start);
        if cand.2 < best.2 {
            best = cand;
        }
    }
    let (g, mut r_hat, _) = best;
    let lead = r_hat.iamax();
    if r_hat[lead] < 0.0 {
        r_hat = -r_hat;
    }
    let pred = NineDeltas::exact(g, &r_hat);
    let residual = (pred
        .0
        .iter()
        .zip(&deltas.0)
        .map(|(p, m)| ((p - m) / scale).powi(2))
        .sum::<f64>()
        / 9.0)
        .sqrt();
    Ok(PairGeometry {
        g,
        r_hat,
        norm_residual,
        residual,
    })
}

/// Weights `1 / max(Delta, 0.05 max Delta)^2`: relative errors, floored so
/// that near-zero splittings do not dominate.
fn fit_weights(deltas: &NineDeltas, scale: f64) -> [f64; 9] {
    deltas.0.map(|v| v.max(0.05 * scale).powi(-2))
}

fn shape(r: &Vector3<f64>) -> [f64; 9] {
    NineDeltas::exact(1.0, r).0
}

fn weighted_cost(deltas: &NineDeltas, w: &[f64; 9], g: f64, r: &Vector3<f64>) -> f64 {
    let p = shape(r);
    (0..9)
        .map(|k| w[k] * (g * p[k] - deltas.0[k]).powi(2))
        .sum()
}

/// Best `g` for a fixed direction (linear least squares) and its cost.
fn profiled_cost(deltas: &NineDeltas, w: &[f64; 9], r: &Vector3<f64>) -> (f64, f64) {
    let p = shape(r);
    let num: f64 = (0..9).map(|k| w[k] * p[k] * deltas.0[k]).sum();
    let den: f64 = (0..9).map(|k| w[k] * p[k] * p[k]).sum();
    let g = if den > 0.0 { num / den } else { 0.0 };
    (g, weighted_cost(deltas, w, g, r))
}

/// The `count` best directions of a 2-degree grid over the upper hemisphere.
fn coarse_minima(deltas: &NineDeltas, w: &[f64; 9], count: usize) -> Vec<Vector3<f64>> {
    let mut scored = Vec::new();
    for it in 0..=45 {
        let theta = (2.0 * it as f64).to_radians();
        let n_phi = ((180.0 * theta.sin()).round() as usize).max(1);
        for ip in 0..n_phi {
            let phi = std::f64::consts::TAU * ip as f64 / n_phi as f64;
            let r = crate::model::unit_vector(theta, phi);
            scored.push((profiled_cost(deltas, w, &r).1, r));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(count).map(|(_, r)| r).collect()
}

/// Derivative-free descent on the sphere with `g` profiled out. The model
/// has kinks where a direction crosses the magic angle, which stall
/// gradient methods.
fn compass_search(
    deltas: &NineDeltas,
    w: &[f64; 9],
    start: Vector3<f64>,
) -> (f64, Vector3<f64>, f64) {
    let mut r = start.normalize();
    let (mut g, mut c) = profiled_cost(deltas, w, &r);
    let mut step = 1f64.to_radians();
    while step > 1e-10 {
        let (e1, e2) = crate::model::transverse_frame(&r);
        let mut moved = false;
        for k in 0..8 {
            let a = std::f64::consts::FRAC_PI_4 * k as f64;
            let rn = (r + (e1 * a.cos() + e2 * a.sin()) * step).normalize();
            let (gn, cn) = profiled_cost(deltas, w, &rn);
            if cn < c {
                (r, g, c, moved) = (rn, gn, cn, true);
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (g, r, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::unit_vector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn same_axis(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        a.dot(b).abs().min(1.0).acos()
    }

    #[test]
    fn z_aligned_pair() {
        let g = 34.5;
        let inv = invert_pair_geometry(&NineDeltas::exact(g, &Vector3::z())).unwrap();
        assert!((inv.g - g).abs() < 1e-9);
        assert!((inv.r_hat - Vector3::z()).norm() < 1e-6);
        let ex = NineDeltas::exact(g, &Vector3::z());
        assert!((ex.get(PairDirection::Z) - 3.0 * g).abs() < 1e-12);
        assert!((ex.get(PairDirection::X) - 1.5 * g).abs() < 1e-12);
    }

    #[test]
    fn magic_axis_is_reported() {
        let r = Vector3::new(1.0, 1.0, 1.0).normalize();
        let mut deltas = NineDeltas::exact(10.0, &r);
        deltas.0[0] = 0.0;
        assert!(matches!(
            invert_pair_geometry(&deltas),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn labels_round_trip() {
        for d in PairDirection::ALL {
            assert_eq!(PairDirection::from_label(d.label()), Some(d));
        }
    }

    proptest! {
        #[test]
        fn exact_inputs_round_trip(g in 0.5f64..500.0, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
            let r = unit_vector(theta, phi);
            let deltas = NineDeltas::exact(g, &r);
            let axis_min = [PairDirection::X, PairDirection::Y, PairDirection::Z]
                .iter().map(|&k| deltas.get(k)).fold(f64::INFINITY, f64::min);
            prop_assume!(axis_min > 1e-3 * g);
            let inv = invert_pair_geometry(&deltas).unwrap();
            prop_assert!((inv.g - g).abs() <= 1e-9 * g);
            prop_assert!(same_axis(&inv.r_hat, &r) < 1e-6, "{} vs {}", inv.r_hat, r);
            prop_assert!(inv.norm_residual < 1e-9);
        }
    }

    #[test]
    fn robust_to_percent_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let mut tested = 0;
        let (mut worst_g, mut worst_angle) = (0.0f64, 0.0f64);
        while tested < 1000 {
            let g = rng.random_range(1.0..100.0);
            let r = unit_vector(
                rng.random::<f64>().mul_add(2.0, -1.0).acos(),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
            let exact = NineDeltas::exact(g, &r);
            let axis_min = [PairDirection::X, PairDirection::Y, PairDirection::Z]
                .iter()
                .map(|&k| exact.get(k))
                .fold(f64::INFINITY, f64::min);
            if axis_min < 0.05 * 1.5 * g {
                continue;
            }
            let mut noisy = exact;
            for v in noisy.0.iter_mut() {
                *v *= 1.0 + rng.random_range(-0.01..0.01);
            }
            let inv = invert_pair_geometry(&noisy).unwrap();
            worst_g = worst_g.max((inv.g - g).abs() / g);
            worst_angle = worst_angle.max(same_axis(&inv.r_hat, &r).to_degrees());
            tested += 1;
        }
        assert!(worst_g <= 0.03, "g error {worst_g}");
        assert!(worst_angle <= 2.0, "angle error {worst_angle}");
    }
}
