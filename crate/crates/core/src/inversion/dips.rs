use crate::error::{invalid, Result};
use crate::protocols::ResonanceScan;

/// A resonance dip in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    /// Refined center, in the scan's unit.
    pub center: f64,
    /// Baseline minus the refined minimum.
    pub depth: f64,
    /// Full width at half depth, in the scan's unit.
    pub width: f64,
    /// Wider than expected or closer to a neighbour than the grid resolves.
    pub unresolved: bool,
}

/// Detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipOptions {
    /// Minimum depth below the baseline.
    pub depth_threshold: f64,
    /// Width of an isolated dip, if known; dips wider than
    /// [`MERGE_WIDTH_RATIO`] times this are flagged as unresolved.
    pub expected_width: Option<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Dips deeper than `depth_threshold` below the median baseline, sorted by center.
pub fn find_dips(scan: &ResonanceScan, depth_threshold: f64) -> Result<Vec<Dip>> {
    find_dips_with(
        scan,
        DipOptions {
            depth_threshold,
            expected_width: None,
        },
    )
}

/// Two equal Lorentzians closer than their half width merge into one minimum
/// that is only about 20% wider than either line.
pub const MERGE_WIDTH_RATIO: f64 = 1.15;

pub fn find_dips_with(scan: &ResonanceScan, opts: DipOptions) -> Result<Vec<Dip>> {
    let x = &scan.grid;
    let y = &scan.values;
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("dip search needs a strictly increasing grid"));
    }
    let n = y.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let baseline = median(y);
    let mut dips = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        // Treat a flat bottom as one minimum located at its middle.
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        if y[i - 1] > y[i] && y[j + 1] > y[j] {
            let m = (i + j) / 2;
            let (center, minimum) = refine(x, y, m);
            let depth = baseline - minimum;
            if depth >= opts.depth_threshold {
                let width = half_depth_width(x, y, m, baseline, depth);
                dips.push(Dip {
                    center,
                    depth,
                    width,
                    unresolved: false,
                });
            }
        }
        i = j + 1;
    }
    let step = (x[n - 1] - x[0]) / (n - 1) as f64;
    for k in 0..dips.len() {
        let too_wide = opts
            .expected_width
            .is_some_and(|w| dips[k].width > MERGE_WIDTH_RATIO * w);
        let crowded = (k > 0 && dips[k].center - dips[k - 1].center < step)
            || (k + 1 < dips.len() && dips[k + 1].center - dips[k].center < step);
        dips[k].unresolved = too_wide || crowded;
    }
    Ok(dips)
}

/// Three-point parabolic vertex around index `m`.
fn refine(x: &[f64], y: &[f64], m: usize) -> (f64, f64) {
    let (ym, y0, yp) = (y[m - 1], y[m], y[m + 1]);
    let h = 0.5 * (x[m + 1] - x[m - 1]);
    let den = ym - 2.0 * y0 + yp;
    if den <= 0.0 {
        return (x[m], y0);
    }
    let off = (0.5 * (ym - yp) / den).clamp(-1.0, 1.0);
    (x[m] + off * h, y0 - 0.25 * (ym - yp) * off)
}

fn half_depth_width(x: &[f64], y: &[f64], m: usize, baseline: f64, depth: f64) -> f64 {
    let level = baseline - 0.5 * depth;
    let cross = |range: &mut dyn Iterator<Item = usize>, dir: isize| -> f64 {
        let mut prev = m;
        for k in range {
            if y[k] >= level {
                let (a, b) = (prev, k);
                let t = (level - y[a]) / (y[b] - y[a]);
                return x[a] + t * (x[b] - x[a]);
            }
            // Stop at the next local maximum: a neighbouring dip begins there.
            let next = k as isize + dir;
            if next >= 0 && (next as usize) < y.len() && y[next as usize] < y[k] && y[k] > y[prev] {
                return x[k];
            }
            prev = k;
        }
        x[prev]
    };
    let right = cross(&mut (m + 1..y.len()), 1);
    let left = cross(&mut (0..m).rev(), -1);
    right - left
}

/// The two deepest dips, ordered by center.
pub fn pair_deepest(dips: &[Dip]) -> Option<(Dip, Dip)> {
    if dips.len() < 2 {
        return None;
    }
    let mut by_depth = dips.to_vec();
    by_depth.sort_by(|a, b| b.depth.total_cmp(&a.depth));
    let (a, b) = (by_depth[0], by_depth[1]);
    Some(if a.center <= b.center { (a, b) } else { (b, a) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_of(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> ResonanceScan {
        let grid = crate::protocols::grid(lo, hi, step).unwrap();
        let values = grid.iter().map(|&x| f(x)).collect();
        ResonanceScan::new("x", "kHz", grid, values, 1.0).unwrap()
    }

    fn lorentz(x: f64, c: f64, w: f64, d: f64) -> f64 {
        d / (1.0 + ((x - c) / w).powi(2))
    }

    #[test]
    fn flat_scan_has_no_dips() {
        assert!(find_dips(&scan_of(|_| 1.0, 0.0, 10.0, 0.1), 0.01)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn double_lorentzian_centers() {
        let (c1, c2) = (3.137, 6.481);
        let s = scan_of(
            |x| 1.0 - lorentz(x, c1, 0.4, 0.3) - lorentz(x, c2, 0.4, 0.2),
            0.0,
            10.0,
            0.05,
        );
        let dips = find_dips(&s, 0.05).unwrap();
        assert_eq!(dips.len(), 2);
        assert!((dips[0].center - c1).abs() < 0.005);
        assert!((dips[1].center - c2).abs() < 0.005);
        assert!((dips[0].width - 0.8).abs() < 0.1);
        let (a, b) = pair_deepest(&dips).unwrap();
        assert!(a.center < b.center);
    }

    #[test]
    fn merged_dips_are_flagged() {
        let w = 0.4;
        let s = scan_of(
            |x| 1.0 - lorentz(x, 5.0, w, 0.3) - lorentz(x, 5.3, w, 0.3),
            0.0,
            10.0,
            0.05,
        );
        let dips = find_dips_with(
            &s,
            DipOptions {
                depth_threshold: 0.05,
                expected_width: Some(2.0 * w),
            },
        )
        .unwrap();
        assert_eq!(dips.len(), 1);
        assert!(dips[0].unresolved);
    }
}
