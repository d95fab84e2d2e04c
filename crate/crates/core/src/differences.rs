//! Absolute finite differences D(x; w) for linear, cyclic, and combined data.
//!
//! The runtime path only ever needs the three weights b₁ = (−1, 1),
//! b₂ = (1, −2, 1), and b₁₁ = (−1, 1, 1, −1), for which the combined
//! difference has the closed form
//! `D(x, w)² = ‖(x_S w)_{2π}‖² + ‖x_R w‖²`
//! (cyclic rows wrapped component-wise, linear rows taken as-is).  The general
//! definition by minimization over a finite shift set is implemented only as a
//! brute-force test oracle.

use crate::error::{Error, Result};
use crate::geometry::{is_seam, wrap_rad, PixelValue};
use std::f64::consts::PI;

/// One of the three supported finite-difference weight vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// First-order difference, (−1, 1).
    B1,
    /// Second-order difference, (1, −2, 1).
    B2,
    /// Mixed second-order difference, (−1, 1, 1, −1).
    B11,
}

impl Weight {
    /// The weight entries; they always sum to zero.
    pub fn entries(self) -> &'static [f64] {
        match self {
            Weight::B1 => &[-1.0, 1.0],
            Weight::B2 => &[1.0, -2.0, 1.0],
            Weight::B11 => &[-1.0, 1.0, 1.0, -1.0],
        }
    }

    /// Number of points the weight combines.
    pub fn len(self) -> usize {
        self.entries().len()
    }

    #[allow(clippy::len_without_is_empty)]
    /// Largest absolute entry, used for movement bounds.
    pub fn max_abs(self) -> f64 {
        match self {
            Weight::B2 => 2.0,
            _ => 1.0,
        }
    }
}

fn common_signature(points: &[PixelValue], d: usize) -> Result<(usize, usize)> {
    if points.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected {d} points, got {}",
            points.len()
        )));
    }
    let sig = points[0].signature();
    for p in &points[1..] {
        let other = p.signature();
        if other != sig {
            return Err(Error::SignatureMismatch(sig.0, sig.1, other.0, other.1));
        }
    }
    Ok(sig)
}

/// Absolute difference of purely linear data: `‖Σ_j w_j x⁽ʲ⁾‖` where the
/// columns of `x` are the d points in ℝⁿ.
pub fn abs_diff_linear(columns: &[Vec<f64>], w: Weight) -> Result<f64> {
    let entries = w.entries();
    if columns.len() != entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns vs weight length {}",
            columns.len(),
            entries.len()
        )));
    }
    let n = columns[0].len();
    for c in columns {
        if c.len() != n {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
    }
    let mut acc = 0.0;
    for r in 0..n {
        let s: f64 = columns.iter().zip(entries).map(|(c, &wj)| wj * c[r]).sum();
        acc += s * s;
    }
    Ok(acc.sqrt())
}

/// Absolute combined difference on (S¹)^m × ℝⁿ for the supported weights:
/// cyclic rows of the weighted combination are wrapped, linear rows are not.
pub fn abs_diff_combined(points: &[PixelValue], w: Weight) -> Result<f64> {
    let entries = w.entries();
    let (m, n) = common_signature(points, entries.len())?;
    let mut acc = 0.0;
    for r in 0..m {
        let s: f64 = points
            .iter()
            .zip(entries)
            .map(|(p, &wj)| wj * p.cyclic[r].rad())
            .sum();
        let wrapped = wrap_rad(s);
        acc += wrapped * wrapped;
    }
    for r in 0..n {
        let s: f64 = points
            .iter()
            .zip(entries)
            .map(|(p, &wj)| wj * p.linear[r])
            .sum();
        acc += s * s;
    }
    Ok(acc.sqrt())
}

/// Brute-force evaluation of the combined difference through the finite
/// shift-set reduction of its definition: for every shift choice k (one base
/// point index per cyclic component), re-express all cyclic entries relative
/// to the chosen base, reduce modulo 2π (enumerating both ±π branches at seam
/// hits), and take the minimum of the plain linear difference over all
/// choices.  Test-only; cost grows as dᵐ · 2^(seam hits).
pub fn abs_diff_oracle(points: &[PixelValue], w: Weight) -> Result<f64> {
    let entries = w.entries();
    let d = entries.len();
    let (m, n) = common_signature(points, d)?;
    if d > 4 || m > 3 {
        return Err(Error::OracleLimit(format!("d = {d}, m = {m}")));
    }

    // Linear part is shift-independent.
    let mut lin2 = 0.0;
    for r in 0..n {
        let s: f64 = points
            .iter()
            .zip(entries)
            .map(|(p, &wj)| wj * p.linear[r])
            .sum();
        lin2 += s * s;
    }
    if m == 0 {
        return Ok(lin2.sqrt());
    }

    let mut best = f64::INFINITY;
    // k ∈ {0,…,d−1}^m: component r uses point k_r as its base.
    let total = d.pow(m as u32);
    for code in 0..total {
        let mut k = vec![0usize; m];
        let mut c = code;
        for kr in k.iter_mut() {
            *kr = c % d;
            c /= d;
        }
        // Shifted cyclic matrix y[r][j] = x_r^{(j)} − x_r^{(k_r)} + π, to be
        // reduced modulo 2π; entries at the seam carry both branches.
        let mut branch_rows: Vec<(usize, usize)> = Vec::new(); // (r, j) seam hits
        let mut y = vec![vec![0.0f64; d]; m];
        for r in 0..m {
            let base = points[k[r]].cyclic[r].rad();
            for j in 0..d {
                let v = points[j].cyclic[r].rad() - base + PI;
                if is_seam(v) {
                    branch_rows.push((r, j));
                    y[r][j] = PI; // overwritten per branch below
                } else {
                    y[r][j] = wrap_rad(v);
                }
            }
        }
        let nb = branch_rows.len();
        for mask in 0..(1usize << nb) {
            let mut yy = y.clone();
            for (bit, &(r, j)) in branch_rows.iter().enumerate() {
                yy[r][j] = if mask & (1 << bit) == 0 { PI } else { -PI };
            }
            let mut cyc2 = 0.0;
            for row in yy.iter().take(m) {
                let s: f64 = row.iter().zip(entries).map(|(&v, &wj)| wj * v).sum();
                cyc2 += s * s;
            }
            let val = (cyc2 + lin2).sqrt();
            if val < best {
                best = val;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist_circle;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pv(cyc: &[f64], lin: &[f64]) -> PixelValue {
        PixelValue::new(cyc.to_vec(), lin.to_vec()).unwrap()
    }

    fn random_tuple(rng: &mut ChaCha8Rng, d: usize, m: usize, n: usize) -> Vec<PixelValue> {
        (0..d)
            .map(|_| {
                let cyc: Vec<f64> = (0..m).map(|_| rng.gen_range(-PI..PI)).collect();
                let lin: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                pv(&cyc, &lin)
            })
            .collect()
    }

    #[test]
    fn weight_entries_sum_to_zero() {
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            assert_eq!(w.entries().iter().sum::<f64>(), 0.0);
            assert_eq!(w.entries().len(), w.len());
        }
    }

    #[test]
    fn linear_examples() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert_eq!(abs_diff_linear(&x, Weight::B2).unwrap(), 0.0);
        let y = vec![vec![0.0], vec![4.0]];
        assert_eq!(abs_diff_linear(&y, Weight::B1).unwrap(), 4.0);
        let z = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        assert_eq!(abs_diff_linear(&z, Weight::B11).unwrap(), 0.0);
    }

    #[test]
    fn linear_dimension_mismatch() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(abs_diff_linear(&x, Weight::B2).is_err());
    }

    #[test]
    fn combined_examples() {
        let x = [pv(&[-3.0], &[]), pv(&[3.1], &[]), pv(&[3.0], &[])];
        assert_abs_diff_eq!(
            abs_diff_combined(&x, Weight::B2).unwrap(),
            wrap_rad(-6.2).abs(),
            epsilon = 1e-12
        );
        let y = [pv(&[3.0], &[1.0]), pv(&[-3.0], &[2.0])];
        let expected = (wrap_rad(-6.0).powi(2) + 1.0).sqrt();
        assert_abs_diff_eq!(abs_diff_combined(&y, Weight::B1).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn combined_reduces_to_linear_when_m_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            for _ in 0..100 {
                let pts = random_tuple(&mut rng, w.len(), 0, 2);
                let cols: Vec<Vec<f64>> = pts.iter().map(|p| p.linear.clone()).collect();
                assert_abs_diff_eq!(
                    abs_diff_combined(&pts, w).unwrap(),
                    abs_diff_linear(&cols, w).unwrap(),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn oracle_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            for _ in 0..10_000 {
                let m = rng.gen_range(0..=3);
                let n = rng.gen_range(0..=2);
                if m + n == 0 {
                    continue;
                }
                let pts = random_tuple(&mut rng, w.len(), m, n);
                let closed = abs_diff_combined(&pts, w).unwrap();
                let oracle = abs_diff_oracle(&pts, w).unwrap();
                assert!(
                    (closed - oracle).abs() <= 1e-12,
                    "mismatch {closed} vs {oracle} for {w:?}"
                );
            }
        }
    }

    #[test]
    fn oracle_constant_tuple_is_zero() {
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let pts: Vec<PixelValue> = (0..w.len()).map(|_| pv(&[1.2], &[0.5])).collect();
            assert_abs_diff_eq!(abs_diff_oracle(&pts, w).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_limits() {
        let pts: Vec<PixelValue> = (0..2).map(|_| pv(&[0.0, 0.0, 0.0, 0.0], &[])).collect();
        assert!(abs_diff_oracle(&pts, Weight::B1).is_err());
    }

    #[test]
    fn shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            for _ in 0..1000 {
                let pts = random_tuple(&mut rng, w.len(), 2, 1);
                let alpha: f64 = rng.gen_range(-10.0..10.0);
                let beta: f64 = rng.gen_range(-10.0..10.0);
                let shifted: Vec<PixelValue> = pts
                    .iter()
                    .map(|p| {
                        pv(
                            &p.cyclic.iter().map(|a| a.rad() + alpha).collect::<Vec<_>>(),
                            &p.linear.iter().map(|x| x + beta).collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                let a = abs_diff_combined(&pts, w).unwrap();
                let b = abs_diff_combined(&shifted, w).unwrap();
                assert!((a - b).abs() <= 1e-9, "shift variance {a} vs {b}");
            }
        }
    }

    #[test]
    fn second_difference_bounded_by_first_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..5000 {
            let pts = random_tuple(&mut rng, 3, 1, 1);
            let d2 = abs_diff_combined(&pts, Weight::B2).unwrap();
            let d1a = abs_diff_combined(&pts[0..2], Weight::B1).unwrap();
            let d1b = abs_diff_combined(&pts[1..3], Weight::B1).unwrap();
            assert!(d2 <= 2.0 * d1a.max(d1b) + 1e-9);
        }
    }

    #[test]
    fn zero_exactly_when_combinations_vanish() {
        // A wrapped-collinear cyclic triple across the seam.
        let pts = [pv(&[3.0], &[0.0]), pv(&[-3.1], &[1.0]), pv(&[-2.9], &[2.0])];
        // wrap(3.0 + 6.2 − 2.9) = wrap(6.3) ≈ 0.017 ≠ 0, so D > 0 here...
        assert!(abs_diff_combined(&pts, Weight::B2).unwrap() > 0.0);
        // ...while the geodesic mid-configuration is an exact zero.
        let mid = [pv(&[3.0], &[0.0]), pv(&[3.2], &[1.0]), pv(&[3.4], &[2.0])];
        assert_abs_diff_eq!(abs_diff_combined(&mid, Weight::B2).unwrap(), 0.0, epsilon = 1e-12);
        // First-order zero means equal points on the circle.
        let eq = [pv(&[1.0], &[]), pv(&[1.0], &[])];
        assert_eq!(abs_diff_combined(&eq, Weight::B1).unwrap(), 0.0);
        assert_eq!(dist_circle(eq[0].cyclic[0], eq[1].cyclic[0]), 0.0);
    }
}
