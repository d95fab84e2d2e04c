//! Closed-form proximal mappings and brute-force verification oracles.
//!
//! Three closed forms drive the solver:
//! - the linear-space prox with offset, minimizing
//!   `E(x; f, a, w) = ½‖f − x‖²_F + λ‖xw − a‖`,
//! - the constrained combined-space difference prox, which moves only an
//!   active subset of the tuple columns and wraps cyclic components, and
//! - the data-term prox, a component-wise weighted geodesic average.
//!
//! At antipodal seam configurations the difference prox is set-valued; all
//! candidates are returned and callers tie-break.

use crate::differences::{abs_diff_combined, Weight};
use crate::error::{Error, Result};
use crate::geometry::{is_seam, wrap_rad, PixelValue};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// The subset of tuple columns that the difference prox is allowed to move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    /// Builds an active set over a tuple of length `d`; indices are 0-based,
    /// deduplicated, and must be nonempty and in bounds.
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<ActiveSet> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty active set".into()));
        }
        if let Some(&max) = indices.last() {
            if max >= d {
                return Err(Error::InvalidArgument(format!(
                    "active index {max} out of bounds for tuple length {d}"
                )));
            }
        }
        Ok(ActiveSet { indices })
    }

    /// The full active set {0, …, d−1}.
    pub fn full(d: usize) -> ActiveSet {
        ActiveSet {
            indices: (0..d).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Result of a possibly set-valued difference prox.  Every candidate is a
/// full tuple; inactive columns are passed through untouched.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub candidates: Vec<Vec<PixelValue>>,
    pub multivalued: bool,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("step width must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Minimizes `E(x; f, a, w) = ½‖f − x‖²_F + λ‖xw − a‖` over all n×d matrices.
///
/// The minimizer is `x̂ = f − m s wᵀ` with `s = (fw − a)/‖fw − a‖` (zero when
/// the norm vanishes) and amplitude `m = min{λ, ‖fw − a‖/‖w‖²}`.  `f` is
/// given as d columns of length n; the attained minimum is evaluated
/// directly at `x̂`.
pub fn prox_linear_offset(
    f: &[Vec<f64>],
    a: &[f64],
    w: &[f64],
    lambda: f64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    check_lambda(lambda)?;
    let d = w.len();
    if f.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} columns vs weight length {d}",
            f.len()
        )));
    }
    let n = a.len();
    for c in f {
        if c.len() != n {
            return Err(Error::DimensionMismatch("column/offset length mismatch".into()));
        }
    }
    let w2: f64 = w.iter().map(|x| x * x).sum();
    if w2 == 0.0 {
        return Err(Error::InvalidArgument("zero weight vector".into()));
    }

    // v = fw − a
    let mut v = vec![0.0; n];
    for r in 0..n {
        v[r] = f.iter().zip(w).map(|(c, &wj)| wj * c[r]).sum::<f64>() - a[r];
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut xhat: Vec<Vec<f64>> = f.to_vec();
    if norm > 0.0 && lambda > 0.0 {
        let mval = lambda.min(norm / w2);
        for (j, col) in xhat.iter_mut().enumerate() {
            for r in 0..n {
                col[r] -= mval * (v[r] / norm) * w[j];
            }
        }
    }

    // Attained minimum, evaluated at x̂.
    let mut data = 0.0;
    for (c0, c1) in f.iter().zip(&xhat) {
        for r in 0..n {
            let dlt = c0[r] - c1[r];
            data += dlt * dlt;
        }
    }
    let mut res = vec![0.0; n];
    for r in 0..n {
        res[r] = xhat.iter().zip(w).map(|(c, &wj)| wj * c[r]).sum::<f64>() - a[r];
    }
    let value = 0.5 * data + lambda * res.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((xhat, value))
}

fn tuple_signature(f: &[PixelValue], d: usize) -> Result<(usize, usize)> {
    if f.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "tuple length {} vs weight length {d}",
            f.len()
        )));
    }
    let sig = f[0].signature();
    for p in &f[1..] {
        if p.signature() != sig {
            let (m, n) = p.signature();
            return Err(Error::SignatureMismatch(sig.0, sig.1, m, n));
        }
    }
    Ok(sig)
}

/// Constrained combined-space difference prox.
///
/// Minimizes `½ Σ_{j∈A} d_X(x_j, f_j)² + λ D(x; w)` over the active columns,
/// keeping the others fixed at `f`.  The minimizers are
/// `x̂^a = (f^a − m s (w^a)ᵀ)_X` with direction `s = [fw]_X/‖(fw)_X‖` and
/// amplitude `m = min{λ, ‖(fw)_X‖/‖w^a‖²}`; when l cyclic rows of `fw` hit
/// the antipodal seam, the ±π direction branches yield 2^l candidates of
/// equal energy.  Candidate 0 always takes the +π branch on every seam row.
pub fn prox_difference_constrained(
    f: &[PixelValue],
    w: Weight,
    active: &ActiveSet,
    lambda: f64,
) -> Result<ProxResult> {
    check_lambda(lambda)?;
    let entries = w.entries();
    let d = entries.len();
    let (m, n) = tuple_signature(f, d)?;
    if active.indices().last().copied().unwrap_or(0) >= d {
        return Err(Error::InvalidArgument("active set out of bounds".into()));
    }

    // fw over the full tuple (fixed columns included), cyclic rows wrapped.
    let mut row = vec![0.0; m + n];
    let mut seam_rows = Vec::new();
    for r in 0..m {
        let s: f64 = f.iter().zip(entries).map(|(p, &wj)| wj * p.cyclic[r].rad()).sum();
        if is_seam(s) {
            seam_rows.push(r);
            row[r] = PI;
        } else {
            row[r] = wrap_rad(s);
        }
    }
    for r in 0..n {
        row[m + r] = f.iter().zip(entries).map(|(p, &wj)| wj * p.linear[r]).sum();
    }
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();

    if norm == 0.0 || lambda == 0.0 {
        return Ok(ProxResult {
            candidates: vec![f.to_vec()],
            multivalued: false,
        });
    }

    let wa2: f64 = active.indices().iter().map(|&j| entries[j] * entries[j]).sum();
    let mval = lambda.min(norm / wa2);

    let nb = seam_rows.len();
    let mut candidates = Vec::with_capacity(1 << nb);
    for branch in 0..(1usize << nb) {
        let mut s = row.clone();
        for (bit, &r) in seam_rows.iter().enumerate() {
            s[r] = if branch & (1 << bit) == 0 { PI } else { -PI };
        }
        for v in s.iter_mut() {
            *v /= norm;
        }
        let mut cand = f.to_vec();
        for &j in active.indices() {
            for r in 0..m {
                let moved = cand[j].cyclic[r].rad() - mval * s[r] * entries[j];
                cand[j].cyclic[r] = crate::geometry::Angle::wrap(moved)?;
            }
            for r in 0..n {
                cand[j].linear[r] -= mval * s[m + r] * entries[j];
            }
        }
        candidates.push(cand);
    }
    Ok(ProxResult {
        multivalued: candidates.len() > 1,
        candidates,
    })
}

/// Data-term prox: proximal point of `x ↦ λ d_X(f, x)²·½·2` evaluated at `g`.
///
/// Linear components are the weighted average `(g + λf)/(1 + λ)`; cyclic
/// components additionally receive the correction `λ/(1+λ)·2πv` before
/// wrapping, with `v = 0` when `|g − f| ≤ π` and `v = sgn(g − f)` otherwise,
/// so the average is taken along the short arc.
pub fn prox_data(g: &PixelValue, f: &PixelValue, lambda: f64) -> Result<PixelValue> {
    check_lambda(lambda)?;
    if g.signature() != f.signature() {
        let (mg, ng) = g.signature();
        let (mf, nf) = f.signature();
        return Err(Error::SignatureMismatch(mg, ng, mf, nf));
    }
    let t = lambda / (1.0 + lambda);
    let mut cyclic = Vec::with_capacity(g.cyclic.len());
    for (a, b) in g.cyclic.iter().zip(&f.cyclic) {
        let gv = a.rad();
        let fv = b.rad();
        let diff = gv - fv;
        let v = if diff.abs() <= PI { 0.0 } else { diff.signum() };
        cyclic.push((gv + lambda * fv) / (1.0 + lambda) + t * crate::geometry::TAU * v);
    }
    let linear = g
        .linear
        .iter()
        .zip(&f.linear)
        .map(|(&gv, &fv)| (gv + lambda * fv) / (1.0 + lambda))
        .collect();
    PixelValue::new(cyclic, linear)
}

/// Objective of the constrained difference prox, evaluated at a candidate:
/// `½ Σ_{j∈A} d_X(x_j, f_j)² + λ D(x; w)`.
pub fn constrained_energy(
    x: &[PixelValue],
    f: &[PixelValue],
    w: Weight,
    active: &ActiveSet,
    lambda: f64,
) -> Result<f64> {
    let mut data = 0.0;
    for &j in active.indices() {
        let dd = crate::geometry::dist_product(&x[j], &f[j])?;
        data += dd * dd;
    }
    Ok(0.5 * data + lambda * abs_diff_combined(x, w)?)
}

/// Search-space limits for [`prox_oracle`].
const ORACLE_MAX_ACTIVE: usize = 3;
const ORACLE_MAX_SIG: usize = 2;

/// Brute-force minimization of the constrained difference-prox objective.
///
/// Independent of the closed form: a coarse Cartesian grid over a box of
/// half-width `2λ‖w‖∞·d` around `f^a` (cyclic axes capped at π) localizes
/// the minimizer(s); the best coarse cells are then polished by repeated
/// per-coordinate line scans at step 10⁻² and a pattern search that shrinks
/// its step to 10⁻⁶.  Returns the best tuple found and its energy.
pub fn prox_oracle(
    f: &[PixelValue],
    w: Weight,
    active: &ActiveSet,
    lambda: f64,
) -> Result<(Vec<PixelValue>, f64)> {
    check_lambda(lambda)?;
    let entries = w.entries();
    let d = entries.len();
    let (m, n) = tuple_signature(f, d)?;
    if active.len() > ORACLE_MAX_ACTIVE || m + n > ORACLE_MAX_SIG {
        return Err(Error::OracleLimit(format!(
            "|A| = {}, m + n = {}",
            active.len(),
            m + n
        )));
    }

    let chans = m + n;
    let dims = active.len() * chans;
    let halfw_raw = 2.0 * lambda * w.max_abs() * d as f64;

    // Coordinate layout: per active column (sorted), m cyclic then n linear.
    let mut center = vec![0.0; dims];
    let mut halfw = vec![0.0; dims];
    for (ai, &j) in active.indices().iter().enumerate() {
        for r in 0..m {
            center[ai * chans + r] = f[j].cyclic[r].rad();
            halfw[ai * chans + r] = halfw_raw.min(PI);
        }
        for r in 0..n {
            center[ai * chans + m + r] = f[j].linear[r];
            halfw[ai * chans + m + r] = halfw_raw;
        }
    }

    // Energy of a coordinate vector (cyclic coordinates may be unwrapped;
    // all circle arithmetic wraps internally).
    let energy = |pt: &[f64]| -> f64 {
        let mut e = 0.0;
        for (ai, &j) in active.indices().iter().enumerate() {
            for r in 0..m {
                let dlt = wrap_rad(pt[ai * chans + r] - f[j].cyclic[r].rad());
                e += 0.5 * dlt * dlt;
            }
            for r in 0..n {
                let dlt = pt[ai * chans + m + r] - f[j].linear[r];
                e += 0.5 * dlt * dlt;
            }
        }
        let mut diff2 = 0.0;
        for r in 0..m {
            let mut s = 0.0;
            for (j, &wj) in entries.iter().enumerate() {
                let v = match active.indices().iter().position(|&x| x == j) {
                    Some(ai) => pt[ai * chans + r],
                    None => f[j].cyclic[r].rad(),
                };
                s += wj * v;
            }
            let wrapped = wrap_rad(s);
            diff2 += wrapped * wrapped;
        }
        for r in 0..n {
            let mut s = 0.0;
            for (j, &wj) in entries.iter().enumerate() {
                let v = match active.indices().iter().position(|&x| x == j) {
                    Some(ai) => pt[ai * chans + m + r],
                    None => f[j].linear[r],
                };
                s += wj * v;
            }
            diff2 += s * s;
        }
        e + lambda * diff2.sqrt()
    };

    if lambda == 0.0 {
        return Ok((f.to_vec(), energy(&center)));
    }

    // Stage 1: coarse Cartesian grid; keep a handful of well-separated
    // low-energy starting points so distinct basins survive to refinement.
    let pts_per_dim: usize = match dims {
        1 => 401,
        2 => 63,
        3 => 25,
        4 => 13,
        5 => 9,
        _ => 7,
    };
    let steps: Vec<f64> = halfw.iter().map(|&h| 2.0 * h / (pts_per_dim - 1) as f64).collect();
    let max_step = steps.iter().cloned().fold(0.0, f64::max);
    let total: usize = pts_per_dim.pow(dims as u32);
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut pt = vec![0.0; dims];
    for code in 0..total {
        let mut c = code;
        for k in 0..dims {
            let idx = c % pts_per_dim;
            c /= pts_per_dim;
            pt[k] = center[k] - halfw[k] + steps[k] * idx as f64;
        }
        let e = energy(&pt);
        let mut replaced = false;
        for s in starts.iter_mut() {
            let close = s
                .1
                .iter()
                .zip(&pt)
                .all(|(a, b)| (a - b).abs() <= max_step + 1e-12);
            if close {
                if e < s.0 {
                    *s = (e, pt.clone());
                }
                replaced = true;
                break;
            }
        }
        if !replaced {
            starts.push((e, pt.clone()));
            starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            starts.truncate(12);
        }
    }
    starts.push((energy(&center), center.clone()));

    // Stage 2: per-coordinate line scans at step 10⁻² around each start,
    // then a shrinking pattern search down to step 10⁻⁶.
    let h0 = 1e-2;
    let mut best_pt = center.clone();
    let mut best_e = energy(&center);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    for (mut cur_e, mut cur) in starts {
        // Line scans.
        for _pass in 0..40 {
            let before = cur_e;
            for k in 0..dims {
                let span = (2.0 * steps[k]).max(5.0 * h0);
                let lo = (cur[k] - span).max(center[k] - halfw[k]);
                let hi = (cur[k] + span).min(center[k] + halfw[k]);
                let mut t = lo;
                let saved = cur[k];
                let mut loc_best = (cur_e, saved);
                while t <= hi {
                    cur[k] = t;
                    let e = energy(&cur);
                    if e < loc_best.0 {
                        loc_best = (e, t);
                    }
                    t += h0;
                }
                cur[k] = loc_best.1;
                cur_e = loc_best.0;
            }
            if before - cur_e < 1e-13 {
                break;
            }
        }
        // Pattern search with random rescue directions for nonsmooth ridges.
        let mut step = h0;
        while step >= 1e-6 {
            loop {
                let mut improved = false;
                for k in 0..dims {
                    for sgn in [-1.0, 1.0] {
                        let saved = cur[k];
                        cur[k] = saved + sgn * step;
                        let e = energy(&cur);
                        if e < cur_e - 1e-16 {
                            cur_e = e;
                            improved = true;
                        } else {
                            cur[k] = saved;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            let mut rescued = false;
            // Structured directions first: moving the active columns of one
            // channel proportionally to ∓w shrinks ‖xw‖ without leaving the
            // kink valley, which axis-parallel moves cannot follow.
            let mut dirs: Vec<Vec<f64>> = Vec::new();
            let wa2: f64 = active.indices().iter().map(|&j| entries[j] * entries[j]).sum();
            for r in 0..chans {
                for sgn in [-1.0, 1.0] {
                    let mut dir = vec![0.0; dims];
                    for (ai, &j) in active.indices().iter().enumerate() {
                        dir[ai * chans + r] = sgn * entries[j];
                    }
                    dirs.push(dir);
                }
                // Axis directions projected onto the plane Σ w_j x_j = const:
                // tangent moves along the kink surface of the ‖xw‖ term.
                for (ak, &jk) in active.indices().iter().enumerate() {
                    for sgn in [-1.0, 1.0] {
                        let mut dir = vec![0.0; dims];
                        for (ai, &j) in active.indices().iter().enumerate() {
                            let delta = if ai == ak { 1.0 } else { 0.0 };
                            dir[ai * chans + r] = sgn * (delta - entries[jk] * entries[j] / wa2);
                        }
                        dirs.push(dir);
                    }
                }
            }
            for _ in 0..16 {
                dirs.push((0..dims).map(|_| rng.gen_range(-1.0..1.0)).collect());
            }
            for dir in dirs {
                let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm == 0.0 {
                    continue;
                }
                let trial: Vec<f64> = cur
                    .iter()
                    .zip(&dir)
                    .map(|(c, v)| c + step * v / nrm)
                    .collect();
                let e = energy(&trial);
                if e < cur_e - 1e-16 {
                    cur = trial;
                    cur_e = e;
                    rescued = true;
                    break;
                }
            }
            if !rescued {
                step *= 0.5;
            }
        }
        if cur_e < best_e {
            best_e = cur_e;
            best_pt = cur;
        }
    }

    // Reassemble the winning tuple.
    let mut out = f.to_vec();
    for (ai, &j) in active.indices().iter().enumerate() {
        for r in 0..m {
            out[j].cyclic[r] = crate::geometry::Angle::wrap(best_pt[ai * chans + r])?;
        }
        for r in 0..n {
            out[j].linear[r] = best_pt[ai * chans + m + r];
        }
    }
    Ok((out, best_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist_circle;
    use approx::assert_abs_diff_eq;
    
    use rand_chacha::ChaCha8Rng;

    fn pv(cyc: &[f64], lin: &[f64]) -> PixelValue {
        PixelValue::new(cyc.to_vec(), lin.to_vec()).unwrap()
    }

    #[test]
    fn linear_fixed_point() {
        // fw = a means no movement and zero residual.
        let f = vec![vec![1.0], vec![3.0]];
        let a = vec![2.0]; // fw = 3 − 1 = 2 = a
        let (xhat, value) = prox_linear_offset(&f, &a, &[-1.0, 1.0], 7.0).unwrap();
        assert_eq!(xhat, f);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn linear_example_small_lambda() {
        let f = vec![vec![0.0], vec![4.0]];
        let (xhat, value) = prox_linear_offset(&f, &[0.0], &[-1.0, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(xhat[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(xhat[1][0], 3.0, epsilon = 1e-12);

        // Brute force over [−1, 5]² at step 10⁻³.
        let energy =
            |x1: f64, x2: f64| 0.5 * (x1 * x1 + (x2 - 4.0) * (x2 - 4.0)) + (x2 - x1).abs();
        let mut best = f64::INFINITY;
        let mut arg = (0.0, 0.0);
        let steps = 6001;
        for i in 0..steps {
            let x1 = -1.0 + 0.001 * i as f64;
            for j in 0..steps {
                let x2 = -1.0 + 0.001 * j as f64;
                let e = energy(x1, x2);
                if e < best {
                    best = e;
                    arg = (x1, x2);
                }
            }
        }
        assert!((arg.0 - 1.0).abs() <= 2e-3 && (arg.1 - 3.0).abs() <= 2e-3);
        assert!((value - best).abs() <= 1e-5);
    }

    #[test]
    fn linear_example_large_lambda() {
        let f = vec![vec![0.0], vec![4.0]];
        let (xhat, value) = prox_linear_offset(&f, &[0.0], &[-1.0, 1.0], 5.0).unwrap();
        assert_abs_diff_eq!(xhat[0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(xhat[1][0], 2.0, epsilon = 1e-12);
        // Residual vanishes; only the quadratic term contributes.
        assert_abs_diff_eq!(value, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_rejects_zero_weight() {
        assert!(prox_linear_offset(&[vec![0.0], vec![0.0]], &[0.0], &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn difference_lambda_zero_is_identity() {
        let f = [pv(&[1.0], &[2.0]), pv(&[-1.0], &[0.0])];
        let res =
            prox_difference_constrained(&f, Weight::B1, &ActiveSet::full(2), 0.0).unwrap();
        assert!(!res.multivalued);
        assert_eq!(res.candidates[0], f.to_vec());
    }

    #[test]
    fn difference_moves_across_seam() {
        let f = [pv(&[3.0], &[]), pv(&[-3.0], &[])];
        let res =
            prox_difference_constrained(&f, Weight::B1, &ActiveSet::full(2), 0.05).unwrap();
        assert!(!res.multivalued);
        let x = &res.candidates[0];
        assert_abs_diff_eq!(x[0].cyclic[0].rad(), wrap_rad(3.05), epsilon = 1e-12);
        assert_abs_diff_eq!(x[1].cyclic[0].rad(), -3.05, epsilon = 1e-12);

        // Independent check against the brute-force oracle.
        let (_, oracle_e) = prox_oracle(&f, Weight::B1, &ActiveSet::full(2), 0.05).unwrap();
        let e = constrained_energy(x, &f, Weight::B1, &ActiveSet::full(2), 0.05).unwrap();
        assert!((e - oracle_e).abs() <= 1e-5, "{e} vs {oracle_e}");
    }

    #[test]
    fn difference_seam_gives_two_candidates() {
        let f = [pv(&[-PI / 2.0], &[]), pv(&[PI / 2.0], &[])];
        let act = ActiveSet::full(2);
        let res = prox_difference_constrained(&f, Weight::B1, &act, 0.1).unwrap();
        assert!(res.multivalued);
        assert_eq!(res.candidates.len(), 2);
        let e0 = constrained_energy(&res.candidates[0], &f, Weight::B1, &act, 0.1).unwrap();
        let e1 = constrained_energy(&res.candidates[1], &f, Weight::B1, &act, 0.1).unwrap();
        assert!((e0 - e1).abs() <= 1e-10);
        let (_, oracle_e) = prox_oracle(&f, Weight::B1, &act, 0.1).unwrap();
        assert!((e0 - oracle_e).abs() <= 1e-5, "{e0} vs {oracle_e}");
    }

    #[test]
    fn difference_rejects_negative_lambda_and_empty_active() {
        let f = [pv(&[0.0], &[]), pv(&[1.0], &[])];
        assert!(prox_difference_constrained(&f, Weight::B1, &ActiveSet::full(2), -1.0).is_err());
        assert!(ActiveSet::new(vec![], 2).is_err());
        assert!(ActiveSet::new(vec![2], 2).is_err());
    }

    #[test]
    fn data_prox_examples() {
        let f = pv(&[0.3], &[]);
        let g = pv(&[0.3], &[]);
        assert_eq!(prox_data(&g, &f, 2.0).unwrap(), f);

        let out = prox_data(&pv(&[0.5], &[]), &pv(&[0.3], &[]), 1.0).unwrap();
        assert_abs_diff_eq!(out.cyclic[0].rad(), 0.4, epsilon = 1e-12);

        // Short-arc midpoint through the seam.
        let out = prox_data(&pv(&[3.0], &[]), &pv(&[-3.0], &[]), 1.0).unwrap();
        assert_abs_diff_eq!(out.cyclic[0].rad(), -PI, epsilon = 1e-12);
    }

    #[test]
    fn data_prox_is_exact_average_on_linear_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let g = pv(&[], &[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
            let f = pv(&[], &[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
            let lambda = rng.gen_range(0.0..3.0);
            let out = prox_data(&g, &f, lambda).unwrap();
            for r in 0..2 {
                let expect = (g.linear[r] + lambda * f.linear[r]) / (1.0 + lambda);
                assert_eq!(out.linear[r], expect);
            }
        }
    }

    #[test]
    fn linear_reduction_full_active() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let d = w.len();
            for _ in 0..200 {
                let f: Vec<PixelValue> = (0..d)
                    .map(|_| pv(&[], &[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
                    .collect();
                let lambda = rng.gen_range(0.0..1.0);
                let res =
                    prox_difference_constrained(&f, w, &ActiveSet::full(d), lambda).unwrap();
                let cols: Vec<Vec<f64>> = f.iter().map(|p| p.linear.clone()).collect();
                let (xhat, _) =
                    prox_linear_offset(&cols, &[0.0, 0.0], w.entries(), lambda).unwrap();
                for j in 0..d {
                    for r in 0..2 {
                        assert!(
                            (res.candidates[0][j].linear[r] - xhat[j][r]).abs() <= 1e-12,
                            "column {j} row {r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fixed_part_reduction_partial_active() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let d = w.len();
            for _ in 0..200 {
                let f: Vec<PixelValue> =
                    (0..d).map(|_| pv(&[], &[rng.gen_range(-3.0..3.0)])).collect();
                let mut idx: Vec<usize> = (0..d).filter(|_| rng.gen_bool(0.5)).collect();
                if idx.is_empty() {
                    idx.push(rng.gen_range(0..d));
                }
                let act = ActiveSet::new(idx, d).unwrap();
                let lambda = rng.gen_range(0.0..1.0);
                let res = prox_difference_constrained(&f, w, &act, lambda).unwrap();

                // Reduced problem: active columns with offset a = −f̃w̃.
                let mut a = 0.0;
                for (j, &wj) in w.entries().iter().enumerate() {
                    if !act.contains(j) {
                        a -= wj * f[j].linear[0];
                    }
                }
                let cols: Vec<Vec<f64>> = act
                    .indices()
                    .iter()
                    .map(|&j| f[j].linear.clone())
                    .collect();
                let wa: Vec<f64> = act.indices().iter().map(|&j| w.entries()[j]).collect();
                let (xhat, _) = prox_linear_offset(&cols, &[a], &wa, lambda).unwrap();
                for (ai, &j) in act.indices().iter().enumerate() {
                    assert!(
                        (res.candidates[0][j].linear[0] - xhat[ai][0]).abs() <= 1e-12,
                        "column {j}"
                    );
                }
                // Inactive columns untouched.
                for j in 0..d {
                    if !act.contains(j) {
                        assert_eq!(res.candidates[0][j], f[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let d = w.len();
            let mut done = 0;
            while done < 200 {
                let f: Vec<PixelValue> =
                    (0..d).map(|_| pv(&[rng.gen_range(-2.0..2.0)], &[])).collect();
                let alpha: f64 = rng.gen_range(-3.0..3.0);
                let lambda = rng.gen_range(0.01..0.5);
                let shifted: Vec<PixelValue> =
                    f.iter().map(|p| pv(&[p.cyclic[0].rad() + alpha], &[])).collect();
                let r1 = prox_difference_constrained(&f, w, &ActiveSet::full(d), lambda).unwrap();
                let r2 =
                    prox_difference_constrained(&shifted, w, &ActiveSet::full(d), lambda).unwrap();
                if r1.multivalued || r2.multivalued {
                    continue;
                }
                for j in 0..d {
                    let a = r1.candidates[0][j].cyclic[0];
                    let b = r2.candidates[0][j].cyclic[0];
                    assert!(
                        dist_circle(
                            crate::geometry::Angle::wrap(a.rad() + alpha).unwrap(),
                            b
                        ) <= 1e-9
                    );
                }
                done += 1;
            }
        }
    }

    #[test]
    fn movement_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let d = w.len();
            for _ in 0..500 {
                let f: Vec<PixelValue> =
                    (0..d).map(|_| pv(&[], &[rng.gen_range(-3.0..3.0)])).collect();
                let lambda = rng.gen_range(0.0..1.0);
                let act = ActiveSet::full(d);
                let res = prox_difference_constrained(&f, w, &act, lambda).unwrap();
                let wa = w.entries().iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut fro = 0.0;
                for j in 0..d {
                    let dlt = res.candidates[0][j].linear[0] - f[j].linear[0];
                    fro += dlt * dlt;
                }
                assert!(fro.sqrt() <= lambda * wa * (d as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn oracle_validations() {
        let f = [pv(&[0.0], &[0.0]), pv(&[1.0], &[1.0])];
        // m + n = 2 is the limit; m + n = 3 is over it.
        assert!(prox_oracle(&f, Weight::B1, &ActiveSet::full(2), 0.5).is_ok());
        let g = [pv(&[0.0], &[0.0, 0.0]), pv(&[1.0], &[1.0, 1.0])];
        assert!(prox_oracle(&g, Weight::B1, &ActiveSet::full(2), 0.5).is_err());
    }

    #[test]
    fn oracle_lambda_zero_returns_input() {
        let f = [pv(&[0.3], &[]), pv(&[1.0], &[])];
        let (x, e) = prox_oracle(&f, Weight::B1, &ActiveSet::full(2), 0.0).unwrap();
        assert_eq!(x, f.to_vec());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn closed_form_matches_oracle_on_random_instances() {
        // Small-scale version of the full acceptance sweep.
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for w in [Weight::B1, Weight::B2, Weight::B11] {
            let d = w.len();
            for _ in 0..25 {
                let (m, n) = *[(1usize, 0usize), (0, 1), (1, 1), (2, 0), (0, 2)]
                    .choose(&mut rng)
                    .unwrap();
                let f: Vec<PixelValue> = (0..d)
                    .map(|_| {
                        pv(
                            &(0..m).map(|_| rng.gen_range(-PI..PI)).collect::<Vec<_>>(),
                            &(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                let nact = rng.gen_range(1..=d.min(3));
                let mut idx: Vec<usize> = (0..d).collect();
                idx.shuffle(&mut rng);
                idx.truncate(nact);
                let act = ActiveSet::new(idx, d).unwrap();
                let lambda = rng.gen_range(0.001..1.0);
                let res = prox_difference_constrained(&f, w, &act, lambda).unwrap();
                let closed = res
                    .candidates
                    .iter()
                    .map(|c| constrained_energy(c, &f, w, &act, lambda).unwrap())
                    .fold(f64::INFINITY, f64::min);
                let (_, oracle_e) = prox_oracle(&f, w, &act, lambda).unwrap();
                assert!(
                    (closed - oracle_e).abs() <= 1e-5,
                    "{w:?}: closed {closed} vs oracle {oracle_e}; f = {f:?}, act = {act:?}, lambda = {lambda}"
                );
            }
        }
    }
}
