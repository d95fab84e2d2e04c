//! Cyclic proximal point solver.
//!
//! The objective is split into sweeps J₁…J₁₈ (+ J₁₉ for the data term) such
//! that within one sweep no pixel occurs in two tuples: horizontal/vertical/
//! diagonal/antidiagonal first-order pairs split by start-index parity,
//! second-order triples split by center residue mod 3, mixed 2×2 blocks split
//! by top-left parity in both axes.  One outer cycle applies all sweeps with
//! the diminishing step λ_k = λ₀/k; each touched tuple is updated by the
//! closed-form difference prox, the data sweep by the data prox.

use crate::differences::Weight;
use crate::error::{Error, Result};
use crate::functional::{eval_objective, InpaintMask, Mode, RegParams};
use crate::geometry::{is_seam, wrap_rad, ProductImage};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

/// Largest supported number of components per pixel (keeps per-tuple scratch
/// on the stack in the hot loop; a stacked 13-frame video uses 13).
pub const MAX_CHANS: usize = 64;

/// How a set-valued prox picks among its candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TieBreak {
    /// Deterministically take the +π direction branch on every seam row.
    PlusPi,
    /// Choose branch signs from a seeded stream (deterministic per seed).
    SeededRandom(u64),
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub params: RegParams,
    pub mode: Mode,
    /// λ₀ of the step sequence λ_k = λ₀/k.
    pub lambda0: f64,
    /// Number of outer cycles K.
    pub iterations: usize,
    pub tie_break: TieBreak,
    /// Record eval_objective after every cycle.
    pub record_energy: bool,
    /// Worker threads for the inner sweeps; results are identical for any
    /// count because tuples within a sweep are disjoint.
    pub workers: usize,
}

impl SolverConfig {
    /// Defaults matching the reference experiments: λ₀ = π/2, K = 400.
    pub fn new(params: RegParams, mode: Mode) -> SolverConfig {
        SolverConfig {
            params,
            mode,
            lambda0: PI / 2.0,
            iterations: 400,
            tie_break: TieBreak::PlusPi,
            record_energy: false,
            workers: 1,
        }
    }
}

/// Step sequence λ_k = λ₀/k (square-summable but not summable).
pub fn lambda_seq(k: usize, lambda0: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("cycle index must be >= 1".into()));
    }
    if !lambda0.is_finite() || lambda0 < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda0 must be >= 0, got {lambda0}")));
    }
    Ok(lambda0 / k as f64)
}

/// What one sweep applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Difference(Weight),
    Data,
}

/// One sweep: a difference term of fixed weight/orientation/phase or the
/// data term, together with its λ-multiplier and the flat pixel indices of
/// its tuples (stride = tuple length; pairwise disjoint within the sweep).
#[derive(Debug, Clone)]
pub struct SweepStep {
    pub label: &'static str,
    pub kind: StepKind,
    pub multiplier: f64,
    tuples: Vec<u32>,
    d: usize,
}

impl SweepStep {
    pub fn tuple_len(&self) -> usize {
        self.d
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len() / self.d
    }

    pub fn tuples(&self) -> &[u32] {
        &self.tuples
    }
}

/// Ordered sweeps of one cycle.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub steps: Vec<SweepStep>,
}

/// Builds the sweep schedule for an N×M image: 18 difference sweeps, plus
/// the data sweep in the modes with a data term.  Sweeps whose parameter is
/// zero are kept in the plan but skipped at run time.
pub fn build_splitting(width: usize, height: usize, params: &RegParams, mode: Mode) -> SweepPlan {
    let idx = |i: usize, j: usize| (j * width + i) as u32;
    let mut steps = Vec::with_capacity(19);

    // First-order pairs, split by parity of the leading index.
    for phase in 0..2usize {
        let mut t = Vec::new();
        for j in 0..height {
            for i in (0..width.saturating_sub(1)).filter(|i| i % 2 == phase) {
                t.extend_from_slice(&[idx(i, j), idx(i + 1, j)]);
            }
        }
        steps.push(SweepStep {
            label: if phase == 0 { "h1-even" } else { "h1-odd" },
            kind: StepKind::Difference(Weight::B1),
            multiplier: params.alpha[0],
            tuples: t,
            d: 2,
        });
    }
    for phase in 0..2usize {
        let mut t = Vec::new();
        for j in (0..height.saturating_sub(1)).filter(|j| j % 2 == phase) {
            for i in 0..width {
                t.extend_from_slice(&[idx(i, j), idx(i, j + 1)]);
            }
        }
        steps.push(SweepStep {
            label: if phase == 0 { "v1-even" } else { "v1-odd" },
            kind: StepKind::Difference(Weight::B1),
            multiplier: params.alpha[1],
            tuples: t,
            d: 2,
        });
    }
    for phase in 0..2usize {
        let mut t = Vec::new();
        for j in 0..height.saturating_sub(1) {
            for i in (0..width.saturating_sub(1)).filter(|i| i % 2 == phase) {
                t.extend_from_slice(&[idx(i, j), idx(i + 1, j + 1)]);
            }
        }
        steps.push(SweepStep {
            label: if phase == 0 { "d1-even" } else { "d1-odd" },
            kind: StepKind::Difference(Weight::B1),
            multiplier: params.alpha[2] * FRAC_1_SQRT_2,
            tuples: t,
            d: 2,
        });
    }
    for phase in 0..2usize {
        let mut t = Vec::new();
        for j in 0..height.saturating_sub(1) {
            for i in (0..width.saturating_sub(1)).filter(|i| i % 2 == phase) {
                t.extend_from_slice(&[idx(i, j + 1), idx(i + 1, j)]);
            }
        }
        steps.push(SweepStep {
            label: if phase == 0 { "a1-even" } else { "a1-odd" },
            kind: StepKind::Difference(Weight::B1),
            multiplier: params.alpha[3] * FRAC_1_SQRT_2,
            tuples: t,
            d: 2,
        });
    }

    // Second-order triples, split by center residue mod 3.
    const H2_LABELS: [&str; 3] = ["h2-r0", "h2-r1", "h2-r2"];
    for phase in 0..3usize {
        let mut t = Vec::new();
        if width >= 3 {
            for j in 0..height {
                for c in (1..width - 1).filter(|c| c % 3 == phase) {
                    t.extend_from_slice(&[idx(c - 1, j), idx(c, j), idx(c + 1, j)]);
                }
            }
        }
        steps.push(SweepStep {
            label: H2_LABELS[phase],
            kind: StepKind::Difference(Weight::B2),
            multiplier: params.beta[0],
            tuples: t,
            d: 3,
        });
    }
    const V2_LABELS: [&str; 3] = ["v2-r0", "v2-r1", "v2-r2"];
    for phase in 0..3usize {
        let mut t = Vec::new();
        if height >= 3 {
            for c in (1..height - 1).filter(|c| c % 3 == phase) {
                for i in 0..width {
                    t.extend_from_slice(&[idx(i, c - 1), idx(i, c), idx(i, c + 1)]);
                }
            }
        }
        steps.push(SweepStep {
            label: V2_LABELS[phase],
            kind: StepKind::Difference(Weight::B2),
            multiplier: params.beta[1],
            tuples: t,
            d: 3,
        });
    }

    // Mixed 2×2 blocks, split by parity of the top-left corner.
    const B_LABELS: [&str; 4] = ["m11-ee", "m11-oe", "m11-eo", "m11-oo"];
    for (pidx, (pi, pj)) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)].iter().enumerate() {
        let mut t = Vec::new();
        for j in (0..height.saturating_sub(1)).filter(|j| j % 2 == *pj) {
            for i in (0..width.saturating_sub(1)).filter(|i| i % 2 == *pi) {
                t.extend_from_slice(&[
                    idx(i, j),
                    idx(i + 1, j),
                    idx(i, j + 1),
                    idx(i + 1, j + 1),
                ]);
            }
        }
        steps.push(SweepStep {
            label: B_LABELS[pidx],
            kind: StepKind::Difference(Weight::B11),
            multiplier: params.gamma,
            tuples: t,
            d: 4,
        });
    }

    if mode != Mode::InpaintNoiseless {
        steps.push(SweepStep {
            label: "data",
            kind: StepKind::Data,
            multiplier: 1.0,
            tuples: (0..(width * height) as u32).collect(),
            d: 1,
        });
    }

    SweepPlan { steps }
}

/// Fills masked pixels by repeatedly solving D(x, b) = 0 stencils that have
/// exactly one unknown, using only stencil families whose regularization
/// parameter is nonzero (first B1 copies, then B2 extrapolation, then B11
/// completion; pixels are scanned row-major and newly filled pixels are
/// usable immediately).  A B2 center fill is unique only for purely linear
/// data and is skipped otherwise.  Pixels that remain unknown (pathological
/// masks) fall back to the nearest-neighbor extension.
pub fn init_unknown_boundary(
    f: &ProductImage,
    mask: &InpaintMask,
    params: &RegParams,
) -> Result<ProductImage> {
    mask.matches(f)?;
    let (nw, nh) = (f.width(), f.height());
    if mask.masked_count() == nw * nh {
        return Err(Error::Infeasible("all pixels masked".into()));
    }
    let mut x = f.clone();
    let mut known: Vec<bool> = mask.raw().iter().map(|&b| !b).collect();
    let chans = x.chans();
    let (m, _) = x.signature();

    // B1 copy directions, gated per first-order parameter: horizontal,
    // vertical, diagonal, antidiagonal; each checks both orientations.
    let mut b1_dirs: Vec<(i64, i64)> = Vec::new();
    if params.alpha[0] > 0.0 {
        b1_dirs.extend([(-1, 0), (1, 0)]);
    }
    if params.alpha[1] > 0.0 {
        b1_dirs.extend([(0, -1), (0, 1)]);
    }
    if params.alpha[2] > 0.0 {
        b1_dirs.extend([(-1, -1), (1, 1)]);
    }
    if params.alpha[3] > 0.0 {
        b1_dirs.extend([(1, -1), (-1, 1)]);
    }

    let in_bounds = |i: i64, j: i64| i >= 0 && j >= 0 && i < nw as i64 && j < nh as i64;

    let max_passes = nw.max(nh) + 2;
    for _ in 0..max_passes {
        // Fillability is judged against the known-set at the start of the
        // pass, so the filled region grows by one layer per pass and a pixel
        // is filled from its nearest known side rather than by a long
        // scan-order copy chain.
        let mut filled_this_pass: Vec<usize> = Vec::new();
        for j in 0..nh {
            for i in 0..nw {
                let p = j * nw + i;
                if known[p] {
                    continue;
                }
                let kn = |ii: i64, jj: i64| in_bounds(ii, jj) && known[jj as usize * nw + ii as usize];
                let col = |ii: i64, jj: i64| {
                    let q = jj as usize * nw + ii as usize;
                    x.raw()[q * chans..(q + 1) * chans].to_vec()
                };

                let mut fill: Option<Vec<f64>> = None;

                // B1: copy a known neighbor.
                for &(di, dj) in &b1_dirs {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if kn(ii, jj) {
                        fill = Some(col(ii, jj));
                        break;
                    }
                }

                // B2: extrapolate from two consecutive known pixels, or (for
                // purely linear data) average the two flanking ones.
                if fill.is_none() {
                    let axes: [((i64, i64), bool); 2] =
                        [((1, 0), params.beta[0] > 0.0), ((0, 1), params.beta[1] > 0.0)];
                    'outer: for &((ai, aj), enabled) in &axes {
                        if !enabled {
                            continue;
                        }
                        for sgn in [-1i64, 1] {
                            let (i1, j1) = (i as i64 + sgn * ai, j as i64 + sgn * aj);
                            let (i2, j2) = (i as i64 + 2 * sgn * ai, j as i64 + 2 * sgn * aj);
                            if kn(i1, j1) && kn(i2, j2) {
                                let near = col(i1, j1);
                                let far = col(i2, j2);
                                let mut v = vec![0.0; chans];
                                for r in 0..chans {
                                    let e = 2.0 * near[r] - far[r];
                                    v[r] = if r < m { wrap_rad(e) } else { e };
                                }
                                fill = Some(v);
                                break 'outer;
                            }
                        }
                        if m == 0 {
                            let (i1, j1) = (i as i64 - ai, j as i64 - aj);
                            let (i2, j2) = (i as i64 + ai, j as i64 + aj);
                            if kn(i1, j1) && kn(i2, j2) {
                                let a = col(i1, j1);
                                let b = col(i2, j2);
                                let v = (0..chans).map(|r| 0.5 * (a[r] + b[r])).collect();
                                fill = Some(v);
                                break 'outer;
                            }
                        }
                    }
                }

                // B11: complete a 2×2 block with three known corners.
                if fill.is_none() && params.gamma > 0.0 {
                    'blocks: for (oi, oj) in [(-1i64, -1i64), (0, -1), (-1, 0), (0, 0)] {
                        let (ti, tj) = (i as i64 + oi, j as i64 + oj);
                        let corners = [(ti, tj), (ti + 1, tj), (ti, tj + 1), (ti + 1, tj + 1)];
                        if corners.iter().any(|&(a, b)| !in_bounds(a, b)) {
                            continue;
                        }
                        let w11 = Weight::B11.entries();
                        let mut unknown = None;
                        for (ci, &(a, b)) in corners.iter().enumerate() {
                            if !kn(a, b) {
                                if (a, b) == (i as i64, j as i64) && unknown.is_none() {
                                    unknown = Some(ci);
                                } else {
                                    continue 'blocks;
                                }
                            }
                        }
                        if let Some(u) = unknown {
                            let mut v = vec![0.0; chans];
                            for r in 0..chans {
                                let mut s = 0.0;
                                for (ci, &(a, b)) in corners.iter().enumerate() {
                                    if ci != u {
                                        s += w11[ci] * col(a, b)[r];
                                    }
                                }
                                let e = -s / w11[u];
                                v[r] = if r < m { wrap_rad(e) } else { e };
                            }
                            fill = Some(v);
                            break 'blocks;
                        }
                    }
                }

                if let Some(v) = fill {
                    x.raw_mut()[p * chans..(p + 1) * chans].copy_from_slice(&v);
                    filled_this_pass.push(p);
                }
            }
        }
        if filled_this_pass.is_empty() {
            break;
        }
        for p in filled_this_pass {
            known[p] = true;
        }
        if known.iter().all(|&k| k) {
            break;
        }
    }

    if known.iter().any(|&k| !k) {
        let rest = InpaintMask::new(nw, nh, known.iter().map(|&k| !k).collect())?;
        x = crate::functional::extend_nearest(&x, &rest)?;
    }
    Ok(x)
}

/// Deterministic per-tuple stream id for the seeded tie-break.
#[inline]
fn mix3(a: u64, b: u64, c: u64) -> u64 {
    let mut h = a
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(b)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9)
        .wrapping_add(c);
    h ^= h >> 31;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 29)
}

/// Closed-form difference-prox update of one tuple, on flat image storage.
///
/// Writes the new values of all tuple columns into `out` (stride `chans`);
/// inactive columns are copied through unchanged.
#[allow(clippy::too_many_arguments)]
pub(crate) fn tuple_update(
    data: &[f64],
    chans: usize,
    m: usize,
    entries: &[f64],
    tuple: &[u32],
    active_mask: u32,
    lam: f64,
    tie: TieBreak,
    stream: u64,
    out: &mut [f64],
) {
    for (j, &p) in tuple.iter().enumerate() {
        let base = p as usize * chans;
        out[j * chans..(j + 1) * chans].copy_from_slice(&data[base..base + chans]);
    }
    let mut wa2 = 0.0;
    for (j, &wj) in entries.iter().enumerate() {
        if active_mask & (1 << j) != 0 {
            wa2 += wj * wj;
        }
    }
    if wa2 == 0.0 || lam == 0.0 {
        return;
    }

    let mut fw = [0.0f64; MAX_CHANS];
    let mut seam_bits: u64 = 0;
    let mut norm2 = 0.0;
    for r in 0..chans {
        let mut s = 0.0;
        for (j, &p) in tuple.iter().enumerate() {
            s += entries[j] * data[p as usize * chans + r];
        }
        if r < m {
            if is_seam(s) {
                seam_bits |= 1 << r;
                s = PI;
            } else {
                s = wrap_rad(s);
            }
        }
        fw[r] = s;
        norm2 += s * s;
    }
    if norm2 == 0.0 {
        return;
    }
    let norm = norm2.sqrt();
    let mval = lam.min(norm / wa2);

    if seam_bits != 0 {
        if let TieBreak::SeededRandom(seed) = tie {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream);
            for r in 0..m {
                if seam_bits & (1 << r) != 0 && rng.gen_bool(0.5) {
                    fw[r] = -PI;
                }
            }
        }
        // TieBreak::PlusPi keeps the +π branch already stored in fw.
    }

    for (j, &wj) in entries.iter().enumerate() {
        if active_mask & (1 << j) == 0 {
            continue;
        }
        for r in 0..chans {
            let v = out[j * chans + r] - mval * (fw[r] / norm) * wj;
            out[j * chans + r] = if r < m { wrap_rad(v) } else { v };
        }
    }
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub result: ProductImage,
    /// eval_objective after each cycle (length K) when recording is on.
    pub energy_trace: Vec<f64>,
    /// eval_objective of the initialization (cycle 0) when recording is on.
    pub initial_energy: Option<f64>,
    pub iterations_run: usize,
    pub wall_time: Duration,
}

fn active_mask_of(tuple: &[u32], mask: &InpaintMask, noiseless: bool) -> u32 {
    if !noiseless {
        return (1u32 << tuple.len()) - 1;
    }
    let mut bits = 0u32;
    for (j, &p) in tuple.iter().enumerate() {
        if mask.is_masked_idx(p as usize) {
            bits |= 1 << j;
        }
    }
    bits
}

#[allow(clippy::too_many_arguments)]
fn apply_difference_step(
    x: &mut ProductImage,
    step: &SweepStep,
    weight: Weight,
    mask: &InpaintMask,
    noiseless: bool,
    lam_eff: f64,
    tie: TieBreak,
    cycle: u64,
    step_idx: u64,
    workers: usize,
    scratch: &mut Vec<f64>,
) {
    let d = step.tuple_len();
    let chans = x.chans();
    let (m, _) = x.signature();
    let entries = weight.entries();
    let ntuples = step.tuple_count();
    if ntuples == 0 {
        return;
    }

    if workers <= 1 {
        let mut out = [0.0f64; 4 * MAX_CHANS];
        for q in 0..ntuples {
            let tuple = &step.tuples()[q * d..(q + 1) * d];
            let bits = active_mask_of(tuple, mask, noiseless);
            if bits == 0 {
                continue;
            }
            // In-place update is safe: tuples within a sweep are disjoint.
            tuple_update(
                x.raw(),
                chans,
                m,
                entries,
                tuple,
                bits,
                lam_eff,
                tie,
                mix3(cycle, step_idx, q as u64),
                &mut out[..d * chans],
            );
            let data = x.raw_mut();
            for (j, &p) in tuple.iter().enumerate() {
                if bits & (1 << j) != 0 {
                    let base = p as usize * chans;
                    data[base..base + chans].copy_from_slice(&out[j * chans..(j + 1) * chans]);
                }
            }
        }
    } else {
        scratch.resize(ntuples * d * chans, 0.0);
        {
            let data = x.raw();
            scratch
                .par_chunks_mut(d * chans)
                .enumerate()
                .for_each(|(q, out)| {
                    let tuple = &step.tuples()[q * d..(q + 1) * d];
                    let bits = active_mask_of(tuple, mask, noiseless);
                    if bits == 0 {
                        return;
                    }
                    tuple_update(
                        data,
                        chans,
                        m,
                        entries,
                        tuple,
                        bits,
                        lam_eff,
                        tie,
                        mix3(cycle, step_idx, q as u64),
                        out,
                    );
                });
        }
        let data = x.raw_mut();
        for q in 0..ntuples {
            let tuple = &step.tuples()[q * d..(q + 1) * d];
            let bits = active_mask_of(tuple, mask, noiseless);
            if bits == 0 {
                continue;
            }
            let out = &scratch[q * d * chans..(q + 1) * d * chans];
            for (j, &p) in tuple.iter().enumerate() {
                if bits & (1 << j) != 0 {
                    let base = p as usize * chans;
                    data[base..base + chans].copy_from_slice(&out[j * chans..(j + 1) * chans]);
                }
            }
        }
    }
}

/// In-place data prox of one pixel; equal components are exact fixed points.
#[inline]
fn data_prox_px(xv: &mut [f64], fv: &[f64], m: usize, lam: f64) {
    let t = lam / (1.0 + lam);
    for r in 0..xv.len() {
        if xv[r] == fv[r] {
            continue;
        }
        let avg = (xv[r] + lam * fv[r]) / (1.0 + lam);
        if r < m {
            let diff = xv[r] - fv[r];
            let v = if diff.abs() <= PI { 0.0 } else { diff.signum() };
            xv[r] = wrap_rad(avg + t * crate::geometry::TAU * v);
        } else {
            xv[r] = avg;
        }
    }
}

fn apply_data_step(
    x: &mut ProductImage,
    f: &ProductImage,
    mask: &InpaintMask,
    mode: Mode,
    lam: f64,
    workers: usize,
) {
    let chans = x.chans();
    let (m, _) = x.signature();
    let restrict = mode == Mode::InpaintNoisy;
    if workers <= 1 {
        let total = x.width() * x.height();
        for p in 0..total {
            if restrict && mask.is_masked_idx(p) {
                continue;
            }
            let fv = f.raw()[p * chans..(p + 1) * chans].to_vec();
            data_prox_px(&mut x.raw_mut()[p * chans..(p + 1) * chans], &fv, m, lam);
        }
    } else {
        let fr = f.raw();
        x.raw_mut()
            .par_chunks_mut(chans)
            .enumerate()
            .for_each(|(p, xv)| {
                if restrict && mask.is_masked_idx(p) {
                    return;
                }
                data_prox_px(xv, &fr[p * chans..(p + 1) * chans], m, lam);
            });
    }
}

/// Runs the cyclic proximal point iteration.
pub fn solve(f: &ProductImage, mask: &InpaintMask, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.params.validate()?;
    mask.matches(f)?;
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iteration count must be >= 1".into()));
    }
    if !cfg.lambda0.is_finite() || cfg.lambda0 < 0.0 {
        return Err(Error::InvalidArgument("lambda0 must be >= 0".into()));
    }
    if cfg.mode == Mode::Denoise && !mask.is_empty_mask() {
        return Err(Error::Infeasible("denoising requires an empty mask".into()));
    }
    if mask.masked_count() == f.width() * f.height() {
        return Err(Error::Infeasible("all pixels masked".into()));
    }
    if f.chans() > MAX_CHANS {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_CHANS} components per pixel supported"
        )));
    }

    let start = Instant::now();
    let mut x = if cfg.mode == Mode::Denoise || mask.is_empty_mask() {
        f.clone()
    } else {
        init_unknown_boundary(f, mask, &cfg.params)?
    };
    let plan = build_splitting(f.width(), f.height(), &cfg.params, cfg.mode);
    let noiseless = cfg.mode == Mode::InpaintNoiseless;

    let initial_energy = if cfg.record_energy {
        Some(eval_objective(&x, f, mask, &cfg.params, cfg.mode)?)
    } else {
        None
    };
    let mut trace = Vec::new();

    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?,
        )
    } else {
        None
    };

    let mut scratch = Vec::new();
    for k in 1..=cfg.iterations {
        let lam = lambda_seq(k, cfg.lambda0)?;
        for (si, step) in plan.steps.iter().enumerate() {
            match step.kind {
                StepKind::Difference(w) => {
                    let lam_eff = lam * step.multiplier;
                    if lam_eff == 0.0 {
                        continue;
                    }
                    let run = |x: &mut ProductImage, scratch: &mut Vec<f64>| {
                        apply_difference_step(
                            x,
                            step,
                            w,
                            mask,
                            noiseless,
                            lam_eff,
                            cfg.tie_break,
                            k as u64,
                            si as u64,
                            cfg.workers,
                            scratch,
                        )
                    };
                    match &pool {
                        Some(p) => p.install(|| run(&mut x, &mut scratch)),
                        None => run(&mut x, &mut scratch),
                    }
                }
                StepKind::Data => {
                    if lam == 0.0 {
                        continue;
                    }
                    match &pool {
                        Some(p) => p.install(|| {
                            apply_data_step(&mut x, f, mask, cfg.mode, lam, cfg.workers)
                        }),
                        None => apply_data_step(&mut x, f, mask, cfg.mode, lam, 1),
                    }
                }
            }
        }
        if cfg.record_energy {
            trace.push(eval_objective(&x, f, mask, &cfg.params, cfg.mode)?);
        }
    }

    Ok(SolveReport {
        result: x,
        energy_trace: trace,
        initial_energy,
        iterations_run: cfg.iterations,
        wall_time: start.elapsed(),
    })
}
