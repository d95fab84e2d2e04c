//! Evaluation of the restoration functionals and neighbor-distance
//! diagnostics.
//!
//! The objective is
//! `J(x) = F(x; f) + TV₁(x) + TV₂(x) + TV₁₁(x)`
//! with anisotropic first-order terms in four directions (diagonals scaled by
//! 1/√2), horizontal/vertical second-order terms over interior triples, and a
//! mixed term over 2×2 blocks.  Three modes are supported: plain denoising,
//! constrained (noiseless) inpainting, and penalized (noisy) inpainting where
//! the data term runs over the observed pixels only.

use crate::differences::Weight;
use crate::error::{Error, Result};
use crate::geometry::{wrap_rad, ProductImage};
use std::collections::BinaryHeap;

/// Regularization parameters: `alpha` weights the four first-order
/// directions (horizontal, vertical, diagonal, antidiagonal), `beta` the
/// horizontal/vertical second-order terms, `gamma` the mixed term.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegParams {
    pub alpha: [f64; 4],
    pub beta: [f64; 2],
    pub gamma: f64,
}

impl RegParams {
    /// All-zero parameters (every TV term switched off).
    pub fn zero() -> RegParams {
        RegParams {
            alpha: [0.0; 4],
            beta: [0.0; 2],
            gamma: 0.0,
        }
    }

    /// The axis-coupled parametrization used by the experiments:
    /// `α₁ = α₂ = a` (diagonals off) and `β₁ = β₂ = γ = b`.
    pub fn coupled(a: f64, b: f64) -> RegParams {
        RegParams {
            alpha: [a, a, 0.0, 0.0],
            beta: [b, b],
            gamma: b,
        }
    }

    /// All parameters multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> RegParams {
        RegParams {
            alpha: self.alpha.map(|v| v * factor),
            beta: self.beta.map(|v| v * factor),
            gamma: self.gamma * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .alpha
            .iter()
            .chain(self.beta.iter())
            .chain(std::iter::once(&self.gamma));
        for &v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "regularization parameters must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|&v| v == 0.0)
            && self.beta.iter().all(|&v| v == 0.0)
            && self.gamma == 0.0
    }
}

/// Restoration mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    /// Data term over all pixels, no constraint.
    Denoise,
    /// Hard constraint x = f on the observed pixels; TV terms only.
    InpaintNoiseless,
    /// Data term over the observed pixels only.
    InpaintNoisy,
}

/// Boolean grid marking the inpainting region Ω (true = missing pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintMask {
    width: usize,
    height: usize,
    omega: Vec<bool>,
}

impl InpaintMask {
    pub fn new(width: usize, height: usize, omega: Vec<bool>) -> Result<InpaintMask> {
        if omega.len() != width * height {
            return Err(Error::DimensionMismatch("mask size".into()));
        }
        Ok(InpaintMask { width, height, omega })
    }

    /// Mask with no missing pixels.
    pub fn empty(width: usize, height: usize) -> InpaintMask {
        InpaintMask {
            width,
            height,
            omega: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> InpaintMask {
        let mut omega = vec![false; width * height];
        for j in 0..height {
            for i in 0..width {
                omega[j * width + i] = f(i, j);
            }
        }
        InpaintMask { width, height, omega }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// True when pixel (i, j) belongs to Ω (missing).
    #[inline]
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.omega[j * self.width + i]
    }

    #[inline]
    pub fn is_masked_idx(&self, idx: usize) -> bool {
        self.omega[idx]
    }

    pub fn masked_count(&self) -> usize {
        self.omega.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        self.omega.iter().all(|&b| !b)
    }

    pub fn raw(&self) -> &[bool] {
        &self.omega
    }

    pub fn matches(&self, img: &ProductImage) -> Result<()> {
        if self.width != img.width() || self.height != img.height() {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs image {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

/// Combined difference of a pixel tuple given by flat indices, computed
/// directly on the image storage.
fn diff_at(x: &ProductImage, pix: &[usize], entries: &[f64]) -> f64 {
    let chans = x.chans();
    let (m, _) = x.signature();
    let data = x.raw();
    let mut acc = 0.0;
    for r in 0..chans {
        let mut s = 0.0;
        for (p, &wj) in pix.iter().zip(entries) {
            s += wj * data[p * chans + r];
        }
        if r < m {
            s = wrap_rad(s);
        }
        acc += s * s;
    }
    acc.sqrt()
}

/// First-order TV term with direction weights `alpha`.
pub fn eval_tv1(x: &ProductImage, alpha: [f64; 4]) -> f64 {
    let (nw, nh) = (x.width(), x.height());
    let b1 = Weight::B1.entries();
    let idx = |i: usize, j: usize| j * nw + i;
    let mut acc = 0.0;
    if alpha[0] > 0.0 {
        for j in 0..nh {
            for i in 0..nw.saturating_sub(1) {
                acc += alpha[0] * diff_at(x, &[idx(i, j), idx(i + 1, j)], b1);
            }
        }
    }
    if alpha[1] > 0.0 {
        for j in 0..nh.saturating_sub(1) {
            for i in 0..nw {
                acc += alpha[1] * diff_at(x, &[idx(i, j), idx(i, j + 1)], b1);
            }
        }
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    if alpha[2] > 0.0 {
        for j in 0..nh.saturating_sub(1) {
            for i in 0..nw.saturating_sub(1) {
                acc += alpha[2] * inv_sqrt2 * diff_at(x, &[idx(i, j), idx(i + 1, j + 1)], b1);
            }
        }
    }
    if alpha[3] > 0.0 {
        for j in 0..nh.saturating_sub(1) {
            for i in 0..nw.saturating_sub(1) {
                acc += alpha[3] * inv_sqrt2 * diff_at(x, &[idx(i, j + 1), idx(i + 1, j)], b1);
            }
        }
    }
    acc
}

/// Second-order TV term over horizontal and vertical interior triples.
pub fn eval_tv2(x: &ProductImage, beta: [f64; 2]) -> f64 {
    let (nw, nh) = (x.width(), x.height());
    let b2 = Weight::B2.entries();
    let idx = |i: usize, j: usize| j * nw + i;
    let mut acc = 0.0;
    if beta[0] > 0.0 && nw >= 3 {
        for j in 0..nh {
            for i in 1..nw - 1 {
                acc += beta[0] * diff_at(x, &[idx(i - 1, j), idx(i, j), idx(i + 1, j)], b2);
            }
        }
    }
    if beta[1] > 0.0 && nh >= 3 {
        for j in 1..nh - 1 {
            for i in 0..nw {
                acc += beta[1] * diff_at(x, &[idx(i, j - 1), idx(i, j), idx(i, j + 1)], b2);
            }
        }
    }
    acc
}

/// Mixed second-order TV term over 2×2 blocks.
pub fn eval_tv11(x: &ProductImage, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 0.0;
    }
    let (nw, nh) = (x.width(), x.height());
    let b11 = Weight::B11.entries();
    let idx = |i: usize, j: usize| j * nw + i;
    let mut acc = 0.0;
    for j in 0..nh.saturating_sub(1) {
        for i in 0..nw.saturating_sub(1) {
            acc += gamma
                * diff_at(
                    x,
                    &[idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)],
                    b11,
                );
        }
    }
    acc
}

/// Data term `½ Σ_B d_X(x, f)²`; with a mask the sum runs over Ω^C (the
/// observed pixels), otherwise over all pixels.
pub fn eval_data(x: &ProductImage, f: &ProductImage, mask: Option<&InpaintMask>) -> Result<f64> {
    if x.signature() != f.signature()
        || x.width() != f.width()
        || x.height() != f.height()
    {
        return Err(Error::DimensionMismatch("data term image mismatch".into()));
    }
    if let Some(mk) = mask {
        mk.matches(x)?;
    }
    let chans = x.chans();
    let (m, _) = x.signature();
    let (xa, fa) = (x.raw(), f.raw());
    let mut acc = 0.0;
    for p in 0..x.width() * x.height() {
        if let Some(mk) = mask {
            if mk.is_masked_idx(p) {
                continue;
            }
        }
        for r in 0..chans {
            let mut d = xa[p * chans + r] - fa[p * chans + r];
            if r < m {
                d = wrap_rad(d);
            }
            acc += d * d;
        }
    }
    Ok(0.5 * acc)
}

/// Full objective for the given mode.
///
/// `Denoise`: data term over all pixels plus the TV terms (mask ignored).
/// `InpaintNoiseless`: TV terms only; x must equal f exactly on Ω^C.
/// `InpaintNoisy`: data term over Ω^C plus the TV terms.
pub fn eval_objective(
    x: &ProductImage,
    f: &ProductImage,
    mask: &InpaintMask,
    params: &RegParams,
    mode: Mode,
) -> Result<f64> {
    params.validate()?;
    mask.matches(x)?;
    let tv = eval_tv1(x, params.alpha) + eval_tv2(x, params.beta) + eval_tv11(x, params.gamma);
    match mode {
        Mode::Denoise => Ok(eval_data(x, f, None)? + tv),
        Mode::InpaintNoisy => Ok(eval_data(x, f, Some(mask))? + tv),
        Mode::InpaintNoiseless => {
            let chans = x.chans();
            for j in 0..x.height() {
                for i in 0..x.width() {
                    if mask.is_masked(i, j) {
                        continue;
                    }
                    let p = j * x.width() + i;
                    if x.raw()[p * chans..(p + 1) * chans] != f.raw()[p * chans..(p + 1) * chans] {
                        return Err(Error::ConstraintViolation(i, j));
                    }
                }
            }
            Ok(tv)
        }
    }
}

const DIST_EPS: f64 = 1e-9;

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    src: u32,
    pix: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reverse ordering: BinaryHeap is a max-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.src.cmp(&self.src))
            .then(other.pix.cmp(&self.pix))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i64, i64, f64); 8] = [
    (-1, -1, std::f64::consts::SQRT_2),
    (0, -1, 1.0),
    (1, -1, std::f64::consts::SQRT_2),
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (-1, 1, std::f64::consts::SQRT_2),
    (0, 1, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
];

/// Multi-source shortest-path field from the observed pixels over the
/// eight-neighborhood grid (diagonal edges of length √2).  Returns per-pixel
/// distance and the flat index of the nearest source; distance ties are
/// broken toward the source with the smaller row-major index.
fn nearest_field(mask: &InpaintMask) -> Result<(Vec<f64>, Vec<u32>)> {
    let (nw, nh) = (mask.width(), mask.height());
    let total = nw * nh;
    let mut dist = vec![f64::INFINITY; total];
    let mut src = vec![u32::MAX; total];
    let mut heap = BinaryHeap::new();
    for p in 0..total {
        if !mask.is_masked_idx(p) {
            dist[p] = 0.0;
            src[p] = p as u32;
            heap.push(HeapItem {
                dist: 0.0,
                src: p as u32,
                pix: p as u32,
            });
        }
    }
    if heap.is_empty() {
        return Err(Error::Infeasible("all pixels masked".into()));
    }
    while let Some(item) = heap.pop() {
        let p = item.pix as usize;
        if item.dist > dist[p] + DIST_EPS || (item.dist >= dist[p] - DIST_EPS && item.src > src[p])
        {
            continue;
        }
        let (pi, pj) = ((p % nw) as i64, (p / nw) as i64);
        for &(di, dj, cost) in &NEIGHBORS {
            let (qi, qj) = (pi + di, pj + dj);
            if qi < 0 || qj < 0 || qi >= nw as i64 || qj >= nh as i64 {
                continue;
            }
            let q = qj as usize * nw + qi as usize;
            let nd = item.dist + cost;
            let better = nd < dist[q] - DIST_EPS
                || ((nd - dist[q]).abs() <= DIST_EPS && item.src < src[q]);
            if better {
                dist[q] = nd;
                src[q] = item.src;
                heap.push(HeapItem {
                    dist: nd,
                    src: item.src,
                    pix: q as u32,
                });
            }
        }
    }
    Ok((dist, src))
}

/// Cyclic-part distance between two pixels of the same image, by flat index.
fn cyclic_dist_px(f: &ProductImage, a: usize, b: usize) -> f64 {
    let chans = f.chans();
    let (m, _) = f.signature();
    let data = f.raw();
    let mut acc = 0.0;
    for r in 0..m {
        let d = wrap_rad(data[a * chans + r] - data[b * chans + r]);
        acc += d * d;
    }
    acc.sqrt()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Ball of grid radius `r` rings around center `c`: all pixels with
/// shortest-path distance ≤ r·√2 (so one ring covers the eight-neighborhood).
fn ball_members(mask: &InpaintMask, c: usize, r: f64) -> Vec<usize> {
    let (nw, nh) = (mask.width(), mask.height());
    let limit = r * std::f64::consts::SQRT_2 + DIST_EPS;
    let mut dist = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(c, 0.0f64);
    heap.push(HeapItem {
        dist: 0.0,
        src: 0,
        pix: c as u32,
    });
    let mut out = Vec::new();
    while let Some(item) = heap.pop() {
        let p = item.pix as usize;
        if item.dist > *dist.get(&p).unwrap_or(&f64::INFINITY) + DIST_EPS {
            continue;
        }
        if p != c && !mask.is_masked_idx(p) {
            out.push(p);
        }
        let (pi, pj) = ((p % nw) as i64, (p / nw) as i64);
        for &(di, dj, cost) in &NEIGHBORS {
            let (qi, qj) = (pi + di, pj + dj);
            if qi < 0 || qj < 0 || qi >= nw as i64 || qj >= nh as i64 {
                continue;
            }
            let q = qj as usize * nw + qi as usize;
            let nd = item.dist + cost;
            if nd <= limit && nd < *dist.get(&q).unwrap_or(&f64::INFINITY) - DIST_EPS {
                dist.insert(q, nd);
                heap.push(HeapItem {
                    dist: nd,
                    src: 0,
                    pix: q as u32,
                });
            }
        }
    }
    out
}

fn dinf_with_radii(
    f: &ProductImage,
    mask: &InpaintMask,
    radii: &[f64],
) -> Result<(f64, bool)> {
    let total = f.width() * f.height();
    let centers: Vec<usize> = (0..total).filter(|&p| !mask.is_masked_idx(p)).collect();
    let mut uf = UnionFind::new(total);
    let mut dmax = 0.0f64;
    for &p in &centers {
        for q in ball_members(mask, p, radii[p]) {
            uf.union(p, q);
            dmax = dmax.max(cyclic_dist_px(f, p, q));
        }
    }
    let root = uf.find(centers[0]);
    let connected = centers.iter().all(|&p| uf.find(p) == root);
    Ok((dmax, connected))
}

/// Sup-type neighbor-distance diagnostic `d^Ω_∞`: the largest cyclic-part
/// distance between an observed pixel and any observed pixel inside its
/// covering ball.  Radii count neighborhood rings (radius 1 = the
/// eight-neighborhood); by default each observed pixel's radius is one ring
/// more than the largest distance of a masked pixel assigned to it, grown
/// uniformly until the induced covering graph is connected.
pub fn diag_dinf(f: &ProductImage, mask: &InpaintMask, radii: Option<&[f64]>) -> Result<f64> {
    mask.matches(f)?;
    let total = f.width() * f.height();
    match radii {
        Some(r) => {
            if r.len() != total {
                return Err(Error::DimensionMismatch("radii length".into()));
            }
            let (dmax, connected) = dinf_with_radii(f, mask, r)?;
            if !connected {
                return Err(Error::DisconnectedCovering);
            }
            Ok(dmax)
        }
        None => {
            let (dist, src) = nearest_field(mask)?;
            let mut r = vec![1.0f64; total];
            for p in 0..total {
                if mask.is_masked_idx(p) {
                    let s = src[p] as usize;
                    r[s] = r[s].max(dist[p] + 1.0);
                }
            }
            let diameter = (f.width() + f.height()) as f64;
            loop {
                let (dmax, connected) = dinf_with_radii(f, mask, &r)?;
                if connected {
                    return Ok(dmax);
                }
                for v in r.iter_mut() {
                    *v += 1.0;
                }
                if r[0] > diameter {
                    return Err(Error::DisconnectedCovering);
                }
            }
        }
    }
}

/// Sum-type diagnostic `d^Ω_1`: for every observed pixel, the largest
/// cyclic-part distance to an observed eight-neighbor, summed over pixels.
pub fn diag_d1(f: &ProductImage, mask: &InpaintMask) -> Result<f64> {
    mask.matches(f)?;
    let (nw, nh) = (f.width(), f.height());
    let mut acc = 0.0;
    for j in 0..nh {
        for i in 0..nw {
            if mask.is_masked(i, j) {
                continue;
            }
            let p = j * nw + i;
            let mut best = 0.0f64;
            for &(di, dj, _) in &NEIGHBORS {
                let (qi, qj) = (i as i64 + di, j as i64 + dj);
                if qi < 0 || qj < 0 || qi >= nw as i64 || qj >= nh as i64 {
                    continue;
                }
                if mask.is_masked(qi as usize, qj as usize) {
                    continue;
                }
                let q = qj as usize * nw + qi as usize;
                best = best.max(cyclic_dist_px(f, p, q));
            }
            acc += best;
        }
    }
    Ok(acc)
}

/// Nearest-neighbor extension: every masked pixel receives the value of its
/// nearest observed pixel under the eight-neighborhood shortest-path
/// distance, ties broken by the row-major order of the candidates.
pub fn extend_nearest(f: &ProductImage, mask: &InpaintMask) -> Result<ProductImage> {
    mask.matches(f)?;
    let (_, src) = nearest_field(mask)?;
    let mut out = f.clone();
    let chans = f.chans();
    let total = f.width() * f.height();
    for p in 0..total {
        if mask.is_masked_idx(p) {
            let s = src[p] as usize;
            let (vals, base) = (f.raw(), s * chans);
            let col = vals[base..base + chans].to_vec();
            out.raw_mut()[p * chans..(p + 1) * chans].copy_from_slice(&col);
        }
    }
    Ok(out)
}
