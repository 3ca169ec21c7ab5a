//! The spectrum of the diagonal matrix `A` and the closed-form (quasi)metrics
//! it induces on the boundary `R^n`.
//!
//! A point `x` of `R^n` is split into blocks `x = (x_1, ..., x_r)` following
//! the eigenspaces of `A`. On top of that split live:
//!
//! * `D_s(x, y) = max_i |x_i - y_i|^(1/alpha_i)`, a quasimetric;
//! * `D(x, y) = D_s(x, y)^alpha_1`, a genuine metric;
//! * `D_e(x, y) = e^t` where `t` solves `sum_i e^(-2 alpha_i t) |x_i - y_i|^2 = 1`;
//! * `D_Y`, the restriction of `D` to the blocks `2..r`.

use std::ops::{Deref, DerefMut, Range};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection tolerance on the height `t` when solving for `D_e`.
pub const DE_HEIGHT_TOL: f64 = 1e-12;

/// One eigenspace of `A`: its dimension and eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub alpha: f64,
}

/// Ordered eigen-blocks `(n_i, alpha_i)` with `0 < alpha_1 < ... < alpha_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Block>", into = "Vec<Block>")]
pub struct Spectrum {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    n: usize,
    q: f64,
}

impl TryFrom<Vec<Block>> for Spectrum {
    type Error = Error;

    fn try_from(blocks: Vec<Block>) -> Result<Self> {
        Spectrum::from_blocks(blocks)
    }
}

impl From<Spectrum> for Vec<Block> {
    fn from(s: Spectrum) -> Self {
        s.blocks
    }
}

/// A point of `R^n ~ boundary minus xi_0`, stored flat; the block split comes from a [`Spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BoundaryVector(pub Vec<f64>);

impl Deref for BoundaryVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for BoundaryVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for BoundaryVector {
    fn from(v: Vec<f64>) -> Self {
        BoundaryVector(v)
    }
}

impl Spectrum {
    /// Validates `(dimension, eigenvalue)` pairs.
    pub fn new(pairs: &[(usize, f64)]) -> Result<Self> {
        Self::from_blocks(pairs.iter().map(|&(dim, alpha)| Block { dim, alpha }).collect())
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        for (index, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::ZeroDimensionBlock { index });
            }
            if !(b.alpha > 0.0) || !b.alpha.is_finite() {
                return Err(Error::NonPositiveEigenvalue { index, alpha: b.alpha });
            }
        }
        for (index, w) in blocks.windows(2).enumerate() {
            if !(w[1].alpha > w[0].alpha) {
                return Err(Error::NonIncreasingEigenvalues {
                    index: index + 1,
                    prev: w[0].alpha,
                    next: w[1].alpha,
                });
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.dim;
            offsets.push(acc);
        }
        let a1 = blocks[0].alpha;
        let q = blocks.iter().map(|b| b.dim as f64 * b.alpha / a1).sum();
        Ok(Spectrum { blocks, offsets, n: acc, q })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Ambient dimension `n = sum n_i`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks `r`.
    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    /// Homogeneous dimension `Q = sum n_i alpha_i / alpha_1`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.blocks[i].alpha
    }

    pub fn alpha_min(&self) -> f64 {
        self.blocks[0].alpha
    }

    pub fn alpha_max(&self) -> f64 {
        self.blocks[self.blocks.len() - 1].alpha
    }

    /// Index range of block `i` inside a flat vector.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Dimension of `Y = R^{n_2} x ... x R^{n_r}`.
    pub fn leaf_codim(&self) -> usize {
        self.n - self.blocks[0].dim
    }

    /// Eigenvalue attached to each flat coordinate.
    pub fn coordinate_alphas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for b in &self.blocks {
            out.extend(std::iter::repeat(b.alpha).take(b.dim));
        }
        out
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    /// Euclidean norms of the blocks of `x - y`.
    pub fn block_diff_norms(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok((0..self.r())
            .map(|i| {
                self.block_range(i)
                    .map(|k| (x[k] - y[k]) * (x[k] - y[k]))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }

    /// Block supernorm `|x|_s = max_i |x_i|`.
    pub fn block_supernorm(&self, x: &[f64]) -> Result<f64> {
        let zero = vec![0.0; x.len()];
        Ok(self.block_diff_norms(x, &zero)?.into_iter().fold(0.0, f64::max))
    }

    /// `D_s(x, y) = max_i |x_i - y_i|^(1/alpha_i)`.
    pub fn dist_ds(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let norms = self.block_diff_norms(x, y)?;
        Ok(norms
            .iter()
            .zip(&self.blocks)
            .map(|(&d, b)| d.powf(1.0 / b.alpha))
            .fold(0.0, f64::max))
    }

    /// `D(x, y) = max_i |x_i - y_i|^(alpha_1/alpha_i)`.
    pub fn dist_d(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let norms = self.block_diff_norms(x, y)?;
        let a1 = self.alpha_min();
        Ok(norms
            .iter()
            .zip(&self.blocks)
            .map(|(&d, b)| if b.alpha == a1 { d } else { d.powf(a1 / b.alpha) })
            .fold(0.0, f64::max))
    }

    /// `D_Y` on `Y = blocks 2..r`; inputs are vectors of length `n - n_1`.
    pub fn dist_dy(&self, y: &[f64], y2: &[f64]) -> Result<f64> {
        if self.r() < 2 {
            return Err(Error::SingleBlockSpectrum);
        }
        let m = self.leaf_codim();
        for v in [y, y2] {
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: v.len() });
            }
        }
        let a1 = self.alpha_min();
        let shift = self.blocks[0].dim;
        let mut best: f64 = 0.0;
        for i in 1..self.r() {
            let rng = self.block_range(i);
            let d = rng
                .map(|k| (y[k - shift] - y2[k - shift]).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max(d.powf(a1 / self.alpha(i)));
        }
        Ok(best)
    }

    /// Height `t_0 = ln D_e(x, y)`: the level at which the vertical geodesics over
    /// `x` and `y` are one unit apart in the horosphere.
    pub fn de_height(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.de_height_with_tol(x, y, DE_HEIGHT_TOL)
    }

    pub fn de_height_with_tol(&self, x: &[f64], y: &[f64], tol: f64) -> Result<f64> {
        let norms = self.block_diff_norms(x, y)?;
        let active: Vec<(f64, f64)> = norms
            .iter()
            .zip(&self.blocks)
            .filter(|(&d, _)| d > 0.0)
            .map(|(&d, b)| (b.alpha, d.ln()))
            .collect();
        match active.len() {
            0 => Err(Error::IdenticalPoints),
            // only one block moves: |x_i - y_i| e^{-alpha_i t} = 1 exactly
            1 => Ok(active[0].1 / active[0].0),
            _ => Ok(solve_log_phi(&active, tol)),
        }
    }

    /// `D_e(x, y)`; `D_e(x, x) = 0` by convention.
    pub fn dist_de(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let norms = self.block_diff_norms(x, y)?;
        let mut moving = norms.iter().zip(&self.blocks).filter(|(&d, _)| d > 0.0);
        if let (Some((&d, b)), None) = (moving.next(), moving.next()) {
            return Ok(d.powf(1.0 / b.alpha));
        }
        match self.de_height(x, y) {
            Ok(t) => Ok(t.exp()),
            Err(Error::IdenticalPoints) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// The constant `r^(1/(2 alpha_1))` of the upper `D_e <= c D_s` bound.
    pub fn norm_sandwich_constant(&self) -> f64 {
        (self.r() as f64).powf(1.0 / (2.0 * self.alpha_min()))
    }

    /// Theoretical quasi-triangle constant of `D_s`: `2^(1/alpha_1 - 1)` when `alpha_1 < 1`.
    pub fn ds_quasi_triangle_constant(&self) -> f64 {
        let a1 = self.alpha_min();
        if a1 < 1.0 {
            2f64.powf(1.0 / a1 - 1.0)
        } else {
            1.0
        }
    }

    /// Lebesgue measure of the closed `D`-ball of radius `radius`: a product of
    /// Euclidean block balls of radii `radius^(alpha_i/alpha_1)`.
    pub fn ball_measure(&self, radius: f64) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(Error::NonPositiveRadius(radius));
        }
        let a1 = self.alpha_min();
        Ok(self
            .blocks
            .iter()
            .map(|b| unit_ball_volume(b.dim) * radius.powf(b.dim as f64 * b.alpha / a1))
            .product())
    }

    /// Block dilation `x_i -> lambda^(alpha_i/alpha_1) x_i`, which scales `D` by `lambda`.
    pub fn dilate(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let a1 = self.alpha_min();
        let mut out = x.to_vec();
        for i in 0..self.r() {
            let f = lambda.powf(self.alpha(i) / a1);
            for k in self.block_range(i) {
                out[k] *= f;
            }
        }
        out
    }

    /// `D`-length of a polyline after cutting each edge into `refinement` equal parts.
    pub fn d_length(&self, polyline: &[BoundaryVector], refinement: usize) -> Result<f64> {
        if polyline.len() < 2 {
            return Err(Error::TooFewVertices);
        }
        if refinement == 0 {
            return Err(Error::InvalidParameter("refinement must be positive".into()));
        }
        for v in polyline {
            self.check_dim(v)?;
        }
        let mut total = 0.0;
        let mut a = vec![0.0; self.n];
        let mut b = vec![0.0; self.n];
        for w in polyline.windows(2) {
            for k in 0..refinement {
                let l0 = k as f64 / refinement as f64;
                let l1 = (k + 1) as f64 / refinement as f64;
                for j in 0..self.n {
                    a[j] = w[0][j] + l0 * (w[1][j] - w[0][j]);
                    b[j] = w[0][j] + l1 * (w[1][j] - w[0][j]);
                }
                total += self.dist_d(&a, &b)?;
            }
        }
        Ok(total)
    }

    /// Splits a point into its first block and its `Y` part.
    pub fn split_leaf<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.blocks[0].dim)
    }

    pub fn join_leaf(&self, x1: &[f64], y: &[f64]) -> Vec<f64> {
        let mut v = x1.to_vec();
        v.extend_from_slice(y);
        v
    }

    /// Hausdorff distance between the leaves `R^{n_1} x {y1}` and `R^{n_1} x {y2}`.
    pub fn leaf_hausdorff(&self, y1: &[f64], y2: &[f64]) -> Result<f64> {
        self.dist_dy(y1, y2)
    }

    /// Empirical `D`-distance from `p` to the leaf over `y2`: minimum over a grid of
    /// first-block points centred on `p`'s first block (the grid contains that point).
    pub fn point_to_leaf_distance(&self, p: &[f64], y2: &[f64], steps: usize) -> Result<f64> {
        self.check_dim(p)?;
        if self.r() < 2 {
            return Err(Error::SingleBlockSpectrum);
        }
        let (x1, y1) = self.split_leaf(p);
        let reach = 2.0 * self.dist_dy(y1, y2)? + 1.0;
        let n1 = x1.len();
        let per_axis = 2 * steps + 1;
        let total = per_axis.pow(n1 as u32);
        let mut best = f64::INFINITY;
        let mut cand = vec![0.0; n1];
        for idx in 0..total {
            let mut rem = idx;
            for (j, c) in cand.iter_mut().enumerate() {
                let k = rem % per_axis;
                rem /= per_axis;
                *c = x1[j] + reach * (k as f64 - steps as f64) / steps.max(1) as f64;
            }
            let q = self.join_leaf(&cand, y2);
            best = best.min(self.dist_d(p, &q)?);
        }
        Ok(best)
    }
}

/// Volume of the Euclidean unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// `ln phi(t)` with `phi(t) = sum_i e^{-2 alpha_i t} |d_i|^2`, from `(alpha_i, ln |d_i|)`.
pub(crate) fn log_phi(active: &[(f64, f64)], t: f64) -> f64 {
    let m = active
        .iter()
        .map(|&(a, ld)| 2.0 * (ld - a * t))
        .fold(f64::NEG_INFINITY, f64::max);
    m + active.iter().map(|&(a, ld)| (2.0 * (ld - a * t) - m).exp()).sum::<f64>().ln()
}

/// Root of the strictly decreasing `ln phi`: monotone doubling bracket from 0, then bisection.
pub(crate) fn solve_log_phi(active: &[(f64, f64)], tol: f64) -> f64 {
    let f = |t: f64| log_phi(active, t);
    let (mut lo, mut hi);
    if f(0.0) > 0.0 {
        lo = 0.0;
        hi = 1.0;
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while f(lo) < 0.0 {
            hi = lo;
            lo *= 2.0;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst relative violations of `D_s <= D_e <= r^(1/(2 alpha_1)) D_s` over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSandwichReport {
    pub pairs: usize,
    /// `max (D_s - D_e) / D_s`; non-positive when the lower bound holds.
    pub max_lower_violation: f64,
    /// `max (D_e - c D_s) / D_s`; non-positive when the upper bound holds.
    pub max_upper_violation: f64,
    pub upper_constant: f64,
}

pub fn check_norm_sandwich(
    spec: &Spectrum,
    pairs: &[(BoundaryVector, BoundaryVector)],
) -> Result<NormSandwichReport> {
    let c = spec.norm_sandwich_constant();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut count = 0;
    for (x, y) in pairs {
        let ds = spec.dist_ds(x, y)?;
        if ds == 0.0 {
            continue;
        }
        let de = spec.dist_de(x, y)?;
        lower = lower.max((ds - de) / ds);
        upper = upper.max((de - c * ds) / ds);
        count += 1;
    }
    Ok(NormSandwichReport {
        pairs: count,
        max_lower_violation: lower,
        max_upper_violation: upper,
        upper_constant: c,
    })
}

/// Largest observed `D_s(x,z) / (D_s(x,y) + D_s(y,z))` over sampled triples.
pub fn empirical_ds_quasi_constant(
    spec: &Spectrum,
    triples: &[(BoundaryVector, BoundaryVector, BoundaryVector)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, y, z) in triples {
        let denom = spec.dist_ds(x, y)? + spec.dist_ds(y, z)?;
        if denom > 0.0 {
            worst = worst.max(spec.dist_ds(x, z)? / denom);
        }
    }
    Ok(worst)
}
