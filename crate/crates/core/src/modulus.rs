//! Discrete `Q`-modulus of curve families in `(R^n, D, Lebesgue)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub curves: Vec<Vec<Vec<f64>>>,
    /// Whether each curve stays on one horizontal leaf.
    pub horizontal: Vec<bool>,
}

impl CurveFamily {
    pub fn new(spec: &Spectrum, curves: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for c in &curves {
            if c.len() < 2 {
                return Err(Error::TooFewVertices);
            }
            for v in c {
                spec.check_dim(v)?;
            }
        }
        let horizontal = curves
            .iter()
            .map(|c| {
                let y0 = spec.split_leaf(&c[0]).1;
                c.iter().all(|v| spec.split_leaf(v).1 == y0)
            })
            .collect();
        Ok(CurveFamily { curves, horizontal })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Axis-aligned bounding box of all vertices.
    pub fn bounding_box(&self) -> Option<GridBox> {
        let first = self.curves.first()?.first()?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for v in self.curves.iter().flatten() {
            for k in 0..v.len() {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        Some(GridBox { lo, hi })
    }

    /// CSV rows `curve,vertex,x1..xn`.
    pub fn to_csv(&self) -> String {
        let n = self.curves.first().and_then(|c| c.first()).map_or(0, Vec::len);
        let mut out = String::from("curve,vertex");
        for k in 1..=n {
            let _ = write!(out, ",x{k}");
        }
        out.push('\n');
        for (i, c) in self.curves.iter().enumerate() {
            for (j, v) in c.iter().enumerate() {
                let _ = write!(out, "{i},{j}");
                for x in v {
                    let _ = write!(out, ",{x:.17e}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Translates of the segment `pq` by offsets orthogonal to `q - p` filling a cylinder of the
/// given radius. In the plane the offsets are stratified over `[-radius, radius]`; in higher
/// dimension they are Halton points of the `(n-1)`-ball.
pub fn build_cylinder_family(spec: &Spectrum, p: &[f64], q: &[f64], radius: f64, count: usize) -> Result<CurveFamily> {
    spec.check_dim(p)?;
    spec.check_dim(q)?;
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    if spec.split_leaf(p).1 != spec.split_leaf(q).1 {
        return Err(Error::NotSameLeaf);
    }
    if p == q {
        return Err(Error::IdenticalPoints);
    }
    let n = spec.n();
    let dir: Vec<f64> = p.iter().zip(q).map(|(a, b)| b - a).collect();
    let basis = orthonormal_complement(&dir);
    let offsets: Vec<Vec<f64>> = if count == 1 {
        vec![vec![0.0; n - 1]]
    } else if n == 2 {
        (0..count).map(|k| vec![radius * (2.0 * (k as f64 + 0.5) / count as f64 - 1.0)]).collect()
    } else {
        halton_ball(n - 1, count).into_iter().map(|u| u.into_iter().map(|c| c * radius).collect()).collect()
    };
    let curves = offsets
        .iter()
        .map(|off| {
            let shift: Vec<f64> =
                (0..n).map(|j| basis.iter().zip(off).map(|(b, o)| b[j] * o).sum::<f64>()).collect();
            vec![
                p.iter().zip(&shift).map(|(a, s)| a + s).collect(),
                q.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            ]
        })
        .collect();
    CurveFamily::new(spec, curves)
}

fn orthonormal_complement(dir: &[f64]) -> Vec<Vec<f64>> {
    let n = dir.len();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![dir.iter().map(|d| d / norm).collect()];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for j in 0..n {
                v[j] -= dot * b[j];
            }
        }
        let nv = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if nv > 1e-8 {
            basis.push(v.into_iter().map(|c| c / nv).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let (mut f, mut out) = (1.0 / base as f64, 0.0);
    while k > 0 {
        out += f * (k % base) as f64;
        k /= base;
        f /= base as f64;
    }
    out
}

fn halton_ball(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        let u: Vec<f64> = (0..dim).map(|d| 2.0 * radical_inverse(k, PRIMES[d % PRIMES.len()]) - 1.0).collect();
        if u.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(u);
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Uniform grid with `resolution` cells per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub bounds: GridBox,
    pub resolution: usize,
}

impl Grid {
    pub fn new(bounds: GridBox, resolution: usize) -> Result<Self> {
        if resolution == 0 || bounds.lo.len() != bounds.hi.len() || bounds.lo.is_empty() {
            return Err(Error::UnboundedBox);
        }
        for (a, b) in bounds.lo.iter().zip(&bounds.hi) {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::UnboundedBox);
            }
        }
        Ok(Grid { bounds, resolution })
    }

    pub fn dim(&self) -> usize {
        self.bounds.lo.len()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    fn side(&self, k: usize) -> f64 {
        (self.bounds.hi[k] - self.bounds.lo[k]) / self.resolution as f64
    }

    pub fn cell_measure(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    /// Flat index of the cell containing `x`, if inside the box.
    fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in (0..self.dim()).rev() {
            let u = (x[k] - self.bounds.lo[k]) / self.side(k);
            if !(u >= 0.0 && u < self.resolution as f64) {
                return None;
            }
            idx = idx * self.resolution + u as usize;
        }
        Some(idx)
    }

    pub fn cell_center(&self, mut idx: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for (k, ck) in c.iter_mut().enumerate() {
            let j = idx % self.resolution;
            idx /= self.resolution;
            *ck = self.bounds.lo[k] + (j as f64 + 0.5) * self.side(k);
        }
        c
    }

    /// `(cell, D-length)` pieces of a polyline cut at every grid hyperplane; pieces outside
    /// the box are dropped.
    pub fn pieces(&self, spec: &Spectrum, curve: &[Vec<f64>]) -> Result<Vec<(usize, f64)>> {
        let n = self.dim();
        let mut out: Vec<(usize, f64)> = Vec::new();
        for w in curve.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mut cuts = vec![0.0, 1.0];
            for k in 0..n {
                let (lo, h) = (self.bounds.lo[k], self.side(k));
                let (ua, ub) = ((a[k] - lo) / h, (b[k] - lo) / h);
                if ua == ub {
                    continue;
                }
                let (s, e) = (ua.min(ub), ua.max(ub));
                let first = s.floor() as i64 + 1;
                let last = e.ceil() as i64 - 1;
                for j in first.max(0)..=last.min(self.resolution as i64) {
                    let lam = (j as f64 - ua) / (ub - ua);
                    if lam > 0.0 && lam < 1.0 {
                        cuts.push(lam);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let at = |l: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + l * (v - u)).collect() };
            for c in cuts.windows(2) {
                let mid = at(0.5 * (c[0] + c[1]));
                if let Some(cell) = self.cell_of(&mid) {
                    let len = spec.dist_d(&at(c[0]), &at(c[1]))?;
                    if len > 0.0 {
                        out.push((cell, len));
                    }
                }
            }
        }
        out.sort_by_key(|p| p.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (c, l) in out {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += l,
                _ => merged.push((c, l)),
            }
        }
        Ok(merged)
    }
}

/// Density per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub q: f64,
}

impl GridDensity {
    /// CSV rows `c1..cn,rho` over nonzero cells, by cell center.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.grid.dim() {
            let _ = write!(out, "c{k},");
        }
        out.push_str("rho\n");
        for (i, r) in self.rho.iter().enumerate().filter(|(_, r)| **r > 0.0) {
            for c in self.grid.cell_center(i) {
                let _ = write!(out, "{c:.17e},");
            }
            let _ = writeln!(out, "{r:.17e}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    pub value: f64,
    pub density: GridDensity,
    pub iterations: usize,
    /// `max(0, 1 - min_curve sum rho * length)` for the returned density.
    pub max_constraint_violation: f64,
    /// Relative primal-dual gap at exit.
    pub gap: f64,
    pub converged: bool,
    /// Final per-curve dual values.
    #[serde(skip)]
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOptions {
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        ModulusOptions { rel_tol: 1e-6, max_sweeps: 20_000 }
    }
}

/// `(sum_c a_c^{Q/(Q-1)} mu_c^{-1/(Q-1)})^{-(Q-1)}`: the modulus of a single constraint
/// `sum_c a_c rho_c >= 1` with cell measures `mu_c`.
pub fn single_curve_modulus(pieces: &[(f64, f64)], q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("Q must exceed 1, got {q}")));
    }
    let p = q / (q - 1.0);
    let s: f64 = pieces.iter().map(|&(a, mu)| a.powf(p) * mu.powf(-1.0 / (q - 1.0))).sum();
    if !(s > 0.0) {
        return Err(Error::EmptyFamily);
    }
    Ok(s.powf(-(q - 1.0)))
}

struct Problem {
    rows: Vec<Vec<(usize, f64)>>,
    mu: f64,
    cells: usize,
    q: f64,
}

impl Problem {
    fn rho(&self, w: f64) -> f64 {
        if w <= 0.0 {
            0.0
        } else {
            let v = w / (self.q * self.mu);
            if self.q == 3.0 {
                v.sqrt()
            } else {
                v.powf(1.0 / (self.q - 1.0))
            }
        }
    }

    /// Exact maximization of the dual along coordinate `k`.
    fn coordinate(&self, k: usize, lam: &mut [f64], w: &mut [f64]) {
        let row = &self.rows[k];
        let old = lam[k];
        let base: Vec<f64> = row.iter().map(|&(c, a)| w[c] - old * a).collect();
        let phi = |l: f64| -> (f64, f64) {
            let (mut v, mut dv) = (0.0, 0.0);
            for ((_, a), b) in row.iter().zip(&base) {
                let wc = (b + l * a).max(0.0);
                let r = self.rho(wc);
                v += a * r;
                if wc > 0.0 {
                    dv += a * a * r / ((self.q - 1.0) * wc);
                }
            }
            (v, dv)
        };
        let new = if phi(0.0).0 >= 1.0 {
            0.0
        } else {
            let mut hi = old.max(1e-300);
            while phi(hi).0 < 1.0 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            let mut l = hi;
            for _ in 0..100 {
                let (v, dv) = phi(l);
                if v < 1.0 {
                    lo = l;
                } else {
                    hi = l;
                }
                if (v - 1.0).abs() <= 1e-14 || hi - lo <= 1e-15 * hi {
                    break;
                }
                let step = if dv > 0.0 { l - (v - 1.0) / dv } else { f64::NAN };
                l = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            }
            l
        };
        lam[k] = new;
        for ((c, a), b) in row.iter().zip(&base) {
            w[*c] = b + new * a;
        }
    }

    fn accumulate(&self, lam: &[f64], w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        for (row, l) in self.rows.iter().zip(lam) {
            for &(c, a) in row {
                w[c] += l * a;
            }
        }
    }

    fn constraint_min(&self, rho: &[f64]) -> f64 {
        self.rows
            .par_iter()
            .map(|row| row.iter().map(|&(c, a)| a * rho[c]).sum::<f64>())
            .reduce(|| f64::INFINITY, f64::min)
    }
}

/// Minimizes `sum_cells rho^Q mu` subject to `sum rho * (D-length of curve in cell) >= 1`
/// per curve, by exact coordinate ascent on the dual. The returned density is the dual
/// density rescaled to be admissible, so `value` is an upper bound within `gap`.
pub fn discrete_modulus(
    spec: &Spectrum,
    family: &CurveFamily,
    grid: &Grid,
    q: f64,
    opts: &ModulusOptions,
) -> Result<ModulusResult> {
    discrete_modulus_warm(spec, family, grid, q, opts, None)
}

/// As [`discrete_modulus`], starting from per-curve dual values (for example those of a
/// coarser grid), rescaled optimally before the first sweep.
pub fn discrete_modulus_warm(
    spec: &Spectrum,
    family: &CurveFamily,
    grid: &Grid,
    q: f64,
    opts: &ModulusOptions,
    warm: Option<&[f64]>,
) -> Result<ModulusResult> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("Q must exceed 1, got {q}")));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if grid.dim() != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), got: grid.dim() });
    }
    let rows: Result<Vec<_>> = family.curves.par_iter().map(|c| grid.pieces(spec, c)).collect();
    let rows = rows?;
    if rows.iter().any(Vec::is_empty) {
        return Err(Error::EmptyFamily);
    }
    let prob = Problem { rows, mu: grid.cell_measure(), cells: grid.cell_count(), q };
    let mut lam = vec![0.0; prob.rows.len()];
    let mut w = vec![0.0; prob.cells];
    if let Some(warm) = warm {
        if warm.len() != lam.len() {
            return Err(Error::DimensionMismatch { expected: lam.len(), got: warm.len() });
        }
        lam.copy_from_slice(warm);
        prob.accumulate(&lam, &mut w);
        let a: f64 = lam.iter().sum();
        let b = (q - 1.0) / q * w.iter().map(|&v| v * prob.rho(v)).sum::<f64>();
        if a > 0.0 && b > 0.0 {
            // maximizer of c A - c^{Q/(Q-1)} B
            let c = (a * (q - 1.0) / (q * b)).powf(q - 1.0);
            lam.iter_mut().for_each(|l| *l *= c);
            prob.accumulate(&lam, &mut w);
        }
    }
    let (mut best, mut best_dual, mut gap, mut iterations, mut converged) =
        (None::<(f64, Vec<f64>, f64)>, f64::NEG_INFINITY, f64::INFINITY, 0, false);
    while iterations < opts.max_sweeps {
        if iterations % 2 == 0 {
            for k in 0..prob.rows.len() {
                prob.coordinate(k, &mut lam, &mut w);
            }
        } else {
            for k in (0..prob.rows.len()).rev() {
                prob.coordinate(k, &mut lam, &mut w);
            }
        }
        iterations += 1;
        let rho: Vec<f64> = w.iter().map(|&v| prob.rho(v)).collect();
        let m = prob.constraint_min(&rho);
        if !(m > 0.0) {
            continue;
        }
        let energy: f64 = rho.iter().map(|r| r.powf(q)).sum::<f64>() * prob.mu;
        let primal = energy / m.powf(q);
        let dual = lam.iter().sum::<f64>() - (q - 1.0) / q * w.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>();
        best_dual = best_dual.max(dual);
        if best.as_ref().map_or(true, |b| primal < b.0) {
            best = Some((primal, rho, m));
        }
        let top = best.as_ref().map_or(primal, |b| b.0);
        gap = ((top - best_dual) / top).max(0.0);
        if gap < opts.rel_tol {
            converged = true;
            break;
        }
    }
    let (value, rho, m) = best.ok_or_else(|| Error::NoConvergence {
        what: "discrete modulus".into(),
        best_upper_bound: f64::INFINITY,
    })?;
    let rho: Vec<f64> = rho.into_iter().map(|r| r / m).collect();
    let violation = (1.0 - prob.constraint_min(&rho)).max(0.0);
    Ok(ModulusResult {
        value,
        density: GridDensity { grid: grid.clone(), rho, q },
        iterations,
        max_constraint_violation: violation,
        gap,
        converged,
        duals: lam,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub resolution: usize,
    pub modulus: f64,
    pub iterations: usize,
    pub max_constraint_violation: f64,
}

/// Modulus at each resolution over a fixed box (the family's bounding box by default).
pub fn modulus_refinement_study(
    spec: &Spectrum,
    family: &CurveFamily,
    bounds: Option<GridBox>,
    resolutions: &[usize],
    q: f64,
    opts: &ModulusOptions,
) -> Result<Vec<StudyRow>> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 resolutions, got {}", resolutions.len())));
    }
    let bounds = match bounds {
        Some(b) => b,
        None => family.bounding_box().ok_or(Error::EmptyFamily)?,
    };
    let mut warm: Option<Vec<f64>> = None;
    let mut rows = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let r = discrete_modulus_warm(spec, family, &Grid::new(bounds.clone(), res)?, q, opts, warm.as_deref())?;
        rows.push(StudyRow {
            resolution: res,
            modulus: r.value,
            iterations: r.iterations,
            max_constraint_violation: r.max_constraint_violation,
        });
        warm = Some(r.duals);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    fn unit_box() -> GridBox {
        GridBox { lo: vec![0.0, -0.25], hi: vec![1.0, 0.25] }
    }

    #[test]
    fn cylinder_construction() {
        let s = s2();
        let f = build_cylinder_family(&s, &[0.0, 0.0], &[1.0, 0.0], 0.5, 64).unwrap();
        assert_eq!(f.len(), 64);
        assert!(f.horizontal.iter().all(|h| *h));
        let one = build_cylinder_family(&s, &[0.0, 0.0], &[1.0, 0.0], 0.5, 1).unwrap();
        assert_eq!(one.curves[0], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(
            build_cylinder_family(&s, &[0.0, 0.0], &[1.0, 1.0], 0.5, 4),
            Err(Error::NotSameLeaf)
        ));
    }

    #[test]
    fn piece_lengths_match_refined_length() {
        let s = s2();
        let grid = Grid::new(GridBox { lo: vec![-1.0, 0.0], hi: vec![1.0, 1.0] }, 16).unwrap();
        let seg = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let total: f64 = grid.pieces(&s, &seg).unwrap().iter().map(|p| p.1).sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_curve_matches_closed_form() {
        let s = s2();
        let fam = CurveFamily::new(&s, vec![vec![vec![0.05, 0.1], vec![0.93, 0.41]]]).unwrap();
        let grid = Grid::new(GridBox { lo: vec![0.0, 0.0], hi: vec![1.0, 0.5] }, 6).unwrap();
        let r = discrete_modulus(&s, &fam, &grid, 3.0, &ModulusOptions::default()).unwrap();
        let mu = grid.cell_measure();
        let pieces: Vec<(f64, f64)> =
            grid.pieces(&s, &fam.curves[0]).unwrap().into_iter().map(|(_, a)| (a, mu)).collect();
        let exact = single_curve_modulus(&pieces, 3.0).unwrap();
        assert!((r.value - exact).abs() < 1e-6 * exact, "{} vs {exact}", r.value);
        assert!(r.max_constraint_violation <= 1e-8);
    }

    #[test]
    fn cylinder_modulus_is_half() {
        let s = s2();
        let f = build_cylinder_family(&s, &[0.0, 0.0], &[1.0, 0.0], 0.25, 64).unwrap();
        let r = discrete_modulus(&s, &f, &Grid::new(unit_box(), 32).unwrap(), 3.0, &ModulusOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn empty_and_degenerate() {
        let s = s2();
        let f = CurveFamily::new(&s, vec![vec![vec![5.0, 5.0], vec![6.0, 5.0]]]).unwrap();
        let g = Grid::new(unit_box(), 4).unwrap();
        assert!(matches!(discrete_modulus(&s, &f, &g, 3.0, &ModulusOptions::default()), Err(Error::EmptyFamily)));
        assert!(matches!(Grid::new(GridBox { lo: vec![0.0, 0.0], hi: vec![1.0, 0.0] }, 4), Err(Error::UnboundedBox)));
    }
}
