//! Boundary-value solvers for geodesics, parameterised from the top of the geodesic.
//!
//! A geodesic joining points whose horizontal displacement is `sum_i A_i e_i` (unit `e_i`
//! in block `i`) stays in the span of the `e_i` and the height axis, so only the
//! active blocks enter. Unknowns are the top height `h`, arclength positions, and the
//! direction weights `b_i = e^{theta_i} / |e^theta|` with `theta_1 = 0`.

use nalgebra::{DMatrix, DVector};

use super::profile::{eval_profile, half_line_integrals, profile_at};
use super::{GeodesicPath, GroupPoint};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Horizontal displacement between two points, decomposed along active blocks.
#[derive(Debug, Clone)]
pub(crate) struct Reduction {
    pub blocks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub dirs: Vec<Vec<f64>>,
    pub lens: Vec<f64>,
}

impl Reduction {
    pub fn new(spec: &Spectrum, from: &[f64], to: &[f64]) -> Result<Self> {
        let norms = spec.block_diff_norms(from, to)?;
        let mut red = Reduction { blocks: vec![], alphas: vec![], dirs: vec![], lens: vec![] };
        for (i, &a) in norms.iter().enumerate() {
            if a > 0.0 {
                let range = spec.block_range(i);
                red.blocks.push(i);
                red.alphas.push(spec.alpha(i));
                red.dirs.push(range.map(|k| (to[k] - from[k]) / a).collect());
                red.lens.push(a);
            }
        }
        Ok(red)
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Upper bound on the horizontal length of the displacement measured at height `t`.
    pub fn horizontal_at(&self, t: f64) -> f64 {
        self.alphas
            .iter()
            .zip(&self.lens)
            .map(|(a, l)| (-2.0 * a * t).exp() * l * l)
            .sum::<f64>()
            .sqrt()
    }

    /// `base + sum_i u_i e_i`.
    pub fn lift(&self, spec: &Spectrum, base: &[f64], u: &[f64]) -> Vec<f64> {
        let mut x = base.to_vec();
        for (k, &i) in self.blocks.iter().enumerate() {
            for (off, c) in spec.block_range(i).zip(&self.dirs[k]) {
                x[off] += u[k] * c;
            }
        }
        x
    }
}

pub(crate) fn weights(theta: &[f64]) -> Vec<f64> {
    // theta excludes the pinned first entry
    let mx = theta.iter().cloned().fold(0.0f64, f64::max);
    let mut w = Vec::with_capacity(theta.len() + 1);
    w.push((-mx).exp());
    w.extend(theta.iter().map(|t| (t - mx).exp()));
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter().map(|v| v / norm).collect()
}

pub(crate) fn thetas_from(dir: &[f64]) -> Vec<f64> {
    dir[1..].iter().map(|v| (v / dir[0]).ln()).collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub accept: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, accept: 1e-9, max_iter: 60 }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton with a forward-difference Jacobian. `f` returns `None` outside its domain.
pub(crate) fn newton<F>(mut f: F, z0: &[f64], opts: NewtonOptions) -> Option<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = z0.len();
    let mut z = z0.to_vec();
    let mut r = f(&z)?;
    if r.len() != n || r.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut norm = max_abs(&r);
    for _ in 0..opts.max_iter {
        if norm < opts.tol {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            let rp = match f(&zp) {
                Some(v) => v,
                None => {
                    zp[j] = z[j] - h;
                    let rm = f(&zp)?;
                    for i in 0..n {
                        jac[(i, j)] = (r[i] - rm[i]) / h;
                    }
                    continue;
                }
            };
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Some(rt) = f(&trial) {
                if rt.iter().all(|v| v.is_finite()) {
                    let nt = max_abs(&rt);
                    if nt < norm {
                        z = trial;
                        r = rt;
                        norm = nt;
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm < opts.accept {
        Some((z, norm))
    } else {
        None
    }
}

/// Adaptive continuation in the eigenvalues from the common value `alphas.min()`.
/// `solve(alphas, z)` performs one corrector solve.
pub(crate) fn continuation<F, G>(target: &[f64], mut seed: G, mut solve: F) -> Option<(Vec<f64>, f64)>
where
    F: FnMut(&[f64], &[f64]) -> Option<(Vec<f64>, f64)>,
    G: FnMut(f64) -> Vec<f64>,
{
    let a0 = target.iter().cloned().fold(f64::INFINITY, f64::min);
    let at = |lam: f64| -> Vec<f64> { target.iter().map(|a| a0 + lam * (a - a0)).collect() };
    let z0 = seed(a0);
    let (mut z, mut res) = solve(&at(0.0), &z0)?;
    if target.iter().all(|&a| a == a0) {
        return Some((z, res));
    }
    let mut lam = 0.0f64;
    let mut dl = 0.25f64;
    while lam < 1.0 {
        let next = (lam + dl).min(1.0);
        match solve(&at(next), &z) {
            Some((zn, rn)) => {
                z = zn;
                res = rn;
                lam = next;
                dl = (dl * 1.5).min(0.5);
            }
            None => {
                dl *= 0.5;
                if dl < 1.0 / 1024.0 {
                    return None;
                }
            }
        }
    }
    Some((z, res))
}

/// Single-eigenvalue semicircle through `(0, t_p)` and `(A, t_q)`:
/// returns `(h, s_p, s_q)` with arclength measured from the top.
pub(crate) fn semicircle_two_point(alpha: f64, a: f64, t_p: f64, t_q: f64) -> (f64, f64, f64) {
    let t_ref = t_p.max(t_q);
    let yp = (alpha * (t_p - t_ref)).exp();
    let yq = (alpha * (t_q - t_ref)).exp();
    let xq = alpha * a * (-alpha * t_ref).exp();
    let c = (xq * xq + yq * yq - yp * yp) / (2.0 * xq);
    let radius = (c * c + yp * yp).sqrt();
    let h = t_ref + radius.ln() / alpha;
    let sp = (-c / yp).asinh() / alpha;
    let sq = ((xq - c) / yq).asinh() / alpha;
    (h, sp, sq)
}

fn two_point_residual(
    alphas: &[f64],
    lens: &[f64],
    t_p: f64,
    t_q: f64,
    z: &[f64],
) -> Option<Vec<f64>> {
    let (h, sp, sq) = (z[0], z[1], z[2]);
    if !(sp < sq) || !h.is_finite() {
        return None;
    }
    let b = weights(&z[3..]);
    let (lo, hi) = if sp.abs() <= sq.abs() { (sp.abs(), sq.abs()) } else { (sq.abs(), sp.abs()) };
    let ev = eval_profile(alphas, &b, &[lo, hi]).ok()?;
    let opposite = sp < 0.0 && sq > 0.0;
    let tau_of = |s: f64| if s.abs() == lo { ev.tau[0] } else { ev.tau[1] };
    let mut r = Vec::with_capacity(z.len());
    r.push(h + tau_of(sp) - t_p);
    r.push(h + tau_of(sq) - t_q);
    for j in 0..alphas.len() {
        let integral = if opposite { 2.0 * ev.inc[0][j] + ev.inc[1][j] } else { ev.inc[1][j] };
        if !(integral > 0.0) {
            return None;
        }
        r.push(alphas[j] * h + b[j].ln() + integral.ln() - lens[j].ln());
    }
    Some(r)
}

/// Solution of the two-point problem between `p` and `q`.
#[derive(Debug, Clone)]
pub struct TwoPointGeodesic {
    pub length: f64,
    pub top_height: f64,
    pub s_p: f64,
    pub s_q: f64,
    /// Direction weights `b_i` over the active blocks.
    pub direction: Vec<f64>,
    pub residual: f64,
    pub(crate) red: Reduction,
    p: GroupPoint,
}

impl TwoPointGeodesic {
    /// Point at arclength `s` measured from the top.
    pub fn point_at(&self, spec: &Spectrum, s: f64) -> Result<GroupPoint> {
        let h = self.top_height;
        let (_, gp) = profile_at(&self.red.alphas, &self.direction, self.s_p)?;
        let (tau, gs) = profile_at(&self.red.alphas, &self.direction, s)?;
        let u: Vec<f64> = (0..self.red.m())
            .map(|j| self.direction[j] * (self.red.alphas[j] * h).exp() * (gs[j] - gp[j]))
            .collect();
        Ok(GroupPoint { x: self.red.lift(spec, &self.p.x, &u), t: h + tau })
    }

    /// `count + 1` samples from `p` to `q`, parameterised by arclength from `p`.
    pub fn sample(&self, spec: &Spectrum, count: usize) -> Result<GeodesicPath> {
        let count = count.max(1);
        let mut samples = Vec::with_capacity(count + 1);
        let mut params = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let s = self.s_p + (self.s_q - self.s_p) * k as f64 / count as f64;
            samples.push(self.point_at(spec, s)?);
            params.push(s - self.s_p);
        }
        Ok(GeodesicPath { samples, params, arclength: true, length: self.length })
    }
}

pub(crate) fn solve_two_point_reduced(
    red: &Reduction,
    t_p: f64,
    t_q: f64,
    warm: Option<&[f64]>,
) -> Option<(Vec<f64>, f64)> {
    let opts = NewtonOptions::default();
    let lens = &red.lens;
    if let Some(w) = warm {
        if w.len() == red.m() + 2 {
            if let Some(sol) = newton(|z| two_point_residual(&red.alphas, lens, t_p, t_q, z), w, opts) {
                return Some(sol);
            }
        }
    }
    let total = lens.iter().map(|l| l * l).sum::<f64>().sqrt();
    let dir: Vec<f64> = lens.iter().map(|l| l / total).collect();
    let theta = thetas_from(&dir);
    continuation(
        &red.alphas,
        |a0| {
            let (h, sp, sq) = semicircle_two_point(a0, total, t_p, t_q);
            let mut z = vec![h, sp, sq];
            z.extend_from_slice(&theta);
            z
        },
        |alphas, z| newton(|zz| two_point_residual(alphas, lens, t_p, t_q, zz), z, opts),
    )
}

/// Shoots the geodesic from `p` to `q`. `warm` is a previous solution vector of the
/// same active-block shape. Fails with `NoConvergence` when Newton and continuation stall.
pub fn shoot_two_point(
    spec: &Spectrum,
    p: &GroupPoint,
    q: &GroupPoint,
    warm: Option<&[f64]>,
) -> Result<TwoPointGeodesic> {
    p.check(spec)?;
    q.check(spec)?;
    let red = Reduction::new(spec, &p.x, &q.x)?;
    if red.m() == 0 {
        return Err(Error::InvalidParameter("vertical pair has no top".into()));
    }
    let (z, residual) = solve_two_point_reduced(&red, p.t, q.t, warm).ok_or_else(|| {
        Error::NoConvergence { what: "geodesic shooting".into(), best_upper_bound: f64::INFINITY }
    })?;
    let direction = weights(&z[3..]);
    Ok(TwoPointGeodesic {
        length: z[2] - z[1],
        top_height: z[0],
        s_p: z[1],
        s_q: z[2],
        direction,
        residual,
        red,
        p: p.clone(),
    })
}

fn ideal_residual(alphas: &[f64], lens: &[f64], z: &[f64]) -> Option<Vec<f64>> {
    let h = z[0];
    let b = weights(&z[1..]);
    let inf = half_line_integrals(alphas, &b).ok()?;
    Some(
        (0..alphas.len())
            .map(|j| alphas[j] * h + b[j].ln() + (2.0 * inf[j]).ln() - lens[j].ln())
            .collect(),
    )
}

/// Geodesic between two boundary points: returns `(h, theta)` packed as `z`.
pub(crate) fn solve_ideal_reduced(red: &Reduction) -> Option<(Vec<f64>, f64)> {
    let opts = NewtonOptions::default();
    let total = red.lens.iter().map(|l| l * l).sum::<f64>().sqrt();
    let dir: Vec<f64> = red.lens.iter().map(|l| l / total).collect();
    let theta = thetas_from(&dir);
    continuation(
        &red.alphas,
        |a0| {
            let mut z = vec![(a0 * total / 2.0).ln() / a0];
            z.extend_from_slice(&theta);
            z
        },
        |alphas, z| newton(|zz| ideal_residual(alphas, &red.lens, zz), z, opts),
    )
}

fn foot_residual(alphas: &[f64], lens: &[f64], t_c: f64, z: &[f64]) -> Option<Vec<f64>> {
    let (h, sc) = (z[0], z[1]);
    if !(sc > 0.0) {
        return None;
    }
    let b = weights(&z[2..]);
    let ev = eval_profile(alphas, &b, &[sc]).ok()?;
    let mut r = Vec::with_capacity(z.len());
    r.push(h + ev.tau[0] - t_c);
    for j in 0..alphas.len() {
        if !(ev.inc[0][j] > 0.0) {
            return None;
        }
        r.push(alphas[j] * h + b[j].ln() + ev.inc[0][j].ln() - lens[j].ln());
    }
    Some(r)
}

/// Perpendicular from a point at height `t_c` to the vertical line displaced by `red`:
/// returns `z = (h, s_c, theta)`; the distance is `s_c` and the foot sits at height `h`.
pub(crate) fn solve_foot_reduced(red: &Reduction, t_c: f64) -> Option<(Vec<f64>, f64)> {
    let opts = NewtonOptions::default();
    let total = red.lens.iter().map(|l| l * l).sum::<f64>().sqrt();
    let dir: Vec<f64> = red.lens.iter().map(|l| l / total).collect();
    let theta = thetas_from(&dir);
    continuation(
        &red.alphas,
        |a0| {
            let yc = 1.0;
            let x = a0 * total * (-a0 * t_c).exp();
            let radius = (x * x + yc * yc).sqrt();
            let mut z = vec![t_c + radius.ln() / a0, (x / yc).asinh() / a0];
            z.extend_from_slice(&theta);
            z
        },
        |alphas, z| newton(|zz| foot_residual(alphas, &red.lens, t_c, zz), z, opts),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hyperbolic_oracle_distance;

    #[test]
    fn semicircle_matches_oracle() {
        let (h, sp, sq) = semicircle_two_point(1.0, 1.0, 0.0, 0.0);
        assert!((sq - sp - 1.5f64.acosh()).abs() < 1e-14);
        assert!((h - 1.25f64.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn shooting_single_block() {
        let s = Spectrum::new(&[(2, 1.5)]).unwrap();
        let p = GroupPoint::new(vec![0.3, -1.0], 0.4);
        let q = GroupPoint::new(vec![2.0, 0.5], -0.9);
        let g = shoot_two_point(&s, &p, &q, None).unwrap();
        let d = hyperbolic_oracle_distance(1.5, 2, &p, &q).unwrap();
        assert!((g.length - d).abs() < 1e-9 * d.max(1.0));
    }

    #[test]
    fn shooting_two_blocks_hits_endpoints() {
        let s = Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap();
        let p = GroupPoint::new(vec![0.0, 0.0], 0.0);
        let q = GroupPoint::new(vec![1.5, -2.0], 0.7);
        let g = shoot_two_point(&s, &p, &q, None).unwrap();
        let end = g.point_at(&s, g.s_q).unwrap();
        assert!((end.x[0] - q.x[0]).abs() < 1e-8);
        assert!((end.x[1] - q.x[1]).abs() < 1e-8);
        assert!((end.t - q.t).abs() < 1e-9);
        let start = g.point_at(&s, g.s_p).unwrap();
        assert!(start.x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ideal_single_block() {
        let s = Spectrum::new(&[(1, 1.0)]).unwrap();
        let red = Reduction::new(&s, &[0.0], &[1.0]).unwrap();
        let (z, _) = solve_ideal_reduced(&red).unwrap();
        assert!((z[0] - 0.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn foot_single_block() {
        // hyperbolic distance from (X, y) to the vertical line X = 0 is asinh(|X| / y)
        let s = Spectrum::new(&[(1, 2.0)]).unwrap();
        let red = Reduction::new(&s, &[0.0], &[0.7]).unwrap();
        let (z, _) = solve_foot_reduced(&red, 0.3).unwrap();
        let want = (2.0 * 0.7 / (0.6f64).exp()).asinh() / 2.0;
        assert!((z[1] - want).abs() < 1e-10);
    }
}
