//! Discrete path-energy minimisation in the reduced coordinates `(u_1..u_m, t)`.
//!
//! The segment energy `sum_i e^{-alpha_i (t_a + t_b)} (u_b - u_a)_i^2 + (t_b - t_a)^2` is
//! minimised over interior waypoints by damped Newton on its block-tridiagonal Hessian,
//! refining the waypoint count geometrically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::geodesic::gauss5;
use crate::spectrum::log_phi;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyOptions {
    pub start: usize,
    pub max_waypoints: usize,
    pub rel_tol: f64,
    pub max_newton: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions { start: 16, max_waypoints: 256, rel_tol: 1e-6, max_newton: 80 }
    }
}

/// Minimised discrete path. `waypoints[k]` is `(u, t)` in reduced coordinates.
#[derive(Debug, Clone)]
pub struct EnergyPath {
    pub length: f64,
    pub waypoints: Vec<(Vec<f64>, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

type Wp = Vec<f64>;

struct Problem<'a> {
    alphas: &'a [f64],
    d: usize,
}

impl Problem<'_> {
    fn seg_energy(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = self.alphas.len();
        let (ta, tb) = (a[m], b[m]);
        let mut e = (tb - ta) * (tb - ta);
        for i in 0..m {
            let du = b[i] - a[i];
            e += (-self.alphas[i] * (ta + tb)).exp() * du * du;
        }
        e
    }

    fn seg_length(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = self.alphas.len();
        let dt = b[m] - a[m];
        gauss5()
            .iter()
            .map(|&(s, w)| {
                let t = a[m] + s * dt;
                let mut acc = dt * dt;
                for i in 0..m {
                    let du = b[i] - a[i];
                    acc += (-2.0 * self.alphas[i] * t).exp() * du * du;
                }
                w * acc.sqrt()
            })
            .sum()
    }

    fn energy(&self, path: &[Wp]) -> f64 {
        path.windows(2).map(|w| self.seg_energy(&w[0], &w[1])).sum()
    }

    fn length(&self, path: &[Wp]) -> f64 {
        path.windows(2).map(|w| self.seg_length(&w[0], &w[1])).sum()
    }

    /// Gradients and Hessian blocks of one segment: (g_a, g_b, H_aa, H_bb, H_ab).
    fn seg_derivs(&self, a: &[f64], b: &[f64]) -> (Wp, Wp, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let m = self.alphas.len();
        let d = self.d;
        let (ta, tb) = (a[m], b[m]);
        let dt = tb - ta;
        let mut ga = vec![0.0; d];
        let mut gb = vec![0.0; d];
        let mut haa = DMatrix::zeros(d, d);
        let mut hbb = DMatrix::zeros(d, d);
        let mut hab = DMatrix::zeros(d, d);
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..m {
            let al = self.alphas[i];
            let c = (-al * (ta + tb)).exp();
            let du = b[i] - a[i];
            ga[i] = -2.0 * c * du;
            gb[i] = 2.0 * c * du;
            s1 += al * c * du * du;
            s2 += al * al * c * du * du;
            haa[(i, i)] = 2.0 * c;
            hbb[(i, i)] = 2.0 * c;
            hab[(i, i)] = -2.0 * c;
            haa[(i, m)] = 2.0 * al * c * du;
            haa[(m, i)] = haa[(i, m)];
            hbb[(i, m)] = -2.0 * al * c * du;
            hbb[(m, i)] = hbb[(i, m)];
            hab[(i, m)] = 2.0 * al * c * du;
            hab[(m, i)] = -2.0 * al * c * du;
        }
        ga[m] = -s1 - 2.0 * dt;
        gb[m] = -s1 + 2.0 * dt;
        haa[(m, m)] = s2 + 2.0;
        hbb[(m, m)] = s2 + 2.0;
        hab[(m, m)] = s2 - 2.0;
        (ga, gb, haa, hbb, hab)
    }

    /// Newton step for interior waypoints with Levenberg shift `lambda`; `None` if singular.
    fn newton_step(&self, path: &[Wp], lambda: f64) -> Option<(Vec<Wp>, f64)> {
        let nseg = path.len() - 1;
        let nin = nseg - 1;
        let d = self.d;
        let mut diag = vec![DMatrix::<f64>::zeros(d, d); nin];
        let mut upper = vec![DMatrix::<f64>::zeros(d, d); nin.saturating_sub(1)];
        let mut grad = vec![DVector::<f64>::zeros(d); nin];
        for k in 0..nseg {
            let (ga, gb, haa, hbb, hab) = self.seg_derivs(&path[k], &path[k + 1]);
            // waypoint k is interior index k-1, waypoint k+1 is interior index k
            if k >= 1 {
                let j = k - 1;
                diag[j] += &haa;
                for r in 0..d {
                    grad[j][r] += ga[r];
                }
            }
            if k + 1 <= nin {
                let j = k;
                diag[j] += &hbb;
                for r in 0..d {
                    grad[j][r] += gb[r];
                }
            }
            if k >= 1 && k + 1 <= nin {
                upper[k - 1] += &hab;
            }
        }
        let gnorm2: f64 = grad.iter().map(|g| g.norm_squared()).sum();
        for dblk in diag.iter_mut() {
            for r in 0..d {
                dblk[(r, r)] += lambda;
            }
        }
        // block Thomas: solve H x = -g
        let mut dprime: Vec<DMatrix<f64>> = Vec::with_capacity(nin);
        let mut rprime: Vec<DVector<f64>> = Vec::with_capacity(nin);
        for j in 0..nin {
            let mut dj = diag[j].clone();
            let mut rj = -&grad[j];
            if j > 0 {
                let lu = dprime[j - 1].clone().lu();
                let lower = upper[j - 1].transpose();
                let x = lu.solve(&upper[j - 1])?;
                let y = lu.solve(&rprime[j - 1])?;
                dj -= &lower * x;
                rj -= &lower * y;
            }
            dprime.push(dj);
            rprime.push(rj);
        }
        let mut x = vec![DVector::<f64>::zeros(d); nin];
        for j in (0..nin).rev() {
            let mut rhs = rprime[j].clone();
            if j + 1 < nin {
                rhs -= &upper[j] * &x[j + 1];
            }
            x[j] = dprime[j].clone().lu().solve(&rhs)?;
        }
        if x.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return None;
        }
        let descent: f64 = grad.iter().zip(&x).map(|(g, v)| g.dot(v)).sum();
        if descent >= 0.0 && gnorm2 > 0.0 {
            return None;
        }
        let step: Vec<Wp> = x.into_iter().map(|v| v.iter().cloned().collect()).collect();
        Some((step, descent))
    }

    fn minimize(&self, path: &mut Vec<Wp>, max_iter: usize) -> (usize, bool) {
        let mut e = self.energy(path);
        let mut lambda = 0.0f64;
        for it in 0..max_iter {
            let (step, descent) = match self.newton_step(path, lambda) {
                Some(s) => s,
                None => {
                    lambda = if lambda == 0.0 { 1e-6 * e.max(1e-12) } else { lambda * 10.0 };
                    if lambda > 1e12 {
                        return (it, false);
                    }
                    continue;
                }
            };
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-10 {
                let trial: Vec<Wp> = path
                    .iter()
                    .enumerate()
                    .map(|(k, w)| {
                        if k == 0 || k == path.len() - 1 {
                            w.clone()
                        } else {
                            w.iter().zip(&step[k - 1]).map(|(a, s)| a + t * s).collect()
                        }
                    })
                    .collect();
                let et = self.energy(&trial);
                if et.is_finite() && et <= e + 1e-4 * t * descent {
                    let rel = (e - et) / e.max(1e-300);
                    *path = trial;
                    e = et;
                    accepted = true;
                    if rel < 1e-15 || -descent < 1e-28 * e.max(1.0) {
                        return (it + 1, true);
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                if -descent < 1e-24 * e.max(1.0) {
                    return (it, true);
                }
                lambda = if lambda == 0.0 { 1e-6 * e.max(1e-12) } else { lambda * 10.0 };
                if lambda > 1e12 {
                    return (it, false);
                }
            } else {
                lambda *= 0.1;
                if lambda < 1e-14 {
                    lambda = 0.0;
                }
            }
        }
        (max_iter, false)
    }
}

fn refine(path: &[Wp]) -> Vec<Wp> {
    let mut out = Vec::with_capacity(2 * path.len() - 1);
    for w in path.windows(2) {
        out.push(w[0].clone());
        out.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    out.push(path.last().unwrap().clone());
    out
}

/// Up-across-down path through height `max(t_p, t_q, t_*)`, where the horizontal
/// leg has unit length at `t_*`, split into `n` segments proportional to leg lengths.
fn initial_path(alphas: &[f64], lens: &[f64], t_p: f64, t_q: f64, n: usize) -> Vec<Wp> {
    let m = alphas.len();
    let active: Vec<(f64, f64)> = alphas.iter().zip(lens).map(|(a, l)| (*a, l.ln())).collect();
    let t_star = crate::spectrum::solve_log_phi(&active, 1e-12);
    let top = t_p.max(t_q).max(t_star);
    let horiz = (0.5 * log_phi(&active, top)).exp();
    let legs = [top - t_p, horiz, top - t_q];
    let total: f64 = legs.iter().sum();
    let mut counts: Vec<usize> =
        legs.iter().map(|l| if *l > 0.0 { ((l / total) * n as f64).round().max(1.0) as usize } else { 0 }).collect();
    let used: usize = counts.iter().sum();
    if used != n {
        let k = (0..3).max_by(|&a, &b| legs[a].total_cmp(&legs[b])).unwrap();
        counts[k] = (counts[k] as isize + n as isize - used as isize).max(1) as usize;
    }
    let point = |u: f64, t: f64| -> Wp {
        let mut w: Wp = lens.iter().map(|l| u * l).collect();
        w.push(t);
        w
    };
    let mut path = vec![point(0.0, t_p)];
    for k in 1..=counts[0] {
        path.push(point(0.0, t_p + (top - t_p) * k as f64 / counts[0] as f64));
    }
    for k in 1..=counts[1] {
        path.push(point(k as f64 / counts[1] as f64, top));
    }
    for k in 1..=counts[2] {
        path.push(point(1.0, top + (t_q - top) * k as f64 / counts[2] as f64));
    }
    debug_assert_eq!(path[0].len(), m + 1);
    path
}

/// Minimises the discrete energy between `(0, t_p)` and `(lens, t_q)` and reports
/// the Riemannian length of the final polyline, which bounds the distance from above.
pub fn minimize_energy(alphas: &[f64], lens: &[f64], t_p: f64, t_q: f64, opts: &EnergyOptions) -> EnergyPath {
    let prob = Problem { alphas, d: alphas.len() + 1 };
    let mut path = initial_path(alphas, lens, t_p, t_q, opts.start.max(2));
    let mut iterations = 0;
    let converged;
    let mut prev = f64::INFINITY;
    let mut length = prob.length(&path);
    loop {
        let (it, ok) = prob.minimize(&mut path, opts.max_newton);
        iterations += it;
        length = length.min(prob.length(&path));
        let rel = (prev - length).abs() / length.max(1e-300);
        if ok && rel < opts.rel_tol {
            converged = true;
            break;
        }
        prev = length;
        if path.len() - 1 >= opts.max_waypoints {
            converged = ok && rel < 1e-3;
            break;
        }
        path = refine(&path);
    }
    let m = alphas.len();
    EnergyPath {
        length,
        waypoints: path.into_iter().map(|w| (w[..m].to_vec(), w[m])).collect(),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_matches_closed_form() {
        let d = minimize_energy(&[1.0], &[1.0], 0.0, 0.0, &EnergyOptions::default());
        assert!((d.length - 1.5f64.acosh()).abs() < 1e-4, "{}", d.length);
        assert!(d.length >= 1.5f64.acosh() - 1e-12);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let prob = Problem { alphas: &[0.7, 1.9], d: 3 };
        let a = vec![0.1, -0.4, 0.3];
        let b = vec![0.9, 0.2, -0.5];
        let (ga, gb, haa, _hbb, hab) = prob.seg_derivs(&a, &b);
        let h = 1e-6;
        for r in 0..3 {
            let mut ap = a.clone();
            ap[r] += h;
            let fd = (prob.seg_energy(&ap, &b) - prob.seg_energy(&a, &b)) / h;
            assert!((fd - ga[r]).abs() < 1e-4);
            let mut bp = b.clone();
            bp[r] += h;
            let fd = (prob.seg_energy(&a, &bp) - prob.seg_energy(&a, &b)) / h;
            assert!((fd - gb[r]).abs() < 1e-4);
            let (ga2, gb2, ..) = prob.seg_derivs(&ap, &b);
            for c in 0..3 {
                assert!(((ga2[c] - ga[c]) / h - haa[(c, r)]).abs() < 1e-4);
                // d g_b / d a_r = H_ab[(r, c)]
                assert!(((gb2[c] - gb[c]) / h - hab[(r, c)]).abs() < 1e-4);
            }
        }
    }
}
