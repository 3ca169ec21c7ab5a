use serde::{Deserialize, Serialize};

use super::distance::{geodesic_distance, geodesic_distance_warm};
use super::profile::profile_at;
use super::shooting::{solve_foot_reduced, solve_ideal_reduced, weights, Reduction};
use super::GroupPoint;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Geodesic line between two boundary points `p != q` of `R^n`.
/// Its top lies over the midpoint `(p + q) / 2`.
#[derive(Debug, Clone)]
pub struct IdealGeodesic {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub top_height: f64,
    pub direction: Vec<f64>,
    red: Reduction,
}

impl IdealGeodesic {
    /// Point at signed arclength `s` from the top (towards `q` for `s > 0`).
    pub fn point_at(&self, spec: &Spectrum, s: f64) -> Result<GroupPoint> {
        let (tau, g) = profile_at(&self.red.alphas, &self.direction, s)?;
        let mid: Vec<f64> = self.p.iter().zip(&self.q).map(|(a, b)| 0.5 * (a + b)).collect();
        let u: Vec<f64> = (0..self.red.m())
            .map(|j| self.direction[j] * (self.red.alphas[j] * self.top_height).exp() * g[j])
            .collect();
        Ok(GroupPoint { x: self.red.lift(spec, &mid, &u), t: self.top_height + tau })
    }

    pub fn top(&self, spec: &Spectrum) -> Result<GroupPoint> {
        self.point_at(spec, 0.0)
    }
}

/// Solves for the geodesic joining boundary points `p` and `q`.
pub fn ideal_geodesic(spec: &Spectrum, p: &[f64], q: &[f64]) -> Result<IdealGeodesic> {
    let red = Reduction::new(spec, p, q)?;
    if red.m() == 0 {
        return Err(Error::IdenticalPoints);
    }
    let (z, _) = solve_ideal_reduced(&red).ok_or_else(|| Error::NoConvergence {
        what: "ideal geodesic".into(),
        best_upper_bound: f64::INFINITY,
    })?;
    Ok(IdealGeodesic {
        p: p.to_vec(),
        q: q.to_vec(),
        top_height: z[0],
        direction: weights(&z[1..]),
        red,
    })
}

/// Distance from `c` to the vertical geodesic over `x`.
pub fn distance_to_vertical(spec: &Spectrum, c: &GroupPoint, x: &[f64]) -> Result<f64> {
    c.check(spec)?;
    let red = Reduction::new(spec, &c.x, x)?;
    if red.m() == 0 || red.horizontal_at(c.t) < 1e-13 {
        return Ok(red.horizontal_at(c.t));
    }
    let (z, _) = solve_foot_reduced(&red, c.t).ok_or_else(|| Error::NoConvergence {
        what: "perpendicular to vertical geodesic".into(),
        best_upper_bound: red.horizontal_at(c.t),
    })?;
    Ok(z[1])
}

/// Distance from `c` to a geodesic line, by golden-section search along the line
/// (distance to a geodesic is convex in its arclength parameter).
pub fn distance_to_ideal_geodesic(spec: &Spectrum, c: &GroupPoint, geo: &IdealGeodesic) -> Result<f64> {
    c.check(spec)?;
    let mut warm: Option<Vec<f64>> = None;
    let mut f = |s: f64| -> Result<f64> {
        let pt = geo.point_at(spec, s)?;
        let (d, z) = geodesic_distance_warm(spec, c, &pt, warm.as_deref())?;
        if z.is_some() {
            warm = z;
        }
        Ok(d)
    };
    let f0 = f(0.0)?;
    if f0 < 1e-12 {
        return Ok(f0);
    }
    // any s with |s| > 2 f0 is farther than the top
    let (mut a, mut b) = (-2.0 * f0, 2.0 * f0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let tol = 1e-7 * f0.max(1.0);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(f0.min(f1).min(f2))
}

/// The point `(p, ln D_e(p, q))` and its distances to the three sides of the ideal
/// triangle with vertices `p`, `q`, `xi_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quasicenter {
    pub center: GroupPoint,
    pub t0: f64,
    pub to_gamma_p: f64,
    pub to_gamma_q: f64,
    pub to_sigma: f64,
    pub defect: f64,
}

pub fn quasicenter(spec: &Spectrum, p: &[f64], q: &[f64]) -> Result<Quasicenter> {
    let t0 = spec.de_height(p, q)?;
    let center = GroupPoint { x: p.to_vec(), t: t0 };
    let to_gamma_q = distance_to_vertical(spec, &center, q)?;
    let geo = ideal_geodesic(spec, p, q)?;
    let to_sigma = distance_to_ideal_geodesic(spec, &center, &geo)?;
    Ok(Quasicenter {
        center,
        t0,
        to_gamma_p: 0.0,
        to_gamma_q,
        to_sigma,
        defect: to_gamma_q.max(to_sigma),
    })
}

/// Outcome of the two-regime distance estimate for `(p, t_1)`, `(q, t_2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime")]
pub enum G3Outcome {
    /// Both heights below `t_0`: `defect = d - (t_0 - t_1) - (t_0 - t_2)`.
    Below { t0: f64, distance: f64, defect: f64 },
    /// Some height at or above `t_0`: slacks of `|t_1 - t_2| <= d <= |t_1 - t_2| + 1`.
    Above { t0: f64, distance: f64, lower_slack: f64, upper_slack: f64 },
}

pub fn g3_defect(spec: &Spectrum, p: &[f64], q: &[f64], t1: f64, t2: f64) -> Result<G3Outcome> {
    let t0 = spec.de_height(p, q)?;
    let d = geodesic_distance(spec, &GroupPoint::new(p.to_vec(), t1), &GroupPoint::new(q.to_vec(), t2))?;
    if t1 < t0 && t2 < t0 {
        Ok(G3Outcome::Below { t0, distance: d, defect: d - (t0 - t1) - (t0 - t2) })
    } else {
        let dt = (t1 - t2).abs();
        Ok(G3Outcome::Above { t0, distance: d, lower_slack: d - dt, upper_slack: dt + 1.0 - d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_geodesic_single_block() {
        let s = Spectrum::new(&[(1, 1.0)]).unwrap();
        let g = ideal_geodesic(&s, &[0.0], &[1.0]).unwrap();
        assert!((g.top_height - 0.5f64.ln()).abs() < 1e-10);
        let far = g.point_at(&s, 30.0).unwrap();
        assert!((far.x[0] - 1.0).abs() < 1e-9);
        let top = g.top(&s).unwrap();
        assert!((top.x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ideal_geodesic_two_blocks_reaches_endpoints() {
        let s = Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap();
        let g = ideal_geodesic(&s, &[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let end = g.point_at(&s, 40.0).unwrap();
        assert!((end.x[0] - 1.0).abs() < 1e-8 && (end.x[1] - 3.0).abs() < 1e-8);
        let start = g.point_at(&s, -40.0).unwrap();
        assert!(start.x[0].abs() < 1e-8 && start.x[1].abs() < 1e-8);
    }

    #[test]
    fn single_block_quasicenter() {
        // half-plane distance from z to the circle |w - c| = r is asinh(||z - c|^2 - r^2| / (2 r y))
        let s = Spectrum::new(&[(1, 1.0)]).unwrap();
        let qc = quasicenter(&s, &[0.0], &[1.0]).unwrap();
        assert!(qc.t0.abs() < 1e-12);
        assert!((qc.to_gamma_q - 1f64.asinh()).abs() < 1e-9);
        let want = ((1.25f64 - 0.25) / (2.0 * 0.5 * 1.0)).asinh();
        assert!((qc.to_sigma - want).abs() < 1e-6, "{} vs {}", qc.to_sigma, want);
    }

    #[test]
    fn g3_regimes() {
        let s = Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap();
        let (p, q) = ([0.0, 0.0], [1.0, 1.0]);
        let t0 = s.de_height(&p, &q).unwrap();
        match g3_defect(&s, &p, &q, t0, t0).unwrap() {
            G3Outcome::Above { lower_slack, upper_slack, .. } => {
                assert!(lower_slack >= 0.0 && upper_slack >= 0.0);
            }
            _ => panic!("wrong regime"),
        }
        let s1 = Spectrum::new(&[(1, 1.0)]).unwrap();
        match g3_defect(&s1, &[0.0], &[1.0], -3.0, -3.0).unwrap() {
            G3Outcome::Below { defect, .. } => {
                let want = (1.0 + 2.0 * (-6f64).exp()).ln();
                assert!(defect.abs() <= 3f64.ln());
                assert!((defect - want).abs() < 1e-2, "{defect} vs {want}");
            }
            _ => panic!("wrong regime"),
        }
    }
}
