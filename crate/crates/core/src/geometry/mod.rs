//! Riemannian geometry of `G_A = R^n x_A R` with the left-invariant metric
//! `ds^2 = sum_i e^{-2 alpha_i t} |dx_i|^2 + dt^2`.

mod busemann;
mod distance;
mod energy;
mod geodesic;
mod oracle;
mod profile;
mod quasicenter;
mod shooting;

pub use busemann::{busemann_numeric, busemann_xi0, busemann_xi0_numeric, BusemannEstimate};
pub use distance::{distance, geodesic_distance, DistanceReport};
pub use energy::{minimize_energy, EnergyOptions, EnergyPath};
pub use geodesic::{integrate_geodesic, speed_drift, GeodesicPath};
pub use oracle::{
    half_space_busemann, half_space_horizontal_geodesic, hyperbolic_oracle_distance,
};
pub use quasicenter::{
    distance_to_ideal_geodesic, distance_to_vertical, g3_defect, ideal_geodesic, quasicenter,
    G3Outcome, IdealGeodesic, Quasicenter,
};
pub use shooting::{shoot_two_point, TwoPointGeodesic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// A point `(x, t)` of `G_A`: horospherical coordinate `x` and height `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        GroupPoint { x, t }
    }

    pub fn origin(n: usize) -> Self {
        GroupPoint { x: vec![0.0; n], t: 0.0 }
    }

    pub fn check(&self, spec: &Spectrum) -> Result<()> {
        spec.check_dim(&self.x)
    }
}

/// Boundary point: either the distinguished point `xi_0` or a point of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Xi0,
    Point(Vec<f64>),
}

/// Reference hyperbolicity constant `ln(1 + sqrt 2) / alpha_1` of the comparison space
/// with curvature `-alpha_1^2`. Used for reporting only.
pub fn delta_hat(spec: &Spectrum) -> f64 {
    (1.0 + 2f64.sqrt()).ln() / spec.alpha_min()
}

/// Diagonal of the metric tensor at `p`: `e^{-2 alpha_i t}` per horizontal coordinate, then `1`.
pub fn metric_tensor(spec: &Spectrum, p: &GroupPoint) -> Result<Vec<f64>> {
    p.check(spec)?;
    let mut diag: Vec<f64> = spec
        .coordinate_alphas()
        .into_iter()
        .map(|a| (-2.0 * a * p.t).exp())
        .collect();
    diag.push(1.0);
    Ok(diag)
}

/// Riemannian norm of a tangent vector `(v_x, v_t)` at `p`.
pub fn tangent_norm(spec: &Spectrum, p: &GroupPoint, vx: &[f64], vt: f64) -> Result<f64> {
    let g = metric_tensor(spec, p)?;
    spec.check_dim(vx)?;
    let mut acc = g[spec.n()] * vt * vt;
    for (k, v) in vx.iter().enumerate() {
        acc += g[k] * v * v;
    }
    Ok(acc.sqrt())
}

/// Distance inside the horosphere `R^n x {t}`: `|e^{-tA}(x - y)|`.
pub fn horospherical_distance(spec: &Spectrum, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    let norms = spec.block_diff_norms(x, y)?;
    Ok(norms
        .iter()
        .zip(spec.blocks())
        .map(|(d, b)| (-2.0 * b.alpha * t).exp() * d * d)
        .sum::<f64>()
        .sqrt())
}

/// Length of a polyline lying in the horosphere at height `t`.
pub fn horizontal_curve_length(spec: &Spectrum, polyline: &[Vec<f64>], t: f64) -> Result<f64> {
    if polyline.len() < 2 {
        return Err(Error::TooFewVertices);
    }
    let mut total = 0.0;
    for w in polyline.windows(2) {
        total += horospherical_distance(spec, &w[0], &w[1], t)?;
    }
    Ok(total)
}

/// Group product `(x, t) . (y, s) = (x + e^{tA} y, t + s)`.
pub fn left_translate(spec: &Spectrum, g: &GroupPoint, p: &GroupPoint) -> Result<GroupPoint> {
    g.check(spec)?;
    p.check(spec)?;
    let alphas = spec.coordinate_alphas();
    let x = g
        .x
        .iter()
        .zip(&p.x)
        .zip(&alphas)
        .map(|((gx, px), a)| gx + (a * g.t).exp() * px)
        .collect();
    Ok(GroupPoint { x, t: g.t + p.t })
}

/// Group inverse `(x, t)^{-1} = (-e^{-tA} x, -t)`.
pub fn group_inverse(spec: &Spectrum, g: &GroupPoint) -> Result<GroupPoint> {
    g.check(spec)?;
    let alphas = spec.coordinate_alphas();
    let x = g.x.iter().zip(&alphas).map(|(gx, a)| -(-a * g.t).exp() * gx).collect();
    Ok(GroupPoint { x, t: -g.t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    #[test]
    fn metric_tensor_examples() {
        let s = s2();
        assert_eq!(metric_tensor(&s, &GroupPoint::origin(2)).unwrap(), vec![1.0, 1.0, 1.0]);
        let g = metric_tensor(&s, &GroupPoint::new(vec![3.0, -1.0], 1.0)).unwrap();
        assert_relative_eq!(g[0], (-2f64).exp());
        assert_relative_eq!(g[1], (-4f64).exp());
        assert_eq!(g[2], 1.0);
        let g = metric_tensor(&s, &GroupPoint::new(vec![0.0, 0.0], -1.0)).unwrap();
        assert_relative_eq!(g[0], 2f64.exp());
        assert_relative_eq!(g[1], 4f64.exp());
    }

    #[test]
    fn horospherical_examples() {
        let s = s2();
        assert_relative_eq!(horospherical_distance(&s, &[1.0, 0.0], &[0.0, 0.0], 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            horospherical_distance(&s, &[1.0, 1.0], &[0.0, 0.0], 0.0).unwrap(),
            2f64.sqrt()
        );
        let t0 = s.de_height(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(t0, 0.240_605_912_529_802_5, epsilon = 1e-11);
        assert_relative_eq!(
            horospherical_distance(&s, &[1.0, 1.0], &[0.0, 0.0], t0).unwrap(),
            1.0,
            epsilon = 1e-11
        );
    }

    #[test]
    fn group_law() {
        let s = s2();
        let p = GroupPoint::new(vec![1.5, -2.0], 0.3);
        assert_eq!(left_translate(&s, &GroupPoint::origin(2), &p).unwrap(), p);
        let g = GroupPoint::new(vec![0.0, 0.0], 0.7);
        let y = GroupPoint::new(vec![2.0, 3.0], 0.0);
        let gy = left_translate(&s, &g, &y).unwrap();
        assert_relative_eq!(gy.x[0], 0.7f64.exp() * 2.0);
        assert_relative_eq!(gy.x[1], 1.4f64.exp() * 3.0);
        assert_eq!(gy.t, 0.7);
        let h = GroupPoint::new(vec![-0.4, 1.1], -1.3);
        let lhs = left_translate(&s, &left_translate(&s, &g, &h).unwrap(), &p).unwrap();
        let rhs = left_translate(&s, &g, &left_translate(&s, &h, &p).unwrap()).unwrap();
        for k in 0..2 {
            assert_relative_eq!(lhs.x[k], rhs.x[k], epsilon = 1e-14);
        }
        assert_relative_eq!(lhs.t, rhs.t);
        let inv = group_inverse(&s, &p).unwrap();
        let e = left_translate(&s, &inv, &p).unwrap();
        assert!(e.x.iter().all(|v| v.abs() < 1e-14) && e.t.abs() < 1e-15);
    }

    #[test]
    fn horospherical_contraction_envelope() {
        let s = Spectrum::new(&[(1, 0.5), (2, 1.5)]).unwrap();
        let curve = vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, -1.0], vec![3.0, 2.5, 0.0], vec![2.0, -1.0, 4.0]];
        for &t in &[-2.0, 0.0, 1.5] {
            for &ds in &[0.1, 1.0, 3.0] {
                let l0 = horizontal_curve_length(&s, &curve, t).unwrap();
                let l1 = horizontal_curve_length(&s, &curve, t + ds).unwrap();
                let ratio = l1 / l0;
                assert!(ratio >= (-s.alpha_max() * ds).exp() * (1.0 - 1e-12));
                assert!(ratio <= (-s.alpha_min() * ds).exp() * (1.0 + 1e-12));
            }
        }
    }
}
