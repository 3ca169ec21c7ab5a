use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{labels_for, SampledSpace, SpaceKind};
use crate::error::{Error, Result};
use crate::geometry::{delta_hat, geodesic_distance, ideal_geodesic, BoundaryPoint, GroupPoint};
use crate::spectrum::Spectrum;

/// Ray parameters at which Gromov products are evaluated.
pub const DEFAULT_HORIZONS: [f64; 3] = [10.0, 15.0, 20.0];

/// Label of the finite stand-in for `xi_0` in visual samples.
pub const XI0_LABEL: &str = "xi0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualParams {
    pub xi: BoundaryPoint,
    pub base: GroupPoint,
    pub epsilon: f64,
}

/// `min(alpha_1, 1 / (4 delta_hat + 1))`.
pub fn epsilon0_default(spec: &Spectrum) -> f64 {
    spec.alpha_min().min(1.0 / (4.0 * delta_hat(spec) + 1.0))
}

/// Point at parameter `T` on the ray from `base` to `xi`: upward through `base` for
/// `xi_0`, downward along the vertical over `xi` otherwise.
pub fn ray_point(xi: &BoundaryPoint, base: &GroupPoint, horizon: f64) -> GroupPoint {
    match xi {
        BoundaryPoint::Xi0 => GroupPoint { x: base.x.clone(), t: base.t + horizon },
        BoundaryPoint::Point(x) => GroupPoint { x: x.clone(), t: base.t - horizon },
    }
}

fn check_boundary(spec: &Spectrum, b: &BoundaryPoint) -> Result<()> {
    match b {
        BoundaryPoint::Xi0 => Ok(()),
        BoundaryPoint::Point(x) => spec.check_dim(x),
    }
}

/// `1/2 (d(base, x_T) + d(base, y_T) - d(x_T, y_T))` for the ray points at parameter `T`.
pub fn gromov_product(
    spec: &Spectrum,
    xi: &BoundaryPoint,
    eta: &BoundaryPoint,
    base: &GroupPoint,
    horizon: f64,
) -> Result<f64> {
    check_boundary(spec, xi)?;
    check_boundary(spec, eta)?;
    base.check(spec)?;
    if xi == eta {
        return Err(Error::IdenticalPoints);
    }
    let x = ray_point(xi, base, horizon);
    let y = ray_point(eta, base, horizon);
    let dx = geodesic_distance(spec, base, &x)?;
    let dy = geodesic_distance(spec, base, &y)?;
    let dxy = geodesic_distance(spec, &x, &y)?;
    Ok(0.5 * (dx + dy - dxy))
}

/// Gromov product at each of [`DEFAULT_HORIZONS`]; `value` is the one at the largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GromovEstimate {
    pub value: f64,
    pub by_horizon: Vec<(f64, f64)>,
    /// Max minus min over horizons.
    pub spread: f64,
}

pub fn gromov_product_stabilized(
    spec: &Spectrum,
    xi: &BoundaryPoint,
    eta: &BoundaryPoint,
    base: &GroupPoint,
) -> Result<GromovEstimate> {
    let mut by_horizon = Vec::with_capacity(DEFAULT_HORIZONS.len());
    for &h in &DEFAULT_HORIZONS {
        by_horizon.push((h, gromov_product(spec, xi, eta, base, h)?));
    }
    let vals: Vec<f64> = by_horizon.iter().map(|v| v.1).collect();
    let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GromovEstimate { value: *vals.last().unwrap(), by_horizon, spread: mx - mn })
}

/// `e^{-epsilon (eta_1 | eta_2)_base}` at horizon 20; zero on the diagonal.
pub fn visual_quasimetric(
    spec: &Spectrum,
    base: &GroupPoint,
    epsilon: f64,
    eta1: &BoundaryPoint,
    eta2: &BoundaryPoint,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if eta1 == eta2 {
        check_boundary(spec, eta1)?;
        return Ok(0.0);
    }
    let g = gromov_product(spec, eta1, eta2, base, DEFAULT_HORIZONS[2])?;
    Ok((-epsilon * g).exp())
}

/// Parabolic quasimetric based at `xi_0`: `e^{epsilon (t_top - t_base)}` where `t_top`
/// is the top height of the geodesic joining `eta1` and `eta2`.
pub fn parabolic_quasimetric(spec: &Spectrum, params: &VisualParams, eta1: &[f64], eta2: &[f64]) -> Result<f64> {
    if params.xi != BoundaryPoint::Xi0 {
        return Err(Error::InvalidParameter("parabolic quasimetric is implemented for xi_0".into()));
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", params.epsilon)));
    }
    params.base.check(spec)?;
    spec.check_dim(eta1)?;
    spec.check_dim(eta2)?;
    if eta1 == eta2 {
        return Ok(0.0);
    }
    let geo = ideal_geodesic(spec, eta1, eta2)?;
    Ok((params.epsilon * (geo.top_height - params.base.t)).exp())
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
}

fn assemble(
    labels: Vec<String>,
    coords: Vec<Vec<f64>>,
    values: Vec<((usize, usize), f64)>,
    kind: SpaceKind,
) -> Result<SampledSpace> {
    let n = labels.len();
    let mut dist = vec![vec![0.0; n]; n];
    for ((i, j), v) in values {
        dist[i][j] = v;
        dist[j][i] = v;
    }
    SampledSpace::new(labels, coords, dist, kind)
}

/// Parabolic quasimetric table on `points` (labels `p0`, `p1`, ...).
pub fn parabolic_table(spec: &Spectrum, params: &VisualParams, points: &[Vec<f64>]) -> Result<SampledSpace> {
    let values: Result<Vec<_>> = pairs(points.len())
        .into_par_iter()
        .map(|(i, j)| Ok(((i, j), parabolic_quasimetric(spec, params, &points[i], &points[j])?)))
        .collect();
    assemble(labels_for(points.len()), points.to_vec(), values?, SpaceKind::Quasimetric)
}

/// Visual quasimetric table on `points`, optionally with `xi_0` appended as [`XI0_LABEL`].
pub fn visual_table(
    spec: &Spectrum,
    base: &GroupPoint,
    epsilon: f64,
    points: &[Vec<f64>],
    with_xi0: bool,
) -> Result<SampledSpace> {
    let horizon = DEFAULT_HORIZONS[2];
    let mut bps: Vec<BoundaryPoint> = points.iter().map(|p| BoundaryPoint::Point(p.clone())).collect();
    let mut labels = labels_for(points.len());
    let mut coords = points.to_vec();
    if with_xi0 {
        bps.push(BoundaryPoint::Xi0);
        labels.push(XI0_LABEL.into());
        coords.push(Vec::new());
    }
    for b in &bps {
        check_boundary(spec, b)?;
    }
    base.check(spec)?;
    let far: Vec<GroupPoint> = bps.iter().map(|b| ray_point(b, base, horizon)).collect();
    let to_base: Result<Vec<f64>> = far.par_iter().map(|f| geodesic_distance(spec, base, f)).collect();
    let to_base = to_base?;
    let values: Result<Vec<_>> = pairs(bps.len())
        .into_par_iter()
        .map(|(i, j)| {
            if bps[i] == bps[j] {
                return Ok(((i, j), 0.0));
            }
            let dij = geodesic_distance(spec, &far[i], &far[j])?;
            let g = 0.5 * (to_base[i] + to_base[j] - dij);
            Ok(((i, j), (-epsilon * g).exp()))
        })
        .collect();
    assemble(labels, coords, values?, SpaceKind::Quasimetric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabolic_half_plane_example() {
        let s = Spectrum::new(&[(1, 1.0)]).unwrap();
        let params = VisualParams { xi: BoundaryPoint::Xi0, base: GroupPoint::origin(1), epsilon: 1.0 };
        let v = parabolic_quasimetric(&s, &params, &[0.0], &[1.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
        let scaled = parabolic_quasimetric(&s, &params, &[0.0], &[3.0]).unwrap();
        assert!((scaled - 1.5).abs() < 1e-9);
        assert_eq!(parabolic_quasimetric(&s, &params, &[2.0], &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn gromov_symmetric_and_vertical() {
        let s = Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap();
        let base = GroupPoint::origin(2);
        let a = BoundaryPoint::Point(vec![0.3, -0.2]);
        let b = BoundaryPoint::Point(vec![-1.0, 0.5]);
        let ab = gromov_product(&s, &a, &b, &base, 15.0).unwrap();
        let ba = gromov_product(&s, &b, &a, &base, 15.0).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        let own = BoundaryPoint::Point(vec![0.0, 0.0]);
        let g = gromov_product(&s, &own, &BoundaryPoint::Xi0, &base, 20.0).unwrap();
        assert!(g.abs() < 1e-9);
    }

    #[test]
    fn visual_exponent_law() {
        let s = Spectrum::new(&[(1, 1.0)]).unwrap();
        let base = GroupPoint::origin(1);
        let a = BoundaryPoint::Point(vec![0.2]);
        let b = BoundaryPoint::Point(vec![1.7]);
        let v1 = visual_quasimetric(&s, &base, 0.3, &a, &b).unwrap();
        let v2 = visual_quasimetric(&s, &base, 0.6, &a, &b).unwrap();
        assert!((v2 - v1 * v1).abs() < 1e-12);
        assert_eq!(visual_quasimetric(&s, &base, 0.3, &a, &a).unwrap(), 0.0);
    }
}
