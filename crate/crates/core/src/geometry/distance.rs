use serde::{Deserialize, Serialize};

use super::energy::{minimize_energy, EnergyOptions, EnergyPath};
use super::shooting::{solve_two_point_reduced, thetas_from, Reduction};
use super::GroupPoint;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Horizontal displacement below which a pair is treated as vertical.
const VERTICAL_EPS: f64 = 1e-13;

/// Outcome of the cross-checked distance computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub distance: f64,
    pub shooting: Option<f64>,
    pub energy: Option<f64>,
    pub shooting_converged: bool,
    /// Relative disagreement between the two methods exceeded `1e-3`.
    pub disagreement: bool,
}

impl DistanceReport {
    fn exact(d: f64) -> Self {
        DistanceReport {
            distance: d,
            shooting: Some(d),
            energy: Some(d),
            shooting_converged: true,
            disagreement: false,
        }
    }
}

/// Seeds the shooting unknowns from a minimised discrete path: top from the highest
/// waypoint, arclengths from cumulative polyline length, direction from the top segment.
fn seed_from_path(alphas: &[f64], path: &EnergyPath) -> Vec<f64> {
    let w = &path.waypoints;
    let mut top = 0;
    for k in 0..w.len() {
        if w[k].1 > w[top].1 {
            top = k;
        }
    }
    let seg = |a: usize, b: usize| -> f64 {
        let tm = 0.5 * (w[a].1 + w[b].1);
        let mut acc = (w[b].1 - w[a].1).powi(2);
        for (i, al) in alphas.iter().enumerate() {
            acc += (-2.0 * al * tm).exp() * (w[b].0[i] - w[a].0[i]).powi(2);
        }
        acc.sqrt()
    };
    let before: f64 = (0..top).map(|k| seg(k, k + 1)).sum();
    let after: f64 = (top..w.len() - 1).map(|k| seg(k, k + 1)).sum();
    let h = w[top].1;
    let (a, b) = if top + 1 < w.len() { (top, top + 1) } else { (top - 1, top) };
    let dir: Vec<f64> = alphas
        .iter()
        .enumerate()
        .map(|(i, al)| ((-al * h).exp() * (w[b].0[i] - w[a].0[i])).abs().max(1e-300))
        .collect();
    let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir: Vec<f64> = dir.iter().map(|v| v / nrm).collect();
    let mut z = vec![h, -before, after.max(1e-9)];
    z.extend(thetas_from(&dir));
    z
}

/// Distance with both methods: top-parameterised shooting and discrete energy
/// minimisation. The reported value is the smaller one; a relative gap above `1e-3`
/// sets `disagreement`. Fails with `NoConvergence` only when neither method yields a value.
pub fn distance(spec: &Spectrum, p: &GroupPoint, q: &GroupPoint) -> Result<DistanceReport> {
    p.check(spec)?;
    q.check(spec)?;
    let red = Reduction::new(spec, &p.x, &q.x)?;
    let dt = (p.t - q.t).abs();
    if red.m() == 0 || red.horizontal_at(p.t.max(q.t)) < VERTICAL_EPS {
        return Ok(DistanceReport::exact(dt));
    }
    let energy = minimize_energy(&red.alphas, &red.lens, p.t, q.t, &EnergyOptions::default());
    let eb = if energy.length.is_finite() { Some(energy.length) } else { None };
    let mut shot = solve_two_point_reduced(&red, p.t, q.t, None);
    if shot.is_none() && eb.is_some() {
        let seed = seed_from_path(&red.alphas, &energy);
        shot = solve_two_point_reduced(&red, p.t, q.t, Some(&seed));
    }
    let sa = shot.map(|(z, _)| z[2] - z[1]);
    let (distance, disagreement) = match (sa, eb) {
        (Some(a), Some(b)) => (a.min(b), (a - b).abs() / a.max(1e-300) > 1e-3),
        (Some(a), None) => (a, false),
        (None, Some(b)) => (b, false),
        (None, None) => {
            return Err(Error::NoConvergence {
                what: "distance".into(),
                best_upper_bound: f64::INFINITY,
            })
        }
    };
    Ok(DistanceReport {
        distance,
        shooting: sa,
        energy: eb,
        shooting_converged: sa.is_some(),
        disagreement,
    })
}

/// Distance by shooting alone, falling back to [`distance`] when shooting stalls.
/// Used inside inner loops where the energy cross-check would dominate the cost.
pub fn geodesic_distance(spec: &Spectrum, p: &GroupPoint, q: &GroupPoint) -> Result<f64> {
    geodesic_distance_warm(spec, p, q, None).map(|(d, _)| d)
}

/// As [`geodesic_distance`], also returning the shooting solution for warm starts.
pub(crate) fn geodesic_distance_warm(
    spec: &Spectrum,
    p: &GroupPoint,
    q: &GroupPoint,
    warm: Option<&[f64]>,
) -> Result<(f64, Option<Vec<f64>>)> {
    p.check(spec)?;
    q.check(spec)?;
    let red = Reduction::new(spec, &p.x, &q.x)?;
    if red.m() == 0 || red.horizontal_at(p.t.max(q.t)) < VERTICAL_EPS {
        return Ok(((p.t - q.t).abs(), None));
    }
    match solve_two_point_reduced(&red, p.t, q.t, warm) {
        Some((z, _)) => Ok((z[2] - z[1], Some(z))),
        None => Ok((distance(spec, p, q)?.distance, None)),
    }
}
