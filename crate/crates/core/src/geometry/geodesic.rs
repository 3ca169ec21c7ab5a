//! Initial-value integration of the geodesic equations.
//!
//! With momenta `P_i = e^{-2 alpha_i t} x_i'` conserved, the system reduces to
//! `x_i' = P_i e^{2 alpha_i t}`, `t'' = -sum_i alpha_i e^{2 alpha_i t} |P_i|^2`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{tangent_norm, GroupPoint};
use crate::error::{Error, Result};
use crate::ode::{dopri5, OdeOptions};
use crate::spectrum::Spectrum;

/// Sampled geodesic. With `arclength` set, `params` are arclengths from the first sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<GroupPoint>,
    pub params: Vec<f64>,
    pub arclength: bool,
    pub length: f64,
}

impl GeodesicPath {
    /// Riemannian length of the polyline through the samples (Gauss–Legendre per segment).
    pub fn polyline_length(&self, spec: &Spectrum) -> f64 {
        let alphas = spec.coordinate_alphas();
        let nodes = gauss5();
        self.samples
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                let dt = b.t - a.t;
                nodes
                    .iter()
                    .map(|&(u, wgt)| {
                        let t = a.t + u * dt;
                        let mut acc = dt * dt;
                        for (k, al) in alphas.iter().enumerate() {
                            let dx = b.x[k] - a.x[k];
                            acc += (-2.0 * al * t).exp() * dx * dx;
                        }
                        wgt * acc.sqrt()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// CSV rows `s,x1,...,xn,t` with a header line.
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |p| p.x.len());
        let mut out = String::from("s");
        for k in 1..=n {
            let _ = write!(out, ",x{k}");
        }
        out.push_str(",t\n");
        for (s, p) in self.params.iter().zip(&self.samples) {
            let _ = write!(out, "{s:.17e}");
            for v in &p.x {
                let _ = write!(out, ",{v:.17e}");
            }
            let _ = writeln!(out, ",{:.17e}", p.t);
        }
        out
    }
}

/// Five-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss5() -> [(f64, f64); 5] {
    let x = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    let w = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];
    [
        (0.5 - 0.5 * x[2], 0.5 * w[2]),
        (0.5 - 0.5 * x[1], 0.5 * w[1]),
        (0.5, 0.5 * w[0]),
        (0.5 + 0.5 * x[1], 0.5 * w[1]),
        (0.5 + 0.5 * x[2], 0.5 * w[2]),
    ]
}

/// Integrates the geodesic from `p` with initial velocity `(vx, vt)` over `[0, T]`
/// (`T < 0` runs backwards). The velocity must have unit norm at `p` to within `1e-9`.
pub fn integrate_geodesic(
    spec: &Spectrum,
    p: &GroupPoint,
    vx: &[f64],
    vt: f64,
    big_t: f64,
    samples: usize,
) -> Result<GeodesicPath> {
    Ok(integrate_states(spec, p, vx, vt, big_t, samples)?.0)
}

/// Largest deviation from unit speed over the samples of [`integrate_geodesic`].
pub fn speed_drift(
    spec: &Spectrum,
    p: &GroupPoint,
    vx: &[f64],
    vt: f64,
    big_t: f64,
    samples: usize,
) -> Result<f64> {
    let (_, speeds) = integrate_states(spec, p, vx, vt, big_t, samples)?;
    Ok(speeds.iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs())))
}

fn integrate_states(
    spec: &Spectrum,
    p: &GroupPoint,
    vx: &[f64],
    vt: f64,
    big_t: f64,
    samples: usize,
) -> Result<(GeodesicPath, Vec<f64>)> {
    let speed = tangent_norm(spec, p, vx, vt)?;
    if (speed - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidVelocity(speed));
    }
    let n = spec.n();
    let alphas = spec.coordinate_alphas();
    let mom: Vec<f64> = vx.iter().zip(&alphas).map(|(v, a)| v * (-2.0 * a * p.t).exp()).collect();
    // state: x (n), t, t'
    let mut state: Vec<f64> = p.x.clone();
    state.push(p.t);
    state.push(vt);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let t = y[n];
        let mut acc = 0.0;
        for k in 0..n {
            let e = (2.0 * alphas[k] * t).exp();
            dy[k] = mom[k] * e;
            acc += alphas[k] * e * mom[k] * mom[k];
        }
        dy[n] = y[n + 1];
        dy[n + 1] = -acc;
    };
    let speed_of = |y: &[f64]| {
        let mut acc = y[n + 1] * y[n + 1];
        for k in 0..n {
            acc += (2.0 * alphas[k] * y[n]).exp() * mom[k] * mom[k];
        }
        acc.sqrt()
    };
    let opts = OdeOptions { h_max: 0.25, ..OdeOptions::default() };
    let count = samples.max(1);
    let mut out = GeodesicPath {
        samples: vec![p.clone()],
        params: vec![0.0],
        arclength: true,
        length: big_t.abs(),
    };
    let mut speeds = vec![speed_of(&state)];
    let mut s = 0.0;
    for k in 1..=count {
        let next = big_t * k as f64 / count as f64;
        state = dopri5(rhs, s, &state, next, &opts, |_, _| {})?;
        s = next;
        out.samples.push(GroupPoint { x: state[..n].to_vec(), t: state[n] });
        out.params.push(s);
        speeds.push(speed_of(&state));
    }
    Ok((out, speeds))
}
