//! Height profile of a geodesic measured from its top.
//!
//! A non-vertical geodesic with top height `h` and horizontal direction weights `b`
//! (`sum b_j^2 = 1`) has `t(s) = h + tau(|s|)` where
//! `tau'' = -sum_j alpha_j b_j^2 e^{2 alpha_j tau}`, `tau(0) = tau'(0) = 0`,
//! and block `j` moves by `b_j e^{alpha_j h} G_j(s)` with `G_j' = e^{2 alpha_j tau}`.

use crate::error::Result;
use crate::ode::{dopri5, OdeOptions};

pub(crate) fn profile_options() -> OdeOptions {
    OdeOptions { rtol: 1e-12, atol: 1e-15, h_init: 1e-2, h_max: 1.0, ..OdeOptions::default() }
}

/// Profile state at a list of nondecreasing nonnegative breakpoints.
#[derive(Debug, Clone)]
pub(crate) struct ProfileEval {
    pub tau: Vec<f64>,
    pub dtau: Vec<f64>,
    /// `inc[k][j]`: integral of `e^{2 alpha_j tau}` from the previous breakpoint (or 0) to breakpoint `k`.
    pub inc: Vec<Vec<f64>>,
}

fn rhs(alphas: &[f64], b2: &[f64], y: &[f64], dy: &mut [f64]) {
    let tau = y[0];
    dy[0] = y[1];
    let mut acc = 0.0;
    for (j, (&a, &w)) in alphas.iter().zip(b2).enumerate() {
        let e = (2.0 * a * tau).exp();
        acc += a * w * e;
        dy[2 + j] = e;
    }
    dy[1] = -acc;
}

pub(crate) fn eval_profile(alphas: &[f64], b: &[f64], breakpoints: &[f64]) -> Result<ProfileEval> {
    let m = alphas.len();
    let b2: Vec<f64> = b.iter().map(|v| v * v).collect();
    let opts = profile_options();
    let mut state = vec![0.0; 2 + m];
    let mut s = 0.0;
    let mut out = ProfileEval {
        tau: Vec::with_capacity(breakpoints.len()),
        dtau: Vec::with_capacity(breakpoints.len()),
        inc: Vec::with_capacity(breakpoints.len()),
    };
    for &bp in breakpoints {
        for v in state.iter_mut().skip(2) {
            *v = 0.0;
        }
        if bp > s {
            state = dopri5(|_, y, dy| rhs(alphas, &b2, y, dy), s, &state, bp, &opts, |_, _| {})?;
            s = bp;
        }
        out.tau.push(state[0]);
        out.dtau.push(state[1]);
        out.inc.push(state[2..].to_vec());
    }
    Ok(out)
}

/// `int_0^inf e^{2 alpha_j tau(s)} ds` for every block, with an analytic tail once
/// the integrands are negligible.
pub(crate) fn half_line_integrals(alphas: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = alphas.len();
    let b2: Vec<f64> = b.iter().map(|v| v * v).collect();
    let opts = profile_options();
    let amin = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let chunk = 8.0 / amin;
    let mut state = vec![0.0; 2 + m];
    let mut s = 0.0;
    while 2.0 * amin * state[0] > -45.0 {
        state = dopri5(|_, y, dy| rhs(alphas, &b2, y, dy), s, &state, s + chunk, &opts, |_, _| {})?;
        s += chunk;
    }
    let slope = state[1].abs().max(1e-300);
    Ok((0..m)
        .map(|j| state[2 + j] + (2.0 * alphas[j] * state[0]).exp() / (2.0 * alphas[j] * slope))
        .collect())
}

/// Signed `G_j(s)` and `tau(|s|)` for a single parameter value.
pub(crate) fn profile_at(alphas: &[f64], b: &[f64], s: f64) -> Result<(f64, Vec<f64>)> {
    let ev = eval_profile(alphas, b, &[s.abs()])?;
    let sign = if s < 0.0 { -1.0 } else { 1.0 };
    Ok((ev.tau[0], ev.inc[0].iter().map(|g| sign * g).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_closed_form() {
        for &a in &[0.5, 1.0, 2.0] {
            let ev = eval_profile(&[a], &[1.0], &[0.5, 1.3, 4.0]).unwrap();
            let mut prev = 0.0;
            for (k, &s) in [0.5f64, 1.3, 4.0].iter().enumerate() {
                let tau = -(a * s).cosh().ln() / a;
                assert!((ev.tau[k] - tau).abs() < 1e-11);
                let g = (a * s).tanh() / a;
                assert!((ev.inc[k][0] - (g - prev)).abs() < 1e-11);
                prev = g;
            }
            let inf = half_line_integrals(&[a], &[1.0]).unwrap();
            assert!((inf[0] - 1.0 / a).abs() < 1e-11);
        }
    }

    #[test]
    fn unit_speed_first_integral() {
        let alphas = [1.0, 2.5];
        let b = [0.6, 0.8];
        let ev = eval_profile(&alphas, &b, &[0.3, 2.0, 7.0]).unwrap();
        for k in 0..3 {
            let t = ev.tau[k];
            let e = ev.dtau[k].powi(2)
                + b[0] * b[0] * (2.0 * alphas[0] * t).exp()
                + b[1] * b[1] * (2.0 * alphas[1] * t).exp();
            assert!((e - 1.0).abs() < 1e-11);
        }
    }
}
