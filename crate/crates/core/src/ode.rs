//! Adaptive Dormand–Prince 5(4) integrator for small first-order systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-2,
            h_max: 0.5,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(s, y)` from `s0` to `s1` (either direction). `observer` sees
/// the initial state and every accepted step. Returns the state at `s1`.
pub fn dopri5<F, O>(
    mut f: F,
    s0: f64,
    y0: &[f64],
    s1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut s = s0;
    observer(s, &y);
    if s1 == s0 {
        return Ok(y);
    }
    let dir = (s1 - s0).signum();
    let span = (s1 - s0).abs();
    let mut h = opts.h_init.min(span).min(opts.h_max);
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    f(s, &y, &mut k[0]);
    let mut steps = 0;
    while (s1 - s) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepSizeUnderflow { at: s });
        }
        let remaining = (s1 - s).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        for stage in 1..7 {
            for j in 0..dim {
                let mut acc = y[j];
                for (l, kl) in k.iter().enumerate().take(stage) {
                    acc += hs * A[stage][l] * kl[j];
                }
                tmp[j] = acc;
            }
            f(s + C[stage] * hs, &tmp, &mut k[stage]);
        }
        // 7th stage was evaluated at the 5th-order solution (FSAL)
        ynew.copy_from_slice(&tmp);
        let mut err = 0.0;
        for j in 0..dim {
            let mut e = 0.0;
            for (l, kl) in k.iter().enumerate() {
                e += E[l] * kl[j];
            }
            e *= hs;
            let sc = opts.atol + opts.rtol * y[j].abs().max(ynew[j].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / dim.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { at: s });
            }
            continue;
        }
        if err <= 1.0 {
            s = if last { s1 } else { s + hs };
            std::mem::swap(&mut y, &mut ynew);
            let k7 = k[6].clone();
            k[0].copy_from_slice(&k7);
            observer(s, &y);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { at: s });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let opts = OdeOptions::default();
        let y = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &opts,
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backward_exponential() {
        let opts = OdeOptions::default();
        let mut seen = 0;
        let y = dopri5(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], -3.0, &opts, |_, _| seen += 1).unwrap();
        assert!((y[0] - (-3f64).exp()).abs() < 1e-12);
        assert!(seen > 2);
    }
}
