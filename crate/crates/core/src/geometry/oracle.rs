//! Closed forms for a single-block spectrum, where `G_A` is a rescaled real hyperbolic space.
//! Coordinates `X = alpha x`, `y = e^{alpha t}` send it to the upper half-space with
//! distances divided by `alpha`.

use super::GroupPoint;
use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Exact distance for `A = alpha I_n`:
/// `d = (2/alpha) asinh(1/2 sqrt(alpha^2 |dx|^2 e^{-alpha (t_p + t_q)} + 4 sinh^2(alpha dt / 2)))`.
pub fn hyperbolic_oracle_distance(alpha: f64, n: usize, p: &GroupPoint, q: &GroupPoint) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveEigenvalue { index: 0, alpha });
    }
    for v in [&p.x, &q.x] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let dx2 = sq_dist(&p.x, &q.x);
    let sh = (0.5 * alpha * (p.t - q.t)).sinh();
    let arg = alpha * alpha * dx2 * (-alpha * (p.t + q.t)).exp() + 4.0 * sh * sh;
    Ok(2.0 / alpha * (0.5 * arg.sqrt()).asinh())
}

/// Busemann function of the downward ray `s -> (xi, t_base - s)`, normalised to vanish at `s = 0`.
pub fn half_space_busemann(alpha: f64, xi: &[f64], t_base: f64, p: &GroupPoint) -> Result<f64> {
    if xi.len() != p.x.len() {
        return Err(Error::DimensionMismatch { expected: xi.len(), got: p.x.len() });
    }
    let dx2 = sq_dist(xi, &p.x);
    Ok(p.t - t_base + (alpha * alpha * dx2 * (-2.0 * alpha * p.t).exp()).ln_1p() / alpha)
}

/// Unit-speed geodesic launched horizontally from the origin along the first axis:
/// `x(s) = tanh(alpha s) / alpha`, `t(s) = -ln cosh(alpha s) / alpha`.
pub fn half_space_horizontal_geodesic(alpha: f64, s: f64) -> (f64, f64) {
    let u = alpha * s;
    // ln cosh u computed without overflow
    let lc = u.abs() + (-2.0 * u.abs()).exp().ln_1p() - std::f64::consts::LN_2;
    (u.tanh() / alpha, -lc / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let p = GroupPoint::new(vec![0.0], 0.0);
        assert_eq!(hyperbolic_oracle_distance(1.0, 1, &p, &p).unwrap(), 0.0);
        let q = GroupPoint::new(vec![0.0], 2f64.ln());
        assert!((hyperbolic_oracle_distance(1.0, 1, &p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        let q = GroupPoint::new(vec![1.0], 0.0);
        assert!((hyperbolic_oracle_distance(1.0, 1, &p, &q).unwrap() - 1.5f64.acosh()).abs() < 1e-15);
    }

    #[test]
    fn oracle_matches_cosh_formula() {
        let p = GroupPoint::new(vec![0.2, -1.0], 0.3);
        let q = GroupPoint::new(vec![1.1, 0.4], -0.8);
        let dx2 = sq_dist(&p.x, &q.x);
        let (yp, yq) = (p.t.exp(), q.t.exp());
        let want = (1.0 + (dx2 + (yp - yq).powi(2)) / (2.0 * yp * yq)).acosh();
        assert!((hyperbolic_oracle_distance(1.0, 2, &p, &q).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn busemann_on_ray() {
        for s in [0.0, 1.0, 4.5] {
            let p = GroupPoint::new(vec![2.0], 1.0 - s);
            assert!((half_space_busemann(0.7, &[2.0], 1.0, &p).unwrap() + s).abs() < 1e-14);
        }
    }
}
