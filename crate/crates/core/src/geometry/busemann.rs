use serde::{Deserialize, Serialize};

use super::distance::geodesic_distance;
use super::{BoundaryPoint, GroupPoint};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Truncated Busemann value `d(ray(T), p) - T` together with `f(T) - f(T/2)`,
/// which bounds the remaining error since the truncation error decays exponentially in `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusemannEstimate {
    pub value: f64,
    pub increment: f64,
    pub horizon: f64,
}

/// Busemann function of `xi_0` normalised at `base`: exactly `t_base - t_p`.
pub fn busemann_xi0(spec: &Spectrum, base: &GroupPoint, p: &GroupPoint) -> Result<f64> {
    base.check(spec)?;
    p.check(spec)?;
    Ok(base.t - p.t)
}

fn truncated<F>(horizon: f64, mut f: F) -> Result<BusemannEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let full = f(horizon)?;
    let half = f(0.5 * horizon)?;
    Ok(BusemannEstimate { value: full, increment: full - half, horizon })
}

/// `d((x_base, t_base + T), p) - T` along the upward vertical ray through `base`.
pub fn busemann_xi0_numeric(
    spec: &Spectrum,
    base: &GroupPoint,
    p: &GroupPoint,
    horizon: f64,
) -> Result<BusemannEstimate> {
    base.check(spec)?;
    p.check(spec)?;
    truncated(horizon, |t| {
        let far = GroupPoint { x: base.x.clone(), t: base.t + t };
        Ok(geodesic_distance(spec, &far, p)? - t)
    })
}

/// Busemann function of `xi` normalised at `base`, along the downward ray
/// `s -> (xi, t_base - s)`. `xi = Xi0` uses the upward ray through `base`.
pub fn busemann_numeric(
    spec: &Spectrum,
    xi: &BoundaryPoint,
    base: &GroupPoint,
    p: &GroupPoint,
    horizon: f64,
) -> Result<BusemannEstimate> {
    if horizon < 10.0 {
        return Err(Error::InvalidParameter(format!("horizon {horizon} < 10")));
    }
    match xi {
        BoundaryPoint::Xi0 => busemann_xi0_numeric(spec, base, p, horizon),
        BoundaryPoint::Point(x) => {
            spec.check_dim(x)?;
            base.check(spec)?;
            p.check(spec)?;
            truncated(horizon, |t| {
                let far = GroupPoint { x: x.clone(), t: base.t - t };
                Ok(geodesic_distance(spec, &far, p)? - t)
            })
        }
    }
}
