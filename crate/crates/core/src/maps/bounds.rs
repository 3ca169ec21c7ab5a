use serde::{Deserialize, Serialize};

use super::profile::eta_one_at_scales;
use super::{qs_profile, quasisimilarity_fit, AffineBlock, BoundaryMap, CatalogMap, MapSpec, MetricKind, QuasisimilarityFit, SampledMap};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, left_translate, GroupPoint};
use crate::spectrum::Spectrum;
use crate::stats::LogBinProfile;

/// Scales at which quasisymmetry is probed before any bound is computed.
pub const PROBE_SCALES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Growth of `eta_hat(1)` across [`PROBE_SCALES`] beyond which a map is rejected.
pub const SCALE_GROWTH_LIMIT: f64 = 10.0;

/// `eta_hat(1)` at each scale, anchored at `center`.
pub fn scale_divergence(
    map: &dyn BoundaryMap,
    spec: &Spectrum,
    center: &[f64],
    scales: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    spec.check_dim(center)?;
    eta_one_at_scales(map, spec, center, scales, 24, seed)
}

/// Solves `eta(t) = 1` for a nondecreasing `eta` by bracketing and bisection.
pub fn eta_inverse_at_one(eta: &dyn Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    for _ in 0..200 {
        if eta(lo) <= 1.0 {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..200 {
        if eta(hi) >= 1.0 {
            break;
        }
        hi *= 2.0;
    }
    if eta(lo) > 1.0 || eta(hi) < 1.0 {
        return Err(Error::NoConvergence { what: "eta inverse bracket".into(), best_upper_bound: f64::NAN });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eta(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest bin lower edge where the envelope reaches 1; an under-estimate of `eta^{-1}(1)`.
fn empirical_inverse_at_one(profile: &LogBinProfile) -> Option<f64> {
    profile
        .envelope()
        .iter()
        .position(|v| v.is_some_and(|v| v >= 1.0))
        .map(|k| LogBinProfile::edges(k).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainBoundReport {
    pub fit: QuasisimilarityFit,
    pub eta_one: f64,
    pub eta_inverse_one: f64,
    /// `(eta(1) / eta^{-1}(1))^{2r + 2}`.
    pub bound: f64,
    pub analytic: bool,
    /// Only decided when `eta` is analytic.
    pub consistent: Option<bool>,
    pub scale_eta: Vec<(f64, f64)>,
}

/// Probes scale stability at the origin, fits `K_hat` on `sample`, and compares it with the
/// bound built from `analytic_eta` or, failing that, from the empirical profile.
pub fn main_bound_check(
    map: &dyn BoundaryMap,
    spec: &Spectrum,
    analytic_eta: Option<&dyn Fn(f64) -> f64>,
    sample: &[Vec<f64>],
    seed: u64,
) -> Result<MainBoundReport> {
    let scale_eta = scale_divergence(map, spec, &vec![0.0; spec.n()], &PROBE_SCALES, seed)?;
    let vals: Vec<f64> = scale_eta.iter().map(|s| s.1).collect();
    let (first, last) = (vals[0], *vals.last().unwrap());
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() || hi > SCALE_GROWTH_LIMIT * first {
        return Err(Error::NotQuasisymmetric { first, last });
    }
    let sampled = SampledMap::from_map(map, sample.to_vec())?;
    let fit = quasisimilarity_fit(&sampled, spec, MetricKind::D)?;
    let exponent = 2.0 * spec.r() as f64 + 2.0;
    let (eta_one, eta_inverse_one, analytic) = match analytic_eta {
        Some(eta) => (eta(1.0), eta_inverse_at_one(eta)?, true),
        None => {
            let prof = qs_profile(&sampled, spec, MetricKind::D, 20 * sample.len(), seed)?;
            let e1 = prof.eta_at(1.0).ok_or(Error::TooFewPoints { needed: 3, got: sample.len() })?;
            let inv = empirical_inverse_at_one(&prof.profile)
                .ok_or(Error::TooFewPoints { needed: 3, got: sample.len() })?;
            (e1, inv, false)
        }
    };
    let bound = (eta_one / eta_inverse_one).powf(exponent);
    let consistent = analytic.then(|| fit.k_hat <= bound * (1.0 + 1e-12));
    Ok(MainBoundReport { fit, eta_one, eta_inverse_one, bound, analytic, consistent, scale_eta })
}

/// Self-map of `G_A`.
pub trait GroupMap: Send + Sync {
    fn apply(&self, p: &GroupPoint) -> GroupPoint;
}

/// Closed-form self-maps of `G_A` with known boundary traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupMapSpec {
    /// Left multiplication by `(x, s)`.
    LeftTranslation { x: Vec<f64>, s: f64 },
    /// `(x, t) -> (c_i x_i, t)` with one factor per block.
    BlockScale { factors: Vec<f64> },
    /// `(x, t) -> (R_theta x, t + s)` with `R_theta` rotating the first two coordinates.
    ShiftRotation { s: f64, theta: f64 },
}

#[derive(Debug, Clone)]
pub struct CatalogGroupMap {
    spec: Spectrum,
    kind: GroupMapSpec,
}

impl CatalogGroupMap {
    pub fn new(spec: &Spectrum, kind: GroupMapSpec) -> Result<Self> {
        match &kind {
            GroupMapSpec::LeftTranslation { x, .. } => spec.check_dim(x)?,
            GroupMapSpec::BlockScale { factors } => {
                if factors.len() != spec.r() {
                    return Err(Error::DimensionMismatch { expected: spec.r(), got: factors.len() });
                }
                if factors.iter().any(|c| !(*c > 0.0)) {
                    return Err(Error::InvalidParameter("block factors must be positive".into()));
                }
            }
            GroupMapSpec::ShiftRotation { .. } if spec.n() < 2 => {
                return Err(Error::InvalidParameter("rotation needs n >= 2".into()))
            }
            _ => {}
        }
        Ok(CatalogGroupMap { spec: spec.clone(), kind })
    }

    /// Boundary map induced on `R^n` through downward vertical geodesics.
    pub fn trace(&self) -> Result<CatalogMap> {
        let s = &self.spec;
        let diag = |f: &dyn Fn(usize) -> f64, offset: &[f64]| -> Vec<AffineBlock> {
            (0..s.r())
                .map(|i| {
                    let k = s.blocks()[i].dim;
                    let range = s.block_range(i);
                    AffineBlock {
                        matrix: (0..k).map(|a| (0..k).map(|b| if a == b { f(i) } else { 0.0 }).collect()).collect(),
                        offset: offset[range].to_vec(),
                    }
                })
                .collect()
        };
        let kind = match &self.kind {
            GroupMapSpec::LeftTranslation { x, s: shift } => {
                MapSpec::BlockAffine { blocks: diag(&|i| (s.alpha(i) * shift).exp(), x) }
            }
            GroupMapSpec::BlockScale { factors } => {
                MapSpec::BlockAffine { blocks: diag(&|i| factors[i], &vec![0.0; s.n()]) }
            }
            GroupMapSpec::ShiftRotation { theta, .. } => MapSpec::Rotation { theta: *theta },
        };
        CatalogMap::new(s, kind)
    }
}

impl GroupMap for CatalogGroupMap {
    fn apply(&self, p: &GroupPoint) -> GroupPoint {
        match &self.kind {
            GroupMapSpec::LeftTranslation { x, s } => left_translate(&self.spec, &GroupPoint::new(x.clone(), *s), p)
                .unwrap_or_else(|_| p.clone()),
            GroupMapSpec::BlockScale { factors } => {
                let mut x = p.x.clone();
                for (i, c) in factors.iter().enumerate() {
                    for k in self.spec.block_range(i) {
                        x[k] *= c;
                    }
                }
                GroupPoint::new(x, p.t)
            }
            GroupMapSpec::ShiftRotation { s, theta } => {
                let (sn, cs) = theta.sin_cos();
                let mut x = p.x.clone();
                x[0] = cs * p.x[0] - sn * p.x[1];
                x[1] = sn * p.x[0] + cs * p.x[1];
                GroupPoint::new(x, p.t + s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightOptions {
    /// Height at which the interior map is compared with the boundary map.
    pub deep_t: f64,
    /// Largest tolerated `D`-distance between the two at `deep_t`.
    pub trace_tol: f64,
    /// Height defect counted as bounded.
    pub height_bound: f64,
    /// `K_hat` counted as bilipschitz.
    pub k_bound: f64,
}

impl Default for HeightOptions {
    fn default() -> Self {
        HeightOptions { deep_t: -30.0, trace_tol: 1e-6, height_bound: 10.0, k_bound: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub trace_error: f64,
    /// `sup |h(f(p)) - h(p)|`.
    pub height_defect: f64,
    /// `sup - inf` of `h(f(p)) - h(p)`, the defect relative to the best constant shift.
    pub height_shift_spread: f64,
    pub boundary: QuasisimilarityFit,
    /// `sup |d(fp, fq) - d(p, q)|` over all pairs of `points`.
    pub almost_isometry_defect: f64,
    pub height_respecting: bool,
    pub boundary_bilipschitz: bool,
}

pub fn height_respecting_check(
    qi: &dyn GroupMap,
    boundary: &SampledMap,
    spec: &Spectrum,
    points: &[GroupPoint],
    opts: &HeightOptions,
) -> Result<HeightReport> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    let mut trace_error = 0.0f64;
    for (x, fx) in boundary.domain.iter().zip(&boundary.image) {
        let deep = qi.apply(&GroupPoint::new(x.clone(), opts.deep_t));
        trace_error = trace_error.max(spec.dist_d(&deep.x, fx)?);
    }
    if trace_error > opts.trace_tol {
        return Err(Error::InconsistentPair(trace_error));
    }
    let images: Vec<GroupPoint> = points.iter().map(|p| qi.apply(p)).collect();
    let shifts: Vec<f64> = points.iter().zip(&images).map(|(p, f)| f.t - p.t).collect();
    let height_defect = shifts.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let smax = shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let smin = shifts.iter().cloned().fold(f64::INFINITY, f64::min);
    let fit = quasisimilarity_fit(boundary, spec, MetricKind::D)?;
    let pairs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let defects: Result<Vec<f64>> = {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let d0 = geodesic_distance(spec, &points[i], &points[j])?;
                let d1 = geodesic_distance(spec, &images[i], &images[j])?;
                Ok((d1 - d0).abs())
            })
            .collect()
    };
    let almost_isometry_defect = defects?.into_iter().fold(0.0, f64::max);
    Ok(HeightReport {
        trace_error,
        height_defect,
        height_shift_spread: smax - smin,
        boundary_bilipschitz: fit.k_hat <= opts.k_bound,
        boundary: fit,
        almost_isometry_defect,
        height_respecting: height_defect <= opts.height_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{rng, uniform_points};

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    #[test]
    fn eta_inverse() {
        assert!((eta_inverse_at_one(&|t| 4.0 * t).unwrap() - 0.25).abs() < 1e-14);
        assert!((eta_inverse_at_one(&|t| t * t * t).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shear_bound_and_rotation_rejection() {
        let s = s2();
        let pts = uniform_points(&mut rng(5), 40, 2, -1.0, 1.0);
        let shear = CatalogMap::new(&s, MapSpec::Shear { l: 1.0, exponent: 0.5 }).unwrap();
        let eta = |t: f64| 4.0 * t;
        let rep = main_bound_check(&shear, &s, Some(&eta), &pts, 1).unwrap();
        assert!((rep.bound / 16f64.powi(6) - 1.0).abs() < 1e-12);
        assert!(rep.fit.k_hat <= 4.0 && rep.consistent == Some(true));
        let rot = CatalogMap::new(&s, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 }).unwrap();
        assert!(matches!(main_bound_check(&rot, &s, None, &pts, 1), Err(Error::NotQuasisymmetric { .. })));
    }

    #[test]
    fn translation_trace_is_consistent() {
        let s = s2();
        let f = CatalogGroupMap::new(&s, GroupMapSpec::LeftTranslation { x: vec![0.5, -0.25], s: 0.7 }).unwrap();
        let tr = f.trace().unwrap();
        let x = vec![0.3, 1.1];
        let deep = f.apply(&GroupPoint::new(x.clone(), -30.0));
        let b = tr.apply(&x);
        assert!((deep.x[0] - b[0]).abs() < 1e-15 && (deep.x[1] - b[1]).abs() < 1e-15);
        assert!((deep.t + 29.3).abs() < 1e-12);
    }
}
