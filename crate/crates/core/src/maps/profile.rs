use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BoundaryMap, MetricKind, SampledMap};
use crate::error::{Error, Result};
use crate::sampling::{distinct3, rng};
use crate::spectrum::Spectrum;
use crate::stats::LogBinProfile;

/// Ratio distortion of a sampled map over random triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    pub profile: LogBinProfile,
    /// Largest `d(Fx, Fy) / d(x, y)` over pairs met in the triples.
    pub k_plus: f64,
    pub k_minus: f64,
    pub triples: usize,
    pub skipped: usize,
    /// `(t, output ratio)` per evaluated triple.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

impl DistortionProfile {
    fn empty() -> Self {
        DistortionProfile {
            profile: LogBinProfile::default(),
            k_plus: 0.0,
            k_minus: f64::INFINITY,
            triples: 0,
            skipped: 0,
            samples: Vec::new(),
        }
    }

    fn pair(&mut self, din: f64, dout: f64) {
        let r = dout / din;
        self.k_plus = self.k_plus.max(r);
        self.k_minus = self.k_minus.min(r);
    }

    /// Records the triple `(x, y, z)`; returns `false` when a distance degenerates.
    fn triple(&mut self, map: &SampledMap, spec: &Spectrum, metric: MetricKind, [x, y, z]: [usize; 3]) -> Result<bool> {
        let dxy = metric.dist(spec, &map.domain[x], &map.domain[y])?;
        let dxz = metric.dist(spec, &map.domain[x], &map.domain[z])?;
        let fxy = metric.dist(spec, &map.image[x], &map.image[y])?;
        let fxz = metric.dist(spec, &map.image[x], &map.image[z])?;
        if dxy <= 0.0 || dxz <= 0.0 || fxz <= 0.0 {
            self.skipped += 1;
            return Ok(false);
        }
        let (t, out) = (dxy / dxz, fxy / fxz);
        self.profile.record(t, out);
        self.samples.push((t, out));
        self.pair(dxy, fxy);
        self.pair(dxz, fxz);
        self.triples += 1;
        Ok(true)
    }

    /// `eta_hat` at the bin containing `t`.
    pub fn eta_at(&self, t: f64) -> Option<f64> {
        self.profile.eta_at(t)
    }

    pub fn merge(&mut self, other: &DistortionProfile) {
        self.profile.merge(&other.profile);
        self.k_plus = self.k_plus.max(other.k_plus);
        self.k_minus = self.k_minus.min(other.k_minus);
        self.triples += other.triples;
        self.skipped += other.skipped;
        self.samples.extend_from_slice(&other.samples);
    }
}

pub fn qs_profile(
    map: &SampledMap,
    spec: &Spectrum,
    metric: MetricKind,
    triples: usize,
    seed: u64,
) -> Result<DistortionProfile> {
    if map.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: map.len() });
    }
    let mut r = rng(seed);
    let mut out = DistortionProfile::empty();
    for _ in 0..triples {
        out.triple(map, spec, metric, distinct3(&mut r, map.len()))?;
    }
    Ok(out)
}

/// Profile over every triple anchored at domain index `anchor`.
pub(crate) fn anchored_profile(
    map: &SampledMap,
    spec: &Spectrum,
    metric: MetricKind,
    anchor: usize,
) -> Result<DistortionProfile> {
    let mut out = DistortionProfile::empty();
    for y in 0..map.len() {
        for z in 0..map.len() {
            if y != z && y != anchor && z != anchor {
                out.triple(map, spec, metric, [anchor, y, z])?;
            }
        }
    }
    Ok(out)
}

/// Domain sample at `D`-scale `scale` around `center`: the center, the dilated signed
/// coordinate axes, then `random` dilated points of the unit cube. The center comes first.
pub fn scale_sample<R: Rng>(spec: &Spectrum, center: &[f64], scale: f64, random: usize, r: &mut R) -> Vec<Vec<f64>> {
    let n = spec.n();
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(2 * n + random);
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[k] = sign;
            unit.push(e);
        }
    }
    unit.extend((0..random).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()));
    let mut out = vec![center.to_vec()];
    out.extend(unit.iter().map(|u| spec.dilate(scale, u).iter().zip(center).map(|(a, c)| a + c).collect()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasisimilarityFit {
    pub k_hat: f64,
    pub c_hat: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub pairs: usize,
}

/// `C_hat` is the geometric mean of pair ratios and `K_hat = max(K+/C_hat, C_hat/K-)`.
pub fn quasisimilarity_fit(map: &SampledMap, spec: &Spectrum, metric: MetricKind) -> Result<QuasisimilarityFit> {
    let (mut lo, mut hi, mut log_sum, mut count) = (f64::INFINITY, 0.0f64, 0.0, 0usize);
    for i in 0..map.len() {
        for j in 0..i {
            let din = metric.dist(spec, &map.domain[i], &map.domain[j])?;
            if din <= 0.0 {
                continue;
            }
            let r = metric.dist(spec, &map.image[i], &map.image[j])? / din;
            lo = lo.min(r);
            hi = hi.max(r);
            log_sum += r.ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::TooFewPoints { needed: 2, got: map.len() });
    }
    let c = (log_sum / count as f64).exp();
    Ok(QuasisimilarityFit { k_hat: (hi / c).max(c / lo), c_hat: c, k_plus: hi, k_minus: lo, pairs: count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseDistortion {
    pub radii: Vec<f64>,
    /// `L(x, r)`: largest image distance over sample points within `r` of `x`.
    pub upper: Vec<f64>,
    /// `l(x, r)`: smallest image distance over sample points at least `r` from `x`.
    pub lower: Vec<Option<f64>>,
    /// Limit estimates of `L(x, r)/r` and `l(x, r)/r` from the three smallest radii.
    pub upper_limit: f64,
    pub lower_limit: Option<f64>,
    /// Fitted power-law exponent of `L(x, r)` over the same radii.
    pub upper_exponent: f64,
    pub neighbors: usize,
}

const MIN_NEIGHBORS: usize = 20;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn pointwise_distortion(
    map: &SampledMap,
    spec: &Spectrum,
    metric: MetricKind,
    x: &[f64],
    radii: &[f64],
) -> Result<PointwiseDistortion> {
    if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("need at least three positive radii".into()));
    }
    let ix = map
        .domain
        .iter()
        .position(|p| p == x)
        .ok_or_else(|| Error::InvalidParameter(format!("{x:?} is not a domain point")))?;
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let rmax = *radii.last().unwrap();
    let mut dists = Vec::with_capacity(map.len());
    for k in (0..map.len()).filter(|&k| k != ix) {
        let din = metric.dist(spec, x, &map.domain[k])?;
        let dout = metric.dist(spec, &map.image[ix], &map.image[k])?;
        dists.push((din, dout));
    }
    let neighbors = dists.iter().filter(|d| d.0 <= rmax).count();
    if neighbors < MIN_NEIGHBORS {
        return Err(Error::SparseNeighborhood { needed: MIN_NEIGHBORS, got: neighbors });
    }
    let upper: Vec<f64> =
        radii.iter().map(|&r| dists.iter().filter(|d| d.0 <= r).map(|d| d.1).fold(0.0, f64::max)).collect();
    let lower: Vec<Option<f64>> = radii
        .iter()
        .map(|&r| dists.iter().filter(|d| d.0 >= r).map(|d| d.1).min_by(f64::total_cmp))
        .collect();
    let lr: Vec<f64> = radii[..3].iter().map(|r| r.ln()).collect();
    let lu: Vec<f64> = upper[..3].iter().map(|u| u.ln()).collect();
    let gmean = |v: Vec<f64>| (v.iter().map(|a| a.ln()).sum::<f64>() / v.len() as f64).exp();
    let upper_limit = gmean((0..3).map(|k| upper[k] / radii[k]).collect());
    let lower_limit = (0..3)
        .map(|k| lower[k].map(|l| l / radii[k]))
        .collect::<Option<Vec<f64>>>()
        .map(gmean);
    Ok(PointwiseDistortion {
        upper_exponent: slope(&lr, &lu),
        radii,
        upper,
        lower,
        upper_limit,
        lower_limit,
        neighbors,
    })
}

/// Profile of `map` at each scale around `center`, anchored at the center.
pub(crate) fn eta_one_at_scales(
    map: &dyn BoundaryMap,
    spec: &Spectrum,
    center: &[f64],
    scales: &[f64],
    random: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(scales.len());
    for &s in scales {
        let sample = SampledMap::from_map(map, scale_sample(spec, center, s, random, &mut r))?;
        let prof = anchored_profile(&sample, spec, MetricKind::D, 0)?;
        out.push((s, prof.eta_at(1.0).unwrap_or(f64::NAN)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CatalogMap, MapSpec};
    use crate::sampling::uniform_points;

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    #[test]
    fn similarity_profile_is_identity_profile() {
        let s = s2();
        let pts = uniform_points(&mut rng(3), 60, 2, -1.0, 1.0);
        let sim = CatalogMap::new(&s, MapSpec::Similarity { lambda: 3.0 }).unwrap();
        let m = SampledMap::from_map(&sim, pts).unwrap();
        let p = qs_profile(&m, &s, MetricKind::D, 2000, 1).unwrap();
        for (t, o) in &p.samples {
            assert!((o - t).abs() <= 1e-12 * t.max(1.0));
        }
        let fit = quasisimilarity_fit(&m, &s, MetricKind::D).unwrap();
        assert!((fit.c_hat - 3.0).abs() < 1e-12 && (fit.k_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_witness_grows_with_scale() {
        let s = s2();
        let rot = CatalogMap::new(&s, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 }).unwrap();
        let eta = eta_one_at_scales(&rot, &s, &[0.0, 0.0], &[1e-1, 1e-2], 0, 0).unwrap();
        for (sc, e) in eta {
            assert!(e >= 0.99 * sc.powf(-1.5), "scale {sc}: {e}");
        }
    }

    #[test]
    fn sparse_neighborhood() {
        let s = s2();
        let m = SampledMap::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let e = pointwise_distortion(&m, &s, MetricKind::D, &[0.0, 0.0], &[0.1, 0.2, 0.4]);
        assert!(matches!(e, Err(Error::SparseNeighborhood { .. })));
    }
}
