use serde::{Deserialize, Serialize};

use super::{chain_metrize, SampledSpace, SpaceKind};
use crate::error::{Error, Result};
use crate::stats::LogBinProfile;

/// Label of the point added by [`sphericalize`].
pub const INFINITY_LABEL: &str = "inf";

/// Ratio `metric / quasimetric` over all pairs; the transforms guarantee `[1/4, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

impl SandwichReport {
    pub(crate) fn measure(quasi: &SampledSpace, metric: &SampledSpace, lower_bound: f64) -> Self {
        let n = quasi.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..i {
                let q = quasi.d(i, j);
                if q > 0.0 {
                    let r = metric.d(i, j) / q;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
        }
        let tol = 1e-12;
        SandwichReport {
            min_ratio: lo,
            max_ratio: hi,
            lower_bound,
            holds: lo >= lower_bound * (1.0 - tol) && hi <= 1.0 + tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResult {
    pub quasi: SampledSpace,
    pub metric: SampledSpace,
    pub sandwich: SandwichReport,
}

/// Metric inversion at `p`: `rho_p(x, y) = d(x, y) / (d(x, p) d(y, p))` on the sample
/// minus `p`, followed by chain metrization.
pub fn invert_metric(space: &SampledSpace, p: &str) -> Result<TransformResult> {
    if space.kind() != SpaceKind::Metric {
        return Err(Error::InvalidParameter("inversion needs a metric sample".into()));
    }
    let ip = space.index_of(p)?;
    let keep: Vec<usize> = (0..space.len()).filter(|&i| i != ip).collect();
    for &i in &keep {
        if space.d(i, ip) == 0.0 {
            return Err(Error::BasepointDegenerate(space.labels()[i].clone()));
        }
    }
    let labels = keep.iter().map(|&i| space.labels()[i].clone()).collect();
    let coords = keep.iter().map(|&i| space.coords()[i].clone()).collect();
    let quasi = SampledSpace::from_fn(labels, coords, SpaceKind::Quasimetric, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        Ok(space.d(i, j) / (space.d(i, ip) * space.d(j, ip)))
    })?;
    let metric = chain_metrize(&quasi);
    let sandwich = SandwichReport::measure(&quasi, &metric, 0.25);
    Ok(TransformResult { quasi, metric, sandwich })
}

/// Sphericalization at `p`: `s_p(x, y) = d(x, y) / ((1 + d(x, p)) (1 + d(y, p)))` and
/// `s_p(x, inf) = 1 / (1 + d(x, p))` on the sample plus [`INFINITY_LABEL`], then chain metrization.
pub fn sphericalize(space: &SampledSpace, p: &str) -> Result<TransformResult> {
    let ip = space.index_of(p)?;
    if space.labels().iter().any(|l| l == INFINITY_LABEL) {
        return Err(Error::InvalidParameter(format!("label {INFINITY_LABEL} is reserved")));
    }
    let n = space.len();
    let mut labels = space.labels().to_vec();
    labels.push(INFINITY_LABEL.into());
    let mut coords = space.coords().to_vec();
    coords.push(Vec::new());
    let quasi = SampledSpace::from_fn(labels, coords, SpaceKind::Quasimetric, |i, j| {
        let w = |k: usize| 1.0 + space.d(k, ip);
        Ok(if i == n {
            1.0 / w(j)
        } else if j == n {
            1.0 / w(i)
        } else {
            space.d(i, j) / (w(i) * w(j))
        })
    })?;
    let metric = chain_metrize(&quasi);
    let sandwich = SandwichReport::measure(&quasi, &metric, 0.25);
    Ok(TransformResult { quasi, metric, sandwich })
}

/// Measured cross-ratio distortion of the label-preserving map `src -> dst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRatioProfile {
    pub profile: LogBinProfile,
    /// `(input, output)` cross-ratio per evaluated quadruple.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl CrossRatioProfile {
    /// `max output / eta(input)` over evaluated quadruples.
    pub fn worst_against<F: Fn(f64) -> f64>(&self, eta: F) -> f64 {
        self.samples.iter().map(|&(t, o)| o / eta(t)).fold(0.0, f64::max)
    }
}

/// Cross-ratio `d13 d24 / (d14 d23)`; `None` when a pair repeats or a denominator vanishes.
fn crossratio(s: &SampledSpace, q: [usize; 4]) -> Option<f64> {
    let [a, b, c, d] = q;
    let den = s.d(a, d) * s.d(b, c);
    let num = s.d(a, c) * s.d(b, d);
    if den > 0.0 && num > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Compares cross-ratios of `src` and `dst` on the given index quadruples (indices of `src`;
/// points are matched by label).
pub fn crossratio_distortion(
    src: &SampledSpace,
    dst: &SampledSpace,
    quadruples: &[[usize; 4]],
) -> Result<CrossRatioProfile> {
    let map: Vec<Option<usize>> = src.labels().iter().map(|l| dst.index_of(l).ok()).collect();
    let mut out = CrossRatioProfile {
        profile: LogBinProfile::default(),
        samples: Vec::with_capacity(quadruples.len()),
        evaluated: 0,
        skipped: 0,
    };
    for &q in quadruples {
        let distinct = q.iter().enumerate().all(|(k, a)| !q[..k].contains(a));
        let image = q.iter().map(|&i| map.get(i).copied().flatten()).collect::<Option<Vec<usize>>>();
        let pair = match (distinct, image) {
            (true, Some(im)) => crossratio(src, q).zip(crossratio(dst, [im[0], im[1], im[2], im[3]])),
            _ => None,
        };
        match pair {
            Some((t, o)) => {
                out.profile.record(t, o);
                out.samples.push((t, o));
                out.evaluated += 1;
            }
            None => out.skipped += 1,
        }
    }
    if out.evaluated == 0 {
        return Err(Error::TooFewPoints { needed: 4, got: src.len() });
    }
    Ok(out)
}
