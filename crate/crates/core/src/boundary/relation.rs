use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{chain_metrize, invert_metric, parabolic_table, visual_table, SampledSpace, VisualParams, XI0_LABEL};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, GroupPoint};
use crate::sampling::distinct3;
use crate::spectrum::Spectrum;
use crate::stats::RatioReport;

/// Ratios `a(i, j) / b(i, j)` over pairs of labels present in both samples.
pub fn bilipschitz_band(a: &SampledSpace, b: &SampledSpace) -> Result<RatioReport> {
    let map: Vec<Option<usize>> = a.labels().iter().map(|l| b.index_of(l).ok()).collect();
    let mut ratios = Vec::new();
    for i in 0..a.len() {
        for j in 0..i {
            if let (Some(bi), Some(bj)) = (map[i], map[j]) {
                let den = b.d(bi, bj);
                if den > 0.0 {
                    ratios.push(a.d(i, j) / den);
                }
            }
        }
    }
    RatioReport::from_values(&ratios).ok_or(Error::TooFewPoints { needed: 2, got: ratios.len() })
}

/// Ratio band of the chain-metrized parabolic metric at `xi_0` against the inversion,
/// about a finite stand-in for `xi_0`, of the chain-metrized visual metric.
pub fn compare_parabolic_vs_inversion(
    spec: &Spectrum,
    base: &GroupPoint,
    epsilon: f64,
    sample: &[Vec<f64>],
) -> Result<RatioReport> {
    let params = VisualParams { xi: BoundaryPoint::Xi0, base: base.clone(), epsilon };
    let parabolic = chain_metrize(&parabolic_table(spec, &params, sample)?);
    let visual = chain_metrize(&visual_table(spec, base, epsilon, sample, true)?);
    let inverted = invert_metric(&visual, XI0_LABEL)?;
    bilipschitz_band(&parabolic, &inverted.metric)
}

/// Ratio band of the parabolic quasimetric with `epsilon = alpha_1` against `D`.
pub fn compare_parabolic_vs_d(spec: &Spectrum, base: &GroupPoint, sample: &[Vec<f64>]) -> Result<RatioReport> {
    let params = VisualParams { xi: BoundaryPoint::Xi0, base: base.clone(), epsilon: spec.alpha_min() };
    let parabolic = parabolic_table(spec, &params, sample)?;
    let d = SampledSpace::from_fn(
        parabolic.labels().to_vec(),
        sample.to_vec(),
        super::SpaceKind::Metric,
        |i, j| spec.dist_d(&sample[i], &sample[j]),
    )?;
    bilipschitz_band(&parabolic, &d)
}

/// Band of `d_{base2} / d_{base1}` for chain-metrized parabolic metrics at two base points.
pub fn parameter_base_change(
    spec: &Spectrum,
    base1: &GroupPoint,
    base2: &GroupPoint,
    epsilon: f64,
    sample: &[Vec<f64>],
) -> Result<RatioReport> {
    let p1 = VisualParams { xi: BoundaryPoint::Xi0, base: base1.clone(), epsilon };
    let p2 = VisualParams { xi: BoundaryPoint::Xi0, base: base2.clone(), epsilon };
    let d1 = chain_metrize(&parabolic_table(spec, &p1, sample)?);
    let d2 = chain_metrize(&parabolic_table(spec, &p2, sample)?);
    bilipschitz_band(&d2, &d1)
}

/// Worst ratio of the measured distortion of `id: (X, d_{eps1}) -> (X, d_{eps2})` to the
/// bound `2^{1 + e} t^e`, `e = eps2 / eps1`, over sampled triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChangeReport {
    pub exponent: f64,
    pub worst: f64,
    pub triples: usize,
}

pub fn parameter_epsilon_change<R: Rng>(
    spec: &Spectrum,
    base: &GroupPoint,
    eps1: f64,
    eps2: f64,
    sample: &[Vec<f64>],
    triples: usize,
    rng: &mut R,
) -> Result<EpsilonChangeReport> {
    if sample.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: sample.len() });
    }
    let p1 = VisualParams { xi: BoundaryPoint::Xi0, base: base.clone(), epsilon: eps1 };
    let q1 = parabolic_table(spec, &p1, sample)?;
    let d1 = chain_metrize(&q1);
    let e = eps2 / eps1;
    // D_{eps2} = D_{eps1}^{eps2/eps1}
    let q2 = SampledSpace::from_fn(q1.labels().to_vec(), sample.to_vec(), super::SpaceKind::Quasimetric, |i, j| {
        Ok(q1.d(i, j).powf(e))
    })?;
    let d2 = chain_metrize(&q2);
    let bound = |t: f64| 2f64.powf(1.0 + e) * t.powf(e);
    let mut worst = 0.0f64;
    for _ in 0..triples {
        let [x, y, z] = distinct3(rng, sample.len());
        let t = d1.d(x, y) / d1.d(x, z);
        let out = d2.d(x, y) / d2.d(x, z);
        worst = worst.max(out / bound(t));
    }
    Ok(EpsilonChangeReport { exponent: e, worst, triples })
}

/// Density `(1 + d)^{-2Q}` of the sphericalized measure.
pub fn sphericalized_measure_weight(q: f64, d_to_p: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("Q must exceed 1, got {q}")));
    }
    if !(d_to_p >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be nonnegative, got {d_to_p}")));
    }
    Ok((1.0 + d_to_p).powf(-2.0 * q))
}
