use serde::{Deserialize, Serialize};

use super::{BoundaryMap, SampledMap};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Absolute `D_Y` spread below which an image leaf counts as a single leaf.
pub const LEAF_SPREAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FoliationVerdict {
    Preserves,
    Breaks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationReport {
    pub leaves: usize,
    /// Largest pairwise `D_Y` distance among image `Y`-parts, per domain leaf.
    pub per_leaf: Vec<f64>,
    pub max_spread: f64,
    pub verdict: FoliationVerdict,
}

/// Evaluates `map` on the grid `x1_points x leaves`.
pub fn leaf_grid_sample(
    map: &dyn BoundaryMap,
    spec: &Spectrum,
    leaves: &[Vec<f64>],
    x1_points: &[Vec<f64>],
) -> Result<SampledMap> {
    let mut domain = Vec::with_capacity(leaves.len() * x1_points.len());
    for y in leaves {
        for x1 in x1_points {
            let p = spec.join_leaf(x1, y);
            spec.check_dim(&p)?;
            domain.push(p);
        }
    }
    SampledMap::from_map(map, domain)
}

/// Groups domain indices by their exact `Y`-part, in order of first appearance.
fn group_leaves(map: &SampledMap, spec: &Spectrum) -> Vec<(Vec<f64>, Vec<usize>)> {
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (k, p) in map.domain.iter().enumerate() {
        let y = spec.split_leaf(p).1;
        match groups.iter_mut().find(|g| g.0 == y) {
            Some(g) => g.1.push(k),
            None => groups.push((y.to_vec(), vec![k])),
        }
    }
    groups
}

pub fn foliation_check(map: &SampledMap, spec: &Spectrum) -> Result<FoliationReport> {
    if spec.r() < 2 {
        return Err(Error::SingleBlockSpectrum);
    }
    for p in map.domain.iter().chain(&map.image) {
        spec.check_dim(p)?;
    }
    let groups = group_leaves(map, spec);
    let mut per_leaf = Vec::with_capacity(groups.len());
    for (_, idx) in &groups {
        let mut spread = 0.0f64;
        for a in 0..idx.len() {
            for b in 0..a {
                let ya = spec.split_leaf(&map.image[idx[a]]).1;
                let yb = spec.split_leaf(&map.image[idx[b]]).1;
                spread = spread.max(spec.dist_dy(ya, yb)?);
            }
        }
        per_leaf.push(spread);
    }
    let max_spread = per_leaf.iter().cloned().fold(0.0, f64::max);
    let verdict = if max_spread <= LEAF_SPREAD_TOL { FoliationVerdict::Preserves } else { FoliationVerdict::Breaks };
    Ok(FoliationReport { leaves: groups.len(), per_leaf, max_spread, verdict })
}

/// Restriction of `F` to one leaf: `x1 -> H_y(x1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafMap {
    pub y: Vec<f64>,
    pub image_y: Vec<f64>,
    pub points: Vec<(Vec<f64>, Vec<f64>)>,
}

/// `F = (H, G)`: `g` holds `(y, G(y))`, `h` one [`LeafMap`] per sampled leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub g: Vec<(Vec<f64>, Vec<f64>)>,
    pub h: Vec<LeafMap>,
}

pub fn factorize(map: &SampledMap, spec: &Spectrum) -> Result<Factorization> {
    let rep = foliation_check(map, spec)?;
    if rep.verdict == FoliationVerdict::Breaks {
        return Err(Error::FoliationBroken { spread: rep.max_spread });
    }
    let mut g = Vec::new();
    let mut h = Vec::new();
    for (y, idx) in group_leaves(map, spec) {
        let gy = spec.split_leaf(&map.image[idx[0]]).1.to_vec();
        let points = idx
            .iter()
            .map(|&k| (spec.split_leaf(&map.domain[k]).0.to_vec(), spec.split_leaf(&map.image[k]).0.to_vec()))
            .collect();
        g.push((y.clone(), gy.clone()));
        h.push(LeafMap { y, image_y: gy, points });
    }
    Ok(Factorization { g, h })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    pub checked: usize,
    pub violations: usize,
    /// Largest `L_G(y, r) / (eta1 * l_H(x, r))`.
    pub max_ratio: f64,
    pub eta1: f64,
    pub slack: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Checks `L_G(y, r) <= eta1 * l_{H(., y)}(x, r) * (1 + slack)` over every sampled leaf,
/// leaf point and radius. Both sides are empirical: `L_G` ranges over sampled leaves within
/// `D_Y`-distance `r`, `l_H` over sampled points of the same leaf at distance at least `r`.
pub fn l1_inequality_check(
    fact: &Factorization,
    spec: &Spectrum,
    eta1: f64,
    radii: &[f64],
    slack: f64,
) -> Result<L1Report> {
    if !(eta1 > 0.0) || !(slack >= 0.0) {
        return Err(Error::InvalidParameter(format!("eta1 {eta1}, slack {slack}")));
    }
    let mut rep = L1Report { checked: 0, violations: 0, max_ratio: 0.0, eta1, slack };
    for (a, leaf) in fact.h.iter().enumerate() {
        for &r in radii {
            let mut lg: Option<f64> = None;
            for (b, other) in fact.g.iter().enumerate() {
                if b != a && spec.dist_dy(&leaf.y, &other.0)? <= r {
                    let d = spec.dist_dy(&fact.g[a].1, &other.1)?;
                    lg = Some(lg.map_or(d, |v| v.max(d)));
                }
            }
            let Some(lg) = lg else { continue };
            for (x, hx) in &leaf.points {
                let lh = leaf
                    .points
                    .iter()
                    .filter(|(x2, _)| euclid(x, x2) >= r)
                    .map(|(_, h2)| euclid(hx, h2))
                    .min_by(f64::total_cmp);
                let Some(lh) = lh else { continue };
                let ratio = lg / (eta1 * lh);
                rep.checked += 1;
                rep.max_ratio = rep.max_ratio.max(ratio);
                if ratio > 1.0 + slack {
                    rep.violations += 1;
                }
            }
        }
    }
    if rep.checked == 0 {
        return Err(Error::TooFewPoints { needed: 2, got: fact.h.len() });
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CatalogMap, MapSpec};

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    fn grid() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let leaves = (0..5).map(|k| vec![-1.0 + 0.5 * k as f64]).collect();
        let xs = (0..7).map(|k| vec![-1.5 + 0.5 * k as f64]).collect();
        (leaves, xs)
    }

    #[test]
    fn similarity_factorization() {
        let s = s2();
        let (leaves, xs) = grid();
        let sim = CatalogMap::new(&s, MapSpec::Similarity { lambda: 3.0 }).unwrap();
        let m = leaf_grid_sample(&sim, &s, &leaves, &xs).unwrap();
        let f = factorize(&m, &s).unwrap();
        for (y, gy) in &f.g {
            assert_eq!(gy[0], 9.0 * y[0]);
        }
        for leaf in &f.h {
            for (x, hx) in &leaf.points {
                assert_eq!(hx[0], 3.0 * x[0]);
            }
        }
        let l1 = l1_inequality_check(&f, &s, 1.0, &[0.5, 1.0], 0.0).unwrap();
        assert_eq!(l1.violations, 0);
        assert!((l1.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_breaks_leaves() {
        let s = s2();
        let (leaves, xs) = grid();
        let rot = CatalogMap::new(&s, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 }).unwrap();
        let m = leaf_grid_sample(&rot, &s, &leaves, &xs).unwrap();
        let rep = foliation_check(&m, &s).unwrap();
        assert_eq!(rep.verdict, FoliationVerdict::Breaks);
        assert!(rep.per_leaf.iter().all(|&v| v > 0.0));
        assert!(matches!(factorize(&m, &s), Err(Error::FoliationBroken { .. })));
    }

    #[test]
    fn single_block_rejected() {
        let s = Spectrum::new(&[(2, 1.0)]).unwrap();
        let m = SampledMap::new(vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(foliation_check(&m, &s), Err(Error::SingleBlockSpectrum)));
    }
}
