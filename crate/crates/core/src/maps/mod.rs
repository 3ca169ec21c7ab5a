//! Distortion analysis of sampled self-maps of `(R^n, D)`.

mod bounds;
mod foliation;
mod profile;

pub use bounds::{
    eta_inverse_at_one, height_respecting_check, main_bound_check, scale_divergence, CatalogGroupMap, GroupMap,
    GroupMapSpec, HeightOptions, HeightReport, MainBoundReport, PROBE_SCALES, SCALE_GROWTH_LIMIT,
};
pub use foliation::{
    factorize, foliation_check, l1_inequality_check, leaf_grid_sample, Factorization, FoliationReport,
    FoliationVerdict, L1Report, LeafMap, LEAF_SPREAD_TOL,
};
pub use profile::{
    pointwise_distortion, qs_profile, quasisimilarity_fit, scale_sample, DistortionProfile, PointwiseDistortion,
    QuasisimilarityFit,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Boundary self-map evaluated pointwise.
pub trait BoundaryMap: Send + Sync {
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// Closed-form catalog of boundary maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    /// Block dilation `x_i -> lambda^{alpha_i / alpha_1} x_i`, a `D`-similarity of ratio `lambda`.
    Similarity { lambda: f64 },
    /// `x -> x + L |y|^exponent e_1` with `y` the coordinates of blocks `2..r`.
    Shear { l: f64, exponent: f64 },
    /// Rotation by `theta` in the plane of the first two coordinates.
    Rotation { theta: f64 },
    /// Per-block affine maps `x_i -> M_i x_i + c_i`.
    BlockAffine { blocks: Vec<AffineBlock> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineBlock {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// A catalog map bound to a spectrum.
#[derive(Debug, Clone)]
pub struct CatalogMap {
    spec: Spectrum,
    kind: MapSpec,
}

impl CatalogMap {
    pub fn new(spec: &Spectrum, kind: MapSpec) -> Result<Self> {
        match &kind {
            MapSpec::Similarity { lambda } if !(*lambda > 0.0) => {
                return Err(Error::InvalidParameter(format!("similarity ratio {lambda}")))
            }
            MapSpec::Rotation { .. } if spec.n() < 2 => {
                return Err(Error::InvalidParameter("rotation needs n >= 2".into()))
            }
            MapSpec::BlockAffine { blocks } => {
                if blocks.len() != spec.r() {
                    return Err(Error::DimensionMismatch { expected: spec.r(), got: blocks.len() });
                }
                for (i, b) in blocks.iter().enumerate() {
                    let k = spec.blocks()[i].dim;
                    if b.offset.len() != k || b.matrix.len() != k || b.matrix.iter().any(|r| r.len() != k) {
                        return Err(Error::DimensionMismatch { expected: k, got: b.offset.len() });
                    }
                }
            }
            _ => {}
        }
        Ok(CatalogMap { spec: spec.clone(), kind })
    }

    pub fn kind(&self) -> &MapSpec {
        &self.kind
    }
}

impl BoundaryMap for CatalogMap {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = &self.spec;
        match &self.kind {
            MapSpec::Identity => x.to_vec(),
            MapSpec::Similarity { lambda } => s.dilate(*lambda, x),
            MapSpec::Shear { l, exponent } => {
                let mut out = x.to_vec();
                let y = &x[s.blocks()[0].dim..];
                let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if ny > 0.0 {
                    out[0] += l * ny.powf(*exponent);
                }
                out
            }
            MapSpec::Rotation { theta } => {
                let (sn, cs) = theta.sin_cos();
                let mut out = x.to_vec();
                out[0] = cs * x[0] - sn * x[1];
                out[1] = sn * x[0] + cs * x[1];
                out
            }
            MapSpec::BlockAffine { blocks } => {
                let mut out = x.to_vec();
                for (i, b) in blocks.iter().enumerate() {
                    let range = s.block_range(i);
                    let xi = &x[range.clone()];
                    for (r, k) in range.enumerate() {
                        out[k] = b.offset[r] + b.matrix[r].iter().zip(xi).map(|(m, v)| m * v).sum::<f64>();
                    }
                }
                out
            }
        }
    }
}

/// Distance used when measuring distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    D,
    /// `D_Y` on the coordinates of blocks `2..r`.
    Dy,
    Euclidean,
}

impl MetricKind {
    pub fn dist(self, spec: &Spectrum, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            MetricKind::D => spec.dist_d(a, b),
            MetricKind::Dy => {
                let k = spec.blocks()[0].dim;
                spec.dist_dy(&a[k..], &b[k..])
            }
            MetricKind::Euclidean => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
                }
                Ok(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
            }
        }
    }
}

/// Finite sample of a map: `image[k]` is the image of `domain[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMap {
    pub domain: Vec<Vec<f64>>,
    pub image: Vec<Vec<f64>>,
}

impl SampledMap {
    pub fn new(domain: Vec<Vec<f64>>, image: Vec<Vec<f64>>) -> Result<Self> {
        if domain.len() != image.len() {
            return Err(Error::DimensionMismatch { expected: domain.len(), got: image.len() });
        }
        for k in 0..domain.len() {
            if domain[..k].contains(&domain[k]) {
                return Err(Error::InvalidParameter(format!("duplicate domain point {:?}", domain[k])));
            }
        }
        Ok(SampledMap { domain, image })
    }

    pub fn from_map(map: &dyn BoundaryMap, domain: Vec<Vec<f64>>) -> Result<Self> {
        let image = domain.iter().map(|x| map.apply(x)).collect();
        SampledMap::new(domain, image)
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Swaps domain and image.
    pub fn inverse(&self) -> SampledMap {
        SampledMap { domain: self.image.clone(), image: self.domain.clone() }
    }

    /// Post-composition with a closed-form map.
    pub fn then(&self, map: &dyn BoundaryMap) -> SampledMap {
        SampledMap { domain: self.domain.clone(), image: self.image.iter().map(|y| map.apply(y)).collect() }
    }

    /// Whether images are pairwise distinct.
    pub fn injective(&self) -> bool {
        (0..self.image.len()).all(|k| !self.image[..k].contains(&self.image[k]))
    }

    /// CSV rows `x1..xn,y1..yn` with header `x1,...,xn,fx1,...,fxn`.
    pub fn to_csv(&self) -> String {
        let n = self.domain.first().map_or(0, Vec::len);
        let mut out = String::new();
        let head: Vec<String> = (1..=n).map(|k| format!("x{k}")).chain((1..=n).map(|k| format!("fx{k}"))).collect();
        out.push_str(&head.join(","));
        out.push('\n');
        for (x, y) in self.domain.iter().zip(&self.image) {
            let row: Vec<String> = x.iter().chain(y).map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols = header.split(',').count();
        if cols % 2 != 0 || cols == 0 {
            return Err(Error::Parse(format!("expected an even number of columns, got {cols}")));
        }
        let n = cols / 2;
        let (mut domain, mut image) = (Vec::new(), Vec::new());
        for line in lines {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse(e.to_string()))?;
            if vals.len() != cols {
                return Err(Error::Parse(format!("row has {} columns, expected {cols}", vals.len())));
            }
            domain.push(vals[..n].to_vec());
            image.push(vals[n..].to_vec());
        }
        SampledMap::new(domain, image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> Spectrum {
        Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
    }

    #[test]
    fn catalog_formulas() {
        let s = s2();
        let sim = CatalogMap::new(&s, MapSpec::Similarity { lambda: 3.0 }).unwrap();
        assert_eq!(sim.apply(&[1.0, 1.0]), vec![3.0, 9.0]);
        let shear = CatalogMap::new(&s, MapSpec::Shear { l: 1.0, exponent: 0.5 }).unwrap();
        assert_eq!(shear.apply(&[1.0, 4.0]), vec![3.0, 4.0]);
        let rot = CatalogMap::new(&s, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 }).unwrap();
        let r = rot.apply(&[1.0, 0.0]);
        assert!(r[0].abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
        let aff = CatalogMap::new(
            &s,
            MapSpec::BlockAffine {
                blocks: vec![
                    AffineBlock { matrix: vec![vec![2.0]], offset: vec![1.0] },
                    AffineBlock { matrix: vec![vec![1.0]], offset: vec![0.0] },
                ],
            },
        )
        .unwrap();
        assert_eq!(aff.apply(&[1.0, 5.0]), vec![3.0, 5.0]);
    }

    #[test]
    fn sampled_map_csv_roundtrip() {
        let m = SampledMap::new(vec![vec![0.0, 1.0], vec![2.0, -1.0]], vec![vec![1.0, 1.0], vec![0.5, 0.25]]).unwrap();
        assert_eq!(SampledMap::from_csv(&m.to_csv()).unwrap(), m);
        assert!(SampledMap::new(vec![vec![0.0], vec![0.0]], vec![vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn metric_kinds() {
        let s = s2();
        assert_eq!(MetricKind::D.dist(&s, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.0);
        assert_eq!(MetricKind::Dy.dist(&s, &[7.0, 0.0], &[0.0, 4.0]).unwrap(), 2.0);
        assert_eq!(MetricKind::Euclidean.dist(&s, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }
}
