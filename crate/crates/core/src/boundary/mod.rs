//! Finite-sample constructions on the boundary: visual and parabolic quasimetrics,
//! chain metrization, inversion, sphericalization, cross-ratio distortion.

mod relation;
mod transform;
mod visual;

pub use relation::{
    bilipschitz_band, compare_parabolic_vs_d, compare_parabolic_vs_inversion, parameter_base_change,
    parameter_epsilon_change, sphericalized_measure_weight, EpsilonChangeReport,
};
pub use transform::{
    crossratio_distortion, invert_metric, sphericalize, CrossRatioProfile, SandwichReport, TransformResult,
    INFINITY_LABEL,
};
pub use visual::{
    epsilon0_default, gromov_product, gromov_product_stabilized, parabolic_quasimetric, parabolic_table,
    ray_point, visual_quasimetric, visual_table, GromovEstimate, VisualParams, DEFAULT_HORIZONS,
    XI0_LABEL,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Metric,
    Quasimetric,
}

/// Relative tolerance for the triangle inequality of metric samples.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Finite labelled point set with a symmetric distance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSpace {
    labels: Vec<String>,
    coords: Vec<Vec<f64>>,
    dist: Vec<Vec<f64>>,
    kind: SpaceKind,
    basepoint: Option<String>,
}

impl SampledSpace {
    /// Validates labels, symmetry, zero diagonal and, for metrics, the triangle inequality.
    pub fn new(labels: Vec<String>, coords: Vec<Vec<f64>>, dist: Vec<Vec<f64>>, kind: SpaceKind) -> Result<Self> {
        let n = labels.len();
        if coords.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: coords.len() });
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("distance table must be square".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.contains(',') || l.contains('\n') {
                return Err(Error::InvalidParameter(format!("bad label {l:?}")));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate label {l}")));
            }
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero self-distance at {}", labels[i])));
            }
            for j in 0..i {
                let (a, b) = (dist[i][j], dist[j][i]);
                if !(a >= 0.0) || a != b {
                    return Err(Error::InvalidParameter(format!(
                        "table not symmetric/nonnegative at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let space = SampledSpace { labels, coords, dist, kind, basepoint: None };
        if kind == SpaceKind::Metric {
            let v = space.triangle_violation();
            if v > TRIANGLE_TOL {
                return Err(Error::InvalidParameter(format!("triangle inequality fails by {v}")));
            }
        }
        Ok(space)
    }

    /// Builds the table from a symmetric function of indices.
    pub fn from_fn<F>(labels: Vec<String>, coords: Vec<Vec<f64>>, kind: SpaceKind, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let n = labels.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                let d = f(i, j)?;
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        SampledSpace::new(labels, coords, dist, kind)
    }

    pub fn with_basepoint(mut self, label: &str) -> Result<Self> {
        self.index_of(label)?;
        self.basepoint = Some(label.to_string());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn basepoint(&self) -> Option<&str> {
        self.basepoint.as_deref()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    /// Largest relative excess `(d(i,k) - d(i,j) - d(j,k)) / d(i,k)` over all triples.
    pub fn triangle_violation(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..i {
                let dik = self.dist[i][k];
                if dik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let excess = dik - self.dist[i][j] - self.dist[j][k];
                    if excess > 0.0 {
                        worst = worst.max(excess / dik);
                    }
                }
            }
        }
        worst
    }

    /// Dense CSV: header `metric|quasimetric,label...`, then one row per label.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.kind {
            SpaceKind::Metric => "metric",
            SpaceKind::Quasimetric => "quasimetric",
        });
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.dist) {
            out.push_str(l);
            for v in row {
                let _ = write!(out, ",{v:.17e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let mut cells = header.split(',');
        let kind = match cells.next().map(str::trim) {
            Some("metric") => SpaceKind::Metric,
            Some("quasimetric") => SpaceKind::Quasimetric,
            other => return Err(Error::Parse(format!("unknown kind {other:?}"))),
        };
        let labels: Vec<String> = cells.map(|c| c.trim().to_string()).collect();
        let mut dist = Vec::with_capacity(labels.len());
        for (k, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let l = cells.next().unwrap_or("").trim();
            if labels.get(k).map(String::as_str) != Some(l) {
                return Err(Error::Parse(format!("row {k} has label {l:?}")));
            }
            let row: std::result::Result<Vec<f64>, _> = cells.map(|c| c.trim().parse::<f64>()).collect();
            dist.push(row.map_err(|e| Error::Parse(e.to_string()))?);
        }
        let coords = vec![Vec::new(); labels.len()];
        SampledSpace::new(labels, coords, dist, kind)
    }
}

/// Largest metric on the sample dominated by the table: all-pairs shortest paths.
pub fn chain_metrize(space: &SampledSpace) -> SampledSpace {
    let n = space.len();
    let mut d = space.dist.clone();
    for k in 0..n {
        let row_k = d[k].clone();
        for i in 0..n {
            let dik = d[i][k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let via = dik + row_k[j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    // restore exact symmetry after floating-point ties
    for i in 0..n {
        for j in 0..i {
            let v = d[i][j].min(d[j][i]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    SampledSpace {
        labels: space.labels.clone(),
        coords: space.coords.clone(),
        dist: d,
        kind: SpaceKind::Metric,
        basepoint: space.basepoint.clone(),
    }
}

pub(crate) fn labels_for(count: usize) -> Vec<String> {
    (0..count).map(|k| format!("p{k}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three(ab: f64, bc: f64, ac: f64) -> SampledSpace {
        SampledSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![]; 3],
            vec![vec![0.0, ab, ac], vec![ab, 0.0, bc], vec![ac, bc, 0.0]],
            SpaceKind::Quasimetric,
        )
        .unwrap()
    }

    #[test]
    fn chain_shortcut() {
        let m = chain_metrize(&three(1.0, 1.0, 3.0));
        assert_eq!(m.d(0, 2), 2.0);
        assert_eq!(m.kind(), SpaceKind::Metric);
        let again = chain_metrize(&m);
        assert_eq!(again.table(), m.table());
    }

    #[test]
    fn metric_input_unchanged() {
        let s = three(1.0, 1.5, 2.0);
        assert_eq!(chain_metrize(&s).table(), s.table());
    }

    #[test]
    fn rejects_asymmetric_and_bad_metrics() {
        let bad = SampledSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![]; 2],
            vec![vec![0.0, 1.0], vec![2.0, 0.0]],
            SpaceKind::Quasimetric,
        );
        assert!(bad.is_err());
        let tri = SampledSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![]; 3],
            vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]],
            SpaceKind::Metric,
        );
        assert!(tri.is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = three(1.0, 0.25, 3.0).with_basepoint("b").unwrap();
        let back = SampledSpace::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.table(), s.table());
        assert_eq!(back.labels(), s.labels());
        assert!(matches!(s.index_of("zz"), Err(Error::UnknownLabel(_))));
    }
}
