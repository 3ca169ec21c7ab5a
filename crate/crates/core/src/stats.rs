//! Mergeable summaries: log-binned ratio profiles and ratio bands.

use serde::{Deserialize, Serialize};

pub const BIN_COUNT: usize = 32;
pub const BIN_LO: f64 = 1e-3;
pub const BIN_HI: f64 = 1e3;

/// Per-bin maximum of an output ratio over 32 log-spaced input bins on `[1e-3, 1e3]`.
/// Inputs outside the range land in the end bins and are counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBinProfile {
    pub bin_max: Vec<Option<f64>>,
    pub counts: Vec<u64>,
    pub clamped: u64,
}

impl Default for LogBinProfile {
    fn default() -> Self {
        LogBinProfile { bin_max: vec![None; BIN_COUNT], counts: vec![0; BIN_COUNT], clamped: 0 }
    }
}

impl LogBinProfile {
    pub fn bin_of(t: f64) -> (usize, bool) {
        let span = (BIN_HI / BIN_LO).ln();
        let pos = (t / BIN_LO).ln() / span * BIN_COUNT as f64;
        if !(pos >= 0.0) {
            (0, true)
        } else if pos >= BIN_COUNT as f64 {
            (BIN_COUNT - 1, true)
        } else {
            (pos as usize, false)
        }
    }

    /// Lower and upper edge of bin `k`.
    pub fn edges(k: usize) -> (f64, f64) {
        let r = (BIN_HI / BIN_LO).powf(1.0 / BIN_COUNT as f64);
        (BIN_LO * r.powi(k as i32), BIN_LO * r.powi(k as i32 + 1))
    }

    pub fn record(&mut self, t: f64, out: f64) {
        let (k, clamped) = Self::bin_of(t);
        if clamped {
            self.clamped += 1;
        }
        self.counts[k] += 1;
        self.bin_max[k] = Some(self.bin_max[k].map_or(out, |m: f64| m.max(out)));
    }

    pub fn merge(&mut self, other: &LogBinProfile) {
        for k in 0..BIN_COUNT {
            self.counts[k] += other.counts[k];
            self.bin_max[k] = match (self.bin_max[k], other.bin_max[k]) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
        }
        self.clamped += other.clamped;
    }

    /// Running maximum from the left: the smallest nondecreasing function above every bin.
    pub fn envelope(&self) -> Vec<Option<f64>> {
        let mut run: Option<f64> = None;
        self.bin_max
            .iter()
            .map(|b| {
                run = match (run, *b) {
                    (Some(r), Some(v)) => Some(r.max(v)),
                    (r, v) => r.or(v),
                };
                run
            })
            .collect()
    }

    /// Envelope value at the bin containing `t`.
    pub fn eta_at(&self, t: f64) -> Option<f64> {
        self.envelope()[Self::bin_of(t).0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Summary of a set of positive ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// `max / min`.
    pub spread: f64,
    /// 5th, 25th, 50th, 75th and 95th percentiles.
    pub percentiles: [f64; 5],
}

impl RatioReport {
    pub fn from_values(values: &[f64]) -> Option<RatioReport> {
        let mut v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let pick = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
        let (min, max) = (v[0], v[v.len() - 1]);
        Some(RatioReport {
            min,
            max,
            count: v.len(),
            spread: max / min,
            percentiles: [pick(0.05), pick(0.25), pick(0.5), pick(0.75), pick(0.95)],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_range() {
        assert_eq!(LogBinProfile::bin_of(1e-3), (0, false));
        assert_eq!(LogBinProfile::bin_of(1.0).0, 16);
        assert_eq!(LogBinProfile::bin_of(1e-5), (0, true));
        assert_eq!(LogBinProfile::bin_of(1e5), (31, true));
        let (lo, hi) = LogBinProfile::edges(16);
        assert!((lo - 1.0).abs() < 1e-12 && hi > 1.0);
    }

    #[test]
    fn envelope_is_monotone_and_merge_commutes() {
        let mut a = LogBinProfile::default();
        a.record(0.01, 0.5);
        a.record(1.0, 0.2);
        let mut b = LogBinProfile::default();
        b.record(10.0, 3.0);
        b.record(1e6, 9.0);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        let env = ab.envelope();
        let vals: Vec<f64> = env.iter().flatten().cloned().collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ab.clamped, 1);
    }

    #[test]
    fn ratio_report() {
        let r = RatioReport::from_values(&[2.0, 1.0, 4.0]).unwrap();
        assert_eq!((r.min, r.max, r.count, r.spread), (1.0, 4.0, 3, 4.0));
        assert_eq!(r.percentiles[2], 2.0);
    }
}
