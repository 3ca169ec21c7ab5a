//! Campaign configuration, orchestration, report files and shard merging.

mod campaigns;

pub use campaigns::run_campaign;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::epsilon0_default;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Subcommands in the order `all` runs them.
pub const CAMPAIGNS: [&str; 17] = [
    "verify-norms",
    "distance",
    "geodesic",
    "busemann",
    "quasicenter",
    "g3",
    "visual",
    "parabolic",
    "invert",
    "sphericalize",
    "relation1",
    "qs-profile",
    "foliation",
    "factorize",
    "main-bound",
    "height-respect",
    "modulus",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub pairs: usize,
    pub triples: usize,
    pub quadruples: usize,
    /// Boundary sample size for table-based campaigns.
    pub points: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts { pairs: 200, triples: 2000, quadruples: 2000, points: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub root: f64,
    /// Relative error allowed against closed-form distances.
    pub distance: f64,
    pub profile_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root: 1e-12, distance: 1e-4, profile_slack: 0.1 }
    }
}

/// Visual parameters; unset values fall back to `epsilon0_default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonConfig {
    pub epsilon: Option<f64>,
    pub epsilon0: Option<f64>,
    pub epsilon1: Option<f64>,
    pub chain: bool,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        EpsilonConfig { epsilon: None, epsilon0: None, epsilon1: None, chain: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub half_width: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { half_width: 2.0, t_min: -2.0, t_max: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusConfig {
    pub resolutions: Vec<usize>,
    pub curves: usize,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig { resolutions: vec![64, 128, 256], curves: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// `(n_i, alpha_i)` blocks.
    pub spectrum: Vec<(usize, f64)>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Compare distances with the closed form (single-block spectra only).
    pub oracle: bool,
    pub counts: Counts,
    pub tolerances: Tolerances,
    pub epsilon: EpsilonConfig,
    pub sampling: Sampling,
    pub modulus: ModulusConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            spectrum: vec![(1, 1.0), (1, 2.0)],
            seed: 0,
            out_dir: None,
            oracle: false,
            counts: Counts::default(),
            tolerances: Tolerances::default(),
            epsilon: EpsilonConfig::default(),
            sampling: Sampling::default(),
            modulus: ModulusConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CampaignConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        CampaignConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn spec(&self) -> Result<Spectrum> {
        Spectrum::new(&self.spectrum).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let c = &self.counts;
        if c.pairs == 0 || c.triples == 0 || c.quadruples == 0 || c.points == 0 {
            return Err(Error::ConfigInvalid("all counts must be at least 1".into()));
        }
        let t = &self.tolerances;
        if !(t.root > 0.0 && t.distance > 0.0 && t.profile_slack > 0.0) {
            return Err(Error::ConfigInvalid("tolerances must be positive".into()));
        }
        let s = &self.sampling;
        if !(s.half_width > 0.0 && s.t_min < s.t_max && s.t_min.is_finite() && s.t_max.is_finite()) {
            return Err(Error::ConfigInvalid("sampling box is empty".into()));
        }
        if self.modulus.resolutions.len() < 3 || self.modulus.resolutions.contains(&0) || self.modulus.curves == 0 {
            return Err(Error::ConfigInvalid("modulus needs 3 positive resolutions and curves >= 1".into()));
        }
        for v in [self.epsilon.epsilon, self.epsilon.epsilon0, self.epsilon.epsilon1].into_iter().flatten() {
            if !(v > 0.0) {
                return Err(Error::ConfigInvalid(format!("epsilon values must be positive, got {v}")));
            }
        }
        if self.epsilon.chain && self.epsilon() > self.epsilon0(&spec) {
            return Err(Error::ConfigInvalid(format!(
                "epsilon {} exceeds epsilon0 {} with chain metrization",
                self.epsilon(),
                self.epsilon0(&spec)
            )));
        }
        if self.oracle && spec.r() != 1 {
            return Err(Error::ConfigInvalid("the distance oracle needs a single-block spectrum".into()));
        }
        Ok(())
    }

    pub fn epsilon0(&self, spec: &Spectrum) -> f64 {
        self.epsilon.epsilon0.unwrap_or_else(|| epsilon0_default(spec))
    }

    /// Working epsilon: explicit value, else `epsilon0`.
    pub fn epsilon(&self) -> f64 {
        let spec = self.spec().expect("validated spectrum");
        self.epsilon.epsilon.unwrap_or_else(|| self.epsilon0(&spec))
    }

    /// SHA-256 of the configuration with seed and output directory cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// How a check's value combines across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agg {
    /// Passes when `value <= threshold`; merged by maximum.
    Max,
    /// Passes when `value >= threshold`; merged by minimum.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// `None` when the measured value is not finite.
    pub value: Option<f64>,
    pub threshold: f64,
    pub agg: Agg,
    pub count: u64,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64, count: usize) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value: value.is_finite().then_some(value),
            threshold,
            agg: Agg::Max,
            count: count as u64,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64, count: usize) -> Self {
        Check {
            name: name.into(),
            passed: value >= threshold,
            value: value.is_finite().then_some(value),
            threshold,
            agg: Agg::Min,
            count: count as u64,
        }
    }

    /// Boolean outcome recorded as `1` (pass) or `0` against threshold `1`.
    pub fn holds(name: &str, ok: bool, count: usize) -> Self {
        Check::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0, count)
    }

    fn merge(&mut self, other: &Check) {
        self.passed &= other.passed;
        self.count += other.count;
        self.value = match (self.value, other.value, self.agg) {
            (Some(a), Some(b), Agg::Max) => Some(a.max(b)),
            (Some(a), Some(b), Agg::Min) => Some(a.min(b)),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub campaign: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CampaignRecord {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

/// Records keyed by `(seed, campaign)`; merging is a keyed union.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_hash: Option<String>,
    pub records: BTreeMap<(u64, String), CampaignRecord>,
}

impl Report {
    pub fn from_records(records: Vec<CampaignRecord>) -> Result<Self> {
        let mut r = Report::default();
        for rec in records {
            r.insert(rec)?;
        }
        Ok(r)
    }

    fn insert(&mut self, rec: CampaignRecord) -> Result<()> {
        match &self.config_hash {
            Some(h) if *h != rec.config_hash => return Err(Error::ConfigHashMismatch(h.clone(), rec.config_hash)),
            None => self.config_hash = Some(rec.config_hash.clone()),
            _ => {}
        }
        self.records.insert((rec.seed, rec.campaign.clone()), rec);
        Ok(())
    }

    pub fn merge(&self, other: &Report) -> Result<Report> {
        let mut out = self.clone();
        for rec in other.records.values() {
            out.insert(rec.clone())?;
        }
        Ok(out)
    }

    pub fn passed(&self) -> bool {
        self.records.values().all(CampaignRecord::passed)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in self.records.values() {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let recs: Result<Vec<CampaignRecord>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string())))
            .collect();
        Report::from_records(recs?)
    }

    /// Checks aggregated over seeds, keyed by `(campaign, check)`.
    pub fn aggregate(&self) -> BTreeMap<(String, String), Check> {
        let mut out: BTreeMap<(String, String), Check> = BTreeMap::new();
        for rec in self.records.values() {
            for c in &rec.checks {
                out.entry((rec.campaign.clone(), c.name.clone()))
                    .and_modify(|e| e.merge(c))
                    .or_insert_with(|| c.clone());
            }
        }
        out
    }

    /// Fixed-width text summary.
    pub fn summary(&self) -> String {
        let seeds: std::collections::BTreeSet<u64> = self.records.keys().map(|k| k.0).collect();
        let mut out = String::new();
        let _ = writeln!(out, "config {}", self.config_hash.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "seeds  {:?}", seeds);
        let _ = writeln!(out, "{:<16} {:<34} {:>14} {:>12} {:>9} {:>6}", "campaign", "check", "value", "threshold", "count", "ok");
        for ((camp, name), c) in self.aggregate() {
            let v = c.value.map_or("nonfinite".to_string(), |v| format!("{v:.6e}"));
            let _ = writeln!(
                out,
                "{:<16} {:<34} {:>14} {:>12.4e} {:>9} {:>6}",
                camp,
                name,
                v,
                c.threshold,
                c.count,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        for rec in self.records.values().filter(|r| r.error.is_some()) {
            let _ = writeln!(out, "{:<16} error: {}", rec.campaign, rec.error.as_deref().unwrap_or(""));
        }
        let _ = writeln!(out, "overall {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let io = |p: PathBuf, s: String| fs::write(&p, s).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
        io(dir.join(format!("{stem}.jsonl")), self.to_jsonl())?;
        io(dir.join(format!("{stem}.txt")), self.summary())
    }
}

/// Runs one subcommand (or `all`) on a pool of `jobs` threads.
pub fn run(subcommand: &str, config: &CampaignConfig, jobs: Option<usize>) -> Result<Report> {
    config.validate()?;
    let names: Vec<&str> = if subcommand == "all" {
        CAMPAIGNS.to_vec()
    } else if CAMPAIGNS.contains(&subcommand) {
        vec![subcommand]
    } else {
        return Err(Error::ConfigInvalid(format!("unknown subcommand {subcommand}")));
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::CampaignFailed(e.to_string()))?;
    let hash = config.hash();
    let records = pool.install(|| {
        names
            .iter()
            .map(|name| {
                let (checks, error) = match run_campaign(name, config) {
                    Ok(c) => (c, None),
                    Err(e) => (Vec::new(), Some(e.to_string())),
                };
                CampaignRecord { campaign: name.to_string(), config_hash: hash.clone(), seed: config.seed, checks, error }
            })
            .collect::<Vec<_>>()
    });
    Report::from_records(records)
}

/// Merges report shards read from JSON-lines files.
pub fn merge_files(paths: &[PathBuf]) -> Result<Report> {
    let mut out = Report::default();
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        out = out.merge(&Report::from_jsonl(&text)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_and_hash() {
        let c = CampaignConfig::default();
        let back = CampaignConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let mut other = c.clone();
        other.seed = 99;
        other.out_dir = Some("x".into());
        assert_eq!(other.hash(), c.hash());
        other.counts.pairs = 3;
        assert_ne!(other.hash(), c.hash());
    }

    #[test]
    fn malformed_configs() {
        assert!(matches!(CampaignConfig::from_toml("spectrum = [[1, 2.0], [1, 1.0]]"), Err(Error::ConfigInvalid(_))));
        assert!(matches!(CampaignConfig::from_toml("[counts]\npairs = 0"), Err(Error::ConfigInvalid(_))));
        assert!(matches!(CampaignConfig::from_toml("bogus = 1"), Err(Error::ConfigInvalid(_))));
        assert!(matches!(CampaignConfig::from_toml("oracle = true"), Err(Error::ConfigInvalid(_))));
        assert!(matches!(
            CampaignConfig::from_toml("[epsilon]\nepsilon = 5.0\nchain = true"),
            Err(Error::ConfigInvalid(_))
        ));
    }

    fn rec(seed: u64, hash: &str, v: f64) -> CampaignRecord {
        CampaignRecord {
            campaign: "x".into(),
            config_hash: hash.into(),
            seed,
            checks: vec![Check::at_most("c", v, 1.0, 10)],
            error: None,
        }
    }

    #[test]
    fn merge_laws() {
        let a = Report::from_records(vec![rec(1, "h", 0.5)]).unwrap();
        let b = Report::from_records(vec![rec(2, "h", 0.7)]).unwrap();
        assert_eq!(a.merge(&a).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        let agg = a.merge(&b).unwrap().aggregate();
        let c = &agg[&("x".to_string(), "c".to_string())];
        assert_eq!((c.count, c.value), (20, Some(0.7)));
        let other = Report::from_records(vec![rec(3, "g", 0.1)]).unwrap();
        assert!(matches!(a.merge(&other), Err(Error::ConfigHashMismatch(..))));
        assert_eq!(Report::from_jsonl(&a.to_jsonl()).unwrap(), a);
    }
}
