use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CampaignConfig, Check, CAMPAIGNS};
use crate::boundary::{
    chain_metrize, compare_parabolic_vs_d, compare_parabolic_vs_inversion, crossratio_distortion, gromov_product_stabilized,
    invert_metric, parabolic_table, sphericalize, visual_table, SampledSpace, SandwichReport, SpaceKind, TransformResult,
    VisualParams,
};
use crate::error::{Error, Result};
use crate::geometry::{
    busemann_xi0, busemann_xi0_numeric, distance, g3_defect, hyperbolic_oracle_distance, left_translate, quasicenter,
    speed_drift, tangent_norm, BoundaryPoint, G3Outcome, GroupPoint,
};
use crate::maps::{
    factorize, foliation_check, l1_inequality_check, leaf_grid_sample, main_bound_check, qs_profile, scale_divergence,
    height_respecting_check, BoundaryMap, CatalogGroupMap, CatalogMap, FoliationVerdict, GroupMapSpec, HeightOptions,
    MapSpec, MetricKind, SampledMap,
};
use crate::modulus::{build_cylinder_family, modulus_refinement_study, CurveFamily, GridBox, ModulusOptions};
use crate::sampling::{distinct4, group_point, pair_at_de, substream, uniform_points};
use crate::spectrum::{BoundaryVector, Spectrum};

const RADII: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
const STABLE_GROWTH: f64 = 0.25;
const WITNESS_SCALE: f64 = 1e-3;

/// Relative growth `(b - a) / max(a, 1e-6)` of a quantity measured on a sample and on its doubled version.
fn growth(a: f64, b: f64) -> f64 {
    (b - a) / a.max(1e-6)
}

/// Executes the checks of one campaign on its own random stream.
pub fn run_campaign(name: &str, cfg: &CampaignConfig) -> Result<Vec<Check>> {
    let idx = CAMPAIGNS.iter().position(|c| *c == name).ok_or_else(|| Error::ConfigInvalid(name.into()))?;
    let spec = cfg.spec()?;
    let mut rng = substream(cfg.seed, idx as u64);
    let r = &mut rng;
    match name {
        "verify-norms" => verify_norms(cfg, &spec, r),
        "distance" => distance_campaign(cfg, &spec, r),
        "geodesic" => geodesic(cfg, &spec, r),
        "busemann" => busemann(cfg, &spec, r),
        "quasicenter" => quasicenter_campaign(cfg, &spec, r),
        "g3" => g3(cfg, &spec, r),
        "visual" => visual(cfg, &spec, r),
        "parabolic" => parabolic(cfg, &spec, r),
        "invert" => transform(cfg, &spec, r, false),
        "sphericalize" => transform(cfg, &spec, r, true),
        "relation1" => relation1(cfg, &spec, r),
        "qs-profile" => qs_profile_campaign(cfg, &spec, r),
        "foliation" => foliation(cfg, &spec, r),
        "factorize" => factorize_campaign(cfg, &spec, r),
        "main-bound" => main_bound(cfg, &spec, r),
        "height-respect" => height_respect(cfg, &spec, r),
        "modulus" => modulus(cfg, &spec),
        _ => unreachable!(),
    }
}

fn boundary_points(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng, count: usize, scale: f64) -> Vec<Vec<f64>> {
    let hw = cfg.sampling.half_width * scale;
    uniform_points(r, count, spec.n(), -hw, hw)
}

fn group_points(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng, count: usize) -> Vec<GroupPoint> {
    let s = &cfg.sampling;
    (0..count).map(|_| group_point(r, spec.n(), s.half_width, s.t_min, s.t_max)).collect()
}

fn labelled(points: &[Vec<f64>]) -> Vec<String> {
    (0..points.len()).map(|k| format!("p{k}")).collect()
}

fn d_space(spec: &Spectrum, points: &[Vec<f64>]) -> Result<SampledSpace> {
    SampledSpace::from_fn(labelled(points), points.to_vec(), SpaceKind::Metric, |i, j| spec.dist_d(&points[i], &points[j]))
}

/// `eta_hat(1)` of a map at a single small scale around the origin.
fn eta_one_at(map: &dyn BoundaryMap, spec: &Spectrum, scale: f64, seed: u64) -> Result<f64> {
    Ok(scale_divergence(map, spec, &vec![0.0; spec.n()], &[scale], seed)?[0].1)
}

/// Rotation of the first two coordinates mixes blocks only when the first block is a line.
fn rotation_mixes_blocks(spec: &Spectrum) -> bool {
    spec.r() >= 2 && spec.blocks()[0].dim == 1
}

fn verify_norms(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let pairs: Vec<(BoundaryVector, BoundaryVector)> = (0..n)
        .map(|_| {
            let a = boundary_points(cfg, spec, r, 2, 1.0);
            (BoundaryVector(a[0].clone()), BoundaryVector(a[1].clone()))
        })
        .collect();
    let rep = crate::spectrum::check_norm_sandwich(spec, &pairs)?;
    let unit = spec.ball_measure(1.0)?;
    let mut q_err = 0.0f64;
    for &rad in &RADII {
        let want = unit * rad.powf(spec.q());
        q_err = q_err.max((spec.ball_measure(rad)? - want).abs() / want);
    }
    Ok(vec![
        Check::at_most("sandwich_lower_violation", rep.max_lower_violation, 1e-9, rep.pairs),
        Check::at_most("sandwich_upper_violation", rep.max_upper_violation, 1e-9, rep.pairs),
        Check::at_most("ball_measure_q_regularity", q_err, 1e-12, RADII.len()),
    ])
}

fn distance_campaign(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let triples: Vec<(GroupPoint, GroupPoint, GroupPoint)> = (0..n)
        .map(|_| {
            let mut g = group_points(cfg, spec, r, 3);
            let (c, b, a) = (g.pop().unwrap(), g.pop().unwrap(), g.pop().unwrap());
            (a, b, c)
        })
        .collect();
    let rows: Result<Vec<(f64, f64, f64, Option<f64>)>> = triples
        .par_iter()
        .map(|(p, q, g)| {
            let d = distance(spec, p, q)?.distance;
            let moved = distance(spec, &left_translate(spec, g, p)?, &left_translate(spec, g, q)?)?.distance;
            let oracle = if cfg.oracle {
                let o = hyperbolic_oracle_distance(spec.alpha(0), spec.n(), p, q)?;
                (o <= 10.0).then(|| (d - o).abs() / o.max(f64::MIN_POSITIVE))
            } else {
                None
            };
            Ok((d - (p.t - q.t).abs(), (moved - d).abs(), d, oracle))
        })
        .collect();
    let rows = rows?;
    let lower = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let invariance = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_least("lower_bound_slack", lower, -1e-6, n),
        Check::at_most("left_invariance_error", invariance, 1e-3, n),
    ];
    if cfg.oracle {
        let errs: Vec<f64> = rows.iter().filter_map(|r| r.3).collect();
        let worst = errs.iter().cloned().fold(0.0, f64::max);
        checks.push(Check::at_most("oracle_relative_error", worst, cfg.tolerances.distance, errs.len()));
    }
    Ok(checks)
}

fn geodesic(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let starts: Vec<(GroupPoint, Vec<f64>, f64)> = (0..n)
        .map(|_| {
            let p = group_points(cfg, spec, r, 1).pop().unwrap();
            let vx: Vec<f64> = (0..spec.n()).map(|_| r.gen_range(-1.0..1.0)).collect();
            let vt = r.gen_range(-1.0..1.0);
            (p, vx, vt)
        })
        .collect();
    let drifts: Result<Vec<f64>> = starts
        .par_iter()
        .map(|(p, vx, vt)| {
            let nrm = tangent_norm(spec, p, vx, *vt)?;
            let vx: Vec<f64> = vx.iter().map(|v| v / nrm).collect();
            speed_drift(spec, p, &vx, vt / nrm, 5.0, 50)
        })
        .collect();
    let worst = drifts?.into_iter().fold(0.0, f64::max);
    Ok(vec![Check::at_most("speed_drift", worst, 1e-9, n)])
}

fn busemann(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let base = GroupPoint::origin(spec.n());
    let pts = group_points(cfg, spec, r, n);
    let errs: Result<Vec<f64>> = pts
        .par_iter()
        .map(|p| Ok((busemann_xi0_numeric(spec, &base, p, 20.0)?.value - busemann_xi0(spec, &base, p)?).abs()))
        .collect();
    let worst = errs?.into_iter().fold(0.0, f64::max);
    Ok(vec![Check::at_most("busemann_error", worst, 1e-2, n)])
}

fn max_quasicenter_defect(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng, range: f64) -> Result<f64> {
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.counts.pairs)
        .map(|_| {
            let l = r.gen_range(-range..range);
            pair_at_de(spec, r, cfg.sampling.half_width, l)
        })
        .collect::<Result<_>>()?;
    let defects: Result<Vec<f64>> = pairs.par_iter().map(|(p, q)| Ok(quasicenter(spec, p, q)?.defect)).collect();
    Ok(defects?.into_iter().fold(0.0, f64::max))
}

fn quasicenter_campaign(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let narrow = max_quasicenter_defect(cfg, spec, r, 5.0)?;
    let wide = max_quasicenter_defect(cfg, spec, r, 8.0)?;
    Ok(vec![
        Check::at_most("defect", narrow, 5.0, n),
        Check::at_most("defect_growth_wide_range", growth(narrow, wide), 0.1, n),
    ])
}

fn g3(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = cfg.counts.pairs;
    let hw = cfg.sampling.half_width;
    let mut above = Vec::with_capacity(n);
    let mut below = Vec::with_capacity(n);
    for _ in 0..n {
        let l = r.gen_range(-3.0..3.0);
        let (p, q) = pair_at_de(spec, r, hw, l)?;
        let t0 = spec.de_height(&p, &q)?;
        above.push((p.clone(), q.clone(), t0 + r.gen_range(0.0..3.0), t0 + r.gen_range(-3.0..3.0)));
        below.push((p, q, t0 - 1.0 - r.gen_range(0.0..3.0), t0 - 1.0 - r.gen_range(0.0..3.0)));
    }
    let slacks: Result<Vec<f64>> = above
        .par_iter()
        .map(|(p, q, t1, t2)| match g3_defect(spec, p, q, *t1, *t2)? {
            G3Outcome::Above { lower_slack, upper_slack, .. } => Ok(lower_slack.min(upper_slack)),
            G3Outcome::Below { .. } => Err(Error::CampaignFailed("sample left the upper regime".into())),
        })
        .collect();
    let worst_slack = slacks?.into_iter().fold(f64::INFINITY, f64::min);
    let mut checks = vec![Check::at_least("upper_regime_slack", worst_slack, -1e-3, n)];
    if spec.r() == 1 {
        let defects: Result<Vec<f64>> = below
            .par_iter()
            .map(|(p, q, t1, t2)| match g3_defect(spec, p, q, *t1, *t2)? {
                G3Outcome::Below { defect, .. } => Ok(defect.abs()),
                G3Outcome::Above { .. } => Err(Error::CampaignFailed("sample left the lower regime".into())),
            })
            .collect();
        let worst = defects?.into_iter().fold(0.0, f64::max);
        checks.push(Check::at_most("lower_regime_defect", worst, 1.2, n));
    }
    Ok(checks)
}

fn visual(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let pts = boundary_points(cfg, spec, r, cfg.counts.points, 1.0);
    let base = GroupPoint::origin(spec.n());
    let eps = cfg.epsilon();
    let pairs: Vec<(usize, usize)> = (0..pts.len().min(20)).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let spreads: Result<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (BoundaryPoint::Point(pts[i].clone()), BoundaryPoint::Point(pts[j].clone()));
            Ok(gromov_product_stabilized(spec, &a, &b, &base)?.spread)
        })
        .collect();
    let spread = spreads?.into_iter().fold(0.0, f64::max);
    let quasi = visual_table(spec, &base, eps, &pts, false)?;
    let sw = SandwichReport::measure(&quasi, &chain_metrize(&quasi), 0.5);
    Ok(vec![
        Check::at_most("gromov_horizon_spread", spread, 1e-2, pairs.len()),
        Check::at_least("chain_ratio_min", sw.min_ratio, 0.5, quasi.len()),
        Check::at_most("chain_ratio_max", sw.max_ratio, 1.0 + 1e-12, quasi.len()),
    ])
}

fn parabolic(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let pts = boundary_points(cfg, spec, r, cfg.counts.points, 1.0);
    let params = VisualParams { xi: BoundaryPoint::Xi0, base: GroupPoint::origin(spec.n()), epsilon: cfg.epsilon() };
    let quasi = parabolic_table(spec, &params, &pts)?;
    let sw = SandwichReport::measure(&quasi, &chain_metrize(&quasi), 0.5);
    let n = pts.len() * (pts.len() - 1) / 2;
    Ok(vec![
        Check::at_least("chain_ratio_min", sw.min_ratio, 0.5, n),
        Check::at_most("chain_ratio_max", sw.max_ratio, 1.0 + 1e-12, n),
    ])
}

fn transform(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng, spherical: bool) -> Result<Vec<Check>> {
    let pts = boundary_points(cfg, spec, r, cfg.counts.points.max(5), 1.0);
    let space = d_space(spec, &pts)?;
    let p = space.labels()[0].clone();
    let TransformResult { metric, sandwich, .. } = if spherical { sphericalize(&space, &p)? } else { invert_metric(&space, &p)? };
    let quads: Vec<[usize; 4]> = (0..cfg.counts.quadruples)
        .map(|_| {
            let q = distinct4(r, pts.len() - 1);
            q.map(|i| i + 1)
        })
        .collect();
    let prof = crossratio_distortion(&space, &metric, &quads)?;
    let worst = prof.worst_against(|t| 16.0 * t);
    let n = pts.len() * (pts.len() - 1) / 2;
    Ok(vec![
        Check::at_least("sandwich_min_ratio", sandwich.min_ratio, 0.25 * (1.0 - 1e-12), n),
        Check::at_most("sandwich_max_ratio", sandwich.max_ratio, 1.0 + 1e-12, n),
        Check::at_most("crossratio_over_16t", worst, 1.0, prof.evaluated),
    ])
}

/// Largest distortion `max(max, 1/min)` of a ratio band.
fn band_constant(min: f64, max: f64) -> f64 {
    max.max(1.0 / min)
}

fn relation1(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let base = GroupPoint::origin(spec.n());
    let unit: Vec<Vec<f64>> = boundary_points(cfg, spec, r, cfg.counts.points, 1.0);
    let doubled: Vec<Vec<f64>> = unit.iter().map(|p| p.iter().map(|v| 2.0 * v).collect()).collect();
    let inv = |s: &[Vec<f64>]| -> Result<f64> {
        let b = compare_parabolic_vs_inversion(spec, &base, cfg.epsilon(), s)?;
        Ok(band_constant(b.min, b.max))
    };
    let vs_d = |s: &[Vec<f64>]| -> Result<f64> {
        let b = compare_parabolic_vs_d(spec, &base, s)?;
        Ok(band_constant(b.min, b.max))
    };
    let (i1, i2) = (inv(&unit)?, inv(&doubled)?);
    let (d1, d2) = (vs_d(&unit)?, vs_d(&doubled)?);
    let n = unit.len();
    Ok(vec![
        Check::at_most("inversion_band_growth", growth(i1, i2), STABLE_GROWTH, n),
        Check::holds("inversion_band_finite", i1.is_finite() && i2.is_finite(), n),
        Check::at_most("d_band_growth", growth(d1, d2), STABLE_GROWTH, n),
        Check::holds("d_band_finite", d1.is_finite() && d2.is_finite(), n),
    ])
}

fn qs_profile_campaign(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let pts = boundary_points(cfg, spec, r, cfg.counts.points.max(3), 1.0);
    let sim = CatalogMap::new(spec, MapSpec::Similarity { lambda: 2.0 })?;
    let sampled = SampledMap::from_map(&sim, pts)?;
    let prof = qs_profile(&sampled, spec, MetricKind::D, cfg.counts.triples, r.gen())?;
    let err = prof.samples.iter().map(|&(t, o)| (o - t).abs() / t).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("similarity_eta_error", err, 1e-9, prof.triples)];
    if rotation_mixes_blocks(spec) {
        let rot = CatalogMap::new(spec, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 })?;
        let eta = eta_one_at(&rot, spec, WITNESS_SCALE, r.gen())?;
        checks.push(Check::at_least("rotation_eta1_small_scale", eta, 10.0, 1));
    }
    Ok(checks)
}

fn leaf_grid(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let hw = cfg.sampling.half_width;
    let k = spec.blocks()[0].dim;
    let leaves = uniform_points(r, 6, spec.n() - k, -hw, hw);
    let xs = uniform_points(r, 8, k, -hw, hw);
    (leaves, xs)
}

/// Shear along the first coordinate driven by the second block; D-homogeneous on two blocks.
fn shear(spec: &Spectrum, l: f64) -> Result<CatalogMap> {
    CatalogMap::new(spec, MapSpec::Shear { l, exponent: spec.alpha(0) / spec.alpha(1) })
}

fn foliation(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    if spec.r() < 2 {
        return Ok(Vec::new());
    }
    let (leaves, xs) = leaf_grid(cfg, spec, r);
    let mut checks = Vec::new();
    let sim = CatalogMap::new(spec, MapSpec::Similarity { lambda: 2.0 })?;
    for (name, map) in [("shear", shear(spec, 1.0)?), ("similarity", sim)] {
        let rep = foliation_check(&leaf_grid_sample(&map, spec, &leaves, &xs)?, spec)?;
        checks.push(Check::at_most(&format!("{name}_leaf_spread"), rep.max_spread, 1e-9, rep.leaves));
        checks.push(Check::holds(&format!("{name}_preserves"), rep.verdict == FoliationVerdict::Preserves, rep.leaves));
    }
    if rotation_mixes_blocks(spec) {
        let rot = CatalogMap::new(spec, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 })?;
        let rep = foliation_check(&leaf_grid_sample(&rot, spec, &leaves, &xs)?, spec)?;
        checks.push(Check::holds("rotation_breaks", rep.verdict == FoliationVerdict::Breaks, rep.leaves));
        let eta = eta_one_at(&rot, spec, WITNESS_SCALE, r.gen())?;
        checks.push(Check::at_least("rotation_eta1_small_scale", eta, 10.0, 1));
    }
    Ok(checks)
}

fn factorize_campaign(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    if spec.r() < 2 {
        return Ok(Vec::new());
    }
    let (leaves, xs) = leaf_grid(cfg, spec, r);
    let lambda = 2.0;
    let sim = CatalogMap::new(spec, MapSpec::Similarity { lambda })?;
    let fact = factorize(&leaf_grid_sample(&sim, spec, &leaves, &xs)?, spec)?;
    let zero_x = vec![0.0; spec.blocks()[0].dim];
    let mut g_err = 0.0f64;
    for (y, gy) in &fact.g {
        let want = spec.dilate(lambda, &spec.join_leaf(&zero_x, y));
        g_err = g_err.max(spec.dist_dy(gy, spec.split_leaf(&want).1)?);
    }
    let mut h_err = 0.0f64;
    for leaf in &fact.h {
        for (x, hx) in &leaf.points {
            for (a, b) in x.iter().zip(hx) {
                h_err = h_err.max((lambda * a - b).abs());
            }
        }
    }
    let radii = [0.25, 0.5, 1.0, 2.0];
    let l1 = l1_inequality_check(&fact, spec, 1.0, &radii, cfg.tolerances.profile_slack)?;
    let sh = factorize(&leaf_grid_sample(&shear(spec, 1.0)?, spec, &leaves, &xs)?, spec)?;
    let l1_shear = l1_inequality_check(&sh, spec, 4.0, &radii, cfg.tolerances.profile_slack)?;
    Ok(vec![
        Check::at_most("similarity_leaf_map_error", g_err, 1e-12, fact.g.len()),
        Check::at_most("similarity_fiber_map_error", h_err, 1e-12, xs.len() * leaves.len()),
        Check::at_most("similarity_l1_violations", l1.violations as f64, 0.0, l1.checked),
        Check::at_most("shear_l1_violations", l1_shear.violations as f64, 0.0, l1_shear.checked),
    ])
}

fn main_bound(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let pts = boundary_points(cfg, spec, r, cfg.counts.points.max(3), 1.0);
    let mut checks = Vec::new();
    let sim = CatalogMap::new(spec, MapSpec::Similarity { lambda: 2.0 })?;
    let eta_sim = |t: f64| t;
    let rep = main_bound_check(&sim, spec, Some(&eta_sim), &pts, r.gen())?;
    checks.push(Check::at_most("similarity_k_hat_error", (rep.fit.k_hat - 1.0).abs(), 1e-9, rep.fit.pairs));
    if spec.r() == 2 {
        for l in [0.5, 1.0, 2.0] {
            let k = (1.0 + l) * (1.0 + l);
            let eta = move |t: f64| k * t;
            let rep = main_bound_check(&shear(spec, l)?, spec, Some(&eta), &pts, r.gen())?;
            checks.push(Check::at_most(&format!("shear_{l}_k_hat_over_analytic"), rep.fit.k_hat / k, 1.0, rep.fit.pairs));
            checks.push(Check::at_most(&format!("shear_{l}_analytic_over_bound"), k / rep.bound, 1.0, 1));
        }
    }
    if rotation_mixes_blocks(spec) {
        let rot = CatalogMap::new(spec, MapSpec::Rotation { theta: std::f64::consts::FRAC_PI_2 })?;
        let rejected = matches!(main_bound_check(&rot, spec, None, &pts, r.gen()), Err(Error::NotQuasisymmetric { .. }));
        checks.push(Check::holds("rotation_rejected", rejected, 1));
    }
    Ok(checks)
}

fn height_respect(cfg: &CampaignConfig, spec: &Spectrum, r: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let count = cfg.counts.points.clamp(2, 40);
    let opts = HeightOptions::default();
    let hw = cfg.sampling.half_width;
    let bpts = boundary_points(cfg, spec, r, cfg.counts.points.max(3), 1.0);
    let pts = group_points(cfg, spec, r, count);
    let wide: Vec<GroupPoint> = pts.iter().map(|p| GroupPoint::new(p.x.iter().map(|v| 2.0 * v).collect(), 2.0 * p.t)).collect();
    let run = |kind: GroupMapSpec, pts: &[GroupPoint]| {
        let f = CatalogGroupMap::new(spec, kind)?;
        let boundary = SampledMap::from_map(&f.trace()?, bpts.clone())?;
        height_respecting_check(&f, &boundary, spec, pts, &opts)
    };
    let shift = crate::sampling::uniform_vec(r, spec.n(), -hw, hw);
    let tr = run(GroupMapSpec::LeftTranslation { x: shift, s: 0.7 }, &pts)?;
    let mut factors = vec![1.0; spec.r()];
    factors[0] = 2.0;
    let dil = run(GroupMapSpec::BlockScale { factors: factors.clone() }, &pts)?;
    let dil_wide = run(GroupMapSpec::BlockScale { factors }, &wide)?;
    let n = count;
    Ok(vec![
        Check::at_most("translation_height_shift_spread", tr.height_shift_spread, 1e-9, n),
        Check::at_most("translation_k_hat", tr.boundary.k_hat, 1.0 + 1e-9, tr.boundary.pairs),
        Check::at_most("translation_almost_isometry_defect", tr.almost_isometry_defect, 1e-3, n),
        Check::holds("dilation_height_respecting", dil.height_respecting, n),
        Check::at_most("dilation_height_defect", dil.height_defect, opts.height_bound, n),
        Check::at_most("dilation_k_hat", dil.boundary.k_hat, 2.0, dil.boundary.pairs),
        Check::at_most(
            "dilation_defect_growth_doubled_box",
            growth(dil.almost_isometry_defect, dil_wide.almost_isometry_defect),
            STABLE_GROWTH,
            n,
        ),
    ])
}

fn modulus(cfg: &CampaignConfig, spec: &Spectrum) -> Result<Vec<Check>> {
    if spec.n() != 2 {
        return Ok(Vec::new());
    }
    let res = &cfg.modulus.resolutions;
    let count = cfg.modulus.curves;
    let opts = ModulusOptions::default();
    let q = spec.q();
    let cyl = build_cylinder_family(spec, &[0.0, 0.0], &[1.0, 0.0], 0.25, count)?;
    let bounds = GridBox { lo: vec![0.0, -0.25], hi: vec![1.0, 0.25] };
    let rows = modulus_refinement_study(spec, &cyl, Some(bounds), res, q, &opts)?;
    let worst = rows.iter().map(|row| (row.modulus - 0.5).abs() / 0.5).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("cylinder_relative_error", worst, 0.1, rows.len())];
    if spec.r() == 2 {
        let curves = (0..count)
            .map(|k| {
                let c = 0.5 * (k as f64 + 0.5) / count as f64;
                vec![vec![0.0, c], vec![1.0, c + 1.0]]
            })
            .collect();
        let diag = CurveFamily::new(spec, curves)?;
        let rows = modulus_refinement_study(spec, &diag, None, res, q, &opts)?;
        let decreasing = rows.windows(2).all(|w| w[1].modulus < w[0].modulus);
        checks.push(Check::holds("diagonal_strictly_decreasing", decreasing, rows.len()));
        checks.push(Check::at_most("diagonal_final", rows.last().unwrap().modulus, 0.05, rows.len()));
    }
    Ok(checks)
}
