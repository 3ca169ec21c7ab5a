//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use solvbound::boundary::{
    chain_metrize, compare_parabolic_vs_d, compare_parabolic_vs_inversion, epsilon0_default, invert_metric,
    parabolic_table, sphericalize, SampledSpace, SpaceKind, VisualParams,
};
use solvbound::geometry::{
    busemann_xi0_numeric, distance, g3_defect, left_translate, quasicenter, G3Outcome,
};
use solvbound::maps::{
    foliation_check, height_respecting_check, leaf_grid_sample, main_bound_check, scale_divergence, CatalogGroupMap,
    CatalogMap, FoliationVerdict, GroupMapSpec, HeightOptions, MapSpec, SampledMap,
};
use solvbound::modulus::{build_cylinder_family, modulus_refinement_study, CurveFamily, GridBox, ModulusOptions};
use solvbound::sampling::{distinct4, group_point, pair_at_de, rng, uniform_points, uniform_vec, unit_vector};
use solvbound::{BoundaryPoint, BoundaryVector, GroupPoint, Spectrum};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn s2() -> Spectrum {
    Spectrum::new(&[(1, 1.0), (1, 2.0)]).unwrap()
}

fn r1(alpha: f64) -> Spectrum {
    Spectrum::new(&[(1, alpha)]).unwrap()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Upper half-space distance after `X = alpha x`, `y = e^{alpha t}`, scaled by `1/alpha`.
fn half_space_distance(alpha: f64, p: &GroupPoint, q: &GroupPoint) -> f64 {
    let (y1, y2) = ((alpha * p.t).exp(), (alpha * q.t).exp());
    let num = alpha * alpha * sq(&p.x, &q.x) + (y1 - y2) * (y1 - y2);
    (1.0 + num / (2.0 * y1 * y2)).acosh() / alpha
}

/// `max_i |x_i - y_i|^{1/alpha_i}` with Euclidean block norms.
fn ds_direct(spec: &Spectrum, x: &[f64], y: &[f64]) -> f64 {
    (0..spec.r())
        .map(|i| sq(&x[spec.block_range(i)], &y[spec.block_range(i)]).sqrt().powf(1.0 / spec.alpha(i)))
        .fold(0.0, f64::max)
}

fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / k as f64 * unit_ball_volume(k - 2),
    }
}

fn growth(a: f64, b: f64) -> f64 {
    (b - a) / a.max(1e-6)
}

fn norms() -> Outcome {
    let start = Instant::now();
    let spectra = [
        Spectrum::new(&[(2, 0.5)]).unwrap(),
        s2(),
        Spectrum::new(&[(1, 1.0), (2, 1.5), (1, 3.0)]).unwrap(),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut r = rng(1);
    for spec in &spectra {
        let c = (spec.r() as f64).powf(1.0 / (2.0 * spec.alpha(0)));
        for _ in 0..10_000 {
            let x = uniform_vec(&mut r, spec.n(), -10.0, 10.0);
            let scale = 10f64.powf(r.gen_range(-3.0..3.0));
            let step = spec.dilate(scale, &unit_vector(&mut r, spec.n()));
            let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let ds = ds_direct(spec, &x, &y);
            let de = spec.dist_de(&x, &y).unwrap();
            worst = worst.max((ds - de) / ds).max((de - c * ds) / ds);
        }
    }
    let t = start.elapsed();
    outcome(worst <= 1e-9 && t < Duration::from_secs(10), format!("max relative violation {worst:.3e}, {t:.2?}"))
}

/// Pairs drawn for the oracle comparison; shared with the lower-bound criterion.
fn oracle_pairs(alpha: f64, r: &mut ChaCha8Rng) -> Vec<(GroupPoint, GroupPoint)> {
    let mut out = Vec::new();
    while out.len() < 200 {
        let p = group_point(r, 1, 2.0, -2.0, 2.0);
        let q = group_point(r, 1, 2.0, -2.0, 2.0);
        if half_space_distance(alpha, &p, &q) <= 10.0 {
            out.push((p, q));
        }
    }
    out
}

fn distance_oracle(lower: &mut Vec<f64>) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut r = rng(2);
    for alpha in [0.5, 1.0, 2.0] {
        let spec = r1(alpha);
        for (p, q) in oracle_pairs(alpha, &mut r) {
            let d = distance(&spec, &p, &q).unwrap().distance;
            let o = half_space_distance(alpha, &p, &q);
            worst = worst.max((d - o).abs() / o);
            lower.push(d - (p.t - q.t).abs());
        }
    }
    let t = start.elapsed();
    outcome(worst <= 1e-4 && t < Duration::from_secs(60), format!("max relative error {worst:.3e}, {t:.2?}"))
}

fn left_invariance(lower: &mut Vec<f64>) -> Outcome {
    let spec = s2();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let [g, p, q] = [(); 3].map(|_| group_point(&mut r, 2, 2.0, -2.0, 2.0));
        let d = distance(&spec, &p, &q).unwrap().distance;
        let gp = left_translate(&spec, &g, &p).unwrap();
        let gq = left_translate(&spec, &g, &q).unwrap();
        let moved = distance(&spec, &gp, &gq).unwrap().distance;
        worst = worst.max((moved - d).abs());
        lower.push(d - (p.t - q.t).abs());
        lower.push(moved - (gp.t - gq.t).abs());
    }
    outcome(worst <= 1e-3, format!("max |d(gp,gq) - d(p,q)| {worst:.3e}"))
}

fn lower_bound(slacks: &[f64]) -> Outcome {
    let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(worst >= -1e-6, format!("min d - |t1 - t2| {worst:.3e} over {} pairs", slacks.len()))
}

fn busemann() -> Outcome {
    let spec = s2();
    let base = GroupPoint::origin(2);
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = group_point(&mut r, 2, 2.0, -2.0, 2.0);
        let b = busemann_xi0_numeric(&spec, &base, &p, 20.0).unwrap().value;
        worst = worst.max((b - (base.t - p.t)).abs());
    }
    outcome(worst <= 1e-2, format!("max error {worst:.3e}"))
}

fn max_defect(spec: &Spectrum, range: f64, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..100)
        .map(|_| {
            let l = r.gen_range(-range..range);
            let (p, q) = pair_at_de(spec, &mut r, 2.0, l).unwrap();
            quasicenter(spec, &p, &q).unwrap().defect
        })
        .fold(0.0, f64::max)
}

fn quasicenters() -> Outcome {
    let spec = s2();
    let narrow = max_defect(&spec, 5.0, 6);
    let wide = max_defect(&spec, 8.0, 6);
    let g = growth(narrow, wide);
    outcome(narrow <= 5.0 && g < 0.1, format!("max defect {narrow:.4}, wide-range growth {:.2}%", 100.0 * g))
}

fn g3() -> Outcome {
    let spec = s2();
    let mut r = rng(7);
    let mut slack = f64::INFINITY;
    for _ in 0..100 {
        let l = r.gen_range(-3.0..3.0);
        let (p, q) = pair_at_de(&spec, &mut r, 2.0, l).unwrap();
        let t0 = spec.de_height(&p, &q).unwrap();
        let (t1, t2) = (t0 + r.gen_range(0.0..3.0), t0 + r.gen_range(-3.0..3.0));
        match g3_defect(&spec, &p, &q, t1, t2).unwrap() {
            G3Outcome::Above { lower_slack, upper_slack, .. } => slack = slack.min(lower_slack).min(upper_slack),
            G3Outcome::Below { .. } => slack = f64::NEG_INFINITY,
        }
    }
    let one = r1(1.0);
    let mut defect = 0.0f64;
    for _ in 0..100 {
        let p: f64 = r.gen_range(-2.0..2.0);
        let q = p + r.gen_range(0.05..3.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t0 = (p - q).abs().ln();
        let (t1, t2) = (t0 - 1.0 - r.gen_range(0.0..4.0), t0 - 1.0 - r.gen_range(0.0..4.0));
        let d = half_space_distance(1.0, &GroupPoint::new(vec![p], t1), &GroupPoint::new(vec![q], t2));
        let closed = d - (t0 - t1) - (t0 - t2);
        match g3_defect(&one, &[p], &[q], t1, t2).unwrap() {
            G3Outcome::Below { defect: got, .. } if (got - closed).abs() < 1e-6 => defect = defect.max(closed.abs()),
            _ => defect = f64::INFINITY,
        }
    }
    outcome(
        slack >= -1e-3 && defect <= 1.2,
        format!("min upper-regime slack {slack:.3e}, max lower-regime |defect| {defect:.4}"),
    )
}

/// `(min, max)` of `metric / quasi` over all pairs.
fn ratio_range(quasi: &SampledSpace, metric: &SampledSpace) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..quasi.len() {
        for j in 0..i {
            let q = quasi.d(i, j);
            if q > 0.0 {
                let v = metric.d(metric.index_of(&quasi.labels()[i]).unwrap(), metric.index_of(&quasi.labels()[j]).unwrap()) / q;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

fn parabolic_visual() -> Outcome {
    let spec = s2();
    let pts = uniform_points(&mut rng(8), 200, 2, -2.0, 2.0);
    let params = VisualParams { xi: BoundaryPoint::Xi0, base: GroupPoint::origin(2), epsilon: epsilon0_default(&spec) };
    let quasi = parabolic_table(&spec, &params, &pts).unwrap();
    let (lo, hi) = ratio_range(&quasi, &chain_metrize(&quasi));
    outcome(lo >= 0.5 && hi <= 1.0 + 1e-12, format!("chain/quasi ratio in [{lo:.4}, {hi:.4}]"))
}

fn crossratio(d: &dyn Fn(usize, usize) -> f64, [a, b, c, e]: [usize; 4]) -> f64 {
    d(a, c) * d(b, e) / (d(a, e) * d(b, c))
}

fn inversion_sphericalization() -> Outcome {
    let spec = s2();
    let mut r = rng(9);
    let pts = uniform_points(&mut r, 200, 2, -2.0, 2.0);
    let labels: Vec<String> = (0..pts.len()).map(|k| format!("p{k}")).collect();
    let space =
        SampledSpace::from_fn(labels.clone(), pts.clone(), SpaceKind::Metric, |i, j| spec.dist_d(&pts[i], &pts[j])).unwrap();
    let dd = |i: usize, j: usize| spec.dist_d(&pts[i], &pts[j]).unwrap();
    let inv = invert_metric(&space, "p0").unwrap();
    let sph = sphericalize(&space, "p0").unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 1..pts.len() {
        for j in 1..i {
            let rho = dd(i, j) / (dd(i, 0) * dd(j, 0));
            let s = dd(i, j) / ((1.0 + dd(i, 0)) * (1.0 + dd(j, 0)));
            let a = inv.metric.d(inv.metric.index_of(&labels[i]).unwrap(), inv.metric.index_of(&labels[j]).unwrap());
            let b = sph.metric.d(sph.metric.index_of(&labels[i]).unwrap(), sph.metric.index_of(&labels[j]).unwrap());
            for v in [a / rho, b / s] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let mut eta = 0.0f64;
    for _ in 0..10_000 {
        let q = distinct4(&mut r, pts.len() - 1).map(|i| i + 1);
        let t = crossratio(&dd, q);
        for m in [&inv.metric, &sph.metric] {
            let idx = |k: usize| m.index_of(&labels[k]).unwrap();
            let out = crossratio(&|a, b| m.d(idx(a), idx(b)), q);
            eta = eta.max(out / (16.0 * t));
        }
    }
    outcome(
        lo >= 0.25 * (1.0 - 1e-12) && hi <= 1.0 + 1e-12 && eta <= 1.0,
        format!("metric/quasi in [{lo:.4}, {hi:.4}], max eta_hat(t)/16t {eta:.4}"),
    )
}

fn band(min: f64, max: f64) -> f64 {
    max.max(1.0 / min)
}

fn relation_inversion() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in [("r=1", r1(1.0)), ("S2", s2())] {
        let base = GroupPoint::origin(spec.n());
        let eps = epsilon0_default(&spec);
        let pts = uniform_points(&mut rng(10), 40, spec.n(), -1.0, 1.0);
        let wide: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| 2.0 * v).collect()).collect();
        let a = compare_parabolic_vs_inversion(&spec, &base, eps, &pts).unwrap();
        let b = compare_parabolic_vs_inversion(&spec, &base, eps, &wide).unwrap();
        let (la, lb) = (band(a.min, a.max), band(b.min, b.max));
        let g = growth(la, lb);
        ok &= la.is_finite() && lb.is_finite() && g < 0.25;
        parts.push(format!("{name} L {la:.4} -> {lb:.4} ({:+.2}%)", 100.0 * g));
    }
    outcome(ok, parts.join(", "))
}

fn relation_d() -> Outcome {
    let spec = s2();
    let base = GroupPoint::origin(2);
    let pts = uniform_points(&mut rng(11), 200, 2, -1.0, 1.0);
    let wide: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| 2.0 * v).collect()).collect();
    let a = compare_parabolic_vs_d(&spec, &base, &pts).unwrap();
    let b = compare_parabolic_vs_d(&spec, &base, &wide).unwrap();
    let (la, lb) = (band(a.min, a.max), band(b.min, b.max));
    let g = growth(la, lb);
    outcome(la.is_finite() && lb.is_finite() && g < 0.25, format!("L {la:.4} -> {lb:.4} ({:+.2}%)", 100.0 * g))
}

fn modulus() -> Outcome {
    let start = Instant::now();
    let spec = s2();
    let res = [64, 128, 256];
    let opts = ModulusOptions::default();
    // h * l^{1-Q} for the flat cylinder of cross-section h = 0.5 and length l = 1
    let exact = 0.5;
    let cyl = build_cylinder_family(&spec, &[0.0, 0.0], &[1.0, 0.0], 0.25, 512).unwrap();
    let bounds = GridBox { lo: vec![0.0, -0.25], hi: vec![1.0, 0.25] };
    let c = modulus_refinement_study(&spec, &cyl, Some(bounds), &res, 3.0, &opts).unwrap();
    let curves = (0..512)
        .map(|k| {
            let o = 0.5 * (k as f64 + 0.5) / 512.0;
            vec![vec![0.0, o], vec![1.0, o + 1.0]]
        })
        .collect();
    let diag = CurveFamily::new(&spec, curves).unwrap();
    let d = modulus_refinement_study(&spec, &diag, None, &res, 3.0, &opts).unwrap();
    let t = start.elapsed();
    let cyl_ok = c.iter().all(|row| (row.modulus - exact).abs() <= 0.1 * exact);
    let decreasing = d.windows(2).all(|w| w[1].modulus < w[0].modulus);
    let last = d[2].modulus;
    outcome(
        cyl_ok && decreasing && last <= 0.05 && t < Duration::from_secs(300),
        format!(
            "cylinder {:.4}/{:.4}/{:.4}, diagonal {:.3e}/{:.3e}/{:.3e}, {t:.2?}",
            c[0].modulus, c[1].modulus, c[2].modulus, d[0].modulus, d[1].modulus, d[2].modulus
        ),
    )
}

fn q_regularity() -> Outcome {
    let mut worst = 0.0f64;
    for spec in [s2(), Spectrum::new(&[(2, 1.0), (1, 2.5)]).unwrap()] {
        let c: f64 = spec.blocks().iter().map(|b| unit_ball_volume(b.dim)).product();
        for rad in [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let got = spec.ball_measure(rad).unwrap();
            let scaled = spec.ball_measure(1.0).unwrap() * rad.powf(spec.q());
            worst = worst.max((got - scaled).abs() / scaled).max((got - c * rad.powf(spec.q())).abs() / got);
        }
    }
    outcome(worst <= 1e-12, format!("max relative deviation {worst:.3e}"))
}

fn foliation() -> Outcome {
    let spec = s2();
    let mut r = rng(14);
    let leaves = uniform_points(&mut r, 6, 1, -2.0, 2.0);
    let xs = uniform_points(&mut r, 8, 1, -2.0, 2.0);
    let check = |kind: MapSpec| {
        let map = CatalogMap::new(&spec, kind).unwrap();
        foliation_check(&leaf_grid_sample(&map, &spec, &leaves, &xs).unwrap(), &spec).unwrap()
    };
    let shear = check(MapSpec::Shear { l: 1.0, exponent: 0.5 });
    let sim = check(MapSpec::Similarity { lambda: 3.0 });
    let rotation = MapSpec::Rotation { theta: PI / 2.0 };
    let rot = check(rotation.clone());
    let eta = scale_divergence(&CatalogMap::new(&spec, rotation).unwrap(), &spec, &[0.0, 0.0], &[1e-3], 14).unwrap()[0].1;
    let ok = shear.max_spread <= 1e-9
        && sim.max_spread <= 1e-9
        && shear.verdict == FoliationVerdict::Preserves
        && sim.verdict == FoliationVerdict::Preserves
        && rot.verdict == FoliationVerdict::Breaks
        && eta > 10.0;
    outcome(
        ok,
        format!(
            "shear {:?} {:.1e}, similarity {:?} {:.1e}, rotation {:?} with eta_hat(1) {eta:.3e} at 1e-3",
            shear.verdict, shear.max_spread, sim.verdict, sim.max_spread, rot.verdict
        ),
    )
}

fn main_bound() -> Outcome {
    let spec = s2();
    let pts = uniform_points(&mut rng(15), 60, 2, -2.0, 2.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [0.5, 1.0, 2.0] {
        let k = (1.0f64 + l).powi(2);
        let eta = move |t: f64| k * t;
        let map = CatalogMap::new(&spec, MapSpec::Shear { l, exponent: 0.5 }).unwrap();
        let rep = main_bound_check(&map, &spec, Some(&eta), &pts, 15).unwrap();
        let bound = (eta(1.0) / (1.0 / k)).powi(2 * spec.r() as i32 + 2);
        ok &= rep.fit.k_hat <= k && k <= bound && (rep.bound / bound - 1.0).abs() < 1e-9;
        parts.push(format!("L={l}: K {:.4} <= {k}", rep.fit.k_hat));
    }
    let sim = CatalogMap::new(&spec, MapSpec::Similarity { lambda: 2.0 }).unwrap();
    let id = |t: f64| t;
    let k = main_bound_check(&sim, &spec, Some(&id), &pts, 15).unwrap().fit.k_hat;
    ok &= (k - 1.0).abs() <= 1e-9;
    parts.push(format!("similarity K - 1 = {:.1e}", k - 1.0));
    outcome(ok, parts.join(", "))
}

fn height_respecting() -> Outcome {
    let spec = s2();
    let opts = HeightOptions::default();
    let mut r = rng(16);
    let bpts = uniform_points(&mut r, 60, 2, -2.0, 2.0);
    let pts: Vec<GroupPoint> = (0..30).map(|_| group_point(&mut r, 2, 2.0, -2.0, 2.0)).collect();
    let wide: Vec<GroupPoint> = pts.iter().map(|p| GroupPoint::new(p.x.iter().map(|v| 2.0 * v).collect(), 2.0 * p.t)).collect();
    let run = |kind: GroupMapSpec, pts: &[GroupPoint]| {
        let f = CatalogGroupMap::new(&spec, kind).unwrap();
        let boundary = SampledMap::from_map(&f.trace().unwrap(), bpts.clone()).unwrap();
        height_respecting_check(&f, &boundary, &spec, pts, &opts).unwrap()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (x, s) in [(vec![0.5, -0.25], 0.7), (vec![-1.0, 2.0], -1.3)] {
        let rep = run(GroupMapSpec::LeftTranslation { x, s }, &pts);
        ok &= rep.height_shift_spread <= 1e-9 && rep.boundary.k_hat <= 2.0 && rep.almost_isometry_defect <= 1e-3;
        parts.push(format!("translation K {:.4} defect {:.1e}", rep.boundary.k_hat, rep.almost_isometry_defect));
    }
    let dil = GroupMapSpec::BlockScale { factors: vec![2.0, 1.0] };
    let a = run(dil.clone(), &pts);
    let b = run(dil, &wide);
    let g = growth(a.almost_isometry_defect, b.almost_isometry_defect);
    ok &= a.height_respecting && a.height_defect <= opts.height_bound && a.boundary.k_hat <= 2.0 && g < 0.25;
    parts.push(format!(
        "dilation height defect {:.1e}, K {:.4}, almost-isometry defect {:.4} -> {:.4}",
        a.height_defect, a.boundary.k_hat, a.almost_isometry_defect, b.almost_isometry_defect
    ));
    outcome(ok, parts.join("; "))
}

fn d_length() -> Outcome {
    let spec = s2();
    let seg = [BoundaryVector(vec![0.3, 0.0]), BoundaryVector(vec![0.3, 1.0])];
    let mut worst = 0.0f64;
    for n in [4usize, 16, 64] {
        let len = spec.d_length(&seg, n).unwrap();
        worst = worst.max((len - (n as f64).sqrt()).abs() / (n as f64).sqrt());
    }
    outcome(worst <= 1e-12, format!("max relative deviation from sqrt(N) {worst:.3e}"))
}

fn main() -> ExitCode {
    let mut lower = Vec::new();
    let mut results: Vec<(&str, Outcome, Duration)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed();
        println!("{} [{name}] {} ({el:.2?})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o, el));
    };
    run("01 norm sandwich", &mut norms);
    run("02 distance oracle", &mut || distance_oracle(&mut lower));
    run("03 left invariance", &mut || left_invariance(&mut lower));
    let slacks = lower.clone();
    run("04 distance lower bound", &mut || lower_bound(&slacks));
    run("05 busemann", &mut busemann);
    run("06 quasicenter", &mut quasicenters);
    run("07 two-regime estimate", &mut g3);
    run("08 parabolic chain sandwich", &mut parabolic_visual);
    run("09 inversion and sphericalization", &mut inversion_sphericalization);
    run("10 parabolic vs inverted visual", &mut relation_inversion);
    run("11 parabolic vs D", &mut relation_d);
    run("12 modulus dichotomy", &mut modulus);
    run("13 Q-regularity", &mut q_regularity);
    run("14 foliation detection", &mut foliation);
    run("15 quasisimilarity bound", &mut main_bound);
    run("16 height-respecting maps", &mut height_respecting);
    run("17 snowflake length", &mut d_length);
    let failed = results.iter().filter(|r| !r.1.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
