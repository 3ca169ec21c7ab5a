//! Seeded sample generators shared by tests and campaigns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::GroupPoint;
use crate::spectrum::Spectrum;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `k` derived from `seed`.
pub fn substream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

pub fn uniform_vec<R: Rng>(r: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

pub fn uniform_points<R: Rng>(r: &mut R, count: usize, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| uniform_vec(r, n, lo, hi)).collect()
}

pub fn group_point<R: Rng>(r: &mut R, n: usize, half_width: f64, t_lo: f64, t_hi: f64) -> GroupPoint {
    GroupPoint { x: uniform_vec(r, n, -half_width, half_width), t: r.gen_range(t_lo..t_hi) }
}

/// Uniform direction on the unit sphere of `R^n`.
pub fn unit_vector<R: Rng>(r: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v = uniform_vec(r, n, -1.0, 1.0);
        let nrm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if nrm > 1e-3 && nrm <= 1.0 {
            return v.into_iter().map(|c| c / nrm).collect();
        }
    }
}

/// Boundary pair `(p, q)` with `p` uniform in `[-half_width, half_width]^n` and
/// `D_e(p, q) = e^{log_de}` exactly up to rounding.
pub fn pair_at_de<R: Rng>(spec: &Spectrum, r: &mut R, half_width: f64, log_de: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.n();
    let p = uniform_vec(r, n, -half_width, half_width);
    let zero = vec![0.0; n];
    let u = unit_vector(r, n);
    let unit = spec.dilate(1.0 / spec.dist_de(&zero, &u)?, &u);
    let step = spec.dilate(log_de.exp(), &unit);
    let q = p.iter().zip(&step).map(|(a, b)| a + b).collect();
    Ok((p, q))
}

/// Four distinct indices below `n` (needs `n >= 4`).
pub fn distinct4<R: Rng>(r: &mut R, n: usize) -> [usize; 4] {
    loop {
        let q = [r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n)];
        if q[0] != q[1] && q[0] != q[2] && q[0] != q[3] && q[1] != q[2] && q[1] != q[3] && q[2] != q[3] {
            return q;
        }
    }
}

/// Three distinct indices below `n` (needs `n >= 3`).
pub fn distinct3<R: Rng>(r: &mut R, n: usize) -> [usize; 3] {
    loop {
        let q = [r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n)];
        if q[0] != q[1] && q[0] != q[2] && q[1] != q[2] {
            return q;
        }
    }
}
