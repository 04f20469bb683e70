//! Monte Carlo seminorms for analytic domains.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{bbox_volume, dist, Localization, SeminormEstimate};
use crate::error::{invalid, Result};
use crate::geometry::{DomainModel, Point};
use crate::par;

#[derive(Clone, Copy, Debug)]
pub struct MonteCarloOptions {
    pub samples: usize,
    /// Required: runs are reproducible only with an explicit seed.
    pub seed: Option<u64>,
}

const BATCH: usize = 4096;

pub(crate) fn sphere_area(n: usize) -> f64 {
    if n == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

pub(crate) fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let mut v = [0.0; 3];
        for x in v.iter_mut().take(n) {
            *x = StandardNormal.sample(rng);
        }
        let r = dist(&v, &[0.0; 3]);
        if r > 1e-12 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

/// `∫_G ∫_{G ∩ B(x, R(x))} |u(x)-u(y)|^p / |x-y|^{n+δp} dy dx`.
///
/// `x` is uniform in the bounding box; `y = x + ρθ` with `θ` uniform on the
/// sphere and `ρ ∈ (0, R]` drawn with density `∝ ρ^{p(1-δ)-1}`, which
/// cancels the kernel singularity: each sample contributes
/// `|S^{n-1}| R^a / a · (|u(x)-u(y)|/ρ)^p` with `a = p(1-δ)`.
pub fn seminorm_monte_carlo(
    d: &dyn DomainModel,
    u: &(dyn Fn(&Point) -> f64 + Sync),
    p: f64,
    delta: f64,
    loc: Localization,
    opts: &MonteCarloOptions,
) -> Result<SeminormEstimate> {
    let seed = opts.seed.ok_or_else(|| invalid("seed", "Monte Carlo seminorms need an explicit seed"))?;
    crate::error::check_exponents(p, p, delta)?;
    loc.validate()?;
    if matches!(loc, Localization::RhoCube { .. }) {
        return Err(invalid("localization", "Monte Carlo seminorms support tau and full localization"));
    }
    if opts.samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    let n = d.dim();
    let b = d.bbox();
    let diam = dist(&b.lo, &b.hi);
    let a = p * (1.0 - delta);
    let vol = bbox_volume(d);
    let batches = opts.samples.div_ceil(BATCH);
    let parts: Vec<(par::CompensatedSum, par::CompensatedSum, usize)> = par::map(batches, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(par::stream_seed(seed, k as u64));
        let count = BATCH.min(opts.samples - k * BATCH);
        let mut s = par::CompensatedSum::new();
        let mut s2 = par::CompensatedSum::new();
        for _ in 0..count {
            let mut x = [0.0; 3];
            for i in 0..n {
                x[i] = rng.gen_range(b.lo[i]..b.hi[i]);
            }
            if !d.contains(&x) {
                continue;
            }
            let r_max = match loc {
                Localization::Tau { tau } => tau * d.boundary_dist(&x),
                _ => diam,
            };
            if !(r_max > 0.0) {
                continue;
            }
            let rho = r_max * rng.gen::<f64>().max(f64::MIN_POSITIVE).powf(1.0 / a);
            let th = random_direction(n, &mut rng);
            let y = [x[0] + rho * th[0], x[1] + rho * th[1], x[2] + rho * th[2]];
            if !d.contains(&y) {
                continue;
            }
            let v = vol * sphere_area(n) * r_max.powf(a) / a * ((u(&x) - u(&y)).abs() / rho).powf(p);
            s.add(v);
            s2.add(v * v);
        }
        (s, s2, count)
    });
    let mut s = par::CompensatedSum::new();
    let mut s2 = par::CompensatedSum::new();
    for (a, b, _) in &parts {
        s.merge(a);
        s2.merge(b);
    }
    let m = opts.samples as f64;
    let mean = s.value() / m;
    let var = (s2.value() / m - mean * mean).max(0.0);
    Ok(SeminormEstimate {
        value: mean,
        method: "monte-carlo".into(),
        pair_count: opts.samples as u64,
        std_error: Some((var / m).sqrt()),
        localization: loc,
    })
}
