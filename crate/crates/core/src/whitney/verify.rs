use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{translate, WhitneyDecomposition};
use crate::error::{invalid, Result};
use crate::geometry::{DomainModel, DyadicCube};
use crate::par;
use crate::stats::linear_fit;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistViolation {
    pub id: usize,
    pub x: Vec<f64>,
    /// `dist(x, boundary) / diam(Q)`
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistEstReport {
    pub cubes_checked: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: Vec<DistViolation>,
}

/// Samples points of `Q* ∩ G` and checks
/// `3/4 diam Q <= dist(x, boundary) <= 6 diam Q`. Zone templates are checked
/// once, on their representative zone.
pub fn verify_dist_est(
    domain: &dyn DomainModel,
    w: &WhitneyDecomposition,
    samples_per_cube: usize,
    seed: u64,
) -> Result<DistEstReport> {
    if samples_per_cube == 0 {
        return Err(invalid("samples", "must be positive"));
    }
    let n = w.n;
    let mut todo: Vec<(usize, DyadicCube)> = w.cubes.iter().copied().enumerate().collect();
    for inst in &w.instances {
        let t = &w.templates[inst.template];
        if inst.host == t.rep_host {
            for (l, c) in t.cubes.iter().enumerate() {
                todo.push((inst.first_id + l, translate(c, &t.rep_host, &inst.host, n)));
            }
        }
    }
    let per_cube = par::map_slice(&todo, |(id, c)| {
        let mut rng = ChaCha8Rng::seed_from_u64(par::stream_seed(seed, *id as u64));
        let star = c.star(n);
        let diam = c.diam(n);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut bad = Vec::new();
        let mut taken = 0;
        let mut tries = 0;
        while taken < samples_per_cube && tries < 64 * samples_per_cube {
            tries += 1;
            let mut x = [0.0; 3];
            for a in 0..n {
                x[a] = rng.gen_range(star.lo[a]..star.hi[a]);
            }
            if !domain.contains(&x) {
                continue;
            }
            taken += 1;
            let r = domain.boundary_dist(&x) / diam;
            lo = lo.min(r);
            hi = hi.max(r);
            if !(0.75..=6.0).contains(&r) {
                bad.push(DistViolation { id: *id, x: x[..n].to_vec(), ratio: r });
            }
        }
        (taken, lo, hi, bad)
    });
    let mut rep = DistEstReport {
        cubes_checked: todo.len(),
        samples: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    for (taken, lo, hi, bad) in per_cube {
        rep.samples += taken;
        rep.min_ratio = rep.min_ratio.min(lo);
        rep.max_ratio = rep.max_ratio.max(hi);
        rep.violations.extend(bad);
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationCount {
    pub j: i32,
    pub count: u64,
    /// `2^(-lambda j) #W_j`
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountingReport {
    pub lambda: f64,
    pub generations: Vec<GenerationCount>,
    pub sup: f64,
    /// Slope of `log2` of the normalised counts over the finer half of the
    /// generations (truncation generation excluded).
    pub tail_slope: f64,
    pub bounded: bool,
}

/// Per-generation counts normalised by `2^(lambda j)`.
pub fn whitney_counting(w: &WhitneyDecomposition, lambda: f64) -> CountingReport {
    let generations: Vec<GenerationCount> = w
        .generation_counts()
        .into_iter()
        .map(|(j, count)| GenerationCount { j, count, normalized: count as f64 * (-lambda * j as f64).exp2() })
        .collect();
    let sup = generations.iter().map(|g| g.normalized).fold(0.0, f64::max);
    let usable: Vec<&GenerationCount> = generations.iter().filter(|g| g.j < w.j_max).collect();
    let tail = &usable[usable.len() / 2..];
    let tail_slope = if tail.len() >= 2 {
        let x: Vec<f64> = tail.iter().map(|g| g.j as f64).collect();
        let y: Vec<f64> = tail.iter().map(|g| g.normalized.log2()).collect();
        linear_fit(&x, &y).map(|f| f.slope).unwrap_or(0.0)
    } else {
        0.0
    };
    CountingReport { lambda, generations, sup, tail_slope, bounded: tail_slope < 0.15 }
}
