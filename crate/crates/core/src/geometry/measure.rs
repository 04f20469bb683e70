//! Porosity, Minkowski tube volumes and box-counting style dimension fits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pointset::PointSet;
use super::Point;
use crate::error::{invalid, Result};
use crate::par;
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PorosityWitness {
    pub x: Vec<f64>,
    pub r: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PorosityReport {
    /// Smallest observed `sup_{y in B(x,r)} min(1, dist(y,S)/r)`.
    pub kappa_hat: f64,
    /// Resolution floor `2^-J`: values below it are indistinguishable from zero.
    pub floor: f64,
    pub porous: bool,
    /// `(r, smallest value at that scale)`.
    pub per_scale: Vec<(f64, f64)>,
    pub failures: Vec<PorosityWitness>,
}

struct Cell {
    ub: f64,
    c: Point,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.ub == o.ub
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ub.total_cmp(&o.ub)
    }
}

/// Branch-and-bound lower estimate of `sup_{y in B(x,r)} min(1, dist(y,S)/r)`,
/// accurate to `r * 2^-J / 4`.
pub fn hole_ratio(set: &dyn PointSet, x: &Point, r: f64, j: u32) -> f64 {
    let n = set.dim();
    let sqrt_n = (n as f64).sqrt();
    let min_half = r * (-(j as f64) - 3.0).exp2();
    let value = |c: &Point| -> Option<f64> {
        let d2: f64 = (0..n).map(|a| (c[a] - x[a]).powi(2)).sum();
        (d2 < r * r).then(|| (set.dist(c) / r).min(1.0))
    };
    let mut best = value(x).unwrap_or(0.0);
    let mut heap = BinaryHeap::new();
    heap.push(Cell { ub: f64::INFINITY, c: *x, half: r });
    while let Some(cell) = heap.pop() {
        if cell.ub <= best || best >= 1.0 {
            break;
        }
        if cell.half < min_half {
            continue;
        }
        let h = 0.5 * cell.half;
        for m in 0..(1usize << n) {
            let mut c = cell.c;
            for a in 0..n {
                c[a] += if (m >> a) & 1 == 1 { h } else { -h };
            }
            // skip cells entirely outside the ball
            let gap2: f64 = (0..n).map(|a| ((c[a] - x[a]).abs() - h).max(0.0).powi(2)).sum();
            if gap2 >= r * r {
                continue;
            }
            let dc = set.dist(&c);
            if let Some(v) = value(&c) {
                best = best.max(v);
            }
            let ub = ((dc + h * sqrt_n) / r).min(1.0);
            if ub > best {
                heap.push(Cell { ub, c, half: h });
            }
        }
    }
    best
}

/// Samples `trials` centres per scale in the set's bounding box (grown by the
/// largest scale) and records the worst hole ratio.
pub fn porosity(
    set: &dyn PointSet,
    scales: &[f64],
    trials: usize,
    j: u32,
    seed: u64,
) -> Result<PorosityReport> {
    if scales.is_empty() || scales.iter().any(|&r| !(r > 0.0)) {
        return Err(invalid("scales", "need at least one positive scale"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let n = set.dim();
    let grow = scales.iter().cloned().fold(0.0, f64::max);
    let bb = set.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(scales.len() * trials);
    for &r in scales {
        for _ in 0..trials {
            let mut x = [0.0; 3];
            for a in 0..n {
                x[a] = rng.gen_range(bb.lo[a] - grow..=bb.hi[a] + grow);
            }
            jobs.push((r, x));
        }
    }
    let values = par::map_slice(&jobs, |(r, x)| hole_ratio(set, x, *r, j));
    let floor = (-(j as f64)).exp2();
    let mut per_scale = Vec::new();
    let mut failures = Vec::new();
    for (s, &r) in scales.iter().enumerate() {
        let slice = &values[s * trials..(s + 1) * trials];
        per_scale.push((r, slice.iter().cloned().fold(1.0, f64::min)));
        for (t, &v) in slice.iter().enumerate() {
            if v < floor {
                let x = jobs[s * trials + t].1;
                failures.push(PorosityWitness { x: x[..n].to_vec(), r, value: v });
            }
        }
    }
    let kappa_hat = values.iter().cloned().fold(1.0, f64::min);
    Ok(PorosityReport { kappa_hat, floor, porous: failures.is_empty(), per_scale, failures })
}

/// Lebesgue measure of `{x : dist(x,E) < r}`, counted on a grid of pitch
/// `r / cells_per_radius` with block-wise bounds so only cells near the tube
/// boundary are evaluated one by one.
pub fn tube_volume(set: &dyn PointSet, r: f64, cells_per_radius: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    if cells_per_radius < 4 {
        return Err(invalid("cells_per_radius", "must be at least 4"));
    }
    let n = set.dim();
    let h = r / cells_per_radius as f64;
    let bb = set.bbox();
    let mut origin = [0.0; 3];
    let mut dims = [1i64; 3];
    for a in 0..n {
        origin[a] = bb.lo[a] - r;
        dims[a] = ((bb.extent(a) + 2.0 * r) / h).ceil() as i64 + 1;
    }
    const TILE: i64 = 64;
    let mut tiles = Vec::new();
    let tz = if n == 3 { dims[2] } else { 1 };
    for z in (0..tz).step_by(TILE as usize) {
        for y in (0..dims[1]).step_by(TILE as usize) {
            for x in (0..dims[0]).step_by(TILE as usize) {
                let lo = [x, y, z];
                let mut hi = [1i64; 3];
                for a in 0..n {
                    hi[a] = (lo[a] + TILE).min(dims[a]);
                }
                if n == 2 {
                    hi[2] = 1;
                }
                tiles.push((lo, hi));
            }
        }
    }
    let counts = par::map_slice(&tiles, |(lo, hi)| count_block(set, n, &origin, h, r, *lo, *hi));
    let cells: u64 = counts.iter().sum();
    Ok(cells as f64 * h.powi(n as i32))
}

fn count_block(
    set: &dyn PointSet,
    n: usize,
    origin: &Point,
    h: f64,
    r: f64,
    lo: [i64; 3],
    hi: [i64; 3],
) -> u64 {
    let mut c = [0.0; 3];
    let mut rho2 = 0.0;
    let mut cells = 1u64;
    let mut widest = 0;
    for a in 0..n {
        let w = hi[a] - lo[a];
        cells *= w as u64;
        c[a] = origin[a] + h * (0.5 * (lo[a] + hi[a] - 1) as f64 + 0.5);
        rho2 += (0.5 * h * (w - 1) as f64).powi(2);
        if w > hi[widest] - lo[widest] {
            widest = a;
        }
    }
    let d = set.dist(&c);
    if cells == 1 {
        return (d < r) as u64;
    }
    let rho = rho2.sqrt();
    if d + rho < r {
        return cells;
    }
    if d - rho >= r {
        return 0;
    }
    let mid = (lo[widest] + hi[widest]) / 2;
    let (mut h1, mut l2) = (hi, lo);
    h1[widest] = mid;
    l2[widest] = mid;
    count_block(set, n, origin, h, r, lo, h1) + count_block(set, n, origin, h, r, l2, hi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionFit {
    pub dimension: f64,
    pub ci: (f64, f64),
    pub fit: LinearFit,
    /// `(r, tube volume)`
    pub samples: Vec<(f64, f64)>,
}

/// Dyadic radii `2^-k` between `r_min` and `r_max` inclusive.
pub fn dyadic_radii(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = (-r_max.log2()).ceil() as i32;
    loop {
        let r = (-(k as f64)).exp2();
        if r < r_min * (1.0 - 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// Estimates the Minkowski dimension as `n - slope` of `log |E_r|` against
/// `log r`.
pub fn dimension_fit(set: &dyn PointSet, radii: &[f64], cells_per_radius: usize) -> Result<DimensionFit> {
    if radii.len() < 2 {
        return Err(invalid("radii", "need at least two radii"));
    }
    let n = set.dim() as f64;
    let mut samples = Vec::new();
    for &r in radii {
        samples.push((r, tube_volume(set, r, cells_per_radius)?));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let fit = linear_fit(&x, &y).ok_or_else(|| invalid("radii", "degenerate radii"))?;
    let (lo, hi) = fit.slope_ci();
    Ok(DimensionFit { dimension: n - fit.slope, ci: (n - hi, n - lo), fit, samples })
}
