//! Ball chains from the center to a point, with a geometric tail.

use std::f64::consts::PI;

use super::ChainDecomposition;
use crate::error::{invalid, Error, Result};
use crate::geometry::{DomainModel, DyadicCube, Point};
use crate::whitney::WhitneyDecomposition;

#[derive(Clone, Copy, Debug)]
pub struct BallChainOptions {
    /// Tail balls sit at distance `a · r` from the target.
    pub a: f64,
    /// Ratio of consecutive tail radii.
    pub theta: f64,
    pub tail: usize,
}

impl Default for BallChainOptions {
    fn default() -> Self {
        BallChainOptions { a: 1.6, theta: 0.6, tail: 40 }
    }
}

#[derive(Clone, Debug)]
pub struct BallChain {
    pub x: Point,
    pub m: f64,
    /// `(x_i, r_i)`, starting at the center.
    pub balls: Vec<(Point, f64)>,
    /// Index of the first tail ball.
    pub tail_start: usize,
    pub overlap_ratio: f64,
    pub dist_ratio: f64,
    pub clearance_ratio: f64,
    pub center_ratio: f64,
    pub overlap_count: usize,
    /// Smallest constant satisfying the overlap, distance, center and
    /// bounded-overlap conditions.
    pub c_fit: f64,
}

fn norm(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub(crate) fn ball_volume(r: f64, n: usize) -> f64 {
    if n == 2 {
        PI * r * r
    } else {
        4.0 / 3.0 * PI * r.powi(3)
    }
}

/// Volume of the intersection of two balls with center distance `d`.
pub(crate) fn lens_volume(r1: f64, r2: f64, d: f64, n: usize) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return ball_volume(r1.min(r2), n);
    }
    if n == 2 {
        let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
        let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
        let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
        r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k
    } else {
        PI * (r1 + r2 - d).powi(2) * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2).powi(2)) / (12.0 * d)
    }
}

/// Midpoint polyline from `center` through the chain of the cube holding
/// `x` to `x`. Needs a zone-free decomposition.
pub fn chain_path(w: &WhitneyDecomposition, cd: &ChainDecomposition, x: &Point, center: &Point) -> Result<Vec<Point>> {
    if !w.instances.is_empty() {
        return Err(invalid("decomposition", "materialize zone instances first"));
    }
    let n = w.n;
    let (lo, hi) = (w.cubes.first().map_or(0, |c| c.j), w.cubes.last().map_or(0, |c| c.j));
    let id = (lo..=hi)
        .find_map(|j| w.cubes.binary_search(&DyadicCube::containing(x, j, n)).ok())
        .ok_or_else(|| Error::RootOutside(x[..n].to_vec()))?;
    let mut path = vec![*center];
    path.extend(cd.chain(w, id).into_iter().map(|i| w.cubes[i].center(n)));
    path.push(*x);
    path.dedup_by(|a, b| norm(a, b) == 0.0);
    Ok(path)
}

/// Places balls `B(x_i, d(x_i)/2M)` along `path` (center first, target
/// last) with steps of at most half a radius, then a tail shrinking toward
/// the target, and measures the chain conditions.
pub fn build_ball_chain(domain: &dyn DomainModel, path: &[Point], m: f64, opts: &BallChainOptions) -> Result<BallChain> {
    if !(m > 1.0) {
        return Err(invalid("M", format!("need M > 1, got {m}")));
    }
    if !(opts.theta > 0.0 && opts.theta < 1.0 && opts.a > 1.0) {
        return Err(invalid("tail", "need 0 < θ < 1 and a > 1"));
    }
    let n = domain.dim();
    let x = *path.last().ok_or_else(|| invalid("path", "empty path"))?;
    let seg: Vec<f64> = path.windows(2).map(|p| norm(&p[0], &p[1])).collect();
    let total: f64 = seg.iter().sum();
    let at = |s: f64| -> Point {
        let mut s = s.min(total);
        for (i, &l) in seg.iter().enumerate() {
            if s <= l && l > 0.0 {
                return lerp(&path[i], &path[i + 1], s / l);
            }
            s -= l;
        }
        x
    };

    let mut balls = Vec::new();
    let mut s = 0.0;
    loop {
        let y = at(s);
        let r = domain.boundary_dist(&y) / (2.0 * m);
        if !(r > 0.0) {
            return Err(Error::InvalidChain { cube: balls.len(), reason: "ball center on the boundary".into() });
        }
        balls.push((y, r));
        if norm(&y, &x) <= opts.a * r || s >= total {
            break;
        }
        if balls.len() > 10_000_000 {
            return Err(Error::Numerical("ball chain does not reach the target".into()));
        }
        s += r / 2.0;
    }
    let tail_start = balls.len();
    let (y, r) = *balls.last().unwrap();
    let dy = norm(&y, &x);
    let mut e = [0.0; 3];
    if dy > 0.0 {
        for i in 0..3 {
            e[i] = (y[i] - x[i]) / dy;
        }
    } else {
        e[0] = 1.0;
    }
    let mut rt = r * opts.theta;
    for _ in 0..opts.tail {
        let c = [x[0] + opts.a * rt * e[0], x[1] + opts.a * rt * e[1], x[2] + opts.a * rt * e[2]];
        balls.push((c, rt));
        rt *= opts.theta;
    }

    let mut clearance_ratio = f64::INFINITY;
    for (i, (c, r)) in balls.iter().enumerate() {
        let ratio = (domain.boundary_dist(c) - r) / r;
        if ratio < m * (1.0 - 1e-12) {
            return Err(Error::InvalidChain { cube: i, reason: format!("dist(B_i, ∂G)/r_i = {ratio:.4} < M") });
        }
        clearance_ratio = clearance_ratio.min(ratio);
    }
    let mut overlap_ratio: f64 = 1.0;
    for p in balls.windows(2) {
        let (a, b) = (&p[0], &p[1]);
        let inter = lens_volume(a.1, b.1, norm(&a.0, &b.0), n);
        let union = ball_volume(a.1, n) + ball_volume(b.1, n) - inter;
        overlap_ratio = overlap_ratio.max(if inter > 0.0 { union / inter } else { f64::INFINITY });
    }
    let dist_ratio = balls.iter().map(|(c, r)| (norm(c, &x) - r).max(0.0) / r).fold(0.0, f64::max);
    let center_ratio = balls.iter().map(|(c, r)| norm(c, &x) / r).fold(0.0, f64::max);
    let overlap_count = max_overlap(&balls, n);
    let c_fit = overlap_ratio.max(dist_ratio).max(center_ratio).max(overlap_count as f64);
    Ok(BallChain {
        x,
        m,
        balls,
        tail_start,
        overlap_ratio,
        dist_ratio,
        clearance_ratio,
        center_ratio,
        overlap_count,
        c_fit,
    })
}

/// Largest number of balls containing one probe point. Probes are the
/// centers and a ring of points at half and full radius of every ball.
fn max_overlap(balls: &[(Point, f64)], n: usize) -> usize {
    let dirs: Vec<Point> = if n == 2 {
        (0..8).map(|k| {
            let t = k as f64 * PI / 4.0;
            [t.cos(), t.sin(), 0.0]
        })
        .collect()
    } else {
        vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
    };
    let mut best = 0;
    for (c, r) in balls {
        let mut probes = vec![*c];
        for d in &dirs {
            for f in [0.5, 0.999] {
                probes.push([c[0] + f * r * d[0], c[1] + f * r * d[1], c[2] + f * r * d[2]]);
            }
        }
        for p in probes {
            let k = balls.iter().filter(|(b, rb)| norm(&p, b) < *rb).count();
            best = best.max(k);
        }
    }
    best
}
