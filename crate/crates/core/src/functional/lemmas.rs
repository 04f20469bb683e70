//! Numeric checks of the cube inequality and the logarithmic distance
//! integral near porous sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fractional_seminorm, oscillation_norm, Grid, GridFunction, Localization};
use crate::conditions::ExponentSet;
use crate::error::{invalid, Result};
use crate::geometry::{DyadicCube, Point, PointSet, Preset, VoxelDomain};
use crate::par;

/// Subdivision used by the constructive proof: two face-adjacent subcubes
/// of side `1/k` have diameter `√(n+3)/k ≤ ρ`.
pub fn cube_lemma_k(n: usize, rho: f64) -> usize {
    ((n as f64 + 3.0).sqrt() / rho).ceil() as usize
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeLemmaReport {
    pub j: i32,
    pub rho: f64,
    pub k: usize,
    pub trials: usize,
    /// Largest `mean|u - u_Q|^q / (|Q|^{q(δ/n-1/p)} S^{q/p})` seen.
    pub max_ratio: f64,
    /// The same ratio for the indicator of half the cube.
    pub half_cube_ratio: f64,
}

/// Random functions constant on blocks of a 2x or 4x subdivision of
/// `Q = [0,1]^n`, sampled on the `2^-j` grid.
pub fn cube_lemma_check(n: usize, e: &ExponentSet, rho: f64, j: i32, trials: usize, seed: u64) -> Result<CubeLemmaReport> {
    if !(e.q >= 1.0 && e.q <= e.p) {
        return Err(invalid("q", format!("need 1 ≤ q ≤ p, got q = {}, p = {}", e.q, e.p)));
    }
    crate::error::check_exponents(e.p, e.q, e.delta)?;
    if j < 2 {
        return Err(invalid("j", "the grid must resolve a 4x subdivision"));
    }
    let d = VoxelDomain::preset(Preset::UnitCube, n, j)?;
    let grid = Grid::new(&d);
    let q_cube = DyadicCube::new(0, [0; 3]);
    let loc = Localization::RhoCube { cube: q_cube, rho };
    loc.validate()?;
    let ratio = |u: &GridFunction| -> Result<f64> {
        let lhs = oscillation_norm(&grid, u, e.q)?;
        let s = fractional_seminorm(&grid, u, e.p, e.delta, loc)?.value;
        Ok(lhs / s.powf(e.q / e.p))
    };
    let half = GridFunction::from_fn(&d, |x| if x[0] < 0.5 { 1.0 } else { 0.0 })?;
    let half_cube_ratio = ratio(&half)?;
    let mut max_ratio: f64 = 0.0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(par::stream_seed(seed, t as u64));
        let c = 1 + (t % 2) as i32;
        let blocks = 1usize << (c * n as i32);
        let vals: Vec<f64> = (0..blocks).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFunction::from_fn(&d, |x| {
            let m = 1usize << c;
            let mut b = 0;
            for a in (0..n).rev() {
                b = b * m + ((x[a] * m as f64) as usize).min(m - 1);
            }
            vals[b]
        })?;
        max_ratio = max_ratio.max(ratio(&u)?);
    }
    Ok(CubeLemmaReport { j, rho, k: cube_lemma_k(n, rho), trials, max_ratio, half_cube_ratio })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogIntegral {
    pub r: f64,
    pub p: f64,
    pub value: f64,
    /// `value / (r^n (1 + log^p(1/r)))`.
    pub ratio: f64,
    /// Measure of cells centred on the set, left out of the sum.
    pub excluded_measure: f64,
}

/// Midpoint quadrature of `max(0, log(1/dist(y,S)))^p` over `B(x, r)`.
pub fn log_distance_integral(set: &dyn PointSet, x: &Point, r: f64, p: f64, cells_per_radius: usize) -> Result<LogIntegral> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", format!("need 0 < r ≤ 1, got {r}")));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if cells_per_radius < 64 {
        return Err(invalid("cells", "need at least 64 cells per radius"));
    }
    let n = set.dim();
    let m = 2 * cells_per_radius;
    let h = r / cells_per_radius as f64;
    let cell = h.powi(n as i32);
    let planes = if n == 3 { m } else { 1 };
    let rows: Vec<(par::CompensatedSum, usize)> = par::map(m * planes, |row| {
        let (i1, i2) = (row % m, row / m);
        let mut s = par::CompensatedSum::new();
        let mut excluded = 0;
        for i0 in 0..m {
            let mut y = *x;
            let off = [i0, i1, i2];
            let mut r2 = 0.0;
            for a in 0..n {
                let t = -r + (off[a] as f64 + 0.5) * h;
                y[a] += t;
                r2 += t * t;
            }
            if r2 >= r * r {
                continue;
            }
            let d = set.dist(&y);
            if d == 0.0 {
                excluded += 1;
                continue;
            }
            let l = (-d.ln()).max(0.0);
            if l > 0.0 {
                s.add(l.powf(p) * cell);
            }
        }
        (s, excluded)
    });
    let mut total = par::CompensatedSum::new();
    let mut excluded = 0;
    for (s, e) in &rows {
        total.merge(s);
        excluded += e;
    }
    let value = total.value();
    let denom = r.powi(n as i32) * (1.0 + (-r.ln()).powf(p));
    Ok(LogIntegral { r, p, value, ratio: value / denom, excluded_measure: excluded as f64 * cell })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogSweep {
    pub points: Vec<LogIntegral>,
    /// Smallest constant bounding every ratio.
    pub c_fit: f64,
    /// Largest over smallest ratio.
    pub spread: f64,
}

pub fn log_distance_sweep(set: &dyn PointSet, x: &Point, radii: &[f64], p: f64, cells_per_radius: usize) -> Result<LogSweep> {
    let points = radii.iter().map(|&r| log_distance_integral(set, x, r, p, cells_per_radius)).collect::<Result<Vec<_>>>()?;
    let c_fit = points.iter().map(|l| l.ratio).fold(0.0, f64::max);
    let lo = points.iter().map(|l| l.ratio).fold(f64::INFINITY, f64::min);
    Ok(LogSweep { points, c_fit, spread: c_fit / lo })
}
