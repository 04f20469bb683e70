//! Piecewise-constant functions on voxel grids, fractional seminorms,
//! Poincaré ratios, constant estimation and the numeric lemma checks.

mod estimate;
mod lemmas;
pub(crate) mod monte_carlo;

pub use estimate::{estimate_constant, EstimateReport, Method};
pub use lemmas::{cube_lemma_check, cube_lemma_k, log_distance_integral, log_distance_sweep, CubeLemmaReport, LogIntegral, LogSweep};
pub use monte_carlo::{seminorm_monte_carlo, MonteCarloOptions};

use serde::{Deserialize, Serialize};

use crate::conditions::ExponentSet;
use crate::error::{invalid, Error, Result};
use crate::geometry::{DomainModel, DyadicCube, Point, VoxelDomain};
use crate::par;

/// One value per occupied voxel, in increasing grid-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFunctionFile {
    pub domain_hash: String,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(d: &VoxelDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != d.voxel_count() {
            return Err(invalid("values", format!("expected {} values, got {}", d.voxel_count(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "all values must be finite"));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(d: &VoxelDomain, f: impl Fn(&Point) -> f64) -> Result<Self> {
        Self::new(d, d.occupied().map(|i| f(&d.voxel_center(i))).collect())
    }

    pub fn affine(&self, a: f64, b: f64) -> Self {
        GridFunction { values: self.values.iter().map(|v| a * v + b).collect() }
    }
}

/// Sub-points per axis at which the localization ball is tested.
pub const SUB: usize = 4;

/// Voxel centres, clearances and sizes of a grid, in function order.
///
/// The τ-localization is decided on `SUB^n` sub-points per voxel rather
/// than at the centres alone: a boundary voxel has clearance `h/2` at its
/// centre, so a centre test would cut it off from every other voxel.
#[derive(Clone, Debug)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub centers: Vec<Point>,
    /// Per voxel, `(sub-point, clearance)` pairs.
    pub sub_points: Vec<Vec<(Point, f64)>>,
}

/// Offsets of the sub-points of a voxel of side `h`, relative to its centre.
pub fn sub_offsets(n: usize, h: f64) -> Vec<Point> {
    let m = SUB;
    let off = |i: usize| ((i as f64 + 0.5) / m as f64 - 0.5) * h;
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..if n == 3 { m } else { 1 } {
                out.push([off(i), off(j), if n == 3 { off(k) } else { 0.0 }]);
            }
        }
    }
    out
}

impl Grid {
    pub fn new(d: &VoxelDomain) -> Self {
        let idx: Vec<usize> = d.occupied().collect();
        let centers: Vec<Point> = idx.iter().map(|&i| d.voxel_center(i)).collect();
        let offsets = sub_offsets(d.n(), d.h());
        let sub_points = par::map_slice(&centers, |c| {
            offsets
                .iter()
                .map(|o| {
                    let x = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
                    (x, d.boundary_dist(&x))
                })
                .collect()
        });
        Grid { n: d.n(), h: d.h(), centers, sub_points }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Localization {
    /// Inner integral over `B(x, τ dist(x, ∂G))`.
    Tau { tau: f64 },
    Full,
    /// Both points in `Q`, inner integral over `B(y, ρ ℓ(Q))`.
    RhoCube { cube: DyadicCube, rho: f64 },
}

impl Localization {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Localization::Tau { tau } => crate::error::check_tau(tau),
            Localization::Full => Ok(()),
            Localization::RhoCube { rho, .. } => {
                if rho > 0.0 && rho < 1.0 {
                    Ok(())
                } else {
                    Err(invalid("rho", format!("must lie in (0,1), got {rho}")))
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Localization::Tau { .. } => "tau-localized",
            Localization::Full => "full",
            Localization::RhoCube { .. } => "rho-cube",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeminormEstimate {
    /// The double integral, before the `1/p` power.
    pub value: f64,
    pub method: String,
    pub pair_count: u64,
    pub std_error: Option<f64>,
    pub localization: Localization,
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Kernel `h^{2n} / |x_i - x_j|^{n+δp}` on the localized ordered pairs.
pub(crate) struct Kernel<'a> {
    pub grid: &'a Grid,
    pub exponent: f64,
    pub loc: Localization,
    in_cube: Vec<bool>,
    reach: Vec<f64>,
}

impl<'a> Kernel<'a> {
    pub fn new(grid: &'a Grid, p: f64, delta: f64, loc: Localization) -> Self {
        let in_cube = match loc {
            Localization::RhoCube { cube, .. } => {
                let b = cube.aabb(grid.n);
                grid.centers.iter().map(|c| b.contains_point(c)).collect()
            }
            _ => Vec::new(),
        };
        let reach = match loc {
            Localization::Tau { tau } => grid
                .sub_points
                .iter()
                .map(|s| s.iter().map(|x| tau * x.1).fold(0.0, f64::max) + grid.h * (grid.n as f64).sqrt())
                .collect(),
            _ => Vec::new(),
        };
        Kernel { grid, exponent: grid.n as f64 + delta * p, loc, in_cube, reach }
    }

    /// Weight of the ordered pair `(i, j)`, `i ≠ j`, or `None` outside the
    /// localization. Under τ-localization the weight is scaled by the share
    /// of sub-point pairs `(x, y)` of voxels `i` and `j` with
    /// `|x - y| < τ dist(x, ∂G)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = dist(&self.grid.centers[i], &self.grid.centers[j]);
        let share = match self.loc {
            Localization::Full => 1.0,
            Localization::Tau { tau } => {
                if r >= self.reach[i] {
                    return None;
                }
                let (si, sj) = (&self.grid.sub_points[i], &self.grid.sub_points[j]);
                let hit: usize =
                    si.iter().map(|(x, c)| sj.iter().filter(|(y, _)| dist(x, y) < tau * c).count()).sum();
                if hit == 0 {
                    return None;
                }
                hit as f64 / (si.len() * sj.len()) as f64
            }
            Localization::RhoCube { cube, rho } => {
                if !(self.in_cube[i] && self.in_cube[j] && r < rho * cube.side()) {
                    return None;
                }
                1.0
            }
        };
        Some(share * self.grid.cell_volume().powi(2) / r.powf(self.exponent))
    }
}

fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(values.iter().copied().collect::<par::CompensatedSum>().value() / values.len() as f64)
}

/// `Σ |u_i - u_G|^q h^n`.
pub fn oscillation_norm(grid: &Grid, u: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("must be >= 1, got {q}")));
    }
    let m = mean(&u.values)?;
    let s: par::CompensatedSum = u.values.iter().map(|v| (v - m).abs().powf(q)).collect();
    Ok(s.value() * grid.cell_volume())
}

/// Exact sum over ordered pairs of voxel centres.
pub fn fractional_seminorm(grid: &Grid, u: &GridFunction, p: f64, delta: f64, loc: Localization) -> Result<SeminormEstimate> {
    crate::error::check_exponents(p, p, delta)?;
    loc.validate()?;
    if u.values.len() != grid.len() {
        return Err(invalid("values", "function does not match the grid"));
    }
    let k = Kernel::new(grid, p, delta, loc);
    let n = grid.len();
    let v = &u.values;
    let rows: Vec<(f64, u64)> = par::map(n, |i| {
        let mut s = par::CompensatedSum::new();
        let mut count = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            if let Some(wt) = k.weight(i, j) {
                count += 1;
                if v[i] != v[j] {
                    s.add((v[i] - v[j]).abs().powf(p) * wt);
                }
            }
        }
        (s.value(), count)
    });
    let value = rows.iter().map(|r| r.0).collect::<par::CompensatedSum>().value();
    let pair_count = rows.iter().map(|r| r.1).sum();
    Ok(SeminormEstimate { value, method: "exact-pairs".into(), pair_count, std_error: None, localization: loc })
}

/// `oscillation_norm(u, q) / seminorm^{q/p}`: a lower bound for the constant.
pub fn poincare_ratio(grid: &Grid, u: &GridFunction, e: &ExponentSet, loc: Localization) -> Result<f64> {
    let s = fractional_seminorm(grid, u, e.p, e.delta, loc)?.value;
    if s <= 0.0 {
        return Err(Error::Numerical("ratio undefined: the seminorm vanishes".into()));
    }
    Ok(oscillation_norm(grid, u, e.q)? / s.powf(e.q / e.p))
}

/// Used by the Monte Carlo estimator to draw points of an analytic domain.
pub(crate) fn bbox_volume(d: &dyn DomainModel) -> f64 {
    let b = d.bbox();
    (0..d.dim()).map(|a| b.hi[a] - b.lo[a]).product()
}
