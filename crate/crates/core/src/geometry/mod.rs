//! Domains, dyadic cubes and distance queries.

pub mod bvh;
pub mod measure;
pub mod pointset;
pub mod voxel;

pub use bvh::BoxTree;
pub use pointset::PointSet;
pub use voxel::{Preset, VoxelDomain};

use serde::{Deserialize, Serialize};

/// Points always carry three coordinates; unused trailing ones are zero.
pub type Point = [f64; 3];

/// Axis-aligned closed box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        Aabb { lo, hi }
    }

    pub fn point(p: Point) -> Self {
        Aabb { lo: p, hi: p }
    }

    pub fn empty() -> Self {
        Aabb { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        let mut b = *self;
        for a in 0..3 {
            b.lo[a] = b.lo[a].min(o.lo[a]);
            b.hi[a] = b.hi[a].max(o.hi[a]);
        }
        b
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for a in 0..3 {
            c[a] = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self, n: usize) -> f64 {
        (0..n).map(|a| self.extent(a).max(0.0)).product()
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn dist2_point(&self, p: &Point) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let g = (self.lo[a] - p[a]).max(p[a] - self.hi[a]).max(0.0);
            d += g * g;
        }
        d
    }

    /// Squared distance between two closed boxes.
    #[inline]
    pub fn dist2_box(&self, o: &Aabb) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let g = (o.lo[a] - self.hi[a]).max(self.lo[a] - o.hi[a]).max(0.0);
            d += g * g;
        }
        d
    }

    /// Largest squared distance from `p` to a point of the box.
    pub fn max_dist2_point(&self, p: &Point) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let g = (p[a] - self.lo[a]).abs().max((self.hi[a] - p[a]).abs());
            d += g * g;
        }
        d
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Strict interior membership on the first `n` axes.
    pub fn interior_contains(&self, p: &Point, n: usize) -> bool {
        (0..n).all(|a| p[a] > self.lo[a] && p[a] < self.hi[a])
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        (0..3).all(|a| o.lo[a] >= self.lo[a] && o.hi[a] <= self.hi[a])
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        (0..3).all(|a| o.lo[a] <= self.hi[a] && self.lo[a] <= o.hi[a])
    }

    /// Open boxes overlap on the first `n` axes.
    pub fn overlaps_open(&self, o: &Aabb, n: usize) -> bool {
        (0..n).all(|a| o.lo[a] < self.hi[a] && self.lo[a] < o.hi[a])
    }
}

/// Dyadic cube `2^-j ([0,1]^n + k)`. Ordering is by generation, then
/// lexicographically by `k`; cube ids follow this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: i32,
    pub k: [i64; 3],
}

impl DyadicCube {
    pub fn new(j: i32, k: [i64; 3]) -> Self {
        DyadicCube { j, k }
    }

    pub fn side(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    pub fn diam(&self, n: usize) -> f64 {
        self.side() * (n as f64).sqrt()
    }

    pub fn volume(&self, n: usize) -> f64 {
        self.side().powi(n as i32)
    }

    pub fn aabb(&self, n: usize) -> Aabb {
        let s = self.side();
        let mut b = Aabb::new([0.0; 3], [0.0; 3]);
        for a in 0..n {
            b.lo[a] = self.k[a] as f64 * s;
            b.hi[a] = (self.k[a] + 1) as f64 * s;
        }
        b
    }

    pub fn center(&self, n: usize) -> Point {
        self.aabb(n).center()
    }

    /// The closed 9/8-dilated cube.
    pub fn star(&self, n: usize) -> Aabb {
        let mut b = self.aabb(n);
        let e = self.side() / 16.0;
        for a in 0..n {
            b.lo[a] -= e;
            b.hi[a] += e;
        }
        b
    }

    pub fn children(&self, n: usize) -> impl Iterator<Item = DyadicCube> + '_ {
        let j = self.j + 1;
        let k = self.k;
        (0..(1usize << n)).map(move |m| {
            let mut c = [0i64; 3];
            for a in 0..n {
                c[a] = 2 * k[a] + ((m >> a) & 1) as i64;
            }
            DyadicCube { j, k: c }
        })
    }

    pub fn parent(&self, n: usize) -> DyadicCube {
        let mut k = [0i64; 3];
        for a in 0..n {
            k[a] = self.k[a].div_euclid(2);
        }
        DyadicCube { j: self.j - 1, k }
    }

    /// Ancestor (or self) at generation `g <= j`.
    pub fn ancestor(&self, g: i32, n: usize) -> DyadicCube {
        let shift = (self.j - g) as u32;
        let mut k = [0i64; 3];
        for a in 0..n {
            k[a] = self.k[a] >> shift;
        }
        DyadicCube { j: g, k }
    }

    /// The generation-`j` cube containing `p` (half-open convention).
    pub fn containing(p: &Point, j: i32, n: usize) -> DyadicCube {
        let scale = (j as f64).exp2();
        let mut k = [0i64; 3];
        for a in 0..n {
            k[a] = (p[a] * scale).floor() as i64;
        }
        DyadicCube { j, k }
    }

    /// Integer corner coordinates in units of `2^-unit`.
    pub fn int_lo(&self, unit: i32, n: usize) -> [i64; 3] {
        let sh = (unit - self.j) as u32;
        let mut c = [0i64; 3];
        for a in 0..n {
            c[a] = self.k[a] << sh;
        }
        c
    }
}

/// How a dyadic cube sits relative to a domain (up to null sets).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    Empty,
    Full,
    Mixed,
}

/// Anything the Whitney machinery can decompose.
pub trait DomainModel: Sync + Send {
    fn dim(&self) -> usize;
    fn bbox(&self) -> Aabb;
    /// Membership in the open domain (boundary points may go either way).
    fn contains(&self, p: &Point) -> bool;
    /// `dist(p, R^n \ G)`; zero outside.
    fn boundary_dist(&self, p: &Point) -> f64;
    /// Squared distance from a closed box to the closed complement.
    /// Only meaningful for cubes whose coverage is `Full`.
    fn box_dist2(&self, b: &Aabb) -> f64;
    fn coverage(&self, c: &DyadicCube) -> Coverage;
    fn measure_in(&self, c: &DyadicCube) -> f64;
    fn measure(&self) -> f64;
    /// The designated center used to pick the root cube.
    fn center(&self) -> Point;

    /// Finest generation at which the Whitney search may split `c`.
    fn truncation(&self, _c: &DyadicCube, j_max: i32) -> i32 {
        j_max
    }

    /// Grouping key used when condition sums are reported scale by scale.
    fn tier(&self, c: &DyadicCube) -> i32 {
        c.j
    }

    /// Number of zones: disjoint subregions that are exact translates of one
    /// another within each class and get decomposed only once.
    fn zone_count(&self) -> usize {
        0
    }

    /// Zone containing the cube entirely, if any.
    fn zone_of(&self, _c: &DyadicCube) -> Option<usize> {
        None
    }

    /// Whether `c` meets the interior of zone `z`.
    fn zone_touches(&self, _z: usize, _c: &DyadicCube) -> bool {
        false
    }

    /// Dyadic cube hosting zone `z`. Zones whose hosts share a generation are
    /// translates by the difference of the hosts' corners.
    fn zone_host(&self, _z: usize) -> DyadicCube {
        unreachable!("domain has no zones")
    }
}
