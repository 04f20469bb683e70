//! The s-version of a domain: every Whitney cube except the root becomes an
//! apartment whose room is reached only through a thin passage.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::apartment::Apartment;
use crate::error::{invalid, Result};
use crate::geometry::{Aabb, BoxTree, Coverage, DomainModel, DyadicCube, Point, VoxelDomain};
use crate::whitney::WhitneyDecomposition;

/// How finely the Whitney search resolves an s-version.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SVersionResolution {
    /// Generations below the host cube resolved away from passages.
    pub coarse: i32,
    /// Generations below `ceil(s (j + 3))` resolved near passages.
    pub passage: i32,
}

impl Default for SVersionResolution {
    fn default() -> Self {
        SVersionResolution { coarse: 6, passage: 2 }
    }
}

pub struct SVersionDomain {
    n: usize,
    s: f64,
    /// Base generations are shifted by this many levels (scaling by `2^-shift`).
    shift: i32,
    union: VoxelDomain,
    walls: BoxTree<Aabb>,
    apartments: Vec<Apartment>,
    root_host: DyadicCube,
    hosts: HashMap<DyadicCube, Option<usize>>,
    gen_range: (i32, i32),
    resolution: SVersionResolution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SVersionSummary {
    pub n: usize,
    pub s: f64,
    pub scale: f64,
    pub root_host: DyadicCube,
    pub apartments: usize,
    pub measure: f64,
    pub walls: usize,
}

impl SVersionDomain {
    /// Builds `G_s` from a zone-free base decomposition. If some base cube
    /// violates `(ℓ/8)^s <= ℓ/32`, the whole base is scaled by the smallest
    /// power of two bringing the base's largest extent within the bound.
    pub fn build(base: &WhitneyDecomposition, base_extent: f64, s: f64) -> Result<Self> {
        if !(s > 1.0) {
            return Err(invalid("s", format!("must exceed 1, got {s}")));
        }
        if !base.instances.is_empty() {
            return Err(invalid("base", "base decomposition must not contain zones"));
        }
        let n = base.n;
        let bound = (8f64.powf(s) / 32.0).powf(1.0 / (s - 1.0));
        let fits = base.cubes.iter().all(|c| Apartment::width_condition(c.side(), s));
        let mut shift = 0;
        if !fits {
            while base_extent * (-(shift as f64)).exp2() > bound * (1.0 + 1e-12) {
                shift += 1;
            }
        }
        let scaled = |c: &DyadicCube| DyadicCube::new(c.j + shift, c.k);
        let jmin = base.cubes.iter().map(|c| c.j).min().unwrap_or(0) + shift;
        let jmax = base.cubes.iter().map(|c| c.j).max().unwrap_or(0) + shift;

        // union of the base cubes as a voxel grid at the finest base generation
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for c in &base.cubes {
            let sh = jmax - (c.j + shift);
            for a in 0..n {
                lo[a] = lo[a].min(c.k[a] << sh);
                hi[a] = hi[a].max((c.k[a] + 1) << sh);
            }
        }
        let mut dims = [1usize; 3];
        let mut origin = [0i64; 3];
        for a in 0..n {
            origin[a] = lo[a];
            dims[a] = (hi[a] - lo[a]) as usize;
        }
        let mut occ = vec![false; dims.iter().product()];
        for c in &base.cubes {
            let sh = jmax - (c.j + shift);
            let w = 1i64 << sh;
            let mut s0 = [0i64; 3];
            let mut e = [1i64; 3];
            for a in 0..n {
                s0[a] = (c.k[a] << sh) - origin[a];
                e[a] = s0[a] + w;
            }
            for z in s0[2]..e[2] {
                for y in s0[1]..e[1] {
                    for x in s0[0]..e[0] {
                        occ[x as usize + dims[0] * (y as usize + dims[1] * z as usize)] = true;
                    }
                }
            }
        }
        let mut union = VoxelDomain::from_occupancy(n, jmax, origin, dims, occ)?;

        let root_host = scaled(&base.cubes[base.root]);
        union.set_center(root_host.center(n));
        let mut apartments = Vec::new();
        let mut hosts = HashMap::new();
        let mut walls = Vec::new();
        for c in &base.cubes {
            let h = scaled(c);
            if h == root_host {
                hosts.insert(h, None);
                continue;
            }
            let a = Apartment::new(h, s, n);
            walls.extend(a.walls());
            hosts.insert(h, Some(apartments.len()));
            apartments.push(a);
        }
        Ok(SVersionDomain {
            n,
            s,
            shift,
            union,
            walls: BoxTree::build(walls),
            apartments,
            root_host,
            hosts,
            gen_range: (jmin, jmax),
            resolution: SVersionResolution::default(),
        })
    }

    pub fn with_resolution(mut self, r: SVersionResolution) -> Self {
        self.resolution = r;
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Scaling factor applied to the base domain.
    pub fn scale(&self) -> f64 {
        (-(self.shift as f64)).exp2()
    }

    /// Arc lengths at which passages of the smallest and largest
    /// apartments dominate the clearance envelope: a quarter of the host side.
    pub fn passage_scales(&self) -> (f64, f64) {
        let (lo, hi) = self.gen_range;
        ((-hi as f64).exp2() / 4.0, (-lo as f64).exp2() / 4.0)
    }

    pub fn apartments(&self) -> &[Apartment] {
        &self.apartments
    }

    pub fn root_host(&self) -> DyadicCube {
        self.root_host
    }

    pub fn summary(&self) -> SVersionSummary {
        SVersionSummary {
            n: self.n,
            s: self.s,
            scale: self.scale(),
            root_host: self.root_host,
            apartments: self.apartments.len(),
            measure: self.measure(),
            walls: self.walls.len(),
        }
    }

    /// Base cube containing `c`, with its apartment index (`None` for the root).
    pub fn host(&self, c: &DyadicCube) -> Option<(DyadicCube, Option<usize>)> {
        let (lo, hi) = self.gen_range;
        for g in lo..=hi.min(c.j) {
            let a = c.ancestor(g, self.n);
            if let Some(&apt) = self.hosts.get(&a) {
                return Some((a, apt));
            }
        }
        None
    }

    /// Host of the base cube containing a point.
    pub fn host_of_point(&self, p: &Point) -> Option<(DyadicCube, Option<usize>)> {
        let c = DyadicCube::containing(p, self.gen_range.1, self.n);
        self.host(&c)
    }

    fn passage_generation(&self, jb: i32) -> i32 {
        (self.s * (jb + 3) as f64).ceil() as i32 + self.resolution.passage
    }
}

impl DomainModel for SVersionDomain {
    fn dim(&self) -> usize {
        self.n
    }

    fn bbox(&self) -> Aabb {
        self.union.bbox()
    }

    fn contains(&self, p: &Point) -> bool {
        self.union.contains(p) && self.walls.nearest_point(p) > 0.0
    }

    fn boundary_dist(&self, p: &Point) -> f64 {
        if !self.union.contains(p) {
            return 0.0;
        }
        self.union.boundary_dist(p).min(self.walls.nearest_point(p).sqrt())
    }

    fn box_dist2(&self, b: &Aabb) -> f64 {
        self.union.box_dist2(b).min(self.walls.nearest_box(b))
    }

    fn coverage(&self, c: &DyadicCube) -> Coverage {
        self.union.coverage(c)
    }

    fn measure_in(&self, c: &DyadicCube) -> f64 {
        self.union.measure_in(c)
    }

    fn measure(&self) -> f64 {
        self.union.measure()
    }

    fn center(&self) -> Point {
        self.root_host.center(self.n)
    }

    fn truncation(&self, c: &DyadicCube, j_max: i32) -> i32 {
        match self.host(c) {
            None => {
                if c.j < self.gen_range.1 {
                    j_max
                } else {
                    c.j
                }
            }
            Some((h, apt)) => {
                let b = c.aabb(self.n);
                let local = match apt {
                    Some(i) if self.apartments[i].passage_neighborhood().overlaps_open(&b, self.n) => {
                        self.passage_generation(h.j)
                    }
                    _ => h.j + self.resolution.coarse,
                };
                local.min(j_max)
            }
        }
    }

    /// Cubes are grouped by the generation of their base cube.
    fn tier(&self, c: &DyadicCube) -> i32 {
        self.host(c).map(|(h, _)| h.j).unwrap_or(c.j)
    }

    fn zone_count(&self) -> usize {
        self.apartments.len()
    }

    fn zone_of(&self, c: &DyadicCube) -> Option<usize> {
        let (_, apt) = self.host(c)?;
        let i = apt?;
        let a = &self.apartments[i];
        let b = c.aabb(self.n);
        a.core().iter().any(|z| z.contains_box(&b)).then_some(i)
    }

    fn zone_touches(&self, z: usize, c: &DyadicCube) -> bool {
        let a = &self.apartments[z];
        let b = c.aabb(self.n);
        a.core().iter().any(|z| z.overlaps_open(&b, self.n))
    }

    fn zone_host(&self, z: usize) -> DyadicCube {
        self.apartments[z].host
    }
}
