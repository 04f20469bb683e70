//! Dyadic Whitney decompositions with truncation, star adjacency and
//! diagnostics.

mod adjacency;
mod verify;

pub use adjacency::{stars_touch as adjacency_touch, Csr};
pub use verify::{verify_dist_est, whitney_counting, CountingReport, DistEstReport, GenerationCount};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Coverage, DomainModel, DyadicCube, Point};
use crate::par;

/// Decomposition of one zone class, stored for the representative zone.
#[derive(Clone, Debug)]
pub struct ZoneTemplate {
    pub host_j: i32,
    pub rep_host: DyadicCube,
    /// Cubes of the representative zone, sorted.
    pub cubes: Vec<DyadicCube>,
    pub adj: Csr,
    /// Local indices of cubes that can touch cubes outside the zone.
    pub ports: Vec<u32>,
    pub collar_measure: f64,
    pub collar_count: usize,
}

/// One translate of a template.
#[derive(Clone, Debug)]
pub struct ZoneInstance {
    pub zone: usize,
    pub template: usize,
    pub host: DyadicCube,
    /// Global id of the instance's first cube.
    pub first_id: usize,
    /// Adjacencies `(local index, explicit id)` to cubes outside the zone.
    pub links: Vec<(u32, u32)>,
}

/// A Whitney decomposition. Cubes outside zones are stored explicitly and
/// carry ids `0..explicit_len()` in (generation, k) order; the cubes of zone
/// instances follow, instance by instance, in template order.
#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub n: usize,
    pub j_max: i32,
    pub cubes: Vec<DyadicCube>,
    pub adj: Csr,
    pub templates: Vec<ZoneTemplate>,
    pub instances: Vec<ZoneInstance>,
    /// For each explicit id, the `(instance, local)` pairs adjacent to it.
    pub zone_links: Vec<Vec<(u32, u32)>>,
    pub root: usize,
    /// Tier of every explicit cube (see `DomainModel::tier`).
    pub tiers: Vec<i32>,
    /// Measure of `G` covered by cubes cut off by the truncation.
    pub collar_measure: f64,
    pub collar_count: usize,
    total: usize,
}

enum Outcome {
    Drop,
    Accept,
    Collar(f64),
    Split,
    Zone(usize),
}

fn classify(domain: &dyn DomainModel, c: &DyadicCube, j_max: i32, zone: Option<usize>) -> Outcome {
    let n = domain.dim();
    match zone {
        None => {
            if let Some(z) = domain.zone_of(c) {
                return Outcome::Zone(z);
            }
        }
        Some(z) => {
            if domain.zone_of(c) != Some(z) {
                // cubes straddling the zone boundary are the explicit search's business
                let split = domain.zone_touches(z, c) && c.j < domain.truncation(c, j_max);
                return if split { Outcome::Split } else { Outcome::Drop };
            }
        }
    }
    let cov = domain.coverage(c);
    if cov == Coverage::Empty {
        return Outcome::Drop;
    }
    if cov == Coverage::Full {
        let d = c.diam(n);
        if domain.box_dist2(&c.aabb(n)) >= d * d {
            return Outcome::Accept;
        }
    }
    if c.j >= domain.truncation(c, j_max) {
        Outcome::Collar(domain.measure_in(c))
    } else {
        Outcome::Split
    }
}

struct Search {
    accepted: Vec<DyadicCube>,
    zones: Vec<usize>,
    collar_measure: f64,
    collar_count: usize,
}

fn search(domain: &dyn DomainModel, start: Vec<DyadicCube>, j_max: i32, zone: Option<usize>) -> Search {
    let n = domain.dim();
    let mut out = Search { accepted: Vec::new(), zones: Vec::new(), collar_measure: 0.0, collar_count: 0 };
    let mut level = start;
    let mut collar = Vec::new();
    while !level.is_empty() {
        let outcomes = par::map_slice(&level, |c| classify(domain, c, j_max, zone));
        let mut next = Vec::new();
        for (c, o) in level.iter().zip(outcomes) {
            match o {
                Outcome::Drop => {}
                Outcome::Accept => out.accepted.push(*c),
                Outcome::Collar(m) => {
                    if m > 0.0 {
                        collar.push(m);
                    }
                }
                Outcome::Split => next.extend(c.children(n)),
                Outcome::Zone(z) => out.zones.push(z),
            }
        }
        level = next;
    }
    out.collar_count = collar.len();
    out.collar_measure = collar.iter().copied().collect::<par::CompensatedSum>().value();
    out.accepted.sort_unstable();
    out.zones.sort_unstable();
    out.zones.dedup();
    out
}

/// Coarsest cubes covering the bounding box.
fn initial_cubes(domain: &dyn DomainModel) -> Vec<DyadicCube> {
    let n = domain.dim();
    let bb = domain.bbox();
    let extent = (0..n).map(|a| bb.extent(a)).fold(0.0, f64::max);
    let j0 = -(extent.log2().ceil() as i32);
    let side = (-(j0 as f64)).exp2();
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..n {
        lo[a] = (bb.lo[a] / side).floor() as i64;
        hi[a] = ((bb.hi[a] / side).ceil() as i64 - 1).max(lo[a]);
    }
    let mut out = Vec::new();
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                out.push(DyadicCube::new(j0, [x, y, z]));
            }
        }
    }
    out
}

/// Translates a template cube from the representative zone to `host`.
pub fn translate(c: &DyadicCube, rep: &DyadicCube, host: &DyadicCube, n: usize) -> DyadicCube {
    let sh = (c.j - rep.j) as u32;
    let mut k = c.k;
    for a in 0..n {
        k[a] += (host.k[a] - rep.k[a]) << sh;
    }
    DyadicCube::new(c.j, k)
}

impl WhitneyDecomposition {
    /// Top-down construction: a cube is accepted when it lies in `G` and
    /// `dist(Q, complement) >= diam Q`; otherwise it is split until the
    /// domain's truncation generation (at most `j_max`), where leftover
    /// cubes go to the collar.
    pub fn build(domain: &dyn DomainModel, j_max: i32) -> Result<Self> {
        Self::build_with_root(domain, j_max, None)
    }

    pub fn build_with_root(domain: &dyn DomainModel, j_max: i32, root_point: Option<Point>) -> Result<Self> {
        let n = domain.dim();
        if j_max > 40 {
            return Err(invalid("J_max", format!("must be at most 40, got {j_max}")));
        }
        let top = search(domain, initial_cubes(domain), j_max, None);
        if top.accepted.is_empty() {
            return Err(invalid("J_max", "no Whitney cube at this truncation"));
        }

        // one template per host generation, built on the first zone seen
        let mut templates: Vec<ZoneTemplate> = Vec::new();
        let mut by_gen: HashMap<i32, usize> = HashMap::new();
        for &z in &top.zones {
            let host = domain.zone_host(z);
            if by_gen.contains_key(&host.j) {
                continue;
            }
            let s = search(domain, vec![host], j_max, Some(z));
            by_gen.insert(host.j, templates.len());
            let adj = adjacency::build(&s.accepted, n);
            let ports = (0..s.accepted.len() as u32)
                .filter(|&i| adjacency::touches_outside(domain, z, &s.accepted[i as usize], n))
                .collect();
            templates.push(ZoneTemplate {
                host_j: host.j,
                rep_host: host,
                cubes: s.accepted,
                adj,
                ports,
                collar_measure: s.collar_measure,
                collar_count: s.collar_count,
            });
        }

        let cubes = top.accepted;
        let adj = adjacency::build(&cubes, n);
        let index: HashMap<DyadicCube, u32> = cubes.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
        let mut instances = Vec::with_capacity(top.zones.len());
        let mut next_id = cubes.len();
        for &z in &top.zones {
            let host = domain.zone_host(z);
            let t = by_gen[&host.j];
            instances.push(ZoneInstance { zone: z, template: t, host, first_id: next_id, links: Vec::new() });
            next_id += templates[t].cubes.len();
        }
        let links = par::map_slice(&instances, |inst| {
            let t = &templates[inst.template];
            let mut l = Vec::new();
            for &p in &t.ports {
                let c = translate(&t.cubes[p as usize], &t.rep_host, &inst.host, n);
                for e in adjacency::neighbors_in(&index, &c, n) {
                    l.push((p, e));
                }
            }
            l
        });
        let mut zone_links = vec![Vec::new(); cubes.len()];
        for (i, (inst, l)) in instances.iter_mut().zip(links).enumerate() {
            for &(p, e) in &l {
                zone_links[e as usize].push((i as u32, p));
            }
            inst.links = l;
        }

        let mut collar_measure = par::CompensatedSum::new();
        collar_measure.add(top.collar_measure);
        let mut collar_count = top.collar_count;
        for inst in &instances {
            collar_measure.add(templates[inst.template].collar_measure);
            collar_count += templates[inst.template].collar_count;
        }

        let tiers = par::map_slice(&cubes, |c| domain.tier(c));
        let mut w = WhitneyDecomposition {
            n,
            j_max,
            tiers,
            cubes,
            adj,
            templates,
            instances,
            zone_links,
            root: 0,
            collar_measure: collar_measure.value(),
            collar_count,
            total: next_id,
        };
        let p = root_point.unwrap_or_else(|| domain.center());
        w.root = w.find_root(&p)?;
        Ok(w)
    }

    fn find_root(&self, p: &Point) -> Result<usize> {
        self.cubes
            .iter()
            .position(|c| c.aabb(self.n).contains_point(p))
            .ok_or_else(|| Error::RootOutside(p[..self.n].to_vec()))
    }

    /// Total number of cubes, zone instances included.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn explicit_len(&self) -> usize {
        self.cubes.len()
    }

    /// Instance owning a global id at or beyond `explicit_len()`.
    pub fn instance_of(&self, id: usize) -> usize {
        self.instances.partition_point(|i| i.first_id <= id) - 1
    }

    pub fn cube(&self, id: usize) -> DyadicCube {
        if id < self.cubes.len() {
            return self.cubes[id];
        }
        let inst = &self.instances[self.instance_of(id)];
        let t = &self.templates[inst.template];
        translate(&t.cubes[id - inst.first_id], &t.rep_host, &inst.host, self.n)
    }

    pub fn tier(&self, id: usize) -> i32 {
        if id < self.cubes.len() {
            self.tiers[id]
        } else {
            self.instances[self.instance_of(id)].host.j
        }
    }

    /// Neighbours of any cube by global id.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        if id < self.cubes.len() {
            let mut v: Vec<usize> = self.adj.row(id).iter().map(|&x| x as usize).collect();
            for &(i, l) in &self.zone_links[id] {
                v.push(self.instances[i as usize].first_id + l as usize);
            }
            return v;
        }
        let i = self.instance_of(id);
        let inst = &self.instances[i];
        let local = (id - inst.first_id) as u32;
        let mut v: Vec<usize> = self.templates[inst.template]
            .adj
            .row(local as usize)
            .iter()
            .map(|&x| inst.first_id + x as usize)
            .collect();
        for &(l, e) in &inst.links {
            if l == local {
                v.push(e as usize);
            }
        }
        v
    }

    /// Cube counts per generation, zone instances included.
    pub fn generation_counts(&self) -> Vec<(i32, u64)> {
        let mut m: std::collections::BTreeMap<i32, u64> = Default::default();
        for c in &self.cubes {
            *m.entry(c.j).or_default() += 1;
        }
        for inst in &self.instances {
            for c in &self.templates[inst.template].cubes {
                *m.entry(c.j).or_default() += 1;
            }
        }
        m.into_iter().collect()
    }

    /// Expands zone instances into an ordinary decomposition with ids in
    /// (generation, k) order.
    pub fn materialize(&self) -> WhitneyDecomposition {
        let mut cubes: Vec<DyadicCube> = (0..self.total).map(|i| self.cube(i)).collect();
        cubes.sort_unstable();
        let adj = adjacency::build(&cubes, self.n);
        let root_cube = self.cubes[self.root];
        let root = cubes.binary_search(&root_cube).unwrap_or(0);
        let mut tier_of: HashMap<DyadicCube, i32> = HashMap::new();
        for id in 0..self.total {
            tier_of.insert(self.cube(id), self.tier(id));
        }
        WhitneyDecomposition {
            n: self.n,
            j_max: self.j_max,
            tiers: cubes.iter().map(|c| tier_of[c]).collect(),
            zone_links: vec![Vec::new(); cubes.len()],
            total: cubes.len(),
            cubes,
            adj,
            templates: Vec::new(),
            instances: Vec::new(),
            root,
            collar_measure: self.collar_measure,
            collar_count: self.collar_count,
        }
    }

    /// Rebuilds a zone-free decomposition from a cube list.
    pub fn from_cubes(n: usize, j_max: i32, mut cubes: Vec<DyadicCube>, root_cube: DyadicCube, collar_measure: f64) -> Result<Self> {
        cubes.sort_unstable();
        let root = cubes
            .binary_search(&root_cube)
            .map_err(|_| invalid("root", "root cube is not part of the decomposition"))?;
        let adj = adjacency::build(&cubes, n);
        Ok(WhitneyDecomposition {
            n,
            j_max,
            tiers: cubes.iter().map(|c| c.j).collect(),
            zone_links: vec![Vec::new(); cubes.len()],
            total: cubes.len(),
            cubes,
            adj,
            templates: Vec::new(),
            instances: Vec::new(),
            root,
            collar_measure,
            collar_count: 0,
        })
    }

    pub fn to_file(&self) -> WhitneyFile {
        let w = if self.instances.is_empty() { None } else { Some(self.materialize()) };
        let w = w.as_ref().unwrap_or(self);
        WhitneyFile {
            n: w.n,
            j_max: w.j_max,
            root_id: w.root,
            collar_measure: w.collar_measure,
            cubes: w.cubes.iter().enumerate().map(|(id, c)| CubeRecord { id, j: c.j, k: c.k[..w.n].to_vec() }).collect(),
            adjacency: (0..w.cubes.len()).map(|i| w.adj.row(i).to_vec()).collect(),
        }
    }

    pub fn from_file(f: &WhitneyFile) -> Result<Self> {
        let mut cubes = Vec::with_capacity(f.cubes.len());
        for (i, r) in f.cubes.iter().enumerate() {
            if r.id != i || r.k.len() != f.n {
                return Err(Error::Parse(format!("cube record {i} is malformed")));
            }
            let mut k = [0i64; 3];
            k[..f.n].copy_from_slice(&r.k);
            cubes.push(DyadicCube::new(r.j, k));
        }
        let root = *cubes.get(f.root_id).ok_or_else(|| Error::Parse("root id out of range".into()))?;
        Self::from_cubes(f.n, f.j_max, cubes, root, f.collar_measure)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeRecord {
    pub id: usize,
    pub j: i32,
    pub k: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WhitneyFile {
    pub n: usize,
    #[serde(rename = "J_max")]
    pub j_max: i32,
    pub root_id: usize,
    pub collar_measure: f64,
    pub cubes: Vec<CubeRecord>,
    pub adjacency: Vec<Vec<u32>>,
}
