//! Chain decompositions rooted at the central Whitney cube, shadows and
//! chain statistics.
//!
//! Chains are stored as a tree: the chain of `Q` is the path from the root to
//! `Q`. Every parent sits one breadth-first level closer to the root, so two
//! entries of a chain touch exactly when they are consecutive.
//!
//! Inside zone instances the tree is built once per template, by
//! breadth-first search from the cubes at the zone's opening; each opening
//! cube then hangs off its best explicit neighbour.

mod balls;
mod classify;
mod shadow;
mod sjohn;

pub use balls::{build_ball_chain, chain_path, BallChain, BallChainOptions};
pub use classify::{chain_length_fit, classify_wjk, ChainClassification, ChainLengthFit};
pub use shadow::ShadowTerm;
pub use sjohn::{estimate_sjohn, SJohnEstimate, SJohnOptions};

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::DomainModel;
use crate::par;
use crate::whitney::{adjacency_touch, CubeRecord, WhitneyDecomposition};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Shortest adjacency paths; ties go to the smallest id.
    HopCount,
    /// Shortest adjacency paths; ties go to the neighbour whose midpoint is
    /// farthest from the boundary, so chains follow the medial curves
    /// (passage axes in s-versions).
    CurveFollowing,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hop-count" => Ok(Strategy::HopCount),
            "curve-following" => Ok(Strategy::CurveFollowing),
            _ => Err(invalid("strategy", format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TemplateTree {
    pub parent: Vec<u32>,
    pub depth: Vec<u32>,
    pub order: Vec<u32>,
    pub seeds: Vec<u32>,
    /// Index into `seeds` of the opening cube each local chain leaves through.
    pub seed_of: Vec<u32>,
    pub clearance: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ChainDecomposition {
    pub strategy: Strategy,
    pub root: usize,
    pub(crate) parent: Vec<u32>,
    pub(crate) depth: Vec<u32>,
    pub(crate) order: Vec<u32>,
    pub(crate) clearance: Vec<f64>,
    pub(crate) templates: Vec<TemplateTree>,
    /// Per instance, the explicit cube each template seed hangs off.
    pub(crate) exits: Vec<Vec<u32>>,
}

/// Picks the parent among candidates one level up.
fn pick(strategy: Strategy, cands: impl Iterator<Item = (u32, f64)>) -> u32 {
    let mut best = (NONE, f64::NEG_INFINITY);
    for (id, c) in cands {
        let better = match strategy {
            Strategy::HopCount => id < best.0,
            Strategy::CurveFollowing => c > best.1 || (c == best.1 && id < best.0),
        };
        if best.0 == NONE || better {
            best = (id, c);
        }
    }
    best.0
}

/// Multi-source breadth-first levels.
fn bfs<F: Fn(usize) -> Vec<u32>>(len: usize, seeds: &[u32], nbrs: F) -> (Vec<u32>, Vec<u32>) {
    let mut depth = vec![NONE; len];
    let mut order = Vec::with_capacity(len);
    let mut queue = VecDeque::new();
    for &s in seeds {
        depth[s as usize] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        order.push(u);
        let d = depth[u as usize] + 1;
        for v in nbrs(u as usize) {
            if depth[v as usize] == NONE {
                depth[v as usize] = d;
                queue.push_back(v);
            }
        }
    }
    (depth, order)
}

impl ChainDecomposition {
    /// Builds chains for every cube. `domain` supplies midpoint clearances
    /// and is required for curve-following chains.
    pub fn build(w: &WhitneyDecomposition, strategy: Strategy, domain: Option<&dyn DomainModel>) -> Result<Self> {
        if strategy == Strategy::CurveFollowing && domain.is_none() {
            return Err(invalid("strategy", "curve-following chains need the domain"));
        }
        let n = w.n;
        let clearance: Vec<f64> = match domain {
            Some(d) => par::map_slice(&w.cubes, |c| d.boundary_dist(&c.center(n))),
            None => Vec::new(),
        };
        let cl = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);

        let (depth, order) = bfs(w.cubes.len(), &[w.root as u32], |u| w.adj.row(u).to_vec());
        if let Some(u) = depth.iter().position(|&d| d == NONE) {
            return Err(Error::Unreachable(u));
        }
        let parent: Vec<u32> = par::map(w.cubes.len(), |i| {
            if i == w.root {
                return NONE;
            }
            let up = depth[i] - 1;
            pick(
                strategy,
                w.adj.row(i).iter().filter(|&&v| depth[v as usize] == up).map(|&v| (v, cl(&clearance, v as usize))),
            )
        });

        let mut templates = Vec::with_capacity(w.templates.len());
        for (t_idx, t) in w.templates.iter().enumerate() {
            let rep = w
                .instances
                .iter()
                .find(|i| i.template == t_idx && i.host == t.rep_host)
                .ok_or_else(|| Error::Numerical("template without representative".into()))?;
            let mut seeds: Vec<u32> = rep.links.iter().map(|l| l.0).collect();
            seeds.sort_unstable();
            seeds.dedup();
            let tcl: Vec<f64> = match domain {
                Some(d) => par::map_slice(&t.cubes, |c| d.boundary_dist(&c.center(n))),
                None => Vec::new(),
            };
            let (tdepth, torder) = bfs(t.cubes.len(), &seeds, |u| t.adj.row(u).to_vec());
            if let Some(u) = tdepth.iter().position(|&d| d == NONE) {
                return Err(Error::Unreachable(rep.first_id + u));
            }
            let tparent: Vec<u32> = par::map(t.cubes.len(), |i| {
                if tdepth[i] == 0 {
                    return NONE;
                }
                let up = tdepth[i] - 1;
                pick(strategy, t.adj.row(i).iter().filter(|&&v| tdepth[v as usize] == up).map(|&v| (v, cl(&tcl, v as usize))))
            });
            let mut seed_of = vec![NONE; t.cubes.len()];
            for &u in &torder {
                let u = u as usize;
                seed_of[u] = if tparent[u] == NONE {
                    seeds.binary_search(&(u as u32)).unwrap_or(0) as u32
                } else {
                    seed_of[tparent[u] as usize]
                };
            }
            templates.push(TemplateTree { parent: tparent, depth: tdepth, order: torder, seeds, seed_of, clearance: tcl });
        }

        let exits: Vec<Result<Vec<u32>>> = par::map_slice(&w.instances, |inst| {
            let tt = &templates[inst.template];
            let mut by_seed: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for &(l, e) in &inst.links {
                by_seed.entry(l).or_default().push(e);
            }
            if by_seed.keys().copied().collect::<Vec<_>>() != tt.seeds {
                return Err(Error::Numerical(format!("zone instance at {:?} is not a translate of its template", inst.host)));
            }
            Ok(tt
                .seeds
                .iter()
                .map(|s| {
                    let cands = &by_seed[s];
                    let low = cands.iter().map(|&e| depth[e as usize]).min().unwrap_or(0);
                    pick(strategy, cands.iter().filter(|&&e| depth[e as usize] == low).map(|&e| (e, cl(&clearance, e as usize))))
                })
                .collect())
        });
        let exits = exits.into_iter().collect::<Result<Vec<_>>>()?;

        Ok(ChainDecomposition { strategy, root: w.root, parent, depth, order, clearance, templates, exits })
    }

    /// Rebuilds a decomposition of a zone-free `w` from explicit parents.
    pub fn from_parents(w: &WhitneyDecomposition, strategy: Strategy, parent: Vec<u32>) -> Result<Self> {
        if !w.instances.is_empty() || parent.len() != w.cubes.len() {
            return Err(invalid("parents", "need one parent per cube of a zone-free decomposition"));
        }
        let mut children = vec![Vec::new(); parent.len()];
        let mut root = None;
        for (i, &p) in parent.iter().enumerate() {
            if p == NONE {
                root = Some(i);
            } else {
                children[p as usize].push(i as u32);
            }
        }
        let root = root.ok_or_else(|| invalid("parents", "no root"))?;
        let (depth, order) = bfs(parent.len(), &[root as u32], |u| children[u].clone());
        if let Some(u) = depth.iter().position(|&d| d == NONE) {
            return Err(Error::Unreachable(u));
        }
        Ok(ChainDecomposition {
            strategy,
            root,
            parent,
            depth,
            order,
            clearance: Vec::new(),
            templates: Vec::new(),
            exits: Vec::new(),
        })
    }

    fn locate(&self, w: &WhitneyDecomposition, id: usize) -> (usize, usize, usize) {
        let i = w.instance_of(id);
        let inst = &w.instances[i];
        (i, inst.template, id - inst.first_id)
    }

    pub fn parent(&self, w: &WhitneyDecomposition, id: usize) -> Option<usize> {
        if id < self.parent.len() {
            let p = self.parent[id];
            return (p != NONE).then_some(p as usize);
        }
        let (i, t, l) = self.locate(w, id);
        let tt = &self.templates[t];
        let p = tt.parent[l];
        Some(if p == NONE {
            self.exits[i][tt.seed_of[l] as usize] as usize
        } else {
            w.instances[i].first_id + p as usize
        })
    }

    /// Chain length `ℓ(C(Q))`: number of steps from the root.
    pub fn length(&self, w: &WhitneyDecomposition, id: usize) -> u32 {
        if id < self.depth.len() {
            return self.depth[id];
        }
        let (i, t, l) = self.locate(w, id);
        let tt = &self.templates[t];
        let exit = self.exits[i][tt.seed_of[l] as usize];
        self.depth[exit as usize] + 1 + tt.depth[l]
    }

    /// The chain `(Q_0, ..., Q_k = Q)` as ids.
    pub fn chain(&self, w: &WhitneyDecomposition, id: usize) -> Vec<usize> {
        let mut v = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(w, cur) {
            v.push(p);
            cur = p;
        }
        v.reverse();
        v
    }

    /// Midpoint clearance of an explicit cube, if the domain was supplied.
    pub fn clearance(&self, id: usize) -> Option<f64> {
        self.clearance.get(id).copied()
    }

    /// Checks that consecutive chain cubes touch and others do not.
    /// Only for zone-free decompositions.
    pub fn validate(&self, w: &WhitneyDecomposition) -> Result<()> {
        if !w.instances.is_empty() {
            return Err(invalid("decomposition", "validate the materialized decomposition instead"));
        }
        let n = w.n;
        let bad: Vec<Option<Error>> = par::map(w.cubes.len(), |q| {
            let c = self.chain(w, q);
            if c[0] != self.root {
                return Some(Error::InvalidChain { cube: q, reason: "does not start at the root".into() });
            }
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    let touch = adjacency_touch(&w.cubes[c[i]], &w.cubes[c[j]], n);
                    if touch != (j == i + 1) {
                        return Some(Error::InvalidChain { cube: q, reason: format!("entries {i} and {j}") });
                    }
                }
            }
            None
        });
        match bad.into_iter().flatten().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn to_file(&self, w: &WhitneyDecomposition) -> Result<ChainFile> {
        if !w.instances.is_empty() {
            return Err(invalid("decomposition", "zone instances must be materialized before export"));
        }
        let mut chains = BTreeMap::new();
        let mut lengths = BTreeMap::new();
        for id in 0..w.cubes.len() {
            chains.insert(id.to_string(), self.chain(w, id));
            lengths.insert(id.to_string(), self.depth[id]);
        }
        Ok(ChainFile {
            n: w.n,
            j_max: w.j_max,
            root_id: self.root,
            strategy: self.strategy,
            cubes: w.cubes.iter().enumerate().map(|(id, c)| CubeRecord { id, j: c.j, k: c.k[..w.n].to_vec() }).collect(),
            chains,
            lengths,
        })
    }

    /// Restores the decomposition and its chains from a chain file.
    pub fn from_file(f: &ChainFile) -> Result<(WhitneyDecomposition, Self)> {
        let wf = crate::whitney::WhitneyFile {
            n: f.n,
            j_max: f.j_max,
            root_id: f.root_id,
            collar_measure: 0.0,
            cubes: f.cubes.clone(),
            adjacency: Vec::new(),
        };
        let w = WhitneyDecomposition::from_file(&wf)?;
        let mut parent = vec![NONE; w.cubes.len()];
        for (k, chain) in &f.chains {
            let id: usize = k.parse().map_err(|_| Error::Parse(format!("bad chain key {k:?}")))?;
            if id >= parent.len() || chain.last() != Some(&id) || chain.first() != Some(&f.root_id) {
                return Err(Error::Parse(format!("chain {k} is malformed")));
            }
            if chain.len() >= 2 {
                parent[id] = chain[chain.len() - 2] as u32;
            }
        }
        let cd = Self::from_parents(&w, f.strategy, parent)?;
        Ok((w, cd))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainFile {
    pub n: usize,
    #[serde(rename = "J_max")]
    pub j_max: i32,
    pub root_id: usize,
    pub strategy: Strategy,
    pub cubes: Vec<CubeRecord>,
    pub chains: BTreeMap<String, Vec<usize>>,
    pub lengths: BTreeMap<String, u32>,
}
