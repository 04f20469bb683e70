//! Shadow sums `S(A) = Σ_{Q ∈ A(W)} w(ℓ(C(Q))) |Q|` over the chain tree.

use super::{ChainDecomposition, NONE};
use crate::geometry::DyadicCube;
use crate::par;
use crate::whitney::WhitneyDecomposition;

/// One cube `A` together with its weighted shadow.
#[derive(Clone, Copy, Debug)]
pub struct ShadowTerm {
    pub id: usize,
    pub cube: DyadicCube,
    pub tier: i32,
    pub length: u32,
    pub shadow: f64,
}

impl ChainDecomposition {
    /// Folds `visit(acc, term, multiplicity)` over every cube and its shadow.
    ///
    /// With `weight == None` every cube weighs 1; each template is then
    /// evaluated once and visited with multiplicity equal to its instance
    /// count (its `length` is that of the representative instance). With a
    /// weight, every instance is evaluated separately.
    ///
    /// The result is independent of the thread count.
    pub fn fold_shadows<A, W, F, M>(
        &self,
        w: &WhitneyDecomposition,
        weight: Option<W>,
        init: impl Fn() -> A + Sync,
        visit: F,
        merge: M,
    ) -> A
    where
        A: Send,
        W: Fn(u32) -> f64 + Sync,
        F: Fn(&mut A, &ShadowTerm, u64) + Sync,
        M: Fn(&mut A, A),
    {
        let n = w.n;
        let wt = |len: u32| weight.as_ref().map_or(1.0, |f| f(len));
        let mut hang = vec![0.0; w.cubes.len()];
        let mut zone_accs = Vec::new();

        match &weight {
            None => {
                let mut acc = init();
                for (t_idx, tt) in self.templates.iter().enumerate() {
                    let t = &w.templates[t_idx];
                    let mut s: Vec<f64> = t.cubes.iter().map(|c| c.volume(n)).collect();
                    for &u in tt.order.iter().rev() {
                        let p = tt.parent[u as usize];
                        if p != NONE {
                            s[p as usize] += s[u as usize];
                        }
                    }
                    let insts: Vec<usize> = (0..w.instances.len()).filter(|&i| w.instances[i].template == t_idx).collect();
                    for &i in &insts {
                        for (k, &seed) in tt.seeds.iter().enumerate() {
                            hang[self.exits[i][k] as usize] += s[seed as usize];
                        }
                    }
                    let rep = insts.iter().copied().find(|&i| w.instances[i].host == t.rep_host).unwrap_or(insts[0]);
                    let inst = &w.instances[rep];
                    for l in 0..t.cubes.len() {
                        let exit = self.exits[rep][tt.seed_of[l] as usize];
                        let term = ShadowTerm {
                            id: inst.first_id + l,
                            cube: t.cubes[l],
                            tier: inst.host.j,
                            length: self.depth[exit as usize] + 1 + tt.depth[l],
                            shadow: s[l],
                        };
                        visit(&mut acc, &term, insts.len() as u64);
                    }
                }
                zone_accs.push(acc);
            }
            Some(_) => {
                let parts: Vec<(A, Vec<(u32, f64)>)> = par::map(w.instances.len(), |i| {
                    let inst = &w.instances[i];
                    let tt = &self.templates[inst.template];
                    let t = &w.templates[inst.template];
                    let base: Vec<u32> = self.exits[i].iter().map(|&e| self.depth[e as usize] + 1).collect();
                    let len = |l: usize| base[tt.seed_of[l] as usize] + tt.depth[l];
                    let mut s: Vec<f64> = (0..t.cubes.len()).map(|l| wt(len(l)) * t.cubes[l].volume(n)).collect();
                    for &u in tt.order.iter().rev() {
                        let p = tt.parent[u as usize];
                        if p != NONE {
                            s[p as usize] += s[u as usize];
                        }
                    }
                    let mut acc = init();
                    for l in 0..t.cubes.len() {
                        let term = ShadowTerm {
                            id: inst.first_id + l,
                            cube: crate::whitney::translate(&t.cubes[l], &t.rep_host, &inst.host, n),
                            tier: inst.host.j,
                            length: len(l),
                            shadow: s[l],
                        };
                        visit(&mut acc, &term, 1);
                    }
                    let ports = tt.seeds.iter().enumerate().map(|(k, &seed)| (self.exits[i][k], s[seed as usize])).collect();
                    (acc, ports)
                });
                for (acc, ports) in parts {
                    for (e, v) in ports {
                        hang[e as usize] += v;
                    }
                    zone_accs.push(acc);
                }
            }
        }

        let mut s: Vec<f64> = (0..w.cubes.len()).map(|i| wt(self.depth[i]) * w.cubes[i].volume(n) + hang[i]).collect();
        for &u in self.order.iter().rev() {
            let p = self.parent[u as usize];
            if p != NONE {
                s[p as usize] += s[u as usize];
            }
        }
        let mut acc = init();
        for (i, c) in w.cubes.iter().enumerate() {
            let term = ShadowTerm { id: i, cube: *c, tier: w.tiers[i], length: self.depth[i], shadow: s[i] };
            visit(&mut acc, &term, 1);
        }
        for z in zone_accs {
            merge(&mut acc, z);
        }
        acc
    }

    /// Unweighted shadow volume `|A(W)|` of every explicit cube of a
    /// zone-free decomposition.
    pub fn shadow_volumes(&self, w: &WhitneyDecomposition) -> Vec<f64> {
        self.subtree_sum(w, |c| c.volume(w.n))
    }

    /// `#A(W)`: the number of cubes whose chain passes through `A`.
    pub fn subtree_sizes(&self, w: &WhitneyDecomposition) -> Vec<f64> {
        self.subtree_sum(w, |_| 1.0)
    }

    fn subtree_sum(&self, w: &WhitneyDecomposition, f: impl Fn(&DyadicCube) -> f64) -> Vec<f64> {
        assert!(w.instances.is_empty(), "materialize zone instances first");
        let mut s: Vec<f64> = w.cubes.iter().map(f).collect();
        for &u in self.order.iter().rev() {
            let p = self.parent[u as usize];
            if p != NONE {
                s[p as usize] += s[u as usize];
            }
        }
        s
    }
}
