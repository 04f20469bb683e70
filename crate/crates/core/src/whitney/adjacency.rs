//! Star adjacency: `P ~ Q` iff the closed 9/8-dilations intersect. Whitney
//! cubes with touching stars differ by at most two generations, so neighbour
//! search only looks that far.

use std::collections::HashMap;

use crate::geometry::{DomainModel, DyadicCube};
use crate::par;

/// Compressed sparse rows.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for r in rows {
            targets.extend_from_slice(r);
            offsets.push(targets.len() as u32);
        }
        Csr { offsets, targets }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn rows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn edges(&self) -> usize {
        self.targets.len() / 2
    }
}

/// Exact closed-star intersection test in integer units of `2^-(J+4)`.
pub fn stars_touch(a: &DyadicCube, b: &DyadicCube, n: usize) -> bool {
    let u = a.j.max(b.j) + 4;
    let span = |c: &DyadicCube, ax: usize| -> (i64, i64) {
        let s = 1i64 << (u - c.j);
        let e = s >> 4;
        (c.k[ax] * s - e, (c.k[ax] + 1) * s + e)
    };
    (0..n).all(|ax| {
        let (al, ah) = span(a, ax);
        let (bl, bh) = span(b, ax);
        al <= bh && bl <= ah
    })
}

fn for_each_candidate(c: &DyadicCube, g: i32, n: usize, mut f: impl FnMut(DyadicCube)) {
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..n {
        if g <= c.j {
            let anc = c.k[a] >> (c.j - g);
            lo[a] = anc - 1;
            hi[a] = anc + 1;
        } else {
            let sh = g - c.j;
            lo[a] = (c.k[a] << sh) - 1;
            hi[a] = (c.k[a] + 1) << sh;
        }
    }
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let d = DyadicCube::new(g, [x, y, z]);
                if d != *c && stars_touch(c, &d, n) {
                    f(d);
                }
            }
        }
    }
}

/// Symmetric adjacency of a sorted cube list.
pub fn build(cubes: &[DyadicCube], n: usize) -> Csr {
    let index: HashMap<DyadicCube, u32> = cubes.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
    // each pair is found from its finer cube (or from the smaller id for equal generations)
    let found: Vec<Vec<u32>> = par::map(cubes.len(), |i| {
        let c = &cubes[i];
        let mut v = Vec::new();
        for g in c.j - 2..=c.j {
            for_each_candidate(c, g, n, |d| {
                if let Some(&id) = index.get(&d) {
                    if g < c.j || id as usize > i {
                        v.push(id);
                    }
                }
            });
        }
        v
    });
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); cubes.len()];
    for (i, v) in found.iter().enumerate() {
        for &t in v {
            rows[i].push(t);
            rows[t as usize].push(i as u32);
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
    }
    Csr::from_rows(&rows)
}

/// Ids in `index` whose stars touch the star of `c` (any generation within two).
pub fn neighbors_in(index: &HashMap<DyadicCube, u32>, c: &DyadicCube, n: usize) -> Vec<u32> {
    let mut v = Vec::new();
    for g in c.j - 2..=c.j + 2 {
        for_each_candidate(c, g, n, |d| {
            if let Some(&id) = index.get(&d) {
                v.push(id);
            }
        });
    }
    v.sort_unstable();
    v
}

/// Whether the star of `c` reaches outside zone `z`.
pub fn touches_outside(domain: &dyn DomainModel, z: usize, c: &DyadicCube, n: usize) -> bool {
    let mut out = false;
    let lo: Vec<i64> = (0..3).map(|a| if a < n { -1 } else { 0 }).collect();
    for dz in lo[2]..=-lo[2] {
        for dy in lo[1]..=-lo[1] {
            for dx in lo[0]..=-lo[0] {
                let d = DyadicCube::new(c.j, [c.k[0] + dx, c.k[1] + dy, c.k[2] + dz]);
                if domain.zone_of(&d) != Some(z) {
                    out = true;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_touch_rules() {
        let a = DyadicCube::new(2, [0, 0, 0]);
        assert!(stars_touch(&a, &DyadicCube::new(2, [1, 1, 0]), 2));
        assert!(!stars_touch(&a, &DyadicCube::new(2, [2, 0, 0]), 2));
        assert!(stars_touch(&a, &DyadicCube::new(4, [4, 0, 0]), 2));
        // a gap of 1/16 exceeds the combined dilations 1/64 + 1/256
        assert!(!stars_touch(&a, &DyadicCube::new(4, [5, 0, 0]), 2));
    }

    #[test]
    fn build_matches_all_pairs() {
        let cubes = {
            let mut v = vec![DyadicCube::new(1, [1, 0, 0]), DyadicCube::new(1, [1, 1, 0]), DyadicCube::new(1, [0, 1, 0])];
            v.extend(DyadicCube::new(1, [0, 0, 0]).children(2).filter(|c| c.k != [1, 1, 0]));
            v.extend(DyadicCube::new(2, [1, 1, 0]).children(2));
            v.sort();
            v
        };
        let csr = build(&cubes, 2);
        for i in 0..cubes.len() {
            let brute: Vec<u32> = (0..cubes.len())
                .filter(|&j| j != i && stars_touch(&cubes[i], &cubes[j], 2))
                .map(|j| j as u32)
                .collect();
            assert_eq!(csr.row(i), brute.as_slice());
        }
    }
}
