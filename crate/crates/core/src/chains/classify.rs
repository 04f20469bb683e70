//! Shadow-volume classes `W_{j,k,σ}` and chain-length statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ChainDecomposition;
use crate::error::{invalid, Error, Result};
use crate::stats::{linear_fit, LinearFit};
use crate::whitney::WhitneyDecomposition;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainClassification {
    pub s: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// `(j, k) ↦ #W_{j,k,σ}`, each cube counted in the class it is assigned to.
    pub buckets: BTreeMap<(i32, i32), u64>,
    /// Per explicit cube: `|∪A(W)|` and its class `k`.
    pub shadow_volumes: Vec<f64>,
    pub explicit_k: Vec<i32>,
    /// `#W_{j,k,σ} / (2^{-kn} 2^{j(n+1+(λ-n-1)/s)})`, maximised over `k`, per `j`.
    pub c_by_generation: BTreeMap<i32, f64>,
    pub c_fit: f64,
}

/// Largest `k` with `2^{-(j-k)n} ≤ v`.
fn natural_k(v: f64, j: i32, n: usize) -> i32 {
    let mut k = (j as f64 + v.log2() / n as f64).floor() as i32;
    while 2f64.powi(-(j - k) * n as i32) > v {
        k -= 1;
    }
    while 2f64.powi(-(j - k - 1) * n as i32) <= v {
        k += 1;
    }
    k
}

/// Assigns every cube `A` of generation `j` to the class `k ≤ [j - j/s]`
/// closest to its shadow volume and finds the least `σ ∈ {1, 2, 4, ...}`
/// for which the classes cover.
pub fn classify_wjk(w: &WhitneyDecomposition, cd: &ChainDecomposition, s: f64, lambda: f64) -> Result<ChainClassification> {
    if !(s > 1.0) {
        return Err(invalid("s", format!("need s > 1, got {s}")));
    }
    let n = w.n;
    let cap = |j: i32| (j as f64 - j as f64 / s).floor() as i32;
    struct Acc {
        need: f64,
        buckets: BTreeMap<(i32, i32), u64>,
        explicit: Vec<(usize, f64, i32)>,
    }
    let explicit_len = w.explicit_len();
    let acc = cd.fold_shadows(
        w,
        None::<fn(u32) -> f64>,
        || Acc { need: 1.0, buckets: BTreeMap::new(), explicit: Vec::new() },
        |a, t, mult| {
            let j = t.cube.j;
            let k0 = natural_k(t.shadow, j, n);
            let k = k0.min(cap(j));
            if k < k0 {
                a.need = a.need.max(t.shadow * 2f64.powi((j - k - 1) * n as i32));
            }
            *a.buckets.entry((j, k)).or_insert(0) += mult;
            if t.id < explicit_len {
                a.explicit.push((t.id, t.shadow, k));
            }
        },
        |a, b| {
            a.need = a.need.max(b.need);
            for (key, v) in b.buckets {
                *a.buckets.entry(key).or_insert(0) += v;
            }
        },
    );
    let mut sigma = 1.0;
    while sigma < acc.need * (1.0 - 1e-12) {
        sigma *= 2.0;
        if sigma > 65536.0 {
            return Err(Error::Numerical(format!("classes do not cover for any σ ≤ 2^16 (need {:.3e})", acc.need)));
        }
    }
    let mut shadow_volumes = vec![0.0; explicit_len];
    let mut explicit_k = vec![0; explicit_len];
    for (id, v, k) in acc.explicit {
        shadow_volumes[id] = v;
        explicit_k[id] = k;
    }
    let expo = n as f64 + 1.0 + (lambda - n as f64 - 1.0) / s;
    let mut c_by_generation: BTreeMap<i32, f64> = BTreeMap::new();
    for (&(j, k), &count) in &acc.buckets {
        let bound = 2f64.powf(-(k as f64) * n as f64 + j as f64 * expo);
        let e = c_by_generation.entry(j).or_insert(0.0);
        *e = e.max(count as f64 / bound);
    }
    let c_fit = c_by_generation.values().copied().fold(0.0, f64::max);
    Ok(ChainClassification { s, lambda, sigma, buckets: acc.buckets, shadow_volumes, explicit_k, c_by_generation, c_fit })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainLengthFit {
    /// Least `c` with `ℓ(C(Q)) ≤ c (1 + j)` for every cube in range.
    pub c: f64,
    /// Per generation, the longest chain.
    pub max_length: Vec<(i32, u32)>,
    /// Longest chain against `1 + j`.
    pub fit: LinearFit,
}

/// Chain lengths against `1 + log2(1/ℓ(Q))` over generations `j_lo..=j_hi`.
pub fn chain_length_fit(w: &WhitneyDecomposition, cd: &ChainDecomposition, j_lo: i32, j_hi: i32) -> Result<ChainLengthFit> {
    let mut longest: BTreeMap<i32, u32> = BTreeMap::new();
    for id in 0..w.len() {
        let j = w.cube(id).j;
        if (j_lo..=j_hi).contains(&j) {
            let e = longest.entry(j).or_insert(0);
            *e = (*e).max(cd.length(w, id));
        }
    }
    let c = longest.iter().map(|(&j, &l)| l as f64 / (1.0 + j as f64)).fold(0.0, f64::max);
    let xs: Vec<f64> = longest.keys().map(|&j| 1.0 + j as f64).collect();
    let ys: Vec<f64> = longest.values().map(|&l| l as f64).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| invalid("generations", "need at least three generations"))?;
    Ok(ChainLengthFit { c, max_length: longest.into_iter().collect(), fit })
}
