//! Signed sums of apartment bumps over chosen Whitney generations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sversion::SVersionDomain;
use super::testfn::TestFunction;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::par::CompensatedSum;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationPick {
    pub j: i32,
    /// `M_j = 2^{⌊λ(j-k0)⌋}`.
    pub m_j: usize,
    /// Apartment indices carrying `+u`, then those carrying `-u`.
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VmFunction {
    pub m: usize,
    pub k0: i32,
    pub lambda: f64,
    pub q: f64,
    pub picks: Vec<GenerationPick>,
    terms: Vec<(TestFunction, f64)>,
}

/// `A_m^q = ∫ |v_m - (v_m)_G|^q` and its `q`-th root.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AmValue {
    pub aq: f64,
    pub a: f64,
}

/// Picks the `m` smallest generations above `max(k0, j(Q0))` holding at
/// least `2 M_j` apartments. Without a seed the first `2 M_j` by id are
/// taken; with one they are drawn at random.
pub fn build_vm(g: &SVersionDomain, m: usize, k0: i32, lambda: f64, q: f64, seed: Option<u64>) -> Result<VmFunction> {
    if m == 0 {
        return Err(invalid("m", "need at least one generation"));
    }
    let apts = g.apartments();
    let j0 = g.root_host().j.max(k0);
    let j_last = apts.iter().map(|a| a.host.j).max().unwrap_or(j0);
    let mut picks = Vec::new();
    let mut terms = Vec::new();
    let mut j = j0 + 1;
    while picks.len() < m {
        let m_j = 1usize << (lambda * (j - k0) as f64).floor() as u32;
        let mut ids: Vec<usize> = (0..apts.len()).filter(|&i| apts[i].host.j == j).collect();
        if ids.len() >= 2 * m_j {
            if let Some(s) = seed {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::par::stream_seed(s, j as u64));
                ids.shuffle(&mut rng);
                ids.truncate(2 * m_j);
                ids.sort_unstable();
            }
            let plus = ids[..m_j].to_vec();
            let minus = ids[m_j..2 * m_j].to_vec();
            for (set, sign) in [(&plus, 1.0), (&minus, -1.0)] {
                for &i in set {
                    terms.push((TestFunction::new(apts[i], lambda, q)?, sign));
                }
            }
            picks.push(GenerationPick { j, m_j, plus, minus });
        } else if j >= j_last {
            return Err(Error::NotEnoughCubes { generation: j.max(0) as u32, need: 2 * m_j, have: ids.len() });
        }
        j += 1;
    }
    Ok(VmFunction { m, k0, lambda, q, picks, terms })
}

impl VmFunction {
    pub fn terms(&self) -> &[(TestFunction, f64)] {
        &self.terms
    }

    /// The bumps have disjoint supports, so at most one term is nonzero.
    pub fn eval(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(u, s)| s * u.eval(x)).find(|v| *v != 0.0).unwrap_or(0.0)
    }

    /// Restriction to the first `k` generations.
    pub fn truncate(&self, k: usize) -> VmFunction {
        let k = k.min(self.m);
        let count: usize = self.picks[..k].iter().map(|p| 2 * p.m_j).sum();
        VmFunction {
            m: k,
            k0: self.k0,
            lambda: self.lambda,
            q: self.q,
            picks: self.picks[..k].to_vec(),
            terms: self.terms[..count].to_vec(),
        }
    }
}

/// Closed-form `A_m`. Plus and minus bumps of one generation are
/// translates, so the mean over `G_s` vanishes exactly.
pub fn compute_am(v: &VmFunction) -> AmValue {
    let mut s = CompensatedSum::new();
    for (u, _) in &v.terms {
        s.add(u.lq_power());
    }
    let aq = s.value();
    AmValue { aq, a: aq.powf(1.0 / v.q) }
}
