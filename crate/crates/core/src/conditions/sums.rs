use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExponentSet;
use crate::chains::ChainDecomposition;
use crate::error::{invalid, Result};
use crate::par::CompensatedSum;
use crate::whitney::WhitneyDecomposition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Finite,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationIncrement {
    pub j: i32,
    /// Sum (or supremum) of the terms of this tier.
    pub increment: f64,
    /// Value over all tiers up to `j`.
    pub running: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub value: f64,
    pub verdict: Verdict,
    pub per_generation: Vec<GenerationIncrement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_id: Option<usize>,
    /// Last two ratios of consecutive increments.
    pub tail_ratios: Vec<f64>,
}

impl ConditionReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,increment,running\n");
        for g in &self.per_generation {
            s.push_str(&format!("{},{:.12e},{:.12e}\n", g.j, g.increment, g.running));
        }
        s
    }
}

#[derive(Clone, Copy)]
enum Reduce {
    /// `Σ_A (S(A) |A|^a)^outer`
    Sum { outer: f64 },
    /// `sup_A S(A) |A|^a`
    Sup,
}

#[derive(Default)]
struct Tier {
    sum: CompensatedSum,
    max: f64,
    arg: Option<usize>,
}

type Tiers = BTreeMap<i32, Tier>;

fn merge(a: &mut Tiers, b: Tiers) {
    for (j, t) in b {
        let e = a.entry(j).or_default();
        e.sum.merge(&t.sum);
        if t.max > e.max || (t.max == e.max && t.arg < e.arg && t.arg.is_some()) || e.arg.is_none() {
            e.max = t.max;
            e.arg = t.arg;
        }
    }
}

/// Shadows weighted by `max(ℓ(C(Q)), 1)^weight_exp`.
fn evaluate(
    w: &WhitneyDecomposition,
    cd: &ChainDecomposition,
    name: &str,
    weight_exp: f64,
    a_exp: f64,
    reduce: Reduce,
) -> ConditionReport {
    let n = w.n;
    let visit = |acc: &mut Tiers, t: &crate::chains::ShadowTerm, mult: u64| {
        let base = t.shadow * t.cube.volume(n).powf(a_exp);
        let e = acc.entry(t.tier).or_default();
        match reduce {
            Reduce::Sum { outer } => e.sum.add(base.powf(outer) * mult as f64),
            Reduce::Sup => {
                if e.arg.is_none() || base > e.max || (base == e.max && Some(t.id) < e.arg) {
                    e.max = base;
                    e.arg = Some(t.id);
                }
            }
        }
    };
    let tiers = if weight_exp == 0.0 {
        cd.fold_shadows(w, None::<fn(u32) -> f64>, Tiers::new, visit, merge)
    } else {
        let weight = |len: u32| (len.max(1) as f64).powf(weight_exp);
        cd.fold_shadows(w, Some(weight), Tiers::new, visit, merge)
    };

    let mut per_generation = Vec::new();
    let mut total = CompensatedSum::new();
    let mut best: (f64, Option<usize>) = (0.0, None);
    for (&j, t) in &tiers {
        let increment = match reduce {
            Reduce::Sum { .. } => {
                total.merge(&t.sum);
                t.sum.value()
            }
            Reduce::Sup => {
                if best.1.is_none() || t.max > best.0 {
                    best = (t.max, t.arg);
                }
                t.max
            }
        };
        let running = match reduce {
            Reduce::Sum { .. } => total.value(),
            Reduce::Sup => best.0,
        };
        per_generation.push(GenerationIncrement { j, increment, running });
    }
    let value = per_generation.last().map_or(0.0, |g| g.running);
    let exact = w.collar_count == 0 && w.collar_measure == 0.0;
    let (verdict, tail_ratios) = diagnose(&per_generation, exact);
    ConditionReport {
        condition: name.to_string(),
        value,
        verdict,
        per_generation,
        argmax_id: match reduce {
            Reduce::Sup => best.1,
            Reduce::Sum { .. } => None,
        },
        tail_ratios,
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// Finite when the last three tiers decay geometrically, diverging when
/// the last increment does not shrink.
fn diagnose(g: &[GenerationIncrement], exact: bool) -> (Verdict, Vec<f64>) {
    let k = g.len();
    if k < 3 {
        let v = if exact { Verdict::Finite } else { Verdict::Inconclusive };
        return (v, Vec::new());
    }
    let r1 = ratio(g[k - 2].increment, g[k - 3].increment);
    let r2 = ratio(g[k - 1].increment, g[k - 2].increment);
    let v = if exact || (r1 < 0.9 && r2 < 0.9) {
        Verdict::Finite
    } else if r2 >= 1.0 {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    (v, vec![r1, r2])
}

/// `Σ_A (Σ_{Q∈A(W)} ℓ(C(Q))^{q-1} |Q| |A|^{q(δ/n-1/p)})^{p/(p-q)}` for `q < p`.
pub fn eval_sharpe_sum(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: &ExponentSet) -> Result<ConditionReport> {
    e.validate()?;
    if e.q >= e.p {
        return Err(invalid("q", format!("the sum needs q < p (got q = {}, p = {}); use the (p,p) supremum", e.q, e.p)));
    }
    let n = e.n as f64;
    Ok(evaluate(
        w,
        cd,
        "sharpe",
        e.q - 1.0,
        e.q * (e.delta / n - 1.0 / e.p),
        Reduce::Sum { outer: e.p / (e.p - e.q) },
    ))
}

/// `sup_A Σ_{Q∈A(W)} ℓ(C(Q))^{p-1} |Q| |A|^{pδ/n-1}`, for `p = q`.
pub fn eval_pp_sup(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: &ExponentSet) -> Result<ConditionReport> {
    e.validate()?;
    if e.p != e.q {
        return Err(invalid("q", format!("the supremum needs p = q (got p = {}, q = {})", e.p, e.q)));
    }
    let n = e.n as f64;
    Ok(evaluate(w, cd, "pp", e.p - 1.0, e.p * e.delta / n - 1.0, Reduce::Sup))
}

/// The classical (non-fractional) condition, exponent `p/n - 1` on `|A|`.
pub fn eval_classical_condition(w: &WhitneyDecomposition, cd: &ChainDecomposition, p: f64) -> Result<ConditionReport> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    Ok(evaluate(w, cd, "classical", p - 1.0, p / w.n as f64 - 1.0, Reduce::Sup))
}

/// `Σ_A (|∪A(W)| |A|^{δ/n-1/p})^{p/(p-1)}`; the sharpe sum at `q = 1`.
pub fn eval_sigma_thm51(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: &ExponentSet) -> Result<ConditionReport> {
    let e1 = ExponentSet { q: 1.0, ..*e };
    if !(e.p > 1.0) {
        return Err(invalid("p", format!("need p > 1, got {}", e.p)));
    }
    let mut r = eval_sharpe_sum(w, cd, &e1)?;
    r.condition = "sigma".to_string();
    Ok(r)
}
