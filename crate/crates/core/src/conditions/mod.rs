//! Sufficient conditions for fractional Poincaré inequalities, evaluated on
//! truncated chain decompositions, and the parameter-regime classifier.

mod sums;

pub use sums::{
    eval_classical_condition, eval_pp_sup, eval_sharpe_sum, eval_sigma_thm51, ConditionReport, GenerationIncrement,
    Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub tau: f64,
    pub s: f64,
    pub lambda: f64,
}

impl ExponentSet {
    pub fn new(n: usize, p: f64, q: f64, delta: f64) -> Self {
        ExponentSet { n, p, q, delta, tau: 0.5, s: 1.0, lambda: n as f64 - 1.0 }
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.n) {
            return Err(invalid("n", format!("dimension must be 2 or 3, got {}", self.n)));
        }
        crate::error::check_exponents(self.p, self.q, self.delta)?;
        crate::error::check_tau(self.tau)?;
        if !(self.s >= 1.0) {
            return Err(invalid("s", format!("need s ≥ 1, got {}", self.s)));
        }
        let n = self.n as f64;
        if !(self.lambda >= n - 1.0 && self.lambda < n) {
            return Err(invalid("lambda", format!("need λ ∈ [n-1, n), got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// s > 1, q = 1 and p above the threshold: the (1,p) inequality holds.
    Thm51Positive,
    /// s > 1, q = 1 and p at or below the threshold: counterexamples exist.
    Thm64Sharp,
    /// 1-John with p = q.
    InequalityHoldsByThm42,
    /// 1-John with 1 < p ≤ q ≤ np/(n - δp).
    InequalityHoldsByThm46,
    Outside,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Thm51Positive => "thm51-positive",
            Regime::Thm64Sharp => "thm64-sharp",
            Regime::InequalityHoldsByThm42 => "inequality-holds-by-thm42",
            Regime::InequalityHoldsByThm46 => "inequality-holds-by-thm46",
            Regime::Outside => "outside",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// `(s(n-1) - λ + 1) / (n - s(1-δ) - λ + 1)`, when the denominator is positive.
    pub p_star: Option<f64>,
    /// `(n + 1 - λ) / (1 - δ)`.
    pub s_bound: f64,
    pub rels_lhs: f64,
    pub rels_rhs: f64,
    /// `(p-q)(λ-n)/(pq) + (s-1)(n-1)/p ≥ 1 - s(1-δ)`.
    pub rels_holds: bool,
    pub boundary_case: bool,
}

pub fn check_regime(e: &ExponentSet) -> Result<RegimeReport> {
    e.validate()?;
    let n = e.n as f64;
    let (p, q, d, s, l) = (e.p, e.q, e.delta, e.s, e.lambda);
    let s_bound = (n + 1.0 - l) / (1.0 - d);
    let denom = n - s * (1.0 - d) - l + 1.0;
    let boundary_case = denom == 0.0;
    let p_star = (denom > 0.0).then(|| (s * (n - 1.0) - l + 1.0) / denom);
    let rels_lhs = (p - q) * (l - n) / (p * q) + (s - 1.0) * (n - 1.0) / p;
    let rels_rhs = 1.0 - s * (1.0 - d);
    let regime = if s == 1.0 {
        if p == q {
            Regime::InequalityHoldsByThm42
        } else if p > 1.0 && p < n / d && p <= q && q <= n * p / (n - d * p) {
            Regime::InequalityHoldsByThm46
        } else {
            Regime::Outside
        }
    } else if q != 1.0 || p <= 1.0 || s >= s_bound {
        Regime::Outside
    } else {
        match p_star {
            Some(ps) if p > ps => Regime::Thm51Positive,
            Some(_) => Regime::Thm64Sharp,
            None => Regime::Outside,
        }
    };
    Ok(RegimeReport {
        regime,
        p_star,
        s_bound,
        rels_lhs,
        rels_rhs,
        rels_holds: rels_lhs >= rels_rhs - 1e-12,
        boundary_case,
    })
}
