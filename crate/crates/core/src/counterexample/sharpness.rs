//! `B_m` by per-passage Monte Carlo and the growth experiment for `A_m/B_m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sversion::SVersionDomain;
use super::testfn::TestFunction;
use super::vm::{build_vm, compute_am, VmFunction};
use crate::conditions::{check_regime, ExponentSet, Regime};
use crate::error::{invalid, Result};
use crate::functional::monte_carlo::{random_direction, sphere_area};
use crate::geometry::{DomainModel, Point};
use crate::par;
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BmOptions {
    /// Samples per passage in the first round; doubled until the target holds.
    pub samples: usize,
    pub max_samples: usize,
    /// Target relative standard error of `B_m^p`.
    pub rel_error: f64,
    pub seed: Option<u64>,
}

impl Default for BmOptions {
    fn default() -> Self {
        BmOptions { samples: 2048, max_samples: 1 << 16, rel_error: 0.01, seed: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BmReport {
    /// `B_k^p` and its standard error for `k = 1..=m`.
    pub bp: Vec<f64>,
    pub bp_stderr: Vec<f64>,
    pub samples_per_passage: usize,
    /// Set when `max_samples` was reached before the error target.
    pub flagged: bool,
    /// `Σ_k 2^{λ j(k)} 2^{-j(k) E}` for `k = 1..=m`.
    pub analytic_bound: Vec<f64>,
    pub p: f64,
}

impl BmReport {
    /// `B_k`.
    pub fn b(&self, k: usize) -> f64 {
        self.bp[k - 1].powf(1.0 / self.p)
    }
}

/// Estimate of `∫_P ∫_{P ∩ B(x, τ d(x))} |u(x)-u(y)|^p / |x-y|^{n+δp} dy dx`
/// for one passage. Only `x` within `w` of the ramp can see a difference,
/// so `x` is drawn from that band, stratified into the two ramp edges and
/// the ramp interior. Returns the estimate and its variance.
fn passage_integral(g: &SVersionDomain, u: &TestFunction, e: &ExponentSet, samples: usize, seed: u64) -> (f64, f64) {
    let a = &u.apartment;
    let n = a.n;
    let w = a.w();
    let l = a.side;
    let base = a.center[n - 1];
    let (r0, r1) = (base + 5.0 * l / 32.0, base + 7.0 * l / 32.0);
    let strata = [(r0 - w, r0 + w), (r0 + w, r1 - w), (r1 - w, r1 + w)];
    let shares = [samples / 4, samples - 2 * (samples / 4), samples / 4];
    let pw = e.p * (1.0 - e.delta);
    let area = sphere_area(n);
    let section = (2.0 * w).powi(n as i32 - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut var) = (0.0, 0.0);
    for (&(lo, hi), &count) in strata.iter().zip(&shares) {
        let vol = section * (hi - lo);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let mut x: Point = [0.0; 3];
            for i in 0..n - 1 {
                x[i] = a.center[i] + rng.gen_range(-w..w);
            }
            x[n - 1] = rng.gen_range(lo..hi);
            let r = e.tau * g.boundary_dist(&x);
            let mut f = 0.0;
            if r > 0.0 {
                let theta = random_direction(n, &mut rng);
                let rho = r * rng.gen::<f64>().powf(1.0 / pw);
                if rho > 0.0 {
                    let mut y = x;
                    for i in 0..n {
                        y[i] += rho * theta[i];
                    }
                    let du = (u.eval(&x) - u.eval(&y)).abs();
                    f = area * r.powf(pw) / pw * (du / rho).powf(e.p);
                }
            }
            s += f;
            s2 += f * f;
        }
        let m = count as f64;
        let mean = s / m;
        let sv = (s2 / m - mean * mean).max(0.0) / (m - 1.0).max(1.0);
        total += vol * mean;
        var += vol * vol * sv;
    }
    (total, var)
}

/// `B_k^p` for every prefix `k` of `v`, restricted to the passages by the
/// locality of the bumps. Each passage has its own random stream.
pub fn compute_bm(g: &SVersionDomain, v: &VmFunction, e: &ExponentSet, opts: &BmOptions) -> Result<BmReport> {
    let seed = opts.seed.ok_or_else(|| invalid("seed", "B_m needs an explicit seed"))?;
    e.validate()?;
    if !(e.q < e.p) {
        return Err(invalid("q", format!("must be smaller than p = {}, got {}", e.p, e.q)));
    }
    if opts.samples < 8 || opts.rel_error <= 0.0 {
        return Err(invalid("samples", "need at least 8 samples and a positive error target"));
    }
    let terms = v.terms();
    let mut samples = opts.samples;
    loop {
        let parts: Vec<(f64, f64)> =
            par::map(terms.len(), |i| passage_integral(g, &terms[i].0, e, samples, par::stream_seed(seed, i as u64)));
        let mut bp = Vec::new();
        let mut err = Vec::new();
        let mut acc = par::CompensatedSum::new();
        let mut vacc = 0.0;
        let mut t = 0;
        for pick in &v.picks {
            for &(val, var) in &parts[t..t + 2 * pick.m_j] {
                acc.add(val);
                vacc += var;
            }
            t += 2 * pick.m_j;
            bp.push(acc.value());
            err.push(vacc.sqrt());
        }
        let worst = bp.iter().zip(&err).map(|(b, s)| s / b).fold(0.0, f64::max);
        let done = worst <= opts.rel_error;
        if done || samples * 2 > opts.max_samples {
            let analytic_bound = analytic_bound(v, e);
            return Ok(BmReport {
                bp,
                bp_stderr: err,
                samples_per_passage: samples,
                flagged: !done,
                analytic_bound,
                p: e.p,
            });
        }
        samples *= 2;
    }
}

fn analytic_bound(v: &VmFunction, e: &ExponentSet) -> Vec<f64> {
    let n = e.n as f64;
    let ex = e.p * (e.lambda - n) / e.q - e.p + e.s * (n - 1.0) + 1.0 + e.s * (1.0 - e.delta) * e.p;
    let mut acc = 0.0;
    v.picks
        .iter()
        .map(|pk| {
            let j = pk.j as f64;
            acc += (e.lambda * j).exp2() * (-j * ex).exp2();
            acc
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub m: usize,
    pub am: f64,
    pub bm: f64,
    pub bm_stderr: f64,
    pub ratio: f64,
    pub analytic_bound_bm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub rows: Vec<SharpnessRow>,
    pub generations: Vec<i32>,
    pub slope: f64,
    pub target: f64,
    pub fit: LinearFit,
    pub pass: bool,
    pub flagged: bool,
    pub samples_per_passage: usize,
}

impl SharpnessReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,Am,Bm,Bm_stderr,ratio,paper_bound_Bm\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.m, r.am, r.bm, r.bm_stderr, r.ratio, r.analytic_bound_bm
            ));
        }
        s
    }
}

/// Computes `(A_m, B_m)` for `m = 1..=m_max` and fits the slope of
/// `log(A_m/B_m)` against `log m`. Passes when the slope reaches
/// `1/q - 1/p - 0.1`.
pub fn sharpness_experiment(
    g: &SVersionDomain,
    e: &ExponentSet,
    m_max: usize,
    k0: i32,
    opts: &BmOptions,
) -> Result<SharpnessReport> {
    if !(e.q < e.p) {
        return Err(invalid("q", format!("must be smaller than p = {}, got {}", e.p, e.q)));
    }
    if (e.s - g.s()).abs() > 0.0 {
        return Err(invalid("s", format!("exponents use s = {} but the domain has s = {}", e.s, g.s())));
    }
    let regime = check_regime(e)?;
    if regime.regime != Regime::Thm64Sharp && !regime.rels_holds {
        return Err(invalid("p", format!("regime {} is not a sharpness regime", regime.regime.as_str())));
    }
    if m_max < 2 {
        return Err(invalid("m_max", "need at least two generations for a slope"));
    }
    let v = build_vm(g, m_max, k0, e.lambda, e.q, None)?;
    let bm = compute_bm(g, &v, e, opts)?;
    let mut rows = Vec::new();
    for k in 1..=m_max {
        let am = compute_am(&v.truncate(k)).a;
        let b = bm.b(k);
        let rel = bm.bp_stderr[k - 1] / bm.bp[k - 1] / e.p;
        rows.push(SharpnessRow {
            m: k,
            am,
            bm: b,
            bm_stderr: rel * b,
            ratio: am / b,
            analytic_bound_bm: bm.analytic_bound[k - 1].powf(1.0 / e.p),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| invalid("m_max", "degenerate slope fit"))?;
    let target = 1.0 / e.q - 1.0 / e.p;
    Ok(SharpnessReport {
        generations: v.picks.iter().map(|p| p.j).collect(),
        slope: fit.slope,
        target,
        pass: fit.slope >= target - 0.1,
        fit,
        rows,
        flagged: bm.flagged,
        samples_per_passage: bm.samples_per_passage,
    })
}
