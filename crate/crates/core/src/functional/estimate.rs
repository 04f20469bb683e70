//! Lower bounds for the best Poincaré constant.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Grid, Kernel, Localization};
use crate::conditions::ExponentSet;
use crate::error::{invalid, Error, Result};
use crate::par;

pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Smallest nonzero eigenvalue of the nonlocal form (p = q = 2 only).
    Eig,
    /// Projected gradient ascent on the ratio.
    Ascent,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig" => Ok(Method::Eig),
            "ascent" => Ok(Method::Ascent),
            _ => Err(invalid("method", format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    /// Best ratio found; a certified lower bound for the constant.
    pub value: f64,
    pub best_u: Vec<f64>,
    /// Ratio after successive iterations of the best run (subsampled).
    pub trajectory: Vec<f64>,
    pub restart_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub restarts: usize,
}

/// Symmetric pair weights `K_ij + K_ji`, dense.
fn pair_weights(grid: &Grid, e: &ExponentSet, loc: Localization) -> Vec<f64> {
    let k = Kernel::new(grid, e.p, e.delta, loc);
    let n = grid.len();
    let rows: Vec<Vec<f64>> = par::map(n, |i| {
        (0..n).map(|j| if i == j { 0.0 } else { k.weight(i, j).unwrap_or(0.0) + k.weight(j, i).unwrap_or(0.0) }).collect()
    });
    rows.concat()
}

fn random_mean_zero(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn subsample(v: Vec<f64>) -> Vec<f64> {
    let step = v.len().div_ceil(200).max(1);
    let last = v.last().copied();
    let mut out: Vec<f64> = v.into_iter().step_by(step).collect();
    if let Some(l) = last {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

pub fn estimate_constant(
    grid: &Grid,
    e: &ExponentSet,
    loc: Localization,
    method: Method,
    restarts: usize,
    seed: u64,
) -> Result<EstimateReport> {
    e.validate()?;
    loc.validate()?;
    if grid.len() < 2 {
        return Err(invalid("domain", "need at least two voxels"));
    }
    if grid.len() > 8192 {
        return Err(invalid("domain", format!("{} voxels exceed the dense estimator's limit of 8192", grid.len())));
    }
    let w = pair_weights(grid, e, loc);
    match method {
        Method::Eig => eig(grid, e, &w, seed),
        Method::Ascent => ascent(grid, e, &w, restarts.max(1), seed),
    }
}

fn eig(grid: &Grid, e: &ExponentSet, w: &[f64], seed: u64) -> Result<EstimateReport> {
    if e.p != 2.0 || e.q != 2.0 {
        return Err(invalid("p", "the eigenvalue method needs p = q = 2"));
    }
    let n = grid.len();
    let wm = DMatrix::from_row_slice(n, n, w);
    let mut l = -wm.clone();
    for i in 0..n {
        l[(i, i)] = wm.row(i).sum();
    }
    let alpha = l.trace() / n as f64;
    let m = l.clone().add_scalar(alpha);
    let chol = m.cholesky().ok_or_else(|| Error::Numerical("interaction graph is disconnected".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(par::stream_seed(seed, 0));
    let mut v = DVector::from_vec(random_mean_zero(n, &mut rng));
    let mut lambda = f64::INFINITY;
    let mut trajectory = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next = chol.solve(&v);
        normalize(next.as_mut_slice());
        let rq = next.dot(&(&l * &next));
        v = next;
        trajectory.push(grid.cell_volume() / rq);
        if (lambda - rq).abs() <= 1e-8 * rq {
            lambda = rq;
            converged = true;
            break;
        }
        lambda = rq;
    }
    let value = grid.cell_volume() / lambda;
    Ok(EstimateReport {
        method: Method::Eig,
        value,
        best_u: v.as_slice().to_vec(),
        trajectory: subsample(trajectory),
        restart_values: vec![value],
        iterations,
        converged,
        seed,
        restarts: 1,
    })
}

#[inline]
fn signed_pow(t: f64, a: f64) -> f64 {
    if a == 1.0 {
        t
    } else {
        t.signum() * t.abs().powf(a)
    }
}

/// `(log O(u), log S(u))`.
fn log_parts(u: &[f64], w: &[f64], e: &ExponentSet) -> (f64, f64) {
    let n = u.len();
    let m = u.iter().sum::<f64>() / n as f64;
    let o: f64 = u.iter().map(|x| (x - m).abs().powf(e.q)).sum();
    let s = par::sum(n, |i| {
        let row = &w[i * n..(i + 1) * n];
        (i + 1..n).map(|j| if row[j] > 0.0 { row[j] * (u[i] - u[j]).abs().powf(e.p) } else { 0.0 }).sum()
    });
    (o.ln(), s.ln())
}

fn gradient(u: &[f64], w: &[f64], e: &ExponentSet, lo: f64, ls: f64) -> Vec<f64> {
    let n = u.len();
    let m = u.iter().sum::<f64>() / n as f64;
    let phi: Vec<f64> = u.iter().map(|x| signed_pow(x - m, e.q - 1.0)).collect();
    let phi_mean = phi.iter().sum::<f64>() / n as f64;
    let (o, s) = (lo.exp(), ls.exp());
    let mut g: Vec<f64> = par::map(n, |k| {
        let row = &w[k * n..(k + 1) * n];
        let ds: f64 = (0..n).map(|j| if row[j] > 0.0 { row[j] * signed_pow(u[k] - u[j], e.p - 1.0) } else { 0.0 }).sum();
        e.q * (phi[k] - phi_mean) / o - (e.q / e.p) * e.p * ds / s
    });
    let gm = g.iter().sum::<f64>() / n as f64;
    g.iter_mut().for_each(|x| *x -= gm);
    g
}

struct Run {
    value: f64,
    u: Vec<f64>,
    trajectory: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn ascend(u0: Vec<f64>, w: &[f64], e: &ExponentSet, cell: f64) -> Run {
    let ratio = |lo: f64, ls: f64| (lo - (e.q / e.p) * ls).exp() * cell.powf(1.0 - 2.0 * e.q / e.p);
    let mut u = u0;
    let (mut lo, mut ls) = log_parts(&u, w, e);
    let mut f = lo - (e.q / e.p) * ls;
    let mut step = 0.1;
    let mut trajectory = vec![ratio(lo, ls)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let g = gradient(&u, w, e, lo, ls);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(gn > 0.0) {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect();
            normalize(&mut cand);
            let (clo, cls) = log_parts(&cand, w, e);
            let cf = clo - (e.q / e.p) * cls;
            if cf > f {
                accepted = Some((cand, clo, cls, cf));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            None => {
                converged = true;
                break;
            }
            Some((cand, clo, cls, cf)) => {
                let gain = (cf - f).exp() - 1.0;
                u = cand;
                (lo, ls, f) = (clo, cls, cf);
                trajectory.push(ratio(lo, ls));
                step = (step * 2.0).min(1.0);
                if gain < 1e-6 {
                    converged = true;
                    break;
                }
            }
        }
    }
    Run { value: ratio(lo, ls), u, trajectory, iterations, converged }
}

fn ascent(grid: &Grid, e: &ExponentSet, w: &[f64], restarts: usize, seed: u64) -> Result<EstimateReport> {
    let n = grid.len();
    // Weights carry h^{2n}; `ratio` restores the oscillation's h^n.
    let cell = grid.cell_volume();
    let scaled: Vec<f64> = w.iter().map(|x| x / (cell * cell)).collect();
    let runs: Vec<Run> = (0..restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(par::stream_seed(seed, r as u64));
            ascend(random_mean_zero(n, &mut rng), &scaled, e, cell)
        })
        .collect();
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let best = runs
        .into_iter()
        .enumerate()
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value).then(b.0.cmp(&a.0)))
        .map(|(_, r)| r)
        .unwrap();
    Ok(EstimateReport {
        method: Method::Ascent,
        value: best.value,
        best_u: best.u,
        trajectory: subsample(best.trajectory),
        restart_values,
        iterations: best.iterations,
        converged: best.converged,
        seed,
        restarts,
    })
}
