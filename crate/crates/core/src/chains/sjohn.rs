//! Fitting the s-John parameters `dist(γ(t), ∂G) ≥ t^s / c` along the
//! midpoint polylines of curve-following chains.

use serde::{Deserialize, Serialize};

use super::{ChainDecomposition, Strategy, NONE};
use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::stats::{linear_fit, LinearFit};
use crate::whitney::{translate, WhitneyDecomposition};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SJohnOptions {
    /// Fit range for the arc length `t`.
    pub t_min: f64,
    pub t_max: f64,
    pub per_octave: usize,
}

impl SJohnOptions {
    /// One sample per octave, at `t_min · 2^k`.
    pub fn dyadic(t_min: f64, t_max: f64) -> Self {
        SJohnOptions { t_min, t_max: t_max * (1.0 + 1e-12), per_octave: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SJohnEstimate {
    pub s_hat: f64,
    /// Smallest `c` with `d(y) ≥ H(y)^s_hat / c` at every node with `H ≥ t_min`.
    pub c_hat: f64,
    pub fit: LinearFit,
    /// `(t, E(t))` where `E(t)` is the least clearance of a node some path
    /// reaches only after arc length `t`.
    pub envelope: Vec<(f64, f64)>,
    pub nodes: usize,
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Every chain `Q → root` is read as the polyline through cube midpoints.
/// A node `y` lies at arc length up to `H(y)` from the start of the paths
/// through it, so `d(y) ≥ H(y)^s / c` is the s-John condition at `y`. The
/// lower envelope `E(t) = min{d(y) : H(y) ≥ t}` is regressed on `t` in
/// log-log coordinates.
pub fn estimate_sjohn(w: &WhitneyDecomposition, cd: &ChainDecomposition, opts: &SJohnOptions) -> Result<SJohnEstimate> {
    if cd.strategy != Strategy::CurveFollowing || cd.clearance.len() != w.cubes.len() {
        return Err(invalid("chains", "s-John fitting needs curve-following chains with clearances"));
    }
    if !(opts.t_min > 0.0 && opts.t_max > opts.t_min) || opts.per_octave == 0 {
        return Err(invalid("t range", "need 0 < t_min < t_max and per_octave ≥ 1"));
    }
    let n = w.n;
    let mut samples: Vec<(f64, f64)> = Vec::new();

    let mut h = vec![0.0f64; w.cubes.len()];
    for (t_idx, tt) in cd.templates.iter().enumerate() {
        let t = &w.templates[t_idx];
        let centers: Vec<Point> = t.cubes.iter().map(|c| c.center(n)).collect();
        let mut ht = vec![0.0f64; t.cubes.len()];
        for &u in tt.order.iter().rev() {
            let p = tt.parent[u as usize];
            if p != NONE {
                let v = ht[u as usize] + dist(&centers[u as usize], &centers[p as usize]);
                ht[p as usize] = ht[p as usize].max(v);
            }
        }
        samples.extend(ht.iter().zip(&tt.clearance).map(|(&a, &b)| (a, b)));
        for (i, inst) in w.instances.iter().enumerate().filter(|(_, i)| i.template == t_idx) {
            for (k, &seed) in tt.seeds.iter().enumerate() {
                let e = cd.exits[i][k] as usize;
                let x = translate(&t.cubes[seed as usize], &t.rep_host, &inst.host, n).center(n);
                h[e] = h[e].max(ht[seed as usize] + dist(&x, &w.cubes[e].center(n)));
            }
        }
    }
    for &u in cd.order.iter().rev() {
        let p = cd.parent[u as usize];
        if p != NONE {
            let v = h[u as usize] + dist(&w.cubes[u as usize].center(n), &w.cubes[p as usize].center(n));
            h[p as usize] = h[p as usize].max(v);
        }
    }
    samples.extend(h.iter().zip(&cd.clearance).map(|(&a, &b)| (a, b)));

    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut suffix_min = vec![f64::INFINITY; samples.len() + 1];
    for i in (0..samples.len()).rev() {
        suffix_min[i] = suffix_min[i + 1].min(samples[i].1);
    }
    let envelope_at = |t: f64| suffix_min[samples.partition_point(|s| s.0 < t)];

    let octaves = (opts.t_max / opts.t_min).log2();
    let steps = (octaves * opts.per_octave as f64).floor() as usize;
    let mut envelope = Vec::new();
    for k in 0..=steps {
        let t = opts.t_min * 2f64.powf(k as f64 / opts.per_octave as f64);
        let e = envelope_at(t);
        if e.is_finite() && e > 0.0 {
            envelope.push((t, e));
        }
    }
    let xs: Vec<f64> = envelope.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| invalid("t range", "too few envelope points to fit"))?;
    let s_hat = fit.slope;
    let c_hat = samples
        .iter()
        .filter(|s| s.0 >= opts.t_min && s.1 > 0.0)
        .map(|s| s.0.powf(s_hat) / s.1)
        .fold(0.0, f64::max);
    Ok(SJohnEstimate { s_hat, c_hat, fit, envelope, nodes: samples.len() })
}
