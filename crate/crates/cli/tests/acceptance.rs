//! Acceptance gates. Prints one PASS/FAIL line per criterion.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fraclab::chains::{chain_length_fit, estimate_sjohn, ChainDecomposition, SJohnOptions, Strategy};
use fraclab::conditions::{check_regime, eval_pp_sup, eval_sharpe_sum, eval_sigma_thm51, ExponentSet, Regime, Verdict};
use fraclab::counterexample::{sharpness_experiment, Apartment, BmOptions, SVersionDomain, TestFunction};
use fraclab::functional::{
    estimate_constant, fractional_seminorm, log_distance_sweep, poincare_ratio, Grid, GridFunction, Localization,
    Method,
};
use fraclab::geometry::pointset::BoxBoundary;
use fraclab::geometry::{Aabb, DyadicCube, Preset, VoxelDomain};
use fraclab::whitney::{verify_dist_est, WhitneyDecomposition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn square(j: i32) -> Result<(VoxelDomain, WhitneyDecomposition), String> {
    let d = VoxelDomain::preset(Preset::UnitCube, 2, j).map_err(err)?;
    let w = WhitneyDecomposition::build(&d, j).map_err(err)?;
    Ok((d, w))
}

fn g2(jb: i32) -> Result<SVersionDomain, String> {
    let (_, base) = square(jb)?;
    SVersionDomain::build(&base, 1.0, 2.0).map_err(err)
}

fn whitney_fidelity() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for preset in [Preset::UnitCube, Preset::LShape] {
        let d = VoxelDomain::preset(preset, 2, 8).map_err(err)?;
        let w = WhitneyDecomposition::build(&d, 8).map_err(err)?;
        let r = verify_dist_est(&d, &w, 64, 1).map_err(err)?;
        ok &= r.violations.is_empty();
        notes.push(format!(
            "{preset:?}: {} cubes, {} violations, ratio [{:.3}, {:.3}]",
            r.cubes_checked,
            r.violations.len(),
            r.min_ratio,
            r.max_ratio
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn chain_length_law() -> Check {
    let (_, w) = square(8)?;
    let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).map_err(err)?;
    let fit = chain_length_fit(&w, &cd, 3, 8).map_err(err)?;
    let g = g2(6)?;
    let gw = WhitneyDecomposition::build(&g, 40).map_err(err)?;
    let gcd = ChainDecomposition::build(&gw, Strategy::CurveFollowing, Some(&g)).map_err(err)?;
    let (a, b) = g.passage_scales();
    let est = estimate_sjohn(&gw, &gcd, &SJohnOptions::dyadic(a, b)).map_err(err)?;
    let ok = fit.fit.r2 >= 0.9 && (1.8..=2.2).contains(&est.s_hat);
    Ok((ok, format!("square c = {:.3}, R² = {:.4}; G₂ s_hat = {:.4}", fit.c, fit.fit.r2, est.s_hat)))
}

/// `Σ_{Q: A ∈ C(Q)} max(ℓ(C(Q)),1)^e |Q|` for every `A`, by a double loop.
fn inner_brute(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: f64) -> Vec<f64> {
    let chains: Vec<Vec<usize>> = (0..w.len()).map(|q| cd.chain(w, q)).collect();
    let mut out = vec![0.0; w.len()];
    for a in 0..w.len() {
        for q in 0..w.len() {
            if chains[q].contains(&a) {
                out[a] += (cd.length(w, q).max(1) as f64).powf(e) * w.cubes[q].volume(2);
            }
        }
    }
    out
}

fn digits12(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn condition_oracles() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut sizes = Vec::new();
    for preset in [Preset::UnitCube, Preset::LShape, Preset::Koch] {
        let d = VoxelDomain::preset(preset, 2, 5).map_err(err)?;
        let w = WhitneyDecomposition::build(&d, 5).map_err(err)?;
        if w.len() > 500 {
            return Err(format!("{preset:?} has {} cubes", w.len()));
        }
        sizes.push(w.len());
        let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).map_err(err)?;
        for (p, q) in [(2.0, 1.0), (3.0, 2.0), (1.5, 1.0)] {
            for delta in [0.25, 0.5, 0.75] {
                let e = ExponentSet::new(2, p, q, delta);
                let v = eval_sharpe_sum(&w, &cd, &e).map_err(err)?.value;
                let inner = inner_brute(&w, &cd, q - 1.0);
                let a = q * (delta / 2.0 - 1.0 / p);
                let mut terms: Vec<f64> =
                    (0..w.len()).map(|i| (inner[i] * w.cubes[i].volume(2).powf(a)).powf(p / (p - q))).collect();
                terms.sort_by(f64::total_cmp);
                let b: f64 = terms.iter().sum();
                ok &= digits12(v, b);
                worst = worst.max((v - b).abs() / b);
                if q == 1.0 {
                    let s = eval_sigma_thm51(&w, &cd, &e.with_s(1.0)).map_err(err)?.value;
                    ok &= s.to_bits() == v.to_bits();
                }
            }
        }
        for p in [1.0, 2.0, 3.0] {
            let e = ExponentSet::new(2, p, p, 0.5);
            let v = eval_pp_sup(&w, &cd, &e).map_err(err)?.value;
            let inner = inner_brute(&w, &cd, p - 1.0);
            let b = (0..w.len()).map(|i| inner[i] * w.cubes[i].volume(2).powf(p * 0.25 - 1.0)).fold(0.0, f64::max);
            ok &= digits12(v, b);
            worst = worst.max((v - b).abs() / b);
        }
    }
    Ok((ok, format!("cubes {sizes:?}, worst relative gap {worst:.2e}, sigma bitwise equal")))
}

fn pp_bounded() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let decomps: Vec<_> = (5..=8)
        .map(|j| {
            let (_, w) = square(j)?;
            let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).map_err(err)?;
            Ok((w, cd))
        })
        .collect::<Result<_, String>>()?;
    for p in [1.0, 2.0] {
        for delta in [0.25, 0.5, 0.75] {
            let e = ExponentSet::new(2, p, p, delta);
            let v: Vec<f64> =
                decomps.iter().map(|(w, cd)| eval_pp_sup(w, cd, &e).map(|r| r.value)).collect::<Result<_, _>>().map_err(err)?;
            let inc: Vec<f64> = v.windows(2).map(|x| x[1] - x[0]).collect();
            for r in inc.windows(2).map(|x| if x[0] > 0.0 { x[1] / x[0] } else if x[1] > 0.0 { f64::INFINITY } else { 0.0 }) {
                worst = worst.max(r);
                ok &= r < 0.9;
            }
        }
    }
    Ok((ok, format!("largest increment ratio over J = 5..8: {worst:.3}")))
}

fn phase_check() -> Check {
    let g = g2(7)?;
    let w = WhitneyDecomposition::build(&g, 40).map_err(err)?;
    let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).map_err(err)?;
    let e = |p: f64| ExponentSet::new(2, p, 1.0, 0.5).with_s(2.0).with_lambda(1.0);
    let hi = eval_sigma_thm51(&w, &cd, &e(3.0)).map_err(err)?;
    let lo = eval_sigma_thm51(&w, &cd, &e(1.5)).map_err(err)?;
    let r3 = check_regime(&e(3.0)).map_err(err)?;
    let r2 = check_regime(&e(2.0)).map_err(err)?;
    let ok = hi.verdict == Verdict::Finite
        && lo.verdict == Verdict::Diverging
        && r3.regime == Regime::Thm51Positive
        && r2.regime == Regime::Thm64Sharp
        && r3.p_star == Some(2.0);
    Ok((
        ok,
        format!(
            "p=3 {:?} (tail ratios {:.3?}), p=1.5 {:?} (tail ratios {:.3?}); p*={:?}, p=3 {}, p=2 {}",
            hi.verdict,
            hi.tail_ratios,
            lo.verdict,
            lo.tail_ratios,
            r3.p_star,
            r3.regime.as_str(),
            r2.regime.as_str()
        ),
    ))
}

/// The seminorm by a plain loop over voxel pairs and sub-point pairs, with
/// clearances found by scanning every empty voxel and the grid frame.
fn brute_seminorm(d: &VoxelDomain, u: &[f64], p: f64, delta: f64, tau: Option<f64>) -> f64 {
    let h = d.h();
    let [nx, ny, _] = d.dims();
    let occ = d.occupancy();
    let clearance = |c: [f64; 3]| {
        let o = d.voxel_center(0);
        let (x0, y0) = (o[0] - h / 2.0, o[1] - h / 2.0);
        let mut best = (c[0] - x0).min(c[1] - y0).min(x0 + nx as f64 * h - c[0]).min(y0 + ny as f64 * h - c[1]);
        for iy in 0..ny {
            for ix in 0..nx {
                if !occ[ix + nx * iy] {
                    let (lx, ly) = (x0 + ix as f64 * h, y0 + iy as f64 * h);
                    let dx = (lx - c[0]).max(c[0] - lx - h).max(0.0);
                    let dy = (ly - c[1]).max(c[1] - ly - h).max(0.0);
                    best = best.min((dx * dx + dy * dy).sqrt());
                }
            }
        }
        best
    };
    let off = |k: usize| ((k as f64 + 0.5) / 4.0 - 0.5) * h;
    let cells: Vec<usize> = (0..nx * ny).filter(|&i| occ[i]).collect();
    let subs: Vec<Vec<([f64; 2], f64)>> = cells
        .iter()
        .map(|&i| {
            let c = d.voxel_center(i);
            (0..16)
                .map(|k| {
                    let x = [c[0] + off(k / 4), c[1] + off(k % 4)];
                    (x, clearance([x[0], x[1], 0.0]))
                })
                .collect()
        })
        .collect();
    let mut terms = Vec::new();
    for a in 0..cells.len() {
        for b in 0..cells.len() {
            if a == b {
                continue;
            }
            let (ca, cb) = (d.voxel_center(cells[a]), d.voxel_center(cells[b]));
            let r = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
            let mut share = 1.0;
            if let Some(t) = tau {
                let mut hit = 0;
                for (x, cl) in &subs[a] {
                    for (y, _) in &subs[b] {
                        if ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt() < t * cl {
                            hit += 1;
                        }
                    }
                }
                share = hit as f64 / 256.0;
            }
            terms.push(share * (u[a] - u[b]).abs().powf(p) * h.powi(4) / r.powf(2.0 + delta * p));
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn seminorm_oracle() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (preset, j) in [(Preset::UnitCube, 4), (Preset::LShape, 4)] {
        let d = VoxelDomain::preset(preset, 2, j).map_err(err)?;
        let grid = Grid::new(&d);
        if grid.len() > 256 {
            return Err(format!("{preset:?} has {} voxels", grid.len()));
        }
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFunction::new(&d, vals.clone()).map_err(err)?;
        for p in [1.0, 2.0] {
            for delta in [0.25, 0.75] {
                let mut seen = Vec::new();
                for tau in [Some(0.5), None] {
                    let loc = tau.map_or(Localization::Full, |tau| Localization::Tau { tau });
                    let v = fractional_seminorm(&grid, &u, p, delta, loc).map_err(err)?.value;
                    let b = brute_seminorm(&d, &vals, p, delta, tau);
                    ok &= digits12(v, b);
                    worst = worst.max((v - b).abs() / b);
                    let scaled = fractional_seminorm(&grid, &u.affine(2.0, 0.0), p, delta, loc).map_err(err)?.value;
                    let shifted = fractional_seminorm(&grid, &u.affine(1.0, 0.5), p, delta, loc).map_err(err)?.value;
                    ok &= scaled == 2f64.powf(p) * v && shifted == v;
                    seen.push(v);
                }
                ok &= seen[0] <= seen[1];
            }
        }
    }
    Ok((ok, format!("worst relative gap {worst:.2e}; scaling, shift and localization exact")))
}

fn constant_estimator() -> Check {
    let e = ExponentSet::new(2, 2.0, 2.0, 0.5);
    let loc = Localization::Tau { tau: 0.9 };
    let (d4, _) = square(4)?;
    let (d5, _) = square(5)?;
    let (g4, g5) = (Grid::new(&d4), Grid::new(&d5));
    let eig4 = estimate_constant(&g4, &e, loc, Method::Eig, 1, 1).map_err(err)?.value;
    let eig5 = estimate_constant(&g5, &e, loc, Method::Eig, 1, 1).map_err(err)?.value;
    let asc5 = estimate_constant(&g5, &e, loc, Method::Ascent, 4, 1).map_err(err)?.value;
    let agree = (eig5 - asc5).abs() / eig5 <= 0.02;
    let stable = (eig4 - eig5).abs() / eig4.max(eig5) <= 0.20;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dominated = true;
    for _ in 0..100 {
        let vals: Vec<f64> = (0..g5.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFunction::new(&d5, vals).map_err(err)?;
        dominated &= poincare_ratio(&g5, &u, &e, loc).map_err(err)? <= eig5 * (1.0 + 1e-9);
    }
    Ok((
        agree && stable && dominated,
        format!(
            "τ=0.9: eig J5 {eig5:.4}, ascent J5 {asc5:.4} ({:.2}%); J4 {eig4:.4} vs J5 ({:.1}%); dominates 100 random: {dominated}",
            100.0 * (eig5 - asc5).abs() / eig5,
            100.0 * (eig4 - eig5).abs() / eig4.max(eig5)
        ),
    ))
}

fn log_integral_band() -> Check {
    let set = BoxBoundary { b: Aabb::new([0.0; 3], [1.0, 1.0, 0.0]), n: 2 };
    let radii: Vec<f64> = (0..=6).map(|k| 2f64.powi(-k)).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [1.0, 2.0] {
        let s = log_distance_sweep(&set, &[0.0; 3], &radii, p, 64).map_err(err)?;
        ok &= s.spread <= 2.0;
        notes.push(format!("p={p}: spread {:.3}", s.spread));
    }
    Ok((ok, notes.join(", ")))
}

fn counterexample_geometry() -> Check {
    let a = Apartment::new(DyadicCube::new(0, [0, 0, 0]), 2.0, 2);
    let (r, p, t) = (a.room(), a.passage(), a.tiny_passage());
    let boxes = [
        (r.lo[0], r.hi[0], r.lo[1], r.hi[1]) == (3.0 / 8.0, 5.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0),
        (p.lo[0], p.hi[0], p.lo[1], p.hi[1]) == (31.0 / 64.0, 33.0 / 64.0, 5.0 / 8.0, 3.0 / 4.0),
        (t.lo[0], t.hi[0], t.lo[1], t.hi[1]) == (31.0 / 64.0, 33.0 / 64.0, 21.0 / 32.0, 23.0 / 32.0),
    ];
    let u = TestFunction::new(a, 1.0, 1.0).map_err(err)?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for k in 1..20 {
        let y = t.lo[1] + (t.hi[1] - t.lo[1]) * k as f64 / 20.0;
        let fd = (u.eval(&[0.5, y + h, 0.0]) - u.eval(&[0.5, y - h, 0.0])) / (2.0 * h);
        worst = worst.max((fd + 16.0).abs());
    }
    let ok = boxes.iter().all(|b| *b) && worst <= 1e-10 && u.slope() == -16.0;
    Ok((ok, format!("boxes exact: {boxes:?}; slope -16, finite-difference error {worst:.1e}")))
}

fn sharpness_blowup() -> Check {
    let g = g2(9)?;
    let e = ExponentSet::new(2, 2.0, 1.0, 0.5).with_s(2.0).with_lambda(1.0);
    let run = |seed: u64, tau: f64| {
        let opts = BmOptions { seed: Some(seed), ..Default::default() };
        sharpness_experiment(&g, &e.with_tau(tau), 6, 1, &opts).map_err(err)
    };
    let main = run(42, e.tau)?;
    let worst_err = main.rows.iter().map(|r| r.bm_stderr / r.bm).fold(0.0, f64::max);
    let slopes: Vec<f64> = [42, 43, 44].iter().map(|&s| run(s, e.tau).map(|r| r.slope)).collect::<Result<_, _>>()?;
    let spread = slopes.iter().copied().fold(f64::MIN, f64::max) - slopes.iter().copied().fold(f64::MAX, f64::min);
    let taus: Vec<String> =
        [0.25, 0.9].iter().map(|&t| run(42, t).map(|r| format!("τ={t}: {:.4}", r.slope))).collect::<Result<_, _>>()?;
    let ok = main.slope >= 0.4 && worst_err <= 0.02 && spread <= 0.05 && !main.flagged;
    Ok((
        ok,
        format!(
            "slope {:.4} (target {:.2}, τ={}), generations {:?}, max B_m rel. error {:.2}%, seed spread {spread:.4}; {}",
            main.slope,
            main.target,
            e.tau,
            main.generations,
            100.0 * worst_err,
            taus.join(", ")
        ),
    ))
}

fn pipeline(dir: &Path, jobs: usize) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(err)?;
    let bin = env!("CARGO_BIN_EXE_fraclab");
    let jobs = jobs.to_string();
    let steps: Vec<Vec<&str>> = vec![
        vec!["domain", "--preset", "l-shape", "--J", "5", "--out", "d.json"],
        vec!["whitney", "--domain", "d.json", "--jmax", "6", "--verify-samples", "8", "--seed", "3", "--out", "w.json"],
        vec!["chains", "--whitney", "w.json", "--strategy", "curve-following", "--domain", "d.json", "--out", "c.json"],
        vec!["conditions", "--chains", "c.json", "--cond", "sharpe", "--p", "2", "--q", "1", "--out", "r.json", "--csv", "r.csv"],
        vec!["constant", "--domain", "d.json", "--method", "ascent", "--restarts", "2", "--seed", "5", "--out", "k.json"],
        vec!["cube-lemma", "--j", "4", "--trials", "8", "--seed", "2", "--out", "cl.json"],
        vec!["log-integral", "--r-min", "0.125", "--p", "2", "--out", "li.json"],
        vec!["porosity", "--set", "koch-curve:4", "--r-min", "0.125", "--r-max", "0.25", "--trials", "16", "--out", "po.json"],
        vec!["sharpness", "--m-max", "3", "--seed", "9", "--out", "sharp"],
    ];
    for step in steps {
        let out = Command::new(bin).current_dir(dir).arg("--jobs").arg(&jobs).args(&step).output().map_err(err)?;
        if !out.status.success() {
            return Err(format!("{:?} failed: {}", step, String::from_utf8_lossy(&out.stderr).trim()));
        }
    }
    Ok(())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a, 1)?;
    pipeline(&b, 4)?;
    let files = ["d.json", "w.json", "c.json", "r.json", "r.csv", "k.json", "cl.json", "li.json", "po.json", "sharp/results.csv", "sharp/manifest.json"];
    let mut differ = Vec::new();
    for f in files {
        let x = std::fs::read(a.join(f)).map_err(err)?;
        let y = std::fs::read(b.join(f)).map_err(err)?;
        if x != y {
            differ.push(f);
        }
    }
    let usage = Command::new(env!("CARGO_BIN_EXE_fraclab")).args(["sharpness", "--m-max", "3"]).output().map_err(err)?;
    let exit2 = usage.status.code() == Some(2) && String::from_utf8_lossy(&usage.stderr).lines().filter(|l| l.starts_with("error")).count() == 1;
    Ok((
        differ.is_empty() && exit2,
        format!("{} artifacts compared across --jobs 1 and 4, differing: {differ:?}; missing seed exits 2: {exit2}", files.len()),
    ))
}

type Gate = (&'static str, fn() -> Check, f64);

fn main() {
    let criteria: [Gate; 11] = [
        ("whitney fidelity", whitney_fidelity, 10.0),
        ("chain-length law", chain_length_law, f64::INFINITY),
        ("condition evaluators vs oracle", condition_oracles, f64::INFINITY),
        ("pp supremum bounded on the square", pp_bounded, f64::INFINITY),
        ("phase check on G2", phase_check, f64::INFINITY),
        ("seminorm oracle", seminorm_oracle, f64::INFINITY),
        ("constant estimator", constant_estimator, 120.0),
        ("log-distance integral band", log_integral_band, f64::INFINITY),
        ("counterexample geometry", counterexample_geometry, f64::INFINITY),
        ("sharpness blow-up", sharpness_blowup, 600.0),
        ("determinism", determinism, f64::INFINITY),
    ];
    let mut passed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && secs < *budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_note = if budget.is_finite() { format!(", budget {budget:.0} s") } else { String::new() };
        println!("{} {:>2} {name}: {detail} [{secs:.1} s{budget_note}]", if ok { "PASS" } else { "FAIL" }, i + 1);
        passed += ok as usize;
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
}
