#![allow(clippy::needless_range_loop)]

use fraclab::chains::{ChainDecomposition, Strategy};
use fraclab::conditions::{
    check_regime, eval_classical_condition, eval_pp_sup, eval_sharpe_sum, eval_sigma_thm51, ExponentSet, Regime,
    Verdict,
};
use fraclab::geometry::{DyadicCube, Preset, VoxelDomain};
use fraclab::whitney::WhitneyDecomposition;

fn decomposition(preset: Preset, j: i32) -> (WhitneyDecomposition, ChainDecomposition) {
    let d = VoxelDomain::preset(preset, 2, j).unwrap();
    let w = WhitneyDecomposition::build(&d, j).unwrap();
    let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).unwrap();
    (w, cd)
}

/// Inner sums `Σ_{Q: A ∈ C(Q)} max(ℓ(C(Q)),1)^e |Q|` by a double loop.
fn inner_brute(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: f64) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for a in 0..w.len() {
        for q in 0..w.len() {
            if cd.chain(w, q).contains(&a) {
                out[a] += (cd.length(w, q).max(1) as f64).powf(e) * w.cubes[q].volume(2);
            }
        }
    }
    out
}

fn sharpe_brute(w: &WhitneyDecomposition, cd: &ChainDecomposition, e: &ExponentSet) -> f64 {
    let inner = inner_brute(w, cd, e.q - 1.0);
    let a = e.q * (e.delta / 2.0 - 1.0 / e.p);
    let mut terms: Vec<f64> =
        (0..w.len()).map(|i| (inner[i] * w.cubes[i].volume(2).powf(a)).powf(e.p / (e.p - e.q))).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn sup_brute(w: &WhitneyDecomposition, cd: &ChainDecomposition, wexp: f64, aexp: f64) -> (f64, Vec<f64>) {
    let inner = inner_brute(w, cd, wexp);
    let terms: Vec<f64> = (0..w.len()).map(|i| inner[i] * w.cubes[i].volume(2).powf(aexp)).collect();
    (terms.iter().copied().fold(0.0, f64::max), terms)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn small_domains() -> Vec<(WhitneyDecomposition, ChainDecomposition)> {
    let out = vec![decomposition(Preset::UnitCube, 5), decomposition(Preset::LShape, 5), decomposition(Preset::Koch, 5)];
    for (w, _) in &out {
        assert!(w.len() <= 500, "{}", w.len());
    }
    out
}

#[test]
fn sums_match_double_loops() {
    for (w, cd) in small_domains() {
        for (p, q) in [(2.0, 1.0), (3.0, 2.0), (1.5, 1.0)] {
            for delta in [0.25, 0.5, 0.75] {
                let e = ExponentSet::new(2, p, q, delta);
                let r = eval_sharpe_sum(&w, &cd, &e).unwrap();
                let b = sharpe_brute(&w, &cd, &e);
                assert!(close(r.value, b), "{} vs {b}", r.value);
            }
        }
        for p in [1.0, 2.0, 3.0] {
            let e = ExponentSet::new(2, p, p, 0.5);
            let r = eval_pp_sup(&w, &cd, &e).unwrap();
            let (b, terms) = sup_brute(&w, &cd, p - 1.0, p * 0.25 - 1.0);
            assert!(close(r.value, b));
            assert_eq!(terms[r.argmax_id.unwrap()], r.value);
            assert!(r.value >= terms[w.root]);
            let c = eval_classical_condition(&w, &cd, p).unwrap();
            let (bc, cterms) = sup_brute(&w, &cd, p - 1.0, p / 2.0 - 1.0);
            assert!(close(c.value, bc));
            for (x, y) in cterms.iter().zip(&terms) {
                assert!(x <= y);
            }
        }
    }
}

#[test]
fn sigma_is_the_sharpe_sum_at_q_one() {
    for (w, cd) in small_domains() {
        for p in [1.5, 2.0, 3.0] {
            let e = ExponentSet::new(2, p, 1.0, 0.5);
            let a = eval_sharpe_sum(&w, &cd, &e).unwrap();
            let b = eval_sigma_thm51(&w, &cd, &e).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }
}

#[test]
fn classical_p_one_is_a_shadow_supremum() {
    let (w, cd) = decomposition(Preset::UnitCube, 6);
    let sv = cd.shadow_volumes(&w);
    let c = eval_classical_condition(&w, &cd, 1.0).unwrap();
    let direct = (0..w.len()).map(|i| sv[i] * w.cubes[i].volume(2).powf(-0.5)).fold(0.0, f64::max);
    assert!(close(c.value, direct));
}

#[test]
fn single_cube_values() {
    let c = DyadicCube { j: 1, k: [0, 0, 0] };
    let w = WhitneyDecomposition::from_cubes(2, 1, vec![c], c, 0.0).unwrap();
    let cd = ChainDecomposition::build(&w, Strategy::HopCount, None).unwrap();
    let v = c.volume(2);
    let (p, q, d) = (3.0, 2.0, 0.5);
    let r = eval_sharpe_sum(&w, &cd, &ExponentSet::new(2, p, q, d)).unwrap();
    assert!(close(r.value, v.powf((1.0 + q * (d / 2.0 - 1.0 / p)) * p / (p - q))));
    assert_eq!(r.verdict, Verdict::Finite);
    let r = eval_pp_sup(&w, &cd, &ExponentSet::new(2, 2.0, 2.0, d)).unwrap();
    assert!(close(r.value, v.powf(2.0 * d / 2.0)));
    let r = eval_classical_condition(&w, &cd, 2.0).unwrap();
    assert!(close(r.value, v.powf(1.0)));
}

#[test]
fn preconditions() {
    let (w, cd) = decomposition(Preset::UnitCube, 4);
    assert!(eval_sharpe_sum(&w, &cd, &ExponentSet::new(2, 2.0, 2.0, 0.5)).is_err());
    assert!(eval_pp_sup(&w, &cd, &ExponentSet::new(2, 2.0, 1.0, 0.5)).is_err());
    assert!(eval_pp_sup(&w, &cd, &ExponentSet::new(2, 2.0, 2.0, 1.0)).is_err());
}

#[test]
fn sums_grow_with_resolution() {
    let e = ExponentSet::new(2, 2.0, 1.0, 0.5);
    let mut last = 0.0;
    for j in 4..=8 {
        let (w, cd) = decomposition(Preset::UnitCube, j);
        let r = eval_sharpe_sum(&w, &cd, &e).unwrap();
        assert!(r.value >= last);
        for g in r.per_generation.windows(2) {
            assert!(g[1].running >= g[0].running);
        }
        last = r.value;
    }
}

#[test]
fn larger_delta_smaller_terms() {
    let (w, cd) = decomposition(Preset::UnitCube, 5);
    for p in [1.5, 2.0] {
        let inner = inner_brute(&w, &cd, 0.0);
        for i in 0..w.len() {
            let v = w.cubes[i].volume(2);
            let t = |d: f64| inner[i] * v.powf(d / 2.0 - 1.0 / p);
            // |A| < 1, so a larger exponent shrinks the factor.
            assert!(t(0.25) >= t(0.5) && t(0.5) >= t(0.75));
        }
        let a = eval_sharpe_sum(&w, &cd, &ExponentSet::new(2, p, 1.0, 0.25)).unwrap().value;
        let b = eval_sharpe_sum(&w, &cd, &ExponentSet::new(2, p, 1.0, 0.75)).unwrap().value;
        assert!(a >= b);
    }
}

#[test]
fn square_conditions_are_finite() {
    let (w, cd) = decomposition(Preset::UnitCube, 8);
    let r = eval_sigma_thm51(&w, &cd, &ExponentSet::new(2, 2.0, 1.0, 0.5)).unwrap();
    assert_eq!(r.verdict, Verdict::Finite, "{r:?}");
    for p in [1.0, 2.0] {
        for d in [0.25, 0.5, 0.75] {
            let r = eval_pp_sup(&w, &cd, &ExponentSet::new(2, p, p, d)).unwrap();
            assert_eq!(r.verdict, Verdict::Finite, "p={p} δ={d} {r:?}");
        }
    }
}

#[test]
fn regimes() {
    let e = ExponentSet::new(2, 3.0, 1.0, 0.5).with_s(2.0).with_lambda(1.0);
    let r = check_regime(&e).unwrap();
    assert_eq!(r.p_star, Some(2.0));
    assert_eq!(r.s_bound, 4.0);
    assert_eq!(r.regime, Regime::Thm51Positive);
    let r = check_regime(&ExponentSet { p: 2.0, ..e }).unwrap();
    assert_eq!(r.regime, Regime::Thm64Sharp);
    assert_eq!((r.rels_lhs, r.rels_rhs), (0.0, 0.0));
    assert!(r.rels_holds);
    let r = check_regime(&ExponentSet::new(2, 2.0, 2.0, 0.5)).unwrap();
    assert_eq!(r.regime, Regime::InequalityHoldsByThm42);
    let r = check_regime(&ExponentSet::new(2, 2.0, 3.0, 0.5)).unwrap();
    assert_eq!(r.regime, Regime::InequalityHoldsByThm46);
    let r = check_regime(&ExponentSet { s: 4.0, ..e }).unwrap();
    assert_eq!(r.regime, Regime::Outside);
    assert!(r.boundary_case);
}

#[test]
fn regime_threshold_splits_p() {
    let e = ExponentSet::new(2, 2.0, 1.0, 0.5).with_s(1.5).with_lambda(1.3);
    let ps = check_regime(&e).unwrap().p_star.unwrap();
    for k in 1..60 {
        let p = 1.0 + k as f64 * 0.1;
        let r = check_regime(&ExponentSet { p, ..e }).unwrap().regime;
        assert_eq!(r, if p > ps { Regime::Thm51Positive } else { Regime::Thm64Sharp });
    }
}
