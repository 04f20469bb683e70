#![allow(clippy::needless_range_loop)]

use fraclab::conditions::ExponentSet;
use fraclab::functional::{
    cube_lemma_check, cube_lemma_k, estimate_constant, fractional_seminorm, log_distance_integral, log_distance_sweep,
    oscillation_norm, poincare_ratio, seminorm_monte_carlo, Grid, GridFunction, Localization, Method,
    MonteCarloOptions,
};
use fraclab::geometry::pointset::{BoxBoundary, Hyperplane};
use fraclab::geometry::{Aabb, Preset, VoxelDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(j: i32) -> (VoxelDomain, Grid) {
    let d = VoxelDomain::preset(Preset::UnitCube, 2, j).unwrap();
    let g = Grid::new(&d);
    (d, g)
}

fn left_half(d: &VoxelDomain) -> GridFunction {
    GridFunction::from_fn(d, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap()
}

#[test]
fn oscillation_by_hand() {
    let (d, g) = square(2);
    let c = GridFunction::from_fn(&d, |_| 3.0).unwrap();
    assert_eq!(oscillation_norm(&g, &c, 2.0).unwrap(), 0.0);
    let u = left_half(&d);
    for q in [1.0, 2.0, 3.0] {
        assert!((oscillation_norm(&g, &u, q).unwrap() - 0.5f64.powf(q)).abs() < 1e-15);
        let v = oscillation_norm(&g, &u.affine(-3.0, 7.0), q).unwrap();
        assert!((v - 3f64.powf(q) * 0.5f64.powf(q)).abs() < 1e-13);
    }
    assert!(oscillation_norm(&g, &u, 0.5).is_err());
}

/// Distance from a point to the empty voxels of the grid and everything
/// outside it, by scanning.
fn brute_clearance(d: &VoxelDomain, c: [f64; 3]) -> f64 {
    let h = d.h();
    let [nx, ny, _] = d.dims();
    let lo = [d.origin()[0] as f64 * h, d.origin()[1] as f64 * h];
    let hi = [lo[0] + nx as f64 * h, lo[1] + ny as f64 * h];
    let mut best = (c[0] - lo[0]).min(hi[0] - c[0]).min(c[1] - lo[1]).min(hi[1] - c[1]);
    for e in 0..nx * ny {
        if !d.occupancy()[e] {
            let b = d.voxel_cube(e).aabb(2);
            let dx = (b.lo[0] - c[0]).max(c[0] - b.hi[0]).max(0.0);
            let dy = (b.lo[1] - c[1]).max(c[1] - b.hi[1]).max(0.0);
            best = best.min((dx * dx + dy * dy).sqrt());
        }
    }
    best
}

/// Quadruple loop over grid coordinates.
fn brute_seminorm(d: &VoxelDomain, u: &GridFunction, p: f64, delta: f64, tau: Option<f64>) -> f64 {
    let [nx, ny, _] = d.dims();
    let h = d.h();
    let occupied: Vec<usize> = d.occupied().collect();
    let value = |ix: usize, iy: usize| {
        let idx = ix + nx * iy;
        occupied.binary_search(&idx).ok().map(|k| u.values[k])
    };
    let mut terms = Vec::new();
    for ix in 0..nx {
        for iy in 0..ny {
            let Some(a) = value(ix, iy) else { continue };
            let c = d.voxel_center(ix + nx * iy);
            let subs: Vec<([f64; 3], f64)> = (0..16)
                .map(|k| {
                    let o = |i: usize| ((i as f64 + 0.5) / 4.0 - 0.5) * h;
                    let x = [c[0] + o(k / 4), c[1] + o(k % 4), 0.0];
                    (x, brute_clearance(d, x))
                })
                .collect();
            for jx in 0..nx {
                for jy in 0..ny {
                    if (ix, iy) == (jx, jy) {
                        continue;
                    }
                    let Some(b) = value(jx, jy) else { continue };
                    let r = h * (((ix as f64 - jx as f64).powi(2) + (iy as f64 - jy as f64).powi(2)).sqrt());
                    let mut share = 1.0;
                    if let Some(t) = tau {
                        let cy = d.voxel_center(jx + nx * jy);
                        let mut hit = 0;
                        for (x, cl) in &subs {
                            for k in 0..16 {
                                let o = |i: usize| ((i as f64 + 0.5) / 4.0 - 0.5) * h;
                                let y = [cy[0] + o(k / 4), cy[1] + o(k % 4)];
                                if ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt() < t * cl {
                                    hit += 1;
                                }
                            }
                        }
                        if hit == 0 {
                            continue;
                        }
                        share = hit as f64 / 256.0;
                    }
                    terms.push(share * (a - b).abs().powf(p) / r.powf(2.0 + delta * p) * h.powi(4));
                }
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

#[test]
fn seminorm_matches_quadruple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (preset, j) in [(Preset::UnitCube, 2), (Preset::UnitCube, 4), (Preset::LShape, 4)] {
        let d = VoxelDomain::preset(preset, 2, j).unwrap();
        assert!(d.voxel_count() <= 256);
        let g = Grid::new(&d);
        let u = GridFunction::new(&d, (0..d.voxel_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        for p in [1.0, 2.0] {
            for delta in [0.25, 0.75] {
                for tau in [Some(0.5), None] {
                    let loc = tau.map_or(Localization::Full, |tau| Localization::Tau { tau });
                    let s = fractional_seminorm(&g, &u, p, delta, loc).unwrap().value;
                    let b = brute_seminorm(&d, &u, p, delta, tau);
                    assert!((s - b).abs() <= 1e-12 * b, "{preset:?} {p} {delta} {tau:?}: {s} vs {b}");
                }
            }
        }
    }
}

#[test]
fn seminorm_invariances() {
    let (d, g) = square(4);
    let u = left_half(&d);
    let c = GridFunction::from_fn(&d, |_| 2.0).unwrap();
    for loc in [Localization::Full, Localization::Tau { tau: 0.5 }] {
        assert_eq!(fractional_seminorm(&g, &c, 2.0, 0.5, loc).unwrap().value, 0.0);
        for p in [1.0, 2.0] {
            let s = fractional_seminorm(&g, &u, p, 0.5, loc).unwrap().value;
            let scaled = fractional_seminorm(&g, &u.affine(2.0, 0.0), p, 0.5, loc).unwrap().value;
            let shifted = fractional_seminorm(&g, &u.affine(1.0, 0.5), p, 0.5, loc).unwrap().value;
            assert_eq!(scaled, 2f64.powf(p) * s);
            assert_eq!(shifted, s);
        }
    }
    let full = fractional_seminorm(&g, &u, 2.0, 0.5, Localization::Full).unwrap().value;
    let mut last = 0.0;
    for tau in [0.1, 0.3, 0.5, 0.9] {
        let s = fractional_seminorm(&g, &u, 2.0, 0.5, Localization::Tau { tau }).unwrap().value;
        assert!(s >= last && s < full);
        last = s;
    }
}

#[test]
fn ratio_is_affine_invariant() {
    let (d, g) = square(3);
    let u = left_half(&d);
    let loc = Localization::Tau { tau: 0.9 };
    for (p, q) in [(2.0, 2.0), (2.0, 1.0), (3.0, 2.0)] {
        let e = ExponentSet::new(2, p, q, 0.5);
        let r = poincare_ratio(&g, &u, &e, loc).unwrap();
        let r2 = poincare_ratio(&g, &u.affine(2.0, 0.5), &e, loc).unwrap();
        let r3 = poincare_ratio(&g, &u.affine(-0.25, 3.0), &e, loc).unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!((r2 / r - 1.0).abs() < 1e-14 && (r3 / r - 1.0).abs() < 1e-14);
    }
    let e = ExponentSet::new(2, 2.0, 2.0, 0.5);
    let osc = oscillation_norm(&g, &u, 2.0).unwrap();
    let s = brute_seminorm(&d, &u, 2.0, 0.5, Some(0.9));
    assert!((poincare_ratio(&g, &u, &e, loc).unwrap() / (osc / s) - 1.0).abs() < 1e-12);
    let c = GridFunction::from_fn(&d, |_| 1.0).unwrap();
    assert!(poincare_ratio(&g, &c, &e, loc).is_err());
}

fn full_weights(d: &VoxelDomain, delta: f64) -> (usize, Vec<f64>) {
    let g = Grid::new(d);
    let n = g.len();
    let h = g.h;
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = (&g.centers[i], &g.centers[j]);
                let r = ((c.0[0] - c.1[0]).powi(2) + (c.0[1] - c.1[1]).powi(2)).sqrt();
                w[i * n + j] = h.powi(4) / r.powf(2.0 + 2.0 * delta);
            }
        }
    }
    (n, w)
}

#[test]
fn eig_two_voxels_closed_form() {
    let d = VoxelDomain::from_occupancy(2, 2, [0; 3], [2, 1, 1], vec![true, true]).unwrap();
    let g = Grid::new(&d);
    for delta in [0.25, 0.5, 0.75] {
        let e = ExponentSet::new(2, 2.0, 2.0, delta);
        let r = estimate_constant(&g, &e, Localization::Full, Method::Eig, 1, 1).unwrap();
        let exact = 0.25f64.powf(2.0 * delta) / 4.0;
        assert!((r.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", r.value);
    }
}

#[test]
fn eig_matches_dense_eigensolver() {
    for preset in [Preset::UnitCube, Preset::LShape] {
        let d = VoxelDomain::preset(preset, 2, 3).unwrap();
        let delta = 0.5;
        let (n, w) = full_weights(&d, delta);
        let mut lap = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let s = w[i * n + j] + w[j * n + i];
                    lap[(i, j)] -= s / 2.0;
                    lap[(i, i)] += s / 2.0;
                }
            }
        }
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(lap).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let h2 = d.h().powi(2);
        let oracle = h2 / (2.0 * ev[1]);
        let g = Grid::new(&d);
        let r = estimate_constant(&g, &ExponentSet::new(2, 2.0, 2.0, delta), Localization::Full, Method::Eig, 1, 3).unwrap();
        assert!((r.value - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", r.value);
    }
}

#[test]
fn eig_and_ascent_agree() {
    let (_, g) = square(3);
    let e = ExponentSet::new(2, 2.0, 2.0, 0.5);
    for loc in [Localization::Full, Localization::Tau { tau: 0.9 }] {
        let a = estimate_constant(&g, &e, loc, Method::Eig, 1, 7).unwrap();
        let b = estimate_constant(&g, &e, loc, Method::Ascent, 3, 7).unwrap();
        assert!(b.value <= a.value * (1.0 + 1e-9));
        assert!((a.value - b.value).abs() / a.value < 0.02, "{} vs {}", a.value, b.value);
    }
}

#[test]
fn estimate_dominates_random_ratios() {
    let (d, g) = square(4);
    let e = ExponentSet::new(2, 2.0, 2.0, 0.5);
    let loc = Localization::Tau { tau: 0.9 };
    let best = estimate_constant(&g, &e, loc, Method::Eig, 1, 11).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFunction::new(&d, vals).unwrap();
        assert!(poincare_ratio(&g, &u, &e, loc).unwrap() <= best * (1.0 + 1e-9));
    }
    let smooth = GridFunction::from_fn(&d, |x| x[0] + 0.3 * x[1]).unwrap();
    assert!(poincare_ratio(&g, &smooth, &e, loc).unwrap() <= best * (1.0 + 1e-9));
}

#[test]
fn eig_requires_quadratic_exponents() {
    let (_, g) = square(2);
    let e = ExponentSet::new(2, 3.0, 2.0, 0.5);
    assert!(estimate_constant(&g, &e, Localization::Full, Method::Eig, 1, 1).is_err());
    assert!(estimate_constant(&g, &e, Localization::Full, Method::Ascent, 1, 1).is_ok());
}

#[test]
fn cube_lemma_subdivision_and_stability() {
    assert_eq!(cube_lemma_k(2, 0.9), 3);
    assert_eq!(cube_lemma_k(3, 0.9), 3);
    let e = ExponentSet::new(2, 2.0, 1.0, 0.5);
    let ratios: Vec<f64> =
        (4..=6).map(|j| cube_lemma_check(2, &e, 0.9, j, 20, 5).unwrap().max_ratio).collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.0 && hi / lo <= 2.0, "{ratios:?}");
}

#[test]
fn log_integral_square_corner_band() {
    let set = BoxBoundary { b: Aabb::new([0.0; 3], [1.0, 1.0, 0.0]), n: 2 };
    let radii: Vec<f64> = (0..=6).map(|k| 2f64.powi(-k)).collect();
    for p in [1.0, 2.0] {
        let s = log_distance_sweep(&set, &[0.0; 3], &radii, p, 64).unwrap();
        assert!(s.spread <= 2.0, "p={p} spread {}", s.spread);
    }
    for p in [1.0, 2.0, 4.0] {
        let v = log_distance_integral(&set, &[0.0; 3], 0.5, p, 64).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
    }
}

#[test]
fn log_integral_hyperplane_oracle() {
    let set = Hyperplane { axis: 0, value: 0.0, window: Aabb::new([-1.0; 3], [1.0, 1.0, 0.0]), n: 2 };
    for (r, p) in [(0.5, 1.0), (0.25, 2.0)] {
        // ∫_{-r}^{r} 2√(r²-t²) log^p(1/|t|) dt
        let m = 2_000_000;
        let dt = r / m as f64;
        let oracle: f64 = 2.0
            * (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * dt;
                    2.0 * (r * r - t * t).sqrt() * (-t.ln()).powf(p) * dt
                })
                .sum::<f64>();
        let v = log_distance_integral(&set, &[0.0; 3], r, p, 256).unwrap();
        assert!((v.value - oracle).abs() / oracle < 0.02, "{} vs {oracle}", v.value);
    }
}

#[test]
fn monte_carlo_needs_seed_and_repeats() {
    let (d, _) = square(4);
    let u = |x: &[f64; 3]| x[0] * x[0];
    let loc = Localization::Tau { tau: 0.5 };
    assert!(seminorm_monte_carlo(&d, &u, 2.0, 0.5, loc, &MonteCarloOptions { samples: 1000, seed: None }).is_err());
    let o = MonteCarloOptions { samples: 10_000, seed: Some(9) };
    let a = seminorm_monte_carlo(&d, &u, 2.0, 0.5, loc, &o).unwrap();
    let b = seminorm_monte_carlo(&d, &u, 2.0, 0.5, loc, &o).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert!(a.std_error.unwrap() < 0.1 * a.value);
}
