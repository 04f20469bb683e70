//! Parallel against single-worker runs of the data-parallel kernels.
//! Build with `--no-default-features` to time the plain sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fraclab::conditions::ExponentSet;
use fraclab::counterexample::{build_vm, compute_bm, BmOptions, SVersionDomain};
use fraclab::functional::{fractional_seminorm, Grid, GridFunction, Localization};
use fraclab::geometry::{Preset, VoxelDomain};
use fraclab::par;
use fraclab::whitney::{verify_dist_est, WhitneyDecomposition};

fn workers() -> [(&'static str, usize); 2] {
    [("parallel", 0), ("sequential", 1)]
}

fn seminorm(c: &mut Criterion) {
    let d = VoxelDomain::preset(Preset::UnitCube, 2, 5).unwrap();
    let grid = Grid::new(&d);
    let u = GridFunction::from_fn(&d, |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
    let mut g = c.benchmark_group("seminorm_tau");
    g.sample_size(10);
    for (name, jobs) in workers() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || fractional_seminorm(&grid, &u, 2.0, 0.5, Localization::Tau { tau: 0.9 }).unwrap()))
        });
    }
    g.finish();
}

fn dist_check(c: &mut Criterion) {
    let d = VoxelDomain::preset(Preset::LShape, 2, 8).unwrap();
    let w = WhitneyDecomposition::build(&d, 8).unwrap();
    let mut g = c.benchmark_group("verify_dist_est");
    g.sample_size(10);
    for (name, jobs) in workers() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || verify_dist_est(&d, &w, 16, 1).unwrap()))
        });
    }
    g.finish();
}

fn passages(c: &mut Criterion) {
    let d = VoxelDomain::preset(Preset::UnitCube, 2, 7).unwrap();
    let base = WhitneyDecomposition::build(&d, 7).unwrap();
    let gs = SVersionDomain::build(&base, 1.0, 2.0).unwrap();
    let v = build_vm(&gs, 3, 1, 1.0, 1.0, None).unwrap();
    let e = ExponentSet::new(2, 2.0, 1.0, 0.5).with_s(2.0).with_lambda(1.0);
    let opts = BmOptions { samples: 1024, max_samples: 1024, rel_error: 1.0, seed: Some(1) };
    let mut g = c.benchmark_group("passage_monte_carlo");
    g.sample_size(10);
    for (name, jobs) in workers() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || compute_bm(&gs, &v, &e, &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, seminorm, dist_check, passages);
criterion_main!(benches);
