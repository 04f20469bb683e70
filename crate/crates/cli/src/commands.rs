//! Subcommand arguments and bodies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde_json::{json, Value};

use fraclab::chains::{estimate_sjohn, ChainDecomposition, ChainFile, SJohnOptions, Strategy};
use fraclab::conditions::{
    check_regime, eval_classical_condition, eval_pp_sup, eval_sharpe_sum, eval_sigma_thm51, ExponentSet,
};
use fraclab::counterexample::{sharpness_experiment, BmOptions, SVersionDomain};
use fraclab::functional::{cube_lemma_check, estimate_constant, log_distance_sweep, Grid, Localization, Method};
use fraclab::geometry::measure::{dimension_fit, dyadic_radii, porosity};
use fraclab::geometry::pointset::named_set;
use fraclab::geometry::voxel::VoxelDomainFile;
use fraclab::geometry::{DomainModel, Preset, VoxelDomain};
use fraclab::whitney::{verify_dist_est, whitney_counting, WhitneyDecomposition, WhitneyFile};

use crate::output::{emit_json, write_atomic, Manifest};
use crate::Command;

/// A command-line validation failure (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Where a voxel domain comes from: a domain file or a preset.
#[derive(Args, Debug)]
pub struct DomainSource {
    /// Domain file written by `fraclab domain`; overrides --preset.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Preset: square, l-shape or koch.
    #[arg(long, default_value = "square")]
    pub preset: String,
    /// Dimension for presets.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Voxel resolution 2^-J for presets.
    #[arg(long = "J", default_value_t = 6)]
    pub resolution: i32,
}

#[derive(Args, Debug)]
pub struct DomainArgs {
    #[command(flatten)]
    pub src: DomainSource,
    /// PBM bitmap (P1 or P4) to use instead of a preset.
    #[arg(long)]
    pub pbm: Option<PathBuf>,
    /// Embed the distance field.
    #[arg(long, default_value_t = false)]
    pub with_dist: bool,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WhitneyArgs {
    #[command(flatten)]
    pub src: DomainSource,
    /// Finest generation.
    #[arg(long, default_value_t = 7)]
    pub jmax: i32,
    /// Exponent for the normalized counts 2^{-λj} #W_j (default n-1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Samples per cube for the distance check (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub verify_samples: usize,
    /// Seed for the distance check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChainsArgs {
    /// Whitney file written by `fraclab whitney`.
    #[arg(long)]
    pub whitney: PathBuf,
    /// hop-count or curve-following.
    #[arg(long, default_value = "hop-count")]
    pub strategy: String,
    /// Domain file, needed for curve-following clearances.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConditionsArgs {
    /// Chains file written by `fraclab chains`.
    #[arg(long)]
    pub chains: PathBuf,
    /// sharpe, pp, classical or sigma.
    #[arg(long, default_value = "pp")]
    pub cond: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Defaults to p for pp and 1 otherwise.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Defaults to n-1.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Also write the per-generation CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstantArgs {
    #[command(flatten)]
    pub src: DomainSource,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Localization factor; ignored with --full.
    #[arg(long, default_value_t = 0.9)]
    pub tau: f64,
    /// Use the unlocalized seminorm.
    #[arg(long, default_value_t = false)]
    pub full: bool,
    /// eig or ascent.
    #[arg(long, default_value = "eig")]
    pub method: String,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CubeLemmaArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,
    /// Grid resolution 2^-j.
    #[arg(long, default_value_t = 5)]
    pub j: i32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A named point set: point, segment, square-boundary, cube-boundary,
/// hyperplane, koch-curve[:level], koch-snowflake[:level].
#[derive(Args, Debug)]
pub struct SetArgs {
    #[arg(long, default_value = "square-boundary")]
    pub set: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_max: f64,
}

#[derive(Args, Debug)]
pub struct LogIntegralArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Centre point, comma separated.
    #[arg(long, default_value = "0,0")]
    pub point: String,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Grid cells per radius (at least 64).
    #[arg(long, default_value_t = 64)]
    pub cells: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Grid cells per radius.
    #[arg(long, default_value_t = 16)]
    pub cells: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PorosityArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Centres per scale.
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
    /// Hole search depth: holes are dyadic cubes of relative size 2^-j.
    #[arg(long, default_value_t = 6)]
    pub j: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SVersionArgs {
    /// Base domain: square or koch.
    #[arg(long, default_value = "square")]
    pub base: String,
    /// Finest generation of the base decomposition.
    #[arg(long, default_value_t = 6)]
    pub jb: i32,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// Also decompose G_s and estimate its s-John exponent.
    #[arg(long)]
    pub john: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SharpnessArgs {
    /// Base domain: square or koch.
    #[arg(long, default_value = "square")]
    pub base: String,
    /// Finest generation of the base decomposition (default: smallest that fits m-max).
    #[arg(long)]
    pub jb: Option<i32>,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Defaults to n-1 on the square and log 4/log 3 on the snowflake.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 1)]
    pub k0: i32,
    #[arg(long, default_value_t = 6)]
    pub m_max: usize,
    /// Required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial samples per passage.
    #[arg(long, default_value_t = 2048)]
    pub samples: usize,
    /// Target relative standard error of B_m^p.
    #[arg(long, default_value_t = 0.01)]
    pub rel_error: f64,
    /// Output directory for results.csv and manifest.json.
    #[arg(long, default_value = "sharpness-out")]
    pub out: PathBuf,
}

fn merge(body: Value, extra: Value) -> Value {
    match (body, extra) {
        (Value::Object(mut a), Value::Object(b)) => {
            a.extend(b);
            Value::Object(a)
        }
        (a, _) => a,
    }
}

fn load_domain(m: &mut Manifest, src: &DomainSource) -> Result<VoxelDomain> {
    match &src.domain {
        Some(path) => {
            let bytes = m.read_input(path)?;
            let f: VoxelDomainFile =
                serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: not a domain file: {e}", path.display())))?;
            Ok(VoxelDomain::from_file(&f)?)
        }
        None => {
            let preset: Preset = src.preset.parse()?;
            Ok(VoxelDomain::preset(preset, src.n, src.resolution)?)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(m: &mut Manifest, path: &Path, what: &str) -> Result<T> {
    let bytes = m.read_input(path)?;
    serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: not a {what} file: {e}", path.display())))
}

pub fn run(name: &str, cmd: &Command, params: BTreeMap<String, String>) -> Result<()> {
    match cmd {
        Command::Domain(a) => domain(a, Manifest::new(name, params, None)),
        Command::Whitney(a) => whitney(a, Manifest::new(name, params, Some(a.seed))),
        Command::Chains(a) => chains(a, Manifest::new(name, params, None)),
        Command::Conditions(a) => conditions(a, Manifest::new(name, params, None)),
        Command::Constant(a) => constant(a, Manifest::new(name, params, Some(a.seed))),
        Command::CubeLemma(a) => cube_lemma(a, Manifest::new(name, params, Some(a.seed))),
        Command::LogIntegral(a) => log_integral(a, Manifest::new(name, params, None)),
        Command::Dimension(a) => dimension(a, Manifest::new(name, params, None)),
        Command::Porosity(a) => porosity_cmd(a, Manifest::new(name, params, Some(a.seed))),
        Command::SVersion(a) => s_version(a, Manifest::new(name, params, None)),
        Command::Sharpness(a) => sharpness(a, Manifest::new(name, params, a.seed)),
    }
}

fn domain(a: &DomainArgs, mut m: Manifest) -> Result<()> {
    let d = match &a.pbm {
        Some(path) => {
            let bytes = m.read_input(path)?;
            VoxelDomain::from_pbm(&bytes, a.src.resolution)?
        }
        None => load_domain(&mut m, &a.src)?,
    };
    let body = merge(
        serde_json::to_value(d.to_file(a.with_dist))?,
        json!({ "voxels": d.voxel_count(), "measure": d.measure() }),
    );
    emit_json(a.out.as_deref(), &m, body)
}

fn whitney(a: &WhitneyArgs, mut m: Manifest) -> Result<()> {
    let d = load_domain(&mut m, &a.src)?;
    let w = WhitneyDecomposition::build(&d, a.jmax)?;
    let lambda = a.lambda.unwrap_or(d.dim() as f64 - 1.0);
    let counts = whitney_counting(&w, lambda);
    let dist = if a.verify_samples > 0 { Some(verify_dist_est(&d, &w, a.verify_samples, a.seed)?) } else { None };
    let body = merge(serde_json::to_value(w.to_file())?, json!({ "counts": counts, "dist_est": dist }));
    emit_json(a.out.as_deref(), &m, body)
}

fn chains(a: &ChainsArgs, mut m: Manifest) -> Result<()> {
    let f: WhitneyFile = read_json(&mut m, &a.whitney, "Whitney")?;
    let w = WhitneyDecomposition::from_file(&f)?;
    let strategy: Strategy = a.strategy.parse()?;
    let d = match &a.domain {
        Some(path) => {
            let f: VoxelDomainFile = read_json(&mut m, path, "domain")?;
            Some(VoxelDomain::from_file(&f)?)
        }
        None => None,
    };
    let cd = ChainDecomposition::build(&w, strategy, d.as_ref().map(|d| d as &dyn DomainModel))?;
    let max_length = (0..w.len()).map(|i| cd.length(&w, i)).max().unwrap_or(0);
    let body = merge(serde_json::to_value(cd.to_file(&w)?)?, json!({ "max_length": max_length }));
    emit_json(a.out.as_deref(), &m, body)
}

fn conditions(a: &ConditionsArgs, mut m: Manifest) -> Result<()> {
    let f: ChainFile = read_json(&mut m, &a.chains, "chains")?;
    let (w, cd) = ChainDecomposition::from_file(&f)?;
    let n = w.n;
    let q = a.q.unwrap_or(if a.cond == "pp" { a.p } else { 1.0 });
    let e = ExponentSet::new(n, a.p, q, a.delta).with_s(a.s).with_lambda(a.lambda.unwrap_or(n as f64 - 1.0));
    let report = match a.cond.as_str() {
        "sharpe" => eval_sharpe_sum(&w, &cd, &e)?,
        "pp" => eval_pp_sup(&w, &cd, &e)?,
        "classical" => eval_classical_condition(&w, &cd, a.p)?,
        "sigma" => eval_sigma_thm51(&w, &cd, &e)?,
        other => return Err(usage(format!("unknown condition {other:?}; expected sharpe, pp, classical or sigma"))),
    };
    if let Some(path) = &a.csv {
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    let regime = check_regime(&e).ok();
    let body = merge(serde_json::to_value(&report)?, json!({ "regime": regime }));
    emit_json(a.out.as_deref(), &m, body)
}

fn constant(a: &ConstantArgs, mut m: Manifest) -> Result<()> {
    let d = load_domain(&mut m, &a.src)?;
    let grid = Grid::new(&d);
    let loc = if a.full { Localization::Full } else { Localization::Tau { tau: a.tau } };
    let method: Method = a.method.parse()?;
    let e = ExponentSet::new(d.dim(), a.p, a.q, a.delta).with_tau(a.tau);
    let r = estimate_constant(&grid, &e, loc, method, a.restarts, a.seed)?;
    let body = merge(serde_json::to_value(&r)?, json!({ "localization": loc, "voxels": grid.len() }));
    emit_json(a.out.as_deref(), &m, body)
}

fn cube_lemma(a: &CubeLemmaArgs, m: Manifest) -> Result<()> {
    let e = ExponentSet::new(a.n, a.p, a.q, a.delta);
    let r = cube_lemma_check(a.n, &e, a.rho, a.j, a.trials, a.seed)?;
    emit_json(a.out.as_deref(), &m, serde_json::to_value(&r)?)
}

fn parse_point(s: &str, n: usize) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(usage(format!("--point needs {n} comma-separated coordinates, got {s:?}")));
    }
    let mut x = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        x[i] = p.parse().map_err(|_| usage(format!("--point: bad coordinate {p:?}")))?;
    }
    Ok(x)
}

fn radii(s: &SetArgs) -> Result<Vec<f64>> {
    if !(s.r_min > 0.0 && s.r_min <= s.r_max) {
        return Err(usage(format!("need 0 < r-min <= r-max, got {} and {}", s.r_min, s.r_max)));
    }
    Ok(dyadic_radii(s.r_min, s.r_max))
}

fn log_integral(a: &LogIntegralArgs, m: Manifest) -> Result<()> {
    let set = named_set(&a.set.set, a.set.n)?;
    let x = parse_point(&a.point, a.set.n)?;
    let sweep = log_distance_sweep(set.as_ref(), &x, &radii(&a.set)?, a.p, a.cells)?;
    emit_json(a.out.as_deref(), &m, serde_json::to_value(&sweep)?)
}

fn dimension(a: &DimensionArgs, m: Manifest) -> Result<()> {
    let set = named_set(&a.set.set, a.set.n)?;
    let fit = dimension_fit(set.as_ref(), &radii(&a.set)?, a.cells)?;
    emit_json(a.out.as_deref(), &m, serde_json::to_value(&fit)?)
}

fn porosity_cmd(a: &PorosityArgs, m: Manifest) -> Result<()> {
    let set = named_set(&a.set.set, a.set.n)?;
    let r = porosity(set.as_ref(), &radii(&a.set)?, a.trials, a.j, a.seed)?;
    emit_json(a.out.as_deref(), &m, serde_json::to_value(&r)?)
}

/// Base decomposition, its largest extent and the default λ.
fn base(name: &str, jb: i32) -> Result<(WhitneyDecomposition, f64, f64)> {
    let (preset, lambda) = match name {
        "square" => (Preset::UnitCube, 1.0),
        "koch" => (Preset::Koch, 4f64.ln() / 3f64.ln()),
        other => return Err(usage(format!("unknown base {other:?}; expected square or koch"))),
    };
    let d = VoxelDomain::preset(preset, 2, jb)?;
    let b = d.bbox();
    let extent = (0..2).map(|a| b.extent(a)).fold(0.0, f64::max);
    Ok((WhitneyDecomposition::build(&d, jb)?, extent, lambda))
}

fn s_version(a: &SVersionArgs, m: Manifest) -> Result<()> {
    let (w, extent, _) = base(&a.base, a.jb)?;
    let g = SVersionDomain::build(&w, extent, a.s)?;
    let (lo, hi) = g.passage_scales();
    let mut body = json!({ "summary": g.summary(), "passage_scales": [lo, hi] });
    if a.john {
        // truncation is local to each host; no global cap
        let gw = WhitneyDecomposition::build(&g, 40).context("decomposing the s-version")?;
        let cd = ChainDecomposition::build(&gw, Strategy::CurveFollowing, Some(&g))?;
        let est = estimate_sjohn(&gw, &cd, &SJohnOptions::dyadic(lo, hi))?;
        body = merge(body, json!({ "whitney_cubes": gw.len(), "sjohn": est }));
    }
    emit_json(a.out.as_deref(), &m, body)
}

fn sharpness(a: &SharpnessArgs, m: Manifest) -> Result<()> {
    let seed = a.seed.ok_or_else(|| usage("sharpness needs --seed"))?;
    if a.q >= a.p || a.q.is_nan() {
        return Err(usage(format!("sharpness needs q < p, got q = {} and p = {}", a.q, a.p)));
    }
    let opts = BmOptions { samples: a.samples, max_samples: a.samples << 8, rel_error: a.rel_error, seed: Some(seed) };
    let mut jb = a.jb.unwrap_or(a.m_max as i32 + 2);
    let (report, lambda) = loop {
        let (w, extent, default_lambda) = base(&a.base, jb)?;
        let g = SVersionDomain::build(&w, extent, a.s)?;
        let lambda = a.lambda.unwrap_or(default_lambda);
        let e = ExponentSet::new(2, a.p, a.q, a.delta).with_s(a.s).with_lambda(lambda).with_tau(a.tau);
        match sharpness_experiment(&g, &e, a.m_max, a.k0, &opts) {
            Err(fraclab::Error::NotEnoughCubes { .. }) if a.jb.is_none() && jb < 14 => jb += 1,
            r => break (r?, lambda),
        }
    };
    write_atomic(&a.out.join("results.csv"), report.to_csv().as_bytes())?;
    let summary = json!({
        "base": a.base,
        "s": a.s,
        "p": a.p,
        "q": a.q,
        "lambda": lambda,
        "delta": a.delta,
        "tau": a.tau,
        "k0": a.k0,
        "m_max": a.m_max,
        "seed": seed,
        "slope": report.slope,
        "pass": report.pass,
        "target": report.target,
        "jb": jb,
        "generations": report.generations,
        "samples_per_passage": report.samples_per_passage,
        "flagged": report.flagged,
    });
    crate::output::write_json(&a.out.join("manifest.json"), &m, summary)?;
    println!(
        "{} slope={:.4} target={:.4} m_max={}",
        if report.pass { "PASS" } else { "FAIL" },
        report.slope,
        report.target,
        a.m_max
    );
    Ok(())
}
