//! Command implementations for the `aggregate` binary.
//!
//! Every command computes its outputs in memory first and only then writes
//! them, each through a temporary file and a rename, so a failing command
//! leaves no partial files behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use aggregation_core::analysis::{
    self, BeurlingScan, BoundAudit, ExponentFit, KestenCheck, WaitingTime,
};
use aggregation_core::io::{self as cio, RunMetadata};
use aggregation_core::lattice::{outer_boundary, Cluster, SiteSet};
use aggregation_core::measures::{self, MeasureEstimate};
use aggregation_core::walk::{DEFAULT_KILL_FACTOR, DEFAULT_LAUNCH_MARGIN};
use aggregation_core::{rng, run_simulation, ModelConfig, ModelKind, SimulationRun, VERSION};

#[derive(Debug, Parser)]
#[command(name = "aggregate", version, about = "Eden, DLA and ballistic aggregation on Z^d")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow a cluster and write cluster.csv, growth.csv, checkpoints.csv and meta.json
    Simulate(SimulateArgs),
    /// Regenerate a run from its meta.json
    Replay(ReplayArgs),
    /// Run one simulation per seed and merge the summaries in seed order
    Sweep(SweepArgs),
    /// Estimate a step distribution on a cluster or its outer boundary
    Measure(MeasureArgs),
    /// Fit growth exponents, audit checkpoints and scan step probabilities
    Analyze(AnalyzeArgs),
    /// Render a planar cluster as a binary PGM
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Eden,
    Dla,
    Ballistic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Eden => ModelKind::Eden,
            ModelArg::Dla => ModelKind::Dla,
            ModelArg::Ballistic => ModelKind::Ballistic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelOpts {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Lattice dimension, 2 to 6
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=6))]
    pub dim: u8,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub particles: u64,
    /// DLA launch radius minus cluster radius
    #[arg(long, default_value_t = DEFAULT_LAUNCH_MARGIN)]
    pub launch_margin: f64,
    /// DLA walkers are discarded beyond this multiple of the launch radius
    #[arg(long, default_value_t = DEFAULT_KILL_FACTOR)]
    pub kill_factor: f64,
    /// DLA far-field jumps (approximate)
    #[arg(long)]
    pub accelerate: bool,
    /// Ballistic: consecutive missed lines before a step fails
    #[arg(long, default_value_t = aggregation_core::geometry::DEFAULT_MAX_REJECTIONS)]
    pub max_rejections: u64,
    /// Record a checkpoint every K particles (0 disables)
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
}

impl ModelOpts {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            kind: self.model.into(),
            dla_launch_margin: self.launch_margin,
            dla_kill_factor: self.kill_factor,
            dla_accelerate: self.accelerate,
            ballistic_max_rejections: self.max_rejections,
        }
    }

    fn metadata(&self, seed: u64) -> RunMetadata {
        RunMetadata {
            toolkit_version: VERSION.to_string(),
            config: self.config(),
            dim: usize::from(self.dim),
            particles: self.particles as usize,
            seed,
            checkpoint_every: self.checkpoint_every,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub meta: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub seed_from: u64,
    #[arg(long)]
    pub seed_to: u64,
    /// Worker threads
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Cluster,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mc,
    Quadrature,
    ExactEden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McModelArg {
    Ballistic,
    Dla,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub cluster: PathBuf,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Which distribution the Monte Carlo method estimates
    #[arg(long, value_enum, default_value = "ballistic")]
    pub model: McModelArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 1024)]
    pub n_offset: usize,
    #[arg(long, default_value_t = DEFAULT_LAUNCH_MARGIN)]
    pub launch_margin: f64,
    #[arg(long, default_value_t = DEFAULT_KILL_FACTOR)]
    pub kill_factor: f64,
    /// Output file
    #[arg(long, default_value = "measure.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Exponent for the radius bound; defaults by model and dimension
    #[arg(long)]
    pub q: Option<f64>,
    /// Samples per checkpoint for a step-probability scan
    #[arg(long)]
    pub beurling: Option<u64>,
    /// Fraction of the growth record (latest entries) used by the exponent fit
    #[arg(long, default_value_t = 0.5)]
    pub tail_fraction: f64,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub cluster: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub age_shading: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Replay(a) => replay(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Measure(a) => measure(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Render(a) => render(&a),
    }
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Files of one run, in the order they are written.
fn run_files(meta: &RunMetadata, run: &SimulationRun) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut checkpoints = String::from("n,rad,boundary\n");
    for c in run.checkpoint_clusters()? {
        checkpoints.push_str(&format!("{},{},{}\n", c.len(), c.radius(), c.boundary().len()));
    }
    Ok(vec![
        ("cluster.csv", cio::cluster_to_csv(meta.dim, run.cluster.sites()).into_bytes()),
        ("growth.csv", cio::growth_to_csv(&run.growth).into_bytes()),
        ("checkpoints.csv", checkpoints.into_bytes()),
        ("meta.json", meta.to_json()?.into_bytes()),
    ])
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
}

/// Runs the simulation described by `meta` and writes its files into `out`.
/// Wall time goes to `timing.json`, kept apart so that every other file is a
/// pure function of the metadata.
pub fn simulate_from_meta(meta: &RunMetadata, out: &Path) -> Result<SimulationRun> {
    let start = Instant::now();
    let run = run_simulation(
        &meta.config,
        meta.dim,
        meta.particles,
        meta.seed,
        meta.checkpoint_every,
    )?;
    let wall_seconds = start.elapsed().as_secs_f64();
    for (name, bytes) in run_files(meta, &run)? {
        write_atomic(&out.join(name), &bytes)?;
    }
    write_atomic(&out.join("timing.json"), to_json(&Timing { wall_seconds })?.as_bytes())?;
    Ok(run)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let meta = a.model.metadata(a.seed);
    meta.config.validate()?;
    simulate_from_meta(&meta, &a.out)?;
    Ok(())
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let meta = RunMetadata::from_json(&read(&a.meta)?)?;
    if meta.toolkit_version != VERSION {
        eprintln!(
            "warning: metadata written by version {}, replaying with {VERSION}",
            meta.toolkit_version
        );
    }
    simulate_from_meta(&meta, &a.out)?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    if a.seed_to < a.seed_from {
        bail!("--seed-to must not be smaller than --seed-from");
    }
    a.model.config().validate()?;
    let seeds: Vec<u64> = (a.seed_from..=a.seed_to).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs as usize).build()?;
    let rows: Vec<String> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| -> Result<String> {
                let meta = a.model.metadata(seed);
                let run = simulate_from_meta(&meta, &a.out.join(format!("seed-{seed}")))?;
                let fit = analysis::growth_exponent(&run.growth, 0.5).ok();
                let (alpha, delta) = fit.map_or((String::new(), String::new()), |f| {
                    (f.alpha_hat.to_string(), f.delta_hat.to_string())
                });
                Ok(format!("{seed},{},{},{alpha},{delta}\n", run.cluster.len(), run.cluster.radius()))
            })
            .collect::<Result<_>>()
    })?;
    let mut summary = String::from("seed,particles,rad,alpha_hat,delta_hat\n");
    summary.extend(rows);
    write_atomic(&a.out.join("summary.csv"), summary.as_bytes())
}

fn measure(a: &MeasureArgs) -> Result<()> {
    let (dim, sites) = cio::parse_cluster_csv(&read(&a.cluster)?)
        .with_context(|| format!("parsing {}", a.cluster.display()))?;
    let set = match a.target {
        TargetArg::Cluster => SiteSet::from_sites(dim, &sites)?,
        TargetArg::Boundary => outer_boundary(&sites)?,
    };
    let est: MeasureEstimate = match a.method {
        MethodArg::ExactEden => measures::eden_measure(&set)?,
        MethodArg::Quadrature => measures::ballistic_measure_quadrature_2d(&set, a.n_theta, a.n_offset)?,
        MethodArg::Mc => {
            let mut r = rng::stream(a.seed, "measure", 0);
            match a.model {
                McModelArg::Ballistic => measures::ballistic_measure_mc(&set, a.samples, &mut r)?,
                McModelArg::Dla => {
                    measures::harmonic_measure_mc(&set, a.samples, a.launch_margin, a.kill_factor, &mut r)?
                }
            }
        }
    };
    write_atomic(&a.out, cio::measure_to_csv(&est).as_bytes())
}

#[derive(Serialize)]
struct Reference {
    name: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct AuditSummary {
    checkpoints: usize,
    all_pass: bool,
    failures: Vec<BoundAudit>,
}

#[derive(Serialize)]
struct Analysis {
    toolkit_version: &'static str,
    model: Option<ModelKind>,
    dim: Option<usize>,
    seed: Option<u64>,
    particles: usize,
    final_rad: f64,
    tail_fraction: f64,
    growth_exponent: Option<ExponentFit>,
    growth_exponent_error: Option<String>,
    kesten: Option<KestenCheck>,
    waiting_times: Vec<WaitingTime>,
    bound_audit: Option<AuditSummary>,
    beurling: Option<BeurlingScan>,
    reference_dimensions: Vec<Reference>,
}

/// Audits the recorded checkpoints, or the final cluster when none were
/// recorded.
fn audit_run(meta: &RunMetadata, cluster: &Cluster) -> Result<(AuditSummary, Vec<Cluster>)> {
    let sizes: Vec<usize> = if meta.checkpoint_every > 0 {
        let k = meta.checkpoint_every;
        (1..=cluster.len()).filter(|&n| n % k == 0 || (k == 1 && n == 1)).collect()
    } else {
        vec![cluster.len()]
    };
    let mut checkpoints = Vec::with_capacity(sizes.len());
    let mut failures = Vec::new();
    // replay the attach order once, cloning at each checkpoint
    let mut grown = Cluster::new(meta.dim)?;
    let mut next = sizes.iter().peekable();
    for &s in cluster.sites().iter().skip(1) {
        if next.peek().is_some_and(|&&n| n == grown.len()) {
            next.next();
            checkpoints.push(grown.clone());
        }
        grown.attach(s)?;
    }
    if next.peek().is_some_and(|&&n| n == grown.len()) {
        checkpoints.push(grown);
    }
    for c in &checkpoints {
        let audit = analysis::bound_audit(c);
        if !audit.all_pass() {
            failures.push(audit);
        }
    }
    Ok((
        AuditSummary {
            checkpoints: checkpoints.len(),
            all_pass: failures.is_empty(),
            failures,
        },
        checkpoints,
    ))
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let growth_path = a.run.join("growth.csv");
    if !growth_path.exists() {
        bail!("run directory {} has no growth.csv", a.run.display());
    }
    let growth = cio::parse_growth_csv(&read(&growth_path)?)
        .with_context(|| format!("parsing {}", growth_path.display()))?;
    let meta_path = a.run.join("meta.json");
    let meta = if meta_path.exists() {
        Some(RunMetadata::from_json(&read(&meta_path)?)?)
    } else {
        None
    };
    let cluster_path = a.run.join("cluster.csv");
    let cluster = match &meta {
        Some(m) if cluster_path.exists() => {
            let (dim, sites) = cio::parse_cluster_csv(&read(&cluster_path)?)
                .with_context(|| format!("parsing {}", cluster_path.display()))?;
            if dim != m.dim {
                bail!("cluster.csv has dimension {dim}, meta.json says {}", m.dim);
            }
            Some(Cluster::from_attach_order(dim, &sites)?)
        }
        _ => None,
    };
    if a.beurling.is_some() && cluster.is_none() {
        bail!(
            "a step-probability scan needs meta.json and cluster.csv in {}",
            a.run.display()
        );
    }

    let q = match (a.q, &meta) {
        (Some(q), _) => q,
        (None, Some(m)) => analysis::default_q(m.config.kind, m.dim),
        (None, None) => 1.0,
    };
    let (fit, fit_err) = match analysis::growth_exponent(&growth, a.tail_fraction) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let kesten = analysis::kesten_bound_check(&growth, q).ok();
    let waiting = analysis::waiting_times(&growth);

    let mut audit = None;
    let mut beurling = None;
    if let (Some(m), Some(c)) = (&meta, &cluster) {
        let (summary, checkpoints) = audit_run(m, c)?;
        audit = Some(summary);
        if let Some(samples) = a.beurling {
            let mut r = rng::stream(m.seed, "beurling", samples);
            beurling = Some(analysis::beurling_scan(&checkpoints, &m.config, samples, &mut r)?);
        }
    }
    let reference_dimensions = meta
        .as_ref()
        .map(|m| {
            analysis::reference_dimensions(m.config.kind, m.dim)
                .into_iter()
                .map(|(name, value)| Reference { name, value })
                .collect()
        })
        .unwrap_or_default();

    let last = growth.entries().last();
    let report = Analysis {
        toolkit_version: VERSION,
        model: meta.as_ref().map(|m| m.config.kind),
        dim: meta.as_ref().map(|m| m.dim),
        seed: meta.as_ref().map(|m| m.seed),
        particles: growth.len(),
        final_rad: last.map_or(0.0, |e| e.rad),
        tail_fraction: a.tail_fraction,
        growth_exponent: fit,
        growth_exponent_error: fit_err,
        kesten,
        waiting_times: waiting.clone(),
        bound_audit: audit,
        beurling,
        reference_dimensions,
    };

    let mut files: Vec<(&str, String)> = vec![("analysis.json", to_json(&report)?)];
    let mut wt = String::from("r,t\n");
    for w in &waiting {
        wt.push_str(&format!("{},{}\n", w.r, w.t));
    }
    files.push(("waiting_times.csv", wt));
    let exponent = 1.0 / (1.0 + q);
    let mut ratio = String::from("n,rad,ratio\n");
    for e in log_spaced(growth.entries().len(), 400).map(|i| growth.entries()[i]) {
        ratio.push_str(&format!("{},{},{}\n", e.n, e.rad, e.rad / (e.n as f64).powf(exponent)));
    }
    files.push(("kesten.csv", ratio));
    if let Some(scan) = &report.beurling {
        let mut b = String::from("n,rad,max_mass,stderr\n");
        for p in &scan.points {
            b.push_str(&format!("{},{},{},{}\n", p.n, p.rad, p.max_mass, p.stderr));
        }
        files.push(("beurling.csv", b));
    }
    for (name, text) in files {
        write_atomic(&a.run.join(name), text.as_bytes())?;
    }
    Ok(())
}

/// About `k` distinct, increasing, log-spaced indices into `0..len`.
fn log_spaced(len: usize, k: usize) -> impl Iterator<Item = usize> {
    let mut out: Vec<usize> = Vec::new();
    if len > 0 {
        let top = (len as f64).ln();
        for j in 0..k {
            let i = (top * j as f64 / (k - 1) as f64).exp().round() as usize;
            let i = i.clamp(1, len) - 1;
            if out.last() != Some(&i) {
                out.push(i);
            }
        }
    }
    out.into_iter()
}

fn render(a: &RenderArgs) -> Result<()> {
    let (_, sites) = cio::parse_cluster_csv(&read(&a.cluster)?)
        .with_context(|| format!("parsing {}", a.cluster.display()))?;
    let img = cio::render_pgm(&sites, a.age_shading)?;
    write_atomic(&a.out, &img)
}
