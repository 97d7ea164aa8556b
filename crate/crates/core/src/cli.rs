//! Command-line front end.
//!
//! Every subcommand is a plain function over parsed arguments so the binary
//! stays a one-liner and tests can drive commands in-process.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterState, FcmConfig, FuzzyCMeans, Initialization};
use crate::diagnostics::{self, DiagnosticsOptions};
use crate::ensemble::{self, load_ensemble, manifest_path, save_ensemble, CsvLayout, EnsembleManifest, TrajectoryEnsemble};
use crate::flows::{integrate_ensemble, DoubleGyreParams, FlowKind, FlowSpec, Seeding};
use crate::geometry::{EllipsoidAxes, Geometry, GeometryKind};
use crate::util::{csv_bytes, fmt_f64, write_atomic};

pub const MEMBERSHIPS_FILE: &str = "memberships.csv";
pub const CENTERS_FILE: &str = "centers.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ENTROPY_FILE: &str = "entropy.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const COLLAPSE_FILE: &str = "collapse.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Parser, Debug)]
#[command(name = "coherent-sets", version, about = "Coherent sets from trajectory ensembles by space-time fuzzy c-means")]
pub struct Cli {
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a synthetic flow and write the ensemble.
    Generate(GenerateArgs),
    /// Randomly delete observations from an ensemble.
    Thin(ThinArgs),
    /// Cluster an ensemble.
    Cluster(ClusterArgs),
    /// Entropy, hard labels and collapse report for a finished run.
    Diagnose(DiagnoseArgs),
    /// Repeat clustering over a list of m or K values.
    Sweep(SweepArgs),
    /// Repeat a clustering run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Long,
    Wide,
}

impl From<LayoutArg> for CsvLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Long => CsvLayout::LongCsv,
            LayoutArg::Wide => CsvLayout::WideCsv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SeedingArg {
    Random,
    Grid,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_flow)]
    pub flow: FlowKind,
    #[arg(long)]
    pub n: usize,
    /// Flow duration for the continuous systems.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of map iterates.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub stride: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = SeedingArg::Random)]
    pub seeding: SeedingArg,
    #[arg(long, env = "RUN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub omega: f64,
    #[arg(long, value_enum, default_value_t = LayoutArg::Long)]
    pub layout: LayoutArg,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ThinArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Input layout; defaults to the sidecar's, else long.
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, env = "RUN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output layout; defaults to the input layout.
    #[arg(long, value_enum)]
    pub output_layout: Option<LayoutArg>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ClusterOptions {
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
    #[arg(long, default_value = "euclidean", value_parser = parse_geometry_kind)]
    pub geometry: GeometryKind,
    /// Semi-axis lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ellipsoid_lengths: Vec<f64>,
    /// Orthonormal axes as `v1;v2;...` with comma-separated components;
    /// coordinate axes when omitted.
    #[arg(long)]
    pub ellipsoid_axes: Option<String>,
    #[arg(long, default_value = "kmeanspp-centers", value_parser = parse_init)]
    pub init: Initialization,
    #[arg(long, env = "RUN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long)]
    pub normalize_by_support: bool,
    /// Weight by trajectory masses; automatic when omitted.
    #[arg(long)]
    pub use_masses: Option<bool>,
}

impl ClusterOptions {
    pub fn config(&self) -> FcmConfig {
        FcmConfig {
            k: self.k,
            m: self.m,
            init: self.init,
            seed: self.seed,
            tol: self.tol,
            max_iter: self.max_iter,
            normalize_by_support: self.normalize_by_support,
            use_masses: self.use_masses,
            restarts: self.restarts,
        }
    }

    pub fn geometry(&self) -> anyhow::Result<Geometry> {
        Ok(match self.geometry {
            GeometryKind::Euclidean => Geometry::euclidean(),
            GeometryKind::Sphere => Geometry::sphere(),
            GeometryKind::Circle => Geometry::circle(),
            GeometryKind::Ellipsoid => {
                if self.ellipsoid_lengths.is_empty() {
                    bail!("--geometry ellipsoid needs --ellipsoid-lengths");
                }
                let axes = match &self.ellipsoid_axes {
                    None => EllipsoidAxes::axis_aligned(self.ellipsoid_lengths.clone())?,
                    Some(spec) => EllipsoidAxes::new(parse_axes(spec)?, self.ellipsoid_lengths.clone())?,
                };
                Geometry::ellipsoid(axes)
            }
        })
    }
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    #[command(flatten)]
    pub options: ClusterOptions,
    #[arg(long, short = 'o')]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Directory written by `cluster`.
    #[arg(long)]
    pub input_run: PathBuf,
    #[arg(long, default_value_t = diagnostics::DEFAULT_COLLAPSE_RATIO)]
    pub collapse_ratio: f64,
    #[arg(long, value_delimiter = ',', default_values_t = diagnostics::DEFAULT_CONFIDENCE)]
    pub confidence: Vec<f64>,
    #[arg(long, default_value_t = diagnostics::DIAMETER_SAMPLE)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    /// Defaults to the run directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    M,
    K,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    #[arg(long, value_enum)]
    pub vary: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub options: ClusterOptions,
    #[arg(long, default_value_t = diagnostics::DEFAULT_COLLAPSE_RATIO)]
    pub collapse_ratio: f64,
    #[arg(long, value_delimiter = ',', default_values_t = diagnostics::DEFAULT_CONFIDENCE)]
    pub confidence: Vec<f64>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, short = 'o')]
    pub output_dir: PathBuf,
}

fn parse_flow(s: &str) -> Result<FlowKind, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_geometry_kind(s: &str) -> Result<GeometryKind, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_init(s: &str) -> Result<Initialization, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_axes(spec: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    spec.split(';')
        .map(|v| {
            v.split(',')
                .map(|c| c.trim().parse::<f64>().with_context(|| format!("bad axis component {c:?}")))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub objective_history: Vec<f64>,
}

/// Everything needed to repeat a clustering run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub input: PathBuf,
    pub layout: CsvLayout,
    pub geometry: Geometry,
    pub config: FcmConfig,
    pub n: usize,
    pub num_times: usize,
    pub d: usize,
    pub runtime_seconds: f64,
    pub convergence: Convergence,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }
}

fn resolve_layout(path: &Path, layout: Option<LayoutArg>) -> anyhow::Result<CsvLayout> {
    if let Some(l) = layout {
        return Ok(l.into());
    }
    let sidecar = manifest_path(path);
    if sidecar.is_file() {
        let m: EnsembleManifest = serde_json::from_slice(&std::fs::read(&sidecar)?)
            .with_context(|| format!("parsing {}", sidecar.display()))?;
        if let Some(format) = m.format {
            return Ok(format);
        }
    }
    Ok(CsvLayout::LongCsv)
}

fn read_ensemble(path: &Path, layout: CsvLayout) -> anyhow::Result<TrajectoryEnsemble> {
    load_ensemble(path, layout).with_context(|| format!("loading {}", path.display()))
}

pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<TrajectoryEnsemble> {
    let seeding = match args.seeding {
        SeedingArg::Random => Seeding::UniformRandom { n: args.n, seed: args.seed },
        SeedingArg::Grid => Seeding::UniformGrid { n: args.n },
    };
    let spec = match args.flow {
        FlowKind::IntervalMap3 => {
            let iters = args.iters.context("--flow interval-map-3 needs --iters")?;
            FlowSpec::interval_map(seeding, iters)
        }
        kind => {
            let tau = args.tau.with_context(|| format!("--flow {} needs --tau", kind.name()))?;
            let base = if kind == FlowKind::DoubleGyre {
                FlowSpec::double_gyre(seeding, tau)
            } else {
                FlowSpec::transitory_double_gyre(seeding, tau)
            };
            base.with_stride(args.stride)
                .with_integrator_step(args.step)
                .with_params(DoubleGyreParams { a: args.amplitude, delta: args.delta, omega: args.omega })
        }
    };
    let e = integrate_ensemble(&spec)?;
    ensure_parent(&args.output)?;
    save_ensemble(&e, &args.output, args.layout.into())?;
    Ok(e)
}

pub fn cmd_thin(args: &ThinArgs) -> anyhow::Result<TrajectoryEnsemble> {
    let layout = resolve_layout(&args.input, args.layout)?;
    let e = read_ensemble(&args.input, layout)?;
    let thinned = ensemble::thin_ensemble(&e, args.fraction, args.seed)?;
    ensure_parent(&args.output)?;
    save_ensemble(&thinned, &args.output, args.output_layout.map_or(layout, Into::into))?;
    Ok(thinned)
}

/// Clusters `input` and writes memberships, centers and the run manifest.
pub fn cluster_to_dir(
    input: &Path,
    layout: CsvLayout,
    geometry: &Geometry,
    config: &FcmConfig,
    output_dir: &Path,
) -> anyhow::Result<(RunManifest, ClusterState)> {
    let e = read_ensemble(input, layout)?;
    let started = Instant::now();
    let model = FuzzyCMeans::new(&e, geometry, config.clone())?;
    let state = model.run()?;
    let runtime_seconds = started.elapsed().as_secs_f64();

    let memberships = memberships_csv(&e, &state)?;
    let centers = centers_csv(&e, &model, &state)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input: std::path::absolute(input).unwrap_or_else(|_| input.to_path_buf()),
        layout,
        geometry: geometry.clone(),
        config: config.clone(),
        n: e.n(),
        num_times: e.num_times(),
        d: e.d(),
        runtime_seconds,
        convergence: Convergence {
            iterations: state.iterations(),
            converged: state.converged(),
            final_objective: state.objective().unwrap_or(f64::NAN),
            objective_history: state.objective_history().to_vec(),
        },
        outputs: vec![MEMBERSHIPS_FILE.into(), CENTERS_FILE.into(), MANIFEST_FILE.into()],
    };
    std::fs::create_dir_all(output_dir)?;
    write_atomic(&output_dir.join(MEMBERSHIPS_FILE), &memberships)?;
    write_atomic(&output_dir.join(CENTERS_FILE), &centers)?;
    write_atomic(&output_dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok((manifest, state))
}

pub fn cmd_cluster(args: &ClusterArgs) -> anyhow::Result<(RunManifest, ClusterState)> {
    let layout = resolve_layout(&args.input, args.layout)?;
    let geometry = args.options.geometry()?;
    cluster_to_dir(&args.input, layout, &geometry, &args.options.config(), &args.output_dir)
}

pub fn cmd_rerun(args: &RerunArgs) -> anyhow::Result<(RunManifest, ClusterState)> {
    let m = RunManifest::load(&args.manifest)?;
    cluster_to_dir(&m.input, m.layout, &m.geometry, &m.config, &args.output_dir)
}

fn memberships_csv(e: &TrajectoryEnsemble, state: &ClusterState) -> crate::Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["trajectory_id", "k", "u"])?;
        for i in 0..state.n() {
            for k in 0..state.k() {
                w.write_record([e.ids()[i].as_str(), &k.to_string(), &fmt_f64(state.membership(i, k))])?;
            }
        }
        Ok(())
    })
}

fn centers_csv(e: &TrajectoryEnsemble, model: &FuzzyCMeans, state: &ClusterState) -> crate::Result<Vec<u8>> {
    let data = model.centers_in_data_space(state);
    let d = data.len() / (state.k() * state.num_times()).max(1);
    csv_bytes(|w| {
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend((0..d).map(|j| format!("c{j}")));
        header.push("defined".into());
        w.write_record(&header)?;
        for k in 0..state.k() {
            for t in 0..state.num_times() {
                let defined = state.is_center_defined(k, t);
                let mut record = vec![k.to_string(), e.time_label(t)];
                let start = (k * state.num_times() + t) * d;
                record.extend(data[start..start + d].iter().map(|&x| if defined { fmt_f64(x) } else { String::new() }));
                record.push(u8::from(defined).to_string());
                w.write_record(&record)?;
            }
        }
        Ok(())
    })
}

/// A finished run reloaded from disk.
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub ensemble: TrajectoryEnsemble,
    pub state: ClusterState,
}

pub fn load_run(dir: &Path) -> anyhow::Result<LoadedRun> {
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let e = read_ensemble(&manifest.input, manifest.layout)?;
    let k = manifest.config.k;
    let index: std::collections::HashMap<&str, usize> =
        e.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let path = dir.join(MEMBERSHIPS_FILE);
    let mut memberships = vec![f64::NAN; e.n() * k];
    let mut reader = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    for record in reader.records() {
        let record = record?;
        let i = *index.get(&record[0]).with_context(|| format!("unknown trajectory {:?}", &record[0]))?;
        let kk: usize = record[1].parse()?;
        if kk >= k {
            bail!("cluster index {kk} out of range in {}", path.display());
        }
        memberships[i * k + kk] = record[2].parse()?;
    }
    if memberships.iter().any(|u| u.is_nan()) {
        bail!("{} is missing membership values", path.display());
    }

    let prepared = manifest.geometry.prepare(&e)?;
    let dim = prepared.dim();
    let path = dir.join(CENTERS_FILE);
    let mut centers = vec![0.0; k * e.num_times() * dim];
    let mut defined = vec![false; k * e.num_times()];
    let mut reader = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if row >= k * e.num_times() || record.len() != e.d() + 3 {
            bail!("{} does not match the ensemble shape", path.display());
        }
        if &record[e.d() + 2] == "1" {
            let x: Vec<f64> = (0..e.d()).map(|j| record[j + 2].parse()).collect::<Result<_, _>>()?;
            manifest.geometry.to_working(&x, e.coordinates(), &mut centers[row * dim..(row + 1) * dim])?;
            defined[row] = true;
        }
    }
    let state = ClusterState::from_parts(k, e.num_times(), dim, memberships, centers, defined)?;
    Ok(LoadedRun { manifest, ensemble: e, state })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub mean_entropy: f64,
    pub ml_trajectory: Vec<String>,
    pub confidence_counts: Vec<diagnostics::ConfidenceCount>,
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> anyhow::Result<diagnostics::ClusterDiagnostics> {
    let run = load_run(&args.input_run)?;
    let options = DiagnosticsOptions {
        collapse_ratio: args.collapse_ratio,
        confidence: args.confidence.clone(),
        sample_size: args.sample_size,
        sample_seed: args.sample_seed,
    };
    let diag = diagnostics::diagnose(&run.ensemble, &run.manifest.geometry, &run.state, &options)?;
    let ids = run.ensemble.ids();
    let entropy = csv_bytes(|w| {
        w.write_record(["trajectory_id", "h"])?;
        for (id, h) in ids.iter().zip(&diag.entropy) {
            w.write_record([id.as_str(), &fmt_f64(*h)])?;
        }
        Ok(())
    })?;
    let labels = csv_bytes(|w| {
        w.write_record(["trajectory_id", "label"])?;
        for (id, l) in ids.iter().zip(&diag.hard_labels) {
            w.write_record([id.as_str(), &l.to_string()])?;
        }
        Ok(())
    })?;
    let summary = DiagnosticsSummary {
        mean_entropy: diag.mean_entropy(),
        ml_trajectory: diag.ml_trajectory.iter().map(|&i| ids[i].clone()).collect(),
        confidence_counts: diag.confidence_counts.clone(),
    };
    let out = args.output_dir.as_deref().unwrap_or(&args.input_run);
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join(ENTROPY_FILE), &entropy)?;
    write_atomic(&out.join(LABELS_FILE), &labels)?;
    write_atomic(&out.join(COLLAPSE_FILE), &serde_json::to_vec_pretty(&diag.collapse)?)?;
    write_atomic(&out.join(SUMMARY_FILE), &serde_json::to_vec_pretty(&summary)?)?;
    Ok(diag)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let layout = resolve_layout(&args.input, args.layout)?;
    let e = read_ensemble(&args.input, layout)?;
    let geometry = args.options.geometry()?;
    let base = args.options.config();
    let report = match args.vary {
        SweepParam::M => {
            let r = diagnostics::m_stability_sweep(&e, &geometry, &base, &args.values)?;
            csv_bytes(|w| {
                w.write_record(["m", "objective", "iterations", "converged", "ml_trajectories", "drift_max", "drift"])?;
                for (j, row) in r.rows.iter().enumerate() {
                    let drift = j.checked_sub(1).map(|p| &r.drifts[p].displacement);
                    w.write_record([
                        fmt_f64(row.m),
                        fmt_f64(row.objective),
                        row.iterations.to_string(),
                        row.converged.to_string(),
                        join(row.ml_trajectory.iter().map(|&i| e.ids()[i].clone())),
                        drift.map_or(String::new(), |d| fmt_f64(d.iter().copied().fold(0.0, f64::max))),
                        drift.map_or(String::new(), |d| join(d.iter().map(|&x| fmt_f64(x)))),
                    ])?;
                }
                Ok(())
            })?
        }
        SweepParam::K => {
            let ks = args
                .values
                .iter()
                .map(|&v| {
                    if v.fract() != 0.0 || v < 0.0 {
                        bail!("K values must be whole numbers, got {v}");
                    }
                    Ok(v as usize)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let options = DiagnosticsOptions {
                collapse_ratio: args.collapse_ratio,
                confidence: args.confidence.clone(),
                ..DiagnosticsOptions::default()
            };
            let rows = diagnostics::k_stability_sweep(&e, &geometry, &base, &ks, &options)?;
            csv_bytes(|w| {
                let mut header: Vec<String> =
                    ["k", "objective", "iterations", "converged", "mean_entropy", "max_entropy", "collapse_pairs"]
                        .map(String::from)
                        .to_vec();
                header.extend(args.confidence.iter().map(|c| format!("count_above_{c}")));
                w.write_record(&header)?;
                for row in &rows {
                    let mut record = vec![
                        row.k.to_string(),
                        fmt_f64(row.objective),
                        row.iterations.to_string(),
                        row.converged.to_string(),
                        fmt_f64(row.mean_entropy),
                        fmt_f64(row.max_entropy),
                        row.collapse.pairs.len().to_string(),
                    ];
                    record.extend(row.confidence_counts.iter().map(|c| c.count.to_string()));
                    w.write_record(&record)?;
                }
                Ok(())
            })?
        }
    };
    ensure_parent(&args.output)?;
    write_atomic(&args.output, &report)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p),
        _ => Ok(()),
    }
}

/// Configures the global thread pool; later calls keep the first pool.
pub fn init_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    init_threads(cli.threads);
    match &cli.command {
        Command::Generate(a) => {
            let e = cmd_generate(a)?;
            eprintln!("wrote {} trajectories × {} slices to {}", e.n(), e.num_times(), a.output.display());
        }
        Command::Thin(a) => {
            let e = cmd_thin(a)?;
            eprintln!("kept {} observations, wrote {}", e.observation_count(), a.output.display());
        }
        Command::Cluster(a) => {
            let (m, _) = cmd_cluster(a)?;
            report_run(&m, &a.output_dir);
        }
        Command::Rerun(a) => {
            let (m, _) = cmd_rerun(a)?;
            report_run(&m, &a.output_dir);
        }
        Command::Diagnose(a) => {
            let d = cmd_diagnose(a)?;
            eprintln!("mean entropy {:.4}, {} collapsed center pair(s)", d.mean_entropy(), d.collapse.pairs.len());
        }
        Command::Sweep(a) => {
            cmd_sweep(a)?;
            eprintln!("wrote {}", a.output.display());
        }
    }
    Ok(())
}

fn report_run(m: &RunManifest, dir: &Path) {
    eprintln!(
        "{} after {} iterations, objective {:.6e}, outputs in {}",
        if m.convergence.converged { "converged" } else { "stopped" },
        m.convergence.iterations,
        m.convergence.final_objective,
        dir.display()
    );
}

/// Entry point of the binary: parses `std::env::args` and exits nonzero with
/// a one-line message on failure.
pub fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
        eprintln!("error: {}", chain.join(": "));
        std::process::exit(1);
    }
}
