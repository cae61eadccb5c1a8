//! Command-line front end.
//!
//! Each subcommand reads its section of an optional TOML file
//! (`[simulate]`, `[monitor]`, `[evaluate]`, `[depth]`); flags override
//! file values. Every output gets a `<output>.meta.json` companion that
//! records the resolved configuration, defaults included.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cde::CdeConfig;
use crate::depth::{depth_all, DepthParams};
use crate::distance::DistanceKind;
use crate::error::{invalid, Error, Result};
use crate::experiment::{run_table, setar_mix_scenarios, EvalSettings, Estimator, Scenario};
use crate::io;
use crate::monitor::{run_monitor, AlertMode, BlockRule, MonitorConfig, PdMonitor, Proposal, RankMonitor};
use crate::rank::{dd_plot, RankBasis};
use crate::sim::{contaminate, ContaminationSpec, ModelSpec, DEFAULT_BURN_IN};
use crate::window::{Observation, Reference, ReferenceSet, Window};

#[derive(Debug, Parser)]
#[command(name = "depthstream", version, about = "Depth-based robust monitoring of data streams")]
pub struct Cli {
    /// TOML file with `[simulate]`, `[monitor]`, `[evaluate]` and `[depth]` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a regime-switching stream to CSV.
    Simulate(SimulateArgs),
    /// Run a density (1) or rank (2) monitor over a stream CSV.
    Monitor(MonitorArgs),
    /// Replicate estimator comparisons against the simulator's truth.
    Evaluate(EvaluateArgs),
    /// Depth of each row, or a DD-plot of two samples.
    Depth(DepthArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model spec file; its top level is read like a `[simulate]` section.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Stream CSV (`index[,time],v1..vd`).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Reference stream CSV or density matrix CSV; repeat per regime.
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
    #[arg(long)]
    pub proposal: Option<Proposal>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `current_regime` or `min_distance`.
    #[arg(long)]
    pub alert_mode: Option<AlertMode>,
    /// `hellinger` or `kolmogorov`.
    #[arg(long)]
    pub distance: Option<DistanceKind>,
    /// `combined`, `first` or `second`.
    #[arg(long)]
    pub rank_basis: Option<RankBasis>,
    /// `auto`, `cube_root` or a fixed length.
    #[arg(long, value_parser = parse_block)]
    pub block: Option<BlockRule>,
    #[arg(long)]
    pub reference_len: Option<usize>,
    #[arg(long)]
    pub calibration_len: Option<usize>,
    #[arg(long)]
    pub initial_regime: Option<usize>,
    /// JSON-lines report stream.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Statistic series CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Comma-separated subset of kern_baseline, locpol_unbinned, prop1.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<Estimator>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Overrides the length of every scenario.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the replications.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub conditions: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Second sample; switches the output to a DD-plot.
    #[arg(long)]
    pub second: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_block(s: &str) -> std::result::Result<BlockRule, String> {
    match s {
        "auto" => Ok(BlockRule::Auto),
        "cube_root" => Ok(BlockRule::CubeRoot),
        n => n.parse().map(BlockRule::Fixed).map_err(|_| format!("block `{n}`: expected auto, cube_root or a length")),
    }
}

/// Whole configuration file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulate: SimulateConfig,
    pub monitor: MonitorRun,
    pub evaluate: EvaluateRun,
    pub depth: DepthRun,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: Option<ModelSpec>,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub contamination: Option<ContaminationSpec>,
    pub out: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: None,
            n: 1000,
            seed: 0,
            burn_in: DEFAULT_BURN_IN,
            contamination: None,
            out: "trajectory.csv".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorRun {
    pub input: Option<PathBuf>,
    pub references: Vec<PathBuf>,
    pub reports: PathBuf,
    pub series: PathBuf,
    pub settings: MonitorConfig,
}

impl Default for MonitorRun {
    fn default() -> Self {
        Self {
            input: None,
            references: Vec::new(),
            reports: "reports.jsonl".into(),
            series: "series.csv".into(),
            settings: MonitorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateRun {
    /// Empty means the built-in SETAR mixes with 10% additive outliers.
    pub scenarios: Vec<Scenario>,
    pub estimators: Vec<Estimator>,
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub settings: EvalSettings,
}

impl Default for EvaluateRun {
    fn default() -> Self {
        Self {
            scenarios: Vec::new(),
            estimators: Estimator::ALL.to_vec(),
            reps: 20,
            n: 1000,
            seed: 0,
            jobs: 1,
            out: "table.csv".into(),
            settings: EvalSettings::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthRun {
    pub input: Option<PathBuf>,
    pub second: Option<PathBuf>,
    pub params: DepthParams,
    pub out: PathBuf,
}

impl Default for DepthRun {
    fn default() -> Self {
        Self { input: None, second: None, params: DepthParams::default(), out: "depth.csv".into() }
    }
}

/// Exit status for an error: 1 I/O and input data, 2 configuration,
/// 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Parse { .. } => 1,
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch(_)
        | Error::GridMismatch
        | Error::LagTooLarge { .. }
        | Error::Unsupported(_)
        | Error::OutOfOrder { .. }
        | Error::NonFinite { .. } => 2,
        Error::EmptySample
        | Error::ZeroWidthGrid
        | Error::EmptyBinnedSample
        | Error::ZeroScale
        | Error::ZeroMad
        | Error::OutsideSupport
        | Error::InsufficientData { .. }
        | Error::NotInSample => 3,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => parse_toml(&io::read_to_string(p)?, p),
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io::with_path(path, e))?))
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_meta(out: &Path, command: &str, config: serde_json::Value, extra: serde_json::Value) -> Result<()> {
    let meta = json!({
        "schema_version": io::SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "output": extra,
    });
    io::write_json(create(&meta_path(out))?, &meta)
}

/// The pipeline constants every output records.
fn defaults_block(cde: &CdeConfig) -> serde_json::Value {
    json!({
        "depth": { "p": cde.depth.p, "a": cde.depth.a, "b": cde.depth.b },
        "beta": cde.beta,
        "beta_mode": cde.beta_mode,
        "m": cde.m,
        "grid_spread_a": cde.grid_spread,
        "bandwidth_rule": "0.9 * min(sd, IQR/1.349, MAD/0.6745) * n^(-1/5) per axis",
    })
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(file.simulate, a),
        Command::Monitor(a) => cmd_monitor(file.monitor, a),
        Command::Evaluate(a) => cmd_evaluate(file.evaluate, a),
        Command::Depth(a) => cmd_depth(file.depth, a),
    }
}

pub fn cmd_simulate(mut cfg: SimulateConfig, args: SimulateArgs) -> Result<()> {
    if let Some(spec) = &args.spec {
        cfg = parse_toml(&io::read_to_string(spec)?, spec)?;
    }
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.burn_in = args.burn_in.unwrap_or(cfg.burn_in);
    if let Some(out) = args.out {
        cfg.out = out;
    }
    let model = cfg.model.as_ref().ok_or_else(|| invalid("no model given (set `model` in the spec)"))?;
    model.validate()?;
    if let Some(c) = &cfg.contamination {
        c.validate()?;
    }
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    let mut traj = model.simulate(cfg.n, cfg.burn_in, cfg.seed)?;
    if let Some(c) = &cfg.contamination {
        traj = contaminate(&traj, c, cfg.seed ^ 0x5eed_c0de)?;
    }
    io::write_trajectory(create(&cfg.out)?, &traj)?;
    write_meta(
        &cfg.out,
        "simulate",
        serde_json::to_value(&cfg)?,
        json!({ "rows": traj.len(), "occupancy": traj.occupancy(traj.regimes.iter().max().map_or(1, |m| m + 1)) }),
    )
}

fn read_reference(path: &Path) -> Result<Reference> {
    let head = io::read_to_string(path)?;
    if head.starts_with("condition") {
        Ok(Reference::Density(io::read_density(head.as_bytes())?))
    } else {
        let obs: Vec<Observation> = io::StreamReader::new(head.as_bytes())?.collect::<Result<_>>()?;
        let points: Vec<Vec<f64>> = obs.into_iter().map(|o| o.value).collect();
        Ok(Reference::Sample(Window::from_points(&points)?))
    }
}

fn label_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn cmd_monitor(mut run: MonitorRun, a: MonitorArgs) -> Result<()> {
    let s = &mut run.settings;
    s.proposal = a.proposal.unwrap_or(s.proposal);
    s.window = a.window.unwrap_or(s.window);
    s.stride = a.stride.unwrap_or(s.stride);
    s.level = a.level.unwrap_or(s.level);
    s.replicates = a.replicates.unwrap_or(s.replicates);
    s.seed = a.seed.unwrap_or(s.seed);
    s.alert_mode = a.alert_mode.unwrap_or(s.alert_mode);
    s.distance = a.distance.unwrap_or(s.distance);
    s.rank_basis = a.rank_basis.unwrap_or(s.rank_basis);
    s.block = a.block.unwrap_or(s.block);
    s.reference_len = a.reference_len.unwrap_or(s.reference_len);
    s.calibration_len = a.calibration_len.unwrap_or(s.calibration_len);
    s.initial_regime = a.initial_regime.unwrap_or(s.initial_regime);
    if a.input.is_some() {
        run.input = a.input;
    }
    if !a.references.is_empty() {
        run.references = a.references;
    }
    if let Some(p) = a.reports {
        run.reports = p;
    }
    if let Some(p) = a.series {
        run.series = p;
    }
    let cfg = run.settings.clone();
    cfg.validate()?;
    let input = run.input.clone().ok_or_else(|| invalid("no input stream (--input)"))?;
    let stream = io::read_observations(&input)?;

    let (monitored, reports, thresholds) = match cfg.proposal {
        Proposal::Density => {
            if run.references.len() < 2 {
                return Err(invalid("the density monitor needs at least two --reference files"));
            }
            if stream.len() < cfg.window {
                (stream.len(), Vec::new(), Vec::new())
            } else {
                let entries = run.references.iter().map(|p| read_reference(p)).collect::<Result<Vec<_>>>()?;
                let labels = run.references.iter().map(|p| label_of(p)).collect();
                let mut mon = PdMonitor::new(&ReferenceSet::new(entries, labels)?, &cfg)?;
                let thresholds = mon.thresholds().to_vec();
                let reports = run_monitor(stream.iter().cloned().map(Ok), &mut mon, cfg.window, cfg.stride)?;
                (stream.len(), reports, thresholds)
            }
        }
        Proposal::Rank => {
            let (reference, calibration, rest): (Vec<Vec<f64>>, Vec<Vec<f64>>, &[Observation]) =
                match run.references.as_slice() {
                    [] => {
                        let need = cfg.reference_len + cfg.calibration_len;
                        if stream.len() < need {
                            return Err(invalid(format!(
                                "stream has {} rows; reference_len + calibration_len = {need} are taken from its start",
                                stream.len()
                            )));
                        }
                        let pts = |o: &[Observation]| o.iter().map(|o| o.value.clone()).collect::<Vec<_>>();
                        (pts(&stream[..cfg.reference_len]), pts(&stream[cfg.reference_len..need]), &stream[need..])
                    }
                    [path] => {
                        let pts: Vec<Vec<f64>> = io::read_observations(path)?.into_iter().map(|o| o.value).collect();
                        if pts.len() <= cfg.reference_len {
                            return Err(invalid(format!(
                                "reference file has {} rows; need more than reference_len = {}",
                                pts.len(),
                                cfg.reference_len
                            )));
                        }
                        (pts[..cfg.reference_len].to_vec(), pts[cfg.reference_len..].to_vec(), &stream[..])
                    }
                    _ => return Err(invalid("the rank monitor takes at most one --reference file")),
                };
            if rest.len() < cfg.window {
                (rest.len(), Vec::new(), Vec::new())
            } else {
                let mon = RankMonitor::new(reference, &calibration, &cfg)?;
                let mut mon = mon;
                let thresholds = vec![mon.threshold()];
                let reports = run_monitor(rest.iter().cloned().map(Ok), &mut mon, cfg.window, cfg.stride)?;
                (rest.len(), reports, thresholds)
            }
        }
    };
    if reports.is_empty() {
        eprintln!("warning: {monitored} monitored rows is fewer than the window length {}; no reports", cfg.window);
    }
    io::write_reports_jsonl(create(&run.reports)?, &reports)?;
    io::write_statistic_series(create(&run.series)?, &reports)?;
    let alerts = reports.iter().filter(|r| r.alert).count();
    let summary = json!({
        "reports": reports.len(),
        "alerts": alerts,
        "thresholds": thresholds,
        "defaults": defaults_block(&cfg.cde),
    });
    write_meta(&run.reports, "monitor", serde_json::to_value(&run)?, summary)
}

pub fn cmd_evaluate(mut run: EvaluateRun, a: EvaluateArgs) -> Result<()> {
    if let Some(e) = a.estimators {
        run.estimators = e;
    }
    run.reps = a.reps.unwrap_or(run.reps);
    run.seed = a.seed.unwrap_or(run.seed);
    run.jobs = a.jobs.unwrap_or(run.jobs);
    run.settings.grid_points = a.grid_points.unwrap_or(run.settings.grid_points);
    run.settings.conditions = a.conditions.unwrap_or(run.settings.conditions);
    if let Some(out) = a.out {
        run.out = out;
    }
    if run.scenarios.is_empty() {
        run.scenarios = setar_mix_scenarios(run.n, Some(ContaminationSpec::additive_relative(0.1, 0.0, 3.0)));
    }
    if let Some(n) = a.n {
        run.n = n;
        for s in &mut run.scenarios {
            s.n = n;
        }
    }
    run.settings.cde.validate()?;
    let rows = run_table(&run.scenarios, &run.estimators, run.reps, &run.settings, run.seed, run.jobs)?;
    let mut w = csv::Writer::from_writer(create(&run.out)?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_meta(
        &run.out,
        "evaluate",
        serde_json::to_value(&run)?,
        json!({ "rows": rows.len(), "defaults": defaults_block(&run.settings.cde) }),
    )
}

pub fn cmd_depth(mut run: DepthRun, a: DepthArgs) -> Result<()> {
    if a.input.is_some() {
        run.input = a.input;
    }
    if a.second.is_some() {
        run.second = a.second;
    }
    run.params.p = a.p.unwrap_or(run.params.p);
    run.params.a = a.a.unwrap_or(run.params.a);
    run.params.b = a.b.unwrap_or(run.params.b);
    if let Some(out) = a.out {
        run.out = out;
    }
    run.params.validate()?;
    let input = run.input.clone().ok_or_else(|| invalid("no input (--input)"))?;
    let first = io::read_observations(&input)?;
    let points: Vec<Vec<f64>> = first.iter().map(|o| o.value.clone()).collect();
    let mut out = create(&run.out)?;
    let kind = match &run.second {
        None => {
            let depths = depth_all(&points, &run.params)?;
            let indices: Vec<u64> = first.iter().map(|o| o.index).collect();
            io::write_depths(&mut out, &indices, &depths)?;
            "depth"
        }
        Some(second) => {
            let other: Vec<Vec<f64>> = io::read_observations(second)?.into_iter().map(|o| o.value).collect();
            let (d1, d2) = (points.first().map_or(0, Vec::len), other.first().map_or(0, Vec::len));
            if d1 != d2 {
                return Err(Error::DimensionMismatch { expected: d1, got: d2 });
            }
            io::write_dd_plot(&mut out, &dd_plot(&points, &other, &run.params)?)?;
            "dd_plot"
        }
    };
    out.flush()?;
    write_meta(&run.out, "depth", serde_json::to_value(&run)?, json!({ "kind": kind, "rows": points.len() }))
}
