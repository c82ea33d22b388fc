//! The command verbs. Each reads the config and earlier outputs, runs one
//! stage of a study and writes its artifacts to the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fingerloc::database::FingerprintDatabase;
use serde::Serialize;

use crate::config::{ExperimentConfig, Pipeline};
use crate::data::{Measurements, TrialTable};
use crate::error::CliError;
use crate::report::{cdf, summarize, to_json_pretty, ErrorSummary};
use crate::{bems, classroom, illegal, wifi};

pub const MEASUREMENTS_FILE: &str = "measurements.json";
pub const DB_FILE: &str = "db.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONTROL_LOG_FILE: &str = "control_log.csv";
pub const ENERGY_FILE: &str = "energy.json";
pub const REPORT_FILE: &str = "report.json";
pub const CDF_FILE: &str = "cdf.csv";
pub const SWEEP_FILE: &str = "sweep_summary.csv";

#[derive(Debug, Parser)]
#[command(
    name = "fingerloc",
    version,
    about = "Fingerprint localization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Generate training and test measurements.
    Simulate,
    /// Build the fingerprint database.
    Learn,
    /// Per-trial estimates and an error summary.
    Localize,
    /// Track a moving target.
    Track,
    /// Lighting control on a tracked trajectory.
    Lighting,
    /// Summarize every result table in a directory.
    Report,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON). Required by every verb but `report`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Runs once per value of a dotted config key, e.g.
    /// `params.gamma=0.1,1,10`, into `<out>/<key>=<value>/`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Measurement file; defaults to `<out>/measurements.json`.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    /// Database file; defaults to `<out>/db.json`.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Trajectory table; defaults to `<out>/trajectory.csv`.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Directory searched by `report`; defaults to `--out`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generates training and test measurements for the configured scenario
    Simulate(Common),
    /// Fits the fingerprint database from training measurements
    Learn(Common),
    /// Estimates each test position independently and writes a trial table
    Localize(Common),
    /// Tracks the moving target (wifi_rssi_rspd, bems_binary)
    Track(Common),
    /// Plans lamp dimming from a tracked trajectory (bems_binary)
    Lighting(Common),
    /// Summarizes every trial table in a directory
    Report(Common),
}

impl Command {
    pub fn split(&self) -> (Verb, &Common) {
        match self {
            Command::Simulate(c) => (Verb::Simulate, c),
            Command::Learn(c) => (Verb::Learn, c),
            Command::Localize(c) => (Verb::Localize, c),
            Command::Track(c) => (Verb::Track, c),
            Command::Lighting(c) => (Verb::Lighting, c),
            Command::Report(c) => (Verb::Report, c),
        }
    }
}

/// Headline numbers of one run, used for sweep summaries.
pub type Metrics = BTreeMap<String, f64>;

/// Input locations of one run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub measurements: PathBuf,
    pub db: PathBuf,
    pub trajectory: PathBuf,
    pub report_dir: PathBuf,
}

impl Inputs {
    pub fn resolve(c: &Common) -> Self {
        Self {
            measurements: c
                .measurements
                .clone()
                .unwrap_or_else(|| c.out.join(MEASUREMENTS_FILE)),
            db: c.db.clone().unwrap_or_else(|| c.out.join(DB_FILE)),
            trajectory: c
                .trajectory
                .clone()
                .unwrap_or_else(|| c.out.join(TRAJECTORY_FILE)),
            report_dir: c.input.clone().unwrap_or_else(|| c.out.clone()),
        }
    }
}

pub fn execute(cmd: &Command) -> Result<(), CliError> {
    let (verb, c) = cmd.split();
    let inputs = Inputs::resolve(c);
    if verb == Verb::Report {
        report(&inputs.report_dir, &c.out)?;
        return Ok(());
    }
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    match &c.sweep {
        None => run(verb, &cfg, &inputs, &c.out).map(|_| ()),
        Some(spec) => sweep(verb, &cfg, &inputs, &c.out, spec),
    }
}

fn sweep(
    verb: Verb,
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    out: &Path,
    spec: &str,
) -> Result<(), CliError> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep {spec:?} is not key=a,b,c")))?;
    let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config(format!("sweep {key:?} has no values")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([key, "metric", "value"])?;
    for v in values {
        let sub = cfg.with_override(key, v)?;
        let dir = out.join(format!("{key}={v}"));
        let metrics = run(verb, &sub, inputs, &dir)?;
        for (name, m) in metrics {
            w.write_record([v.to_string(), name, m.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write(&out.join(SWEEP_FILE), &bytes)
}

/// Runs one verb with outputs under `out`.
pub fn run(
    verb: Verb,
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    out: &Path,
) -> Result<Metrics, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match verb {
        Verb::Simulate => simulate(cfg, out),
        Verb::Learn => learn(cfg, inputs, out),
        Verb::Localize => localize(cfg, inputs, out),
        Verb::Track => track(cfg, inputs, out),
        Verb::Lighting => lighting(cfg, inputs, out),
        Verb::Report => report(&inputs.report_dir, out),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_measurements(path: &Path) -> Result<Measurements, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::config_json(path, &e))
}

pub fn load_db(path: &Path) -> Result<FingerprintDatabase, CliError> {
    FingerprintDatabase::from_json(&read(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn simulate_measurements(cfg: &ExperimentConfig) -> Result<Measurements, CliError> {
    match cfg.pipeline {
        Pipeline::ClassroomCir => classroom::simulate(cfg.classroom()?, cfg.seed),
        Pipeline::WifiRssiRspd => wifi::simulate(cfg.wifi()?, cfg.seed),
        Pipeline::BemsBinary => bems::simulate(cfg.bems()?, cfg.seed),
        Pipeline::IllegalHybrid => illegal::simulate(cfg.illegal()?, cfg.seed),
    }
}

pub fn learn_db(
    cfg: &ExperimentConfig,
    meas: &Measurements,
) -> Result<FingerprintDatabase, CliError> {
    match cfg.pipeline {
        Pipeline::ClassroomCir => classroom::learn(cfg.classroom()?, meas, &cfg.params, None),
        Pipeline::WifiRssiRspd => wifi::learn(cfg.wifi()?, meas),
        Pipeline::BemsBinary => bems::learn(cfg.bems()?, meas),
        Pipeline::IllegalHybrid => illegal::learn(cfg.illegal()?, meas),
    }
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Metrics, CliError> {
    let meas = simulate_measurements(cfg)?;
    let text = serde_json::to_string(&meas).map_err(|e| CliError::Numeric(e.to_string()))?;
    write(&out.join(MEASUREMENTS_FILE), text.as_bytes())?;
    log::info!(
        "{} training and {} test records",
        meas.train.len(),
        meas.test.len()
    );
    Ok(Metrics::from([
        ("train_records".to_string(), meas.train.len() as f64),
        ("test_records".to_string(), meas.test.len() as f64),
    ]))
}

fn learn(cfg: &ExperimentConfig, inputs: &Inputs, out: &Path) -> Result<Metrics, CliError> {
    let meas = load_measurements(&inputs.measurements)?;
    let db = learn_db(cfg, &meas)?;
    for (i, e) in db.entries().iter().enumerate() {
        log::debug!("grid index {i}: {} samples", e.sample_count);
    }
    log::info!("database with {} entries", db.len());
    write(&out.join(DB_FILE), db.to_json()?.as_bytes())?;
    Ok(Metrics::from([("entries".to_string(), db.len() as f64)]))
}

#[derive(Serialize)]
struct TableSummary<'a> {
    pipeline: &'a str,
    rows: usize,
    methods: BTreeMap<String, ErrorSummary>,
}

fn write_table(
    table: &TrialTable,
    pipeline: Pipeline,
    file: &str,
    out: &Path,
) -> Result<Metrics, CliError> {
    write(&out.join(file), table.to_csv()?.as_bytes())?;
    let mut methods = BTreeMap::new();
    let mut metrics = Metrics::new();
    if !table.rows.is_empty() {
        for m in &table.methods {
            let s = summarize(&table.errors(m).expect("method is in the table"))?;
            metrics.insert(format!("{m}_mean_error_m"), s.mean);
            metrics.insert(format!("{m}_median_error_m"), s.median);
            methods.insert(m.clone(), s);
        }
    }
    let summary = TableSummary {
        pipeline: pipeline.name(),
        rows: table.rows.len(),
        methods,
    };
    write(&out.join(SUMMARY_FILE), to_json_pretty(&summary).as_bytes())?;
    Ok(metrics)
}

pub fn localize_table(
    cfg: &ExperimentConfig,
    meas: &Measurements,
    db: Option<&FingerprintDatabase>,
) -> Result<TrialTable, CliError> {
    let need = || db.ok_or_else(|| CliError::Config("a database is required".into()));
    match cfg.pipeline {
        Pipeline::ClassroomCir => classroom::localize(cfg.classroom()?, meas, &cfg.params),
        Pipeline::WifiRssiRspd => wifi::localize(cfg.wifi()?, meas, need()?),
        Pipeline::BemsBinary => bems::localize(cfg.bems()?, meas, need()?),
        Pipeline::IllegalHybrid => illegal::localize(cfg.illegal()?, meas, need()?, &cfg.params),
    }
}

fn localize(cfg: &ExperimentConfig, inputs: &Inputs, out: &Path) -> Result<Metrics, CliError> {
    let meas = load_measurements(&inputs.measurements)?;
    // Leave-one-out relearns per fold, so the classroom study has no db input.
    let db = match cfg.pipeline {
        Pipeline::ClassroomCir => None,
        _ => Some(load_db(&inputs.db)?),
    };
    if let Some(db) = &db {
        check_db(cfg, db)?;
    }
    let table = localize_table(cfg, &meas, db.as_ref())?;
    write_table(&table, cfg.pipeline, TRIALS_FILE, out)
}

/// Rejects a database learned for another pipeline.
fn check_db(cfg: &ExperimentConfig, db: &FingerprintDatabase) -> Result<(), CliError> {
    let probe = match cfg.pipeline {
        Pipeline::ClassroomCir => cfg.classroom()?.pair_keys(),
        Pipeline::WifiRssiRspd => cfg.wifi()?.rssi_keys(),
        Pipeline::BemsBinary => vec!["detect:0".to_string()],
        Pipeline::IllegalHybrid => cfg.illegal()?.xcorr_keys(),
    };
    let keys = db.keys();
    match probe.iter().find(|k| !keys.contains(k)) {
        Some(k) => Err(CliError::Config(format!(
            "database does not match pipeline {} (no feature {k:?})",
            cfg.pipeline.name()
        ))),
        None => Ok(()),
    }
}

pub fn track_table(
    cfg: &ExperimentConfig,
    meas: &Measurements,
    db: &FingerprintDatabase,
) -> Result<TrialTable, CliError> {
    match cfg.pipeline {
        Pipeline::WifiRssiRspd => wifi::track(cfg.wifi()?, meas, db, &cfg.params, cfg.seed),
        Pipeline::BemsBinary => bems::track(cfg.bems()?, meas, db, &cfg.params),
        p => Err(CliError::Config(format!(
            "pipeline {} has no tracking stage",
            p.name()
        ))),
    }
}

fn track(cfg: &ExperimentConfig, inputs: &Inputs, out: &Path) -> Result<Metrics, CliError> {
    if !matches!(cfg.pipeline, Pipeline::WifiRssiRspd | Pipeline::BemsBinary) {
        return Err(CliError::Config(format!(
            "pipeline {} has no tracking stage",
            cfg.pipeline.name()
        )));
    }
    let meas = load_measurements(&inputs.measurements)?;
    let db = load_db(&inputs.db)?;
    check_db(cfg, &db)?;
    let table = track_table(cfg, &meas, &db)?;
    write_table(&table, cfg.pipeline, TRAJECTORY_FILE, out)
}

fn lighting(cfg: &ExperimentConfig, inputs: &Inputs, out: &Path) -> Result<Metrics, CliError> {
    let sc = cfg.bems()?;
    let trajectory = TrialTable::from_csv(&read(&inputs.trajectory)?)?;
    let grid = sc.grid.build()?;
    let (log, summary) = bems::run_lighting(sc, &grid, &trajectory)?;
    write(
        &out.join(CONTROL_LOG_FILE),
        bems::control_log_csv(&log)?.as_bytes(),
    )?;
    write(&out.join(ENERGY_FILE), to_json_pretty(&summary).as_bytes())?;
    let mut m = Metrics::from([
        ("energy".to_string(), summary.energy),
        ("covered_steps".to_string(), summary.covered_steps as f64),
        (
            "satisfied_covered_steps".to_string(),
            summary.satisfied_covered_steps as f64,
        ),
    ]);
    if let Some(s) = summary.saving {
        m.insert("saving".to_string(), s);
    }
    Ok(m)
}

#[derive(Serialize)]
struct Report {
    tables: BTreeMap<String, BTreeMap<String, ErrorSummary>>,
}

/// Summaries and CDF rows of every `*_error_m` column of every CSV table
/// in `dir` (non-recursive, sorted by file name).
pub fn report(dir: &Path, out: &Path) -> Result<Metrics, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut tables = BTreeMap::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["table", "method", "error_m", "cdf"])?;
    let mut metrics = Metrics::new();
    for f in &files {
        let Ok(table) = TrialTable::from_csv(&read(f)?) else {
            continue;
        };
        if table.rows.is_empty() {
            continue;
        }
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut per = BTreeMap::new();
        for m in &table.methods {
            let errors = table.errors(m).expect("method is in the table");
            for (e, p) in cdf(&errors) {
                w.write_record([name.clone(), m.clone(), e.to_string(), p.to_string()])?;
            }
            let s = summarize(&errors)?;
            metrics.insert(format!("{name}:{m}_mean_error_m"), s.mean);
            per.insert(m.clone(), s);
        }
        tables.insert(name, per);
    }
    if tables.is_empty() {
        return Err(CliError::Config(format!(
            "no result tables in {}",
            dir.display()
        )));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write(
        &out.join(REPORT_FILE),
        to_json_pretty(&Report { tables }).as_bytes(),
    )?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write(&out.join(CDF_FILE), &bytes)?;
    Ok(metrics)
}
