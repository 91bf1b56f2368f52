//! Command-line front end: `simulate`, `classify`, `analyze`, `report`,
//! `validate` and `serve`.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, unbalanced design,
//! validation findings), 2 bad arguments or unreadable input path.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classify::ClassifierConfig;
use crate::error::Error;
use crate::io::{self, classify_session, find_sessions, read_session, write_log, SelectionRow, SessionLog};
use crate::metrics::SessionMetrics;
use crate::report::{
    aggregate_report, render_summary, sort_sessions, write_report, write_sessions_csv, write_sessions_csv_to,
};
use crate::service::{Service, ServiceConfig, OUT_ENV};
use crate::sim::{derive_seed, simulate_session, SimConfig};
use crate::task::{BlockConfig, Condition, DEFAULT_ROUNDS};

#[derive(Debug, Parser)]
#[command(name = "gazekit", version, about = "Gaze-and-pinch selection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate seeded synthetic session directories.
    Simulate(SimulateArgs),
    /// Re-classify every selection of one session from its frames.
    Classify(ClassifyArgs),
    /// Per-session metrics as CSV.
    Analyze(AnalyzeArgs),
    /// Per-condition tables, ANOVA and t-tests over a set of sessions.
    Report(ReportArgs),
    /// Check session directories against the log schema and replay.
    Validate(ValidateArgs),
    /// Run the live session service for the browser harness.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionArg {
    One(Condition),
    All,
}

fn parse_condition(s: &str) -> Result<ConditionArg, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(ConditionArg::All);
    }
    s.parse().map(ConditionArg::One).map_err(|e: Error| e.to_string())
}

impl ConditionArg {
    fn conditions(self) -> Vec<Condition> {
        match self {
            ConditionArg::One(c) => vec![c],
            ConditionArg::All => Condition::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none, sticky, magnetic, sticky_magnetic or all.
    #[arg(long, value_parser = parse_condition, default_value = "all")]
    pub condition: ConditionArg,
    #[arg(long, default_value_t = 1)]
    pub subjects: usize,
    #[arg(long, default_value_t = 1)]
    pub blocks: u32,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(long = "sim.frame-rate", value_name = "HZ")]
    pub frame_rate_hz: Option<f64>,
    #[arg(long = "sim.jitter-sd", value_name = "DMM")]
    pub fixation_jitter_sd: Option<f64>,
    #[arg(long = "sim.landing-sd", value_name = "DMM")]
    pub landing_error_sd: Option<f64>,
    #[arg(long = "sim.saccade-slope", value_name = "MS_PER_DEG")]
    pub saccade_slope: Option<f64>,
    #[arg(long = "sim.saccade-intercept", value_name = "MS")]
    pub saccade_intercept: Option<f64>,
    #[arg(long = "sim.pinch-offset-mean", value_name = "MS", allow_hyphen_values = true)]
    pub pinch_offset_mean: Option<f64>,
    #[arg(long = "sim.pinch-offset-sd", value_name = "MS")]
    pub pinch_offset_sd: Option<f64>,
    #[arg(long = "sim.dropout-rate", value_name = "P")]
    pub dropout_rate: Option<f64>,
    #[arg(long = "sim.reaction", value_name = "MS")]
    pub reaction: Option<f64>,
    #[arg(long = "sim.min-fixation", value_name = "MS")]
    pub min_fixation: Option<f64>,
    #[arg(long = "sim.dwell", value_name = "MS")]
    pub dwell: Option<f64>,
    /// Keep gaze on the target until the pinch, however late.
    #[arg(long = "sim.no-dwell")]
    pub no_dwell: bool,
    #[arg(long = "sim.departure-fraction", value_name = "F")]
    pub departure_fraction: Option<f64>,
    #[arg(long = "sim.tail", value_name = "MS")]
    pub tail: Option<f64>,
    /// Between-subject sd of the mean pinch offset; 0 gives every subject
    /// the configured mean.
    #[arg(long = "sim.subject-offset-sd", value_name = "MS", default_value_t = 0.0)]
    pub subject_offset_sd: f64,
}

impl SimArgs {
    pub fn apply(&self, base: SimConfig) -> SimConfig {
        let mut c = base;
        macro_rules! set {
            ($field:ident, $arg:ident) => {
                if let Some(v) = self.$arg {
                    c.$field = v;
                }
            };
        }
        set!(frame_rate_hz, frame_rate_hz);
        set!(fixation_jitter_sd, fixation_jitter_sd);
        set!(landing_error_sd, landing_error_sd);
        set!(saccade_dur_slope_ms_per_deg, saccade_slope);
        set!(saccade_dur_intercept_ms, saccade_intercept);
        set!(pinch_offset_mean_ms, pinch_offset_mean);
        set!(pinch_offset_sd_ms, pinch_offset_sd);
        set!(dropout_rate, dropout_rate);
        set!(reaction_ms, reaction);
        set!(min_fixation_ms, min_fixation);
        set!(departure_fraction, departure_fraction);
        set!(tail_ms, tail);
        if let Some(d) = self.dwell {
            c.dwell_ms = Some(d);
        }
        if self.no_dwell {
            c.dwell_ms = None;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Session directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file for selection rows (JSON lines); stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = crate::classify::DEFAULT_WINDOW_MS)]
    pub window_ms: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// A session directory or a directory of sessions.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = crate::classify::DEFAULT_WINDOW_MS)]
    pub window_ms: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of session directories.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::classify::DEFAULT_WINDOW_MS)]
    pub window_ms: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Session directories, or directories containing them.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = OUT_ENV, default_value = "sessions")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: usize,
    #[arg(long, default_value_t = crate::service::DEFAULT_RING_RADIUS_PX)]
    pub ring_radius_px: f64,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

pub type CmdResult = Result<(), Failure>;

/// Runs a parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Validate(a) => return cmd_validate(&a),
        Command::Serve(a) => cmd_serve(&a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

/// Zero-padded subject ids: `s1`..`s9`, `s01`..`s12`, ...
pub fn subject_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len();
    (1..=n).map(|i| format!("s{i:0width$}")).collect()
}

#[derive(Debug, Clone)]
pub struct PlannedSession {
    pub dir_name: String,
    pub subject_id: String,
    pub subject_index: usize,
    pub condition: Condition,
    pub block_index: u32,
    pub sim: SimConfig,
}

/// Expands a simulate invocation into one job per subject × condition ×
/// block.
pub fn plan_sessions(args: &SimulateArgs) -> anyhow::Result<Vec<PlannedSession>> {
    if args.subjects == 0 || args.blocks == 0 || args.rounds == 0 {
        bail!("--subjects, --blocks and --rounds must be positive");
    }
    if !(args.sim.subject_offset_sd >= 0.0) {
        bail!("--sim.subject-offset-sd must be non-negative");
    }
    let base = args.sim.apply(SimConfig::default());
    base.validate()?;
    let mut out = Vec::new();
    for (si, subject) in subject_ids(args.subjects).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, &[si as u64, u64::MAX]));
        let z: f64 = StandardNormal.sample(&mut rng);
        let subject_mean = base.pinch_offset_mean_ms + args.sim.subject_offset_sd * z;
        for c in args.condition.conditions() {
            for b in 0..args.blocks {
                let seed = derive_seed(args.seed, &[si as u64, c.index() as u64, u64::from(b)]);
                out.push(PlannedSession {
                    dir_name: format!("{subject}_{c}_b{b}"),
                    subject_id: subject.clone(),
                    subject_index: si,
                    condition: c,
                    block_index: b,
                    sim: SimConfig { seed, pinch_offset_mean_ms: subject_mean, ..base.clone() },
                });
            }
        }
    }
    Ok(out)
}

pub fn simulate_planned(job: &PlannedSession, rounds: usize) -> crate::Result<SessionLog> {
    let block = BlockConfig::new(job.condition).with_rounds(rounds);
    let mut log = simulate_session(&block, &job.sim)?.log;
    log.manifest.session_id = job.dir_name.clone();
    log.manifest.subject_id = job.subject_id.clone();
    log.manifest.block_index = job.block_index;
    Ok(log)
}

fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let jobs = plan_sessions(args).map_err(usage)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let results = parallel_map(&jobs, |job| {
        let log = simulate_planned(job, args.rounds)?;
        write_log(&log, &args.out.join(&job.dir_name))?;
        Ok::<_, Error>(log)
    });
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (job, res) in jobs.iter().zip(results) {
        let log = res.with_context(|| format!("simulating {}", job.dir_name))?;
        let raw_errors = log.selections.iter().filter(|s| s.outcome_raw.is_error()).count();
        let errors = log.selections.iter().filter(|s| s.outcome_effective.is_error()).count();
        writeln!(
            out,
            "{}\tcondition={}\tseed={}\tframes={}\tselections={}\terrors={}\twould_be={}",
            job.dir_name,
            job.condition,
            job.sim.seed,
            log.frames.len(),
            log.selections.len(),
            errors,
            raw_errors
        )?;
    }
    Ok(())
}

fn classifier(window_ms: f64) -> Result<ClassifierConfig, Failure> {
    let c = ClassifierConfig { window_ms };
    c.validate().map_err(|e| usage(e.into()))?;
    Ok(c)
}

fn read_input(dir: &Path) -> Result<SessionLog, Failure> {
    read_session(dir).map_err(|e| match e {
        Error::MissingFile(_) => usage(anyhow::Error::new(e)),
        other => Failure::from(anyhow::Error::new(other).context(format!("reading {}", dir.display()))),
    })
}

pub fn cmd_classify(args: &ClassifyArgs) -> CmdResult {
    let cls = classifier(args.window_ms)?;
    let log = read_input(&args.input)?;
    let records = classify_session(&log, &cls)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(&SelectionRow::from(r))?);
        text.push('\n');
    }
    match &args.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_metrics(root: &Path, cls: &ClassifierConfig) -> Result<Vec<SessionMetrics>, Failure> {
    let dirs = find_sessions(root).map_err(|e| usage(e.into()))?;
    if dirs.is_empty() {
        return Err(usage(anyhow::anyhow!("no session directories under {}", root.display())));
    }
    let results = parallel_map(&dirs, |d| -> anyhow::Result<SessionMetrics> {
        let mut log = read_session(d).with_context(|| format!("reading {}", d.display()))?;
        log.selections = classify_session(&log, cls)?;
        Ok(SessionMetrics::compute(&log)?)
    });
    results.into_iter().collect::<anyhow::Result<Vec<_>>>().map_err(Failure::from)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CmdResult {
    let cls = classifier(args.window_ms)?;
    let mut metrics = load_metrics(&args.input, &cls)?;
    sort_sessions(&mut metrics);
    match &args.out {
        Some(p) => write_sessions_csv(&metrics, p)?,
        None => write_sessions_csv_to(&metrics, std::io::stdout().lock())?,
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> CmdResult {
    let cls = classifier(args.window_ms)?;
    let metrics = load_metrics(&args.input, &cls)?;
    let report = aggregate_report(&metrics)?;
    write_report(&report, &args.out).with_context(|| format!("writing report to {}", args.out.display()))?;
    print!("{}", render_summary(&report));
    Ok(())
}

/// Prints findings for every session and returns the worst exit code.
pub fn cmd_validate(args: &ValidateArgs) -> i32 {
    let mut code = 0;
    for path in &args.paths {
        let dirs = match find_sessions(path) {
            Ok(d) if !d.is_empty() => d,
            _ => vec![path.clone()],
        };
        for dir in dirs {
            let report = io::validate(&dir);
            if report.findings.is_empty() {
                println!("{}: ok", dir.display());
            }
            for f in &report.findings {
                println!("{}: {f}", dir.display());
            }
            code = code.max(report.exit_code());
        }
    }
    code
}

pub fn cmd_serve(args: &ServeArgs) -> CmdResult {
    let mut cfg = ServiceConfig::new(&args.out);
    cfg.rounds = args.rounds;
    cfg.ring_radius_px = args.ring_radius_px;
    let service = Service::bind((args.host.as_str(), args.port), cfg)
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    eprintln!("listening on ws://{} (sessions in {})", service.local_addr()?, args.out.display());
    service.run()?;
    Ok(())
}
