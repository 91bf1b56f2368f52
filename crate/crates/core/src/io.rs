//! Session log files.
//!
//! A session directory holds three files:
//!
//! * `manifest.json` – one JSON object ([`SessionManifest`]);
//! * `frames.jsonl` – one [`FrameRow`] per line;
//! * `selections.jsonl` – one [`SelectionRow`] per line.
//!
//! Target ids are flattened with `-1` meaning "no target". Numbers are
//! written in their shortest round-trip form, so reading and rewriting a log
//! reproduces it byte for byte.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierConfig, OutcomeClass, SelectionRecord};
use crate::error::{Error, Result};
use crate::geometry::TargetId;
use crate::reticle::{GazeSample, HeuristicConfig, HoverResolution};
use crate::session::replay;
use crate::sim::SimConfig;
use crate::task::{BlockConfig, Condition, RingSchedule};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRAMES_FILE: &str = "frames.jsonl";
pub const SELECTIONS_FILE: &str = "selections.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub schema_version: u32,
    pub session_id: String,
    pub subject_id: String,
    pub condition: Condition,
    pub block_index: u32,
    pub layout: RingSchedule,
    pub heuristics: HeuristicConfig,
    pub sim: Option<SimConfig>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub aborted: bool,
}

impl SessionManifest {
    pub fn new(
        session_id: impl Into<String>,
        subject_id: impl Into<String>,
        block_index: u32,
        block: &BlockConfig,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            session_id: session_id.into(),
            subject_id: subject_id.into(),
            condition: block.condition,
            block_index,
            layout: block.layout.clone(),
            heuristics: block.heuristics,
            sim: None,
            seed: None,
            aborted: false,
        }
    }

    pub fn block(&self) -> BlockConfig {
        BlockConfig { condition: self.condition, heuristics: self.heuristics, layout: self.layout.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(self.schema_version));
        }
        self.block().validate()
    }
}

fn id_to_flat(id: Option<TargetId>) -> i64 {
    id.map_or(-1, |t| i64::from(t.0))
}

fn flat_to_id(v: i64) -> Option<TargetId> {
    u32::try_from(v).ok().map(TargetId)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRow {
    pub t_ms: f64,
    pub gaze_x_m: f64,
    pub gaze_y_m: f64,
    pub valid: bool,
    pub raw_target: i64,
    pub effective_target: i64,
    pub snapped: bool,
    pub stuck: bool,
    pub pinch_down: bool,
}

impl FrameRow {
    pub fn new(sample: &GazeSample, res: &HoverResolution) -> Self {
        Self {
            t_ms: sample.t,
            gaze_x_m: sample.pos.x,
            gaze_y_m: sample.pos.y,
            valid: sample.valid,
            raw_target: id_to_flat(res.raw_target),
            effective_target: id_to_flat(res.effective_target),
            snapped: res.snapped,
            stuck: res.stuck,
            pinch_down: false,
        }
    }

    pub fn sample(&self) -> GazeSample {
        GazeSample {
            t: self.t_ms,
            pos: crate::geometry::PlanePoint::new(self.gaze_x_m, self.gaze_y_m),
            valid: self.valid,
        }
    }

    pub fn hover(&self) -> HoverResolution {
        HoverResolution {
            raw_target: flat_to_id(self.raw_target),
            effective_target: flat_to_id(self.effective_target),
            snapped: self.snapped,
            stuck: self.stuck,
        }
    }
}

/// Flat form of [`SelectionRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRow {
    pub round: usize,
    pub trial: usize,
    pub condition: Condition,
    pub highlighted: i64,
    pub selected_effective: i64,
    pub selected_raw: i64,
    pub highlight_onset_t: f64,
    pub first_entry_t: Option<f64>,
    pub last_exit_before_pinch_t: Option<f64>,
    pub first_entry_after_pinch_t: Option<f64>,
    pub pinch_t: f64,
    pub outcome_effective: OutcomeClass,
    pub outcome_raw: OutcomeClass,
    pub corrected_by_heuristic: bool,
}

impl From<&SelectionRecord> for SelectionRow {
    fn from(r: &SelectionRecord) -> Self {
        Self {
            round: r.round,
            trial: r.trial,
            condition: r.condition,
            highlighted: i64::from(r.highlighted.0),
            selected_effective: id_to_flat(r.selected_effective),
            selected_raw: id_to_flat(r.selected_raw),
            highlight_onset_t: r.highlight_onset_t,
            first_entry_t: r.first_entry_t,
            last_exit_before_pinch_t: r.last_exit_before_pinch_t,
            first_entry_after_pinch_t: r.first_entry_after_pinch_t,
            pinch_t: r.pinch_t,
            outcome_effective: r.outcome_effective,
            outcome_raw: r.outcome_raw,
            corrected_by_heuristic: r.corrected_by_heuristic,
        }
    }
}

impl SelectionRow {
    fn to_record(self) -> Option<SelectionRecord> {
        Some(SelectionRecord {
            round: self.round,
            trial: self.trial,
            condition: self.condition,
            highlighted: flat_to_id(self.highlighted)?,
            selected_effective: flat_to_id(self.selected_effective),
            selected_raw: flat_to_id(self.selected_raw),
            highlight_onset_t: self.highlight_onset_t,
            first_entry_t: self.first_entry_t,
            last_exit_before_pinch_t: self.last_exit_before_pinch_t,
            first_entry_after_pinch_t: self.first_entry_after_pinch_t,
            pinch_t: self.pinch_t,
            outcome_effective: self.outcome_effective,
            outcome_raw: self.outcome_raw,
            corrected_by_heuristic: self.corrected_by_heuristic,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub manifest: SessionManifest,
    pub frames: Vec<FrameRow>,
    pub selections: Vec<SelectionRecord>,
}

impl SessionLog {
    pub fn samples(&self) -> Vec<GazeSample> {
        self.frames.iter().map(FrameRow::sample).collect()
    }

    pub fn pinch_times(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.pinch_t).collect()
    }
}

/// Recomputes every selection record of `log` from its frames and pinch
/// times alone.
pub fn classify_session(log: &SessionLog, cfg: &ClassifierConfig) -> Result<Vec<SelectionRecord>> {
    replay(&log.manifest, &log.samples(), &log.pinch_times())?.classify(cfg)
}

/// One problem found in a session directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub file: String,
    /// 1-based line number, absent for whole-file findings.
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}: {}", self.file, l, self.field, self.message),
            None => write!(f, "{}: {}: {}", self.file, self.field, self.message),
        }
    }
}

impl From<Finding> for Error {
    fn from(f: Finding) -> Self {
        Error::Schema { file: f.file, line: f.line.unwrap_or(0), field: f.field, message: f.message }
    }
}

fn line_numbers(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

fn finding(file: &str, line: Option<usize>, field: &str, message: impl Into<String>) -> Finding {
    Finding { file: file.to_string(), line, field: field.to_string(), message: message.into() }
}

// ---------------------------------------------------------------------------
// structural checks shared by read, write and validate

fn check_target_id(v: i64, n: usize, allow_none: bool) -> bool {
    (allow_none && v == -1) || (v >= 0 && (v as usize) < n)
}

/// `lines[i]` is the file line of `frames[i]`.
fn frame_findings(frames: &[FrameRow], lines: &[usize], n_targets: usize) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut last: Option<f64> = None;
    for (f, &l) in frames.iter().zip(lines) {
        let line = Some(l);
        if !f.t_ms.is_finite() {
            out.push(finding(FRAMES_FILE, line, "t_ms", "not finite"));
        } else if let Some(prev) = last.filter(|&p| f.t_ms <= p) {
            out.push(finding(FRAMES_FILE, line, "t_ms", format!("{} does not increase past {prev}", f.t_ms)));
        }
        if f.t_ms.is_finite() {
            last = Some(last.map_or(f.t_ms, |p: f64| p.max(f.t_ms)));
        }
        if !f.gaze_x_m.is_finite() || !f.gaze_y_m.is_finite() {
            out.push(finding(FRAMES_FILE, line, "gaze_x_m", "gaze position not finite"));
        }
        if !check_target_id(f.raw_target, n_targets, true) {
            out.push(finding(FRAMES_FILE, line, "raw_target", format!("{} is not a target id", f.raw_target)));
        }
        if !check_target_id(f.effective_target, n_targets, true) {
            out.push(finding(
                FRAMES_FILE,
                line,
                "effective_target",
                format!("{} is not a target id", f.effective_target),
            ));
        }
    }
    out
}

fn selection_findings(rows: &[SelectionRow], lines: &[usize], manifest: &SessionManifest) -> Vec<Finding> {
    let n = manifest.layout.n_targets;
    let mut out = Vec::new();
    let mut last_pinch: Option<f64> = None;
    for (k, (r, &l)) in rows.iter().zip(lines).enumerate() {
        let line = Some(l);
        // rows are in execution order, so position fixes round and trial
        if (r.round, r.trial) != (k / n.max(1), k % n.max(1)) {
            out.push(finding(
                SELECTIONS_FILE,
                line,
                "trial",
                format!(
                    "round {} trial {} out of sequence, expected round {} trial {}",
                    r.round,
                    r.trial,
                    k / n.max(1),
                    k % n.max(1)
                ),
            ));
        }
        if r.condition != manifest.condition {
            out.push(finding(SELECTIONS_FILE, line, "condition", format!("{} differs from manifest", r.condition)));
        }
        if !check_target_id(r.highlighted, n, false) {
            out.push(finding(SELECTIONS_FILE, line, "highlighted", format!("{} is not a target id", r.highlighted)));
        }
        if !check_target_id(r.selected_effective, n, true) {
            out.push(finding(
                SELECTIONS_FILE,
                line,
                "selected_effective",
                format!("{} is not a target id", r.selected_effective),
            ));
        }
        if !check_target_id(r.selected_raw, n, true) {
            out.push(finding(SELECTIONS_FILE, line, "selected_raw", format!("{} is not a target id", r.selected_raw)));
        }
        let onset = r.highlight_onset_t;
        for (name, v) in [
            ("first_entry_t", r.first_entry_t),
            ("last_exit_before_pinch_t", r.last_exit_before_pinch_t),
            ("first_entry_after_pinch_t", r.first_entry_after_pinch_t),
            ("pinch_t", Some(r.pinch_t)),
        ] {
            if let Some(v) = v {
                if !(v >= onset) {
                    out.push(finding(SELECTIONS_FILE, line, name, format!("{v} precedes highlight onset {onset}")));
                }
            }
        }
        if let Some(p) = last_pinch.filter(|&p| r.pinch_t < p) {
            out.push(finding(SELECTIONS_FILE, line, "pinch_t", format!("{} precedes previous pinch {p}", r.pinch_t)));
        }
        last_pinch = Some(r.pinch_t);
        let expect_corrected = r.outcome_effective == OutcomeClass::Correct && r.outcome_raw != OutcomeClass::Correct;
        if r.corrected_by_heuristic != expect_corrected {
            out.push(finding(
                SELECTIONS_FILE,
                line,
                "corrected_by_heuristic",
                "inconsistent with outcome_effective/outcome_raw",
            ));
        }
        let correct = r.selected_effective == r.highlighted;
        if correct != (r.outcome_effective == OutcomeClass::Correct) {
            out.push(finding(SELECTIONS_FILE, line, "outcome_effective", "inconsistent with selected_effective"));
        }
    }
    out
}

fn manifest_findings(m: &SessionManifest) -> Vec<Finding> {
    let mut out = Vec::new();
    if m.schema_version != SCHEMA_VERSION {
        out.push(finding(MANIFEST_FILE, None, "schema_version", format!("unsupported version {}", m.schema_version)));
        return out;
    }
    if !m.condition.matches(&m.heuristics) {
        out.push(finding(MANIFEST_FILE, None, "condition", "does not match heuristic flags"));
    }
    if let Err(e) = m.heuristics.validate() {
        out.push(finding(MANIFEST_FILE, None, "heuristics", e.to_string()));
    }
    if let Err(e) = m.layout.validate() {
        out.push(finding(MANIFEST_FILE, None, "layout", e.to_string()));
    }
    out
}

// ---------------------------------------------------------------------------
// write

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn manifest_json(manifest: &SessionManifest) -> Result<String> {
    let mut s = serde_json::to_string_pretty(manifest)?;
    s.push('\n');
    Ok(s)
}

/// One line of `frames.jsonl`, newline included.
pub fn frame_line(row: &FrameRow) -> Result<String> {
    let mut s = serde_json::to_string(row)?;
    s.push('\n');
    Ok(s)
}

/// Writes a session directory, creating it if needed.
///
/// Refuses to write rows that violate the log invariants.
pub fn write_session(
    manifest: &SessionManifest,
    frames: &[FrameRow],
    selections: &[SelectionRecord],
    dir: &Path,
) -> Result<()> {
    let rows: Vec<SelectionRow> = selections.iter().map(SelectionRow::from).collect();
    let problems: Vec<Finding> = manifest_findings(manifest)
        .into_iter()
        .chain(frame_findings(frames, &line_numbers(frames.len()), manifest.layout.n_targets))
        .chain(selection_findings(&rows, &line_numbers(rows.len()), manifest))
        .collect();
    if let Some(first) = problems.first() {
        return Err(Error::InvariantViolation(format!("{first} ({} problem(s))", problems.len())));
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST_FILE), manifest_json(manifest)?)?;
    write_jsonl(&dir.join(FRAMES_FILE), frames)?;
    write_jsonl(&dir.join(SELECTIONS_FILE), rows)?;
    Ok(())
}

pub fn write_log(log: &SessionLog, dir: &Path) -> Result<()> {
    write_session(&log.manifest, &log.frames, &log.selections, dir)
}

// ---------------------------------------------------------------------------
// read

fn field_from_serde(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("?").to_string()
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path, file: &str) -> Result<Vec<std::result::Result<T, Finding>>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            out.push(Err(finding(file, Some(i + 1), "-", "empty line")));
            continue;
        }
        out.push(serde_json::from_str::<T>(&line).map_err(|e| {
            let msg = e.to_string();
            finding(file, Some(i + 1), &field_from_serde(&msg), msg)
        }));
    }
    Ok(out)
}

fn read_manifest(dir: &Path) -> Result<SessionManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let text = fs::read_to_string(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
        file: MANIFEST_FILE.into(),
        line: e.line(),
        field: "-".into(),
        message: e.to_string(),
    })?;
    // version gate first, before the rest of the shape is trusted
    if let Some(v) = value.get("schema_version").and_then(|v| v.as_u64()) {
        if v != u64::from(SCHEMA_VERSION) {
            return Err(Error::UnsupportedSchema(v as u32));
        }
    }
    serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        Error::Schema { file: MANIFEST_FILE.into(), line: 1, field: field_from_serde(&msg), message: msg }
    })
}

/// Reads and validates a session directory, stopping at the first problem.
pub fn read_session(dir: &Path) -> Result<SessionLog> {
    let manifest = read_manifest(dir)?;
    if let Some(f) = manifest_findings(&manifest).into_iter().next() {
        return Err(f.into());
    }
    let frames = parse_jsonl::<FrameRow>(&dir.join(FRAMES_FILE), FRAMES_FILE)?
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = parse_jsonl::<SelectionRow>(&dir.join(SELECTIONS_FILE), SELECTIONS_FILE)?
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(f) = frame_findings(&frames, &line_numbers(frames.len()), manifest.layout.n_targets).into_iter().next()
    {
        return Err(f.into());
    }
    if let Some(f) = selection_findings(&rows, &line_numbers(rows.len()), &manifest).into_iter().next() {
        return Err(f.into());
    }
    let selections = rows.into_iter().map(|r| r.to_record().expect("highlighted checked above")).collect();
    Ok(SessionLog { manifest, frames, selections })
}

// ---------------------------------------------------------------------------
// validate

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationStatus {
    Clean,
    Violations,
    Unreadable,
}

impl ValidationStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            ValidationStatus::Clean => 0,
            ValidationStatus::Violations => 1,
            ValidationStatus::Unreadable => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub path: PathBuf,
    pub status: ValidationStatus,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

fn replay_findings(manifest: &SessionManifest, frames: &[FrameRow], rows: &[SelectionRow]) -> Vec<Finding> {
    let samples: Vec<GazeSample> = frames.iter().map(FrameRow::sample).collect();
    let pinches: Vec<f64> = rows.iter().map(|r| r.pinch_t).collect();
    let session = match replay(manifest, &samples, &pinches) {
        Ok(s) => s,
        Err(e) => return vec![finding(FRAMES_FILE, None, "-", format!("replay failed: {e}"))],
    };
    let mut out = Vec::new();
    for (i, (logged, replayed)) in frames.iter().zip(session.frames()).enumerate() {
        if logged != replayed {
            out.push(finding(
                FRAMES_FILE,
                Some(i + 1),
                "effective_target",
                format!("replay gives {:?} / pinch_down {}", replayed.hover(), replayed.pinch_down),
            ));
        }
    }
    let records = match session.classify(&ClassifierConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            out.push(finding(SELECTIONS_FILE, None, "-", format!("classification failed: {e}")));
            return out;
        }
    };
    for (i, (logged, rec)) in rows.iter().zip(&records).enumerate() {
        let replayed = SelectionRow::from(rec);
        if *logged != replayed {
            out.push(finding(
                SELECTIONS_FILE,
                Some(i + 1),
                "-",
                format!("differs from replay: {}", serde_json::to_string(&replayed).unwrap_or_default()),
            ));
        }
    }
    out
}

/// Rows that parsed, with their line numbers, and whether any line failed.
struct Parsed<T> {
    rows: Vec<T>,
    lines: Vec<usize>,
    bad: bool,
}

fn parse_rows<T: DeserializeOwned>(path: &Path, file: &str, findings: &mut Vec<Finding>) -> Option<Parsed<T>> {
    let parsed = match parse_jsonl::<T>(path, file) {
        Ok(p) => p,
        Err(e) => {
            findings.push(finding(file, None, "-", e.to_string()));
            return None;
        }
    };
    let mut out = Parsed { rows: Vec::new(), lines: Vec::new(), bad: false };
    for (i, r) in parsed.into_iter().enumerate() {
        match r {
            Ok(row) => {
                out.rows.push(row);
                out.lines.push(i + 1);
            }
            Err(f) => {
                findings.push(f);
                out.bad = true;
            }
        }
    }
    Some(out)
}

/// Lists every problem in a session directory.
///
/// Structural checks always run in full. Replay and reclassification are
/// compared only when the structure is sound, so one corrupted value yields
/// one finding.
pub fn validate(dir: &Path) -> ValidationReport {
    let unreadable = |msg: String| ValidationReport {
        path: dir.to_path_buf(),
        status: ValidationStatus::Unreadable,
        findings: vec![finding(&dir.display().to_string(), None, "-", msg)],
    };
    if !dir.is_dir() {
        return unreadable("not a readable directory".into());
    }
    let manifest = match read_manifest(dir) {
        Ok(m) => m,
        Err(Error::UnsupportedSchema(v)) => {
            return ValidationReport {
                path: dir.to_path_buf(),
                status: ValidationStatus::Violations,
                findings: vec![finding(MANIFEST_FILE, None, "schema_version", format!("unsupported version {v}"))],
            }
        }
        Err(e @ Error::MissingFile(_)) | Err(e @ Error::Io(_)) => return unreadable(e.to_string()),
        Err(e) => {
            return ValidationReport {
                path: dir.to_path_buf(),
                status: ValidationStatus::Violations,
                findings: vec![finding(MANIFEST_FILE, None, "-", e.to_string())],
            }
        }
    };

    let mut findings = manifest_findings(&manifest);

    let frames: Option<Parsed<FrameRow>> = parse_rows(&dir.join(FRAMES_FILE), FRAMES_FILE, &mut findings);
    let rows: Option<Parsed<SelectionRow>> = parse_rows(&dir.join(SELECTIONS_FILE), SELECTIONS_FILE, &mut findings);

    if let Some(f) = &frames {
        findings.extend(frame_findings(&f.rows, &f.lines, manifest.layout.n_targets));
    }
    if let Some(r) = &rows {
        findings.extend(selection_findings(&r.rows, &r.lines, &manifest));
    }
    if findings.is_empty() {
        if let (Some(f), Some(r)) = (&frames, &rows) {
            findings.extend(replay_findings(&manifest, &f.rows, &r.rows));
        }
    }

    ValidationReport {
        path: dir.to_path_buf(),
        status: if findings.is_empty() { ValidationStatus::Clean } else { ValidationStatus::Violations },
        findings,
    }
}

/// Session directories directly below `root` (or `root` itself).
pub fn find_sessions(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(MANIFEST_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    if !root.is_dir() {
        return Err(Error::MissingFile(root.to_path_buf()));
    }
    let mut out: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    out.sort();
    Ok(out)
}
