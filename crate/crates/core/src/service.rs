//! Live session service over WebSocket.
//!
//! One harness connection drives one session at a time; a second concurrent
//! connection is told `busy` and closed. Each connection has a handler thread
//! that owns the [`TaskSession`] and a writer thread that appends frame rows
//! to `frames.jsonl` as they settle, flushing at every trial boundary. When a
//! session ends the writer rewrites the directory with the final log.
//!
//! Messages are JSON text frames tagged by `type`. Target ids use `-1` for
//! "none", as in the log files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tungstenite::{Message, WebSocket};

use crate::classify::ClassifierConfig;
use crate::error::{Error, Result};
use crate::geometry::{PlanePoint, TargetId, TargetLayout};
use crate::io::{
    frame_line, manifest_json, write_log, FrameRow, SessionLog, SessionManifest, FRAMES_FILE, MANIFEST_FILE,
};
use crate::reticle::{GazeSample, HoverResolution, PinchEvent};
use crate::session::{Highlight, TaskSession};
use crate::task::{BlockConfig, Condition};

pub const OUT_ENV: &str = "GAZEKIT_OUT";
pub const DEFAULT_RING_RADIUS_PX: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello { subject_id: String, condition: Condition },
    Frame { t_ms: f64, x_m: f64, y_m: f64, valid: bool },
    Pinch { t_ms: f64 },
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hover { raw: i64, effective: i64, snapped: bool, stuck: bool },
    Highlight { target: u32, round: usize, trial: usize },
    Outcome { selected: i64, correct: bool },
    Done { session_path: String },
    Error { msg: String },
}

fn flat(id: Option<TargetId>) -> i64 {
    id.map_or(-1, |t| i64::from(t.0))
}

impl From<HoverResolution> for ServerMessage {
    fn from(h: HoverResolution) -> Self {
        ServerMessage::Hover {
            raw: flat(h.raw_target),
            effective: flat(h.effective_target),
            snapped: h.snapped,
            stuck: h.stuck,
        }
    }
}

impl From<Highlight> for ServerMessage {
    fn from(h: Highlight) -> Self {
        ServerMessage::Highlight { target: h.target.0, round: h.round, trial: h.trial }
    }
}

/// The `config` message: manifest fields plus the per-round layouts and the
/// plane scale the harness should draw at.
pub fn config_message(manifest: &SessionManifest, layouts: &[TargetLayout], meters_per_pixel: f64) -> Result<Value> {
    let mut v = serde_json::to_value(manifest)?;
    let obj = v.as_object_mut().expect("manifest serializes to an object");
    obj.insert("type".into(), json!("config"));
    obj.insert("layouts".into(), serde_json::to_value(layouts)?);
    obj.insert("meters_per_pixel".into(), json!(meters_per_pixel));
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub out_root: PathBuf,
    pub rounds: usize,
    /// Pixel radius of the widest ring on screen.
    pub ring_radius_px: f64,
    pub classifier: ClassifierConfig,
}

impl ServiceConfig {
    pub fn new(out_root: impl Into<PathBuf>) -> Self {
        Self {
            out_root: out_root.into(),
            rounds: crate::task::DEFAULT_ROUNDS,
            ring_radius_px: DEFAULT_RING_RADIUS_PX,
            classifier: ClassifierConfig::default(),
        }
    }
}

enum WriterMsg {
    Open { dir: PathBuf, manifest: Box<SessionManifest> },
    Frames(Vec<FrameRow>),
    Flush,
    Finish { log: Box<SessionLog>, reply: Sender<Result<PathBuf>> },
}

struct Journal {
    dir: PathBuf,
    frames: BufWriter<File>,
}

fn open_journal(dir: &Path, manifest: &SessionManifest) -> Result<Journal> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST_FILE), manifest_json(manifest)?)?;
    let frames = BufWriter::new(File::create(dir.join(FRAMES_FILE))?);
    Ok(Journal { dir: dir.to_path_buf(), frames })
}

fn writer_loop(rx: Receiver<WriterMsg>) {
    let mut journal: Option<Journal> = None;
    let mut failed: Option<String> = None;
    for msg in rx {
        match msg {
            WriterMsg::Open { dir, manifest } => match open_journal(&dir, &manifest) {
                Ok(j) => {
                    journal = Some(j);
                    failed = None;
                }
                Err(e) => failed = Some(e.to_string()),
            },
            WriterMsg::Frames(rows) => {
                if let Some(j) = journal.as_mut() {
                    for r in &rows {
                        let line = frame_line(r).map_err(|e| e.to_string());
                        if let Err(e) = line.and_then(|l| j.frames.write_all(l.as_bytes()).map_err(|e| e.to_string())) {
                            failed = Some(e);
                        }
                    }
                }
            }
            WriterMsg::Flush => {
                if let Some(j) = journal.as_mut() {
                    if let Err(e) = j.frames.flush() {
                        failed = Some(e.to_string());
                    }
                }
            }
            WriterMsg::Finish { log, reply } => {
                let result = match (journal.take(), failed.take()) {
                    (_, Some(e)) => Err(Error::Protocol(format!("log writer failed: {e}"))),
                    (Some(j), None) => {
                        drop(j.frames);
                        write_log(&log, &j.dir).map(|_| j.dir)
                    }
                    (None, None) => Err(Error::Protocol("no open session".into())),
                };
                let _ = reply.send(result);
            }
        }
    }
}

struct Live {
    session: TaskSession,
    /// Frames before this index have been handed to the writer.
    flushed: usize,
}

struct Handler {
    cfg: ServiceConfig,
    writer: Sender<WriterMsg>,
    live: Option<Live>,
}

enum Flow {
    Continue,
    Close,
}

static SESSION_COUNTER: AtomicU64 = AtomicU64::new(0);

fn session_id(subject: &str, condition: Condition) -> String {
    let ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let n = SESSION_COUNTER.fetch_add(1, Ordering::Relaxed);
    let safe: String =
        subject.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("live-{safe}-{condition}-{ms}-{n}")
}

impl Handler {
    fn send_settled_frames(&mut self) {
        if let Some(live) = self.live.as_mut() {
            let frames = live.session.frames();
            // the newest frame may still be marked by a pinch
            let settled = frames.len().saturating_sub(1);
            if settled > live.flushed {
                let _ = self.writer.send(WriterMsg::Frames(frames[live.flushed..settled].to_vec()));
                live.flushed = settled;
            }
        }
    }

    fn finalize(&mut self, aborted: bool) -> Result<Option<PathBuf>> {
        let Some(live) = self.live.take() else { return Ok(None) };
        let log = if aborted {
            live.session.finish_aborted(&self.cfg.classifier)?
        } else {
            match live.session.clone().finish(&self.cfg.classifier) {
                Ok(log) => log,
                Err(Error::IndeterminateEarly { .. }) => live.session.finish_aborted(&self.cfg.classifier)?,
                Err(e) => return Err(e),
            }
        };
        let (tx, rx) = mpsc::channel();
        self.writer
            .send(WriterMsg::Finish { log: Box::new(log), reply: tx })
            .map_err(|_| Error::Protocol("log writer stopped".into()))?;
        let dir = rx.recv().map_err(|_| Error::Protocol("log writer stopped".into()))??;
        Ok(Some(dir))
    }

    fn done(dir: PathBuf) -> ServerMessage {
        ServerMessage::Done { session_path: dir.display().to_string() }
    }

    fn handle(&mut self, msg: ClientMessage, out: &mut Vec<Value>) -> Result<Flow> {
        match msg {
            ClientMessage::Hello { subject_id, condition } => {
                if self.live.is_some() {
                    if let Some(dir) = self.finalize(true)? {
                        out.push(serde_json::to_value(Self::done(dir))?);
                    }
                }
                let block = BlockConfig::new(condition).with_rounds(self.cfg.rounds);
                let id = session_id(&subject_id, condition);
                let manifest = SessionManifest::new(id.clone(), subject_id, 0, &block);
                let session = TaskSession::new(manifest.clone())?;
                let widest = session.layouts().iter().map(|l| l.ring_radius).fold(0.0, f64::max);
                out.push(config_message(&manifest, session.layouts(), widest / self.cfg.ring_radius_px)?);
                if let Some(h) = session.current_highlight() {
                    out.push(serde_json::to_value(ServerMessage::from(h))?);
                }
                let _ = self
                    .writer
                    .send(WriterMsg::Open { dir: self.cfg.out_root.join(&id), manifest: Box::new(manifest) });
                self.live = Some(Live { session, flushed: 0 });
                Ok(Flow::Continue)
            }
            ClientMessage::Frame { t_ms, x_m, y_m, valid } => {
                let cls = self.cfg.classifier;
                let Some(live) = self.live.as_mut() else {
                    return Err(Error::Protocol("frame before hello".into()));
                };
                let res = live.session.on_frame(GazeSample { t: t_ms, pos: PlanePoint::new(x_m, y_m), valid })?;
                out.push(serde_json::to_value(ServerMessage::from(res))?);
                let finished = live.session.lookahead_satisfied(&cls);
                self.send_settled_frames();
                if finished {
                    if let Some(dir) = self.finalize(false)? {
                        out.push(serde_json::to_value(Self::done(dir))?);
                    }
                }
                Ok(Flow::Continue)
            }
            ClientMessage::Pinch { t_ms } => {
                let Some(live) = self.live.as_mut() else {
                    return Err(Error::Protocol("pinch before hello".into()));
                };
                let outcome = live.session.on_pinch(PinchEvent { t: t_ms })?;
                out.push(serde_json::to_value(ServerMessage::Outcome {
                    selected: flat(outcome.event.selected),
                    correct: outcome.event.is_correct(),
                })?);
                if let Some(h) = outcome.next {
                    out.push(serde_json::to_value(ServerMessage::from(h))?);
                }
                let _ = self.writer.send(WriterMsg::Flush);
                Ok(Flow::Continue)
            }
            ClientMessage::End => {
                let complete = self.live.as_ref().is_some_and(|l| l.session.is_complete());
                if let Some(dir) = self.finalize(!complete)? {
                    out.push(serde_json::to_value(Self::done(dir))?);
                }
                Ok(Flow::Close)
            }
        }
    }
}

fn send_json(ws: &mut WebSocket<TcpStream>, v: &Value) -> bool {
    ws.send(Message::text(v.to_string())).is_ok()
}

fn serve_connection(stream: TcpStream, cfg: ServiceConfig) {
    let Ok(mut ws) = tungstenite::accept(stream) else { return };
    let (tx, rx) = mpsc::channel();
    let writer = thread::spawn(move || writer_loop(rx));
    let mut handler = Handler { cfg, writer: tx, live: None };

    loop {
        let text = match ws.read() {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Binary(_)) => {
                let _ = send_json(&mut ws, &json!({"type": "error", "msg": "binary messages are not supported"}));
                break;
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let mut out = Vec::new();
        let flow = serde_json::from_str::<ClientMessage>(&text)
            .map_err(|e| Error::Protocol(format!("malformed message: {e}")))
            .and_then(|m| handler.handle(m, &mut out));
        let mut ok = out.iter().all(|v| send_json(&mut ws, v));
        match flow {
            Ok(Flow::Continue) => {}
            Ok(Flow::Close) => ok = false,
            Err(e) => {
                let _ = send_json(&mut ws, &serde_json::to_value(ServerMessage::Error { msg: e.to_string() }).unwrap());
                ok = false;
            }
        }
        if !ok {
            break;
        }
    }
    // a dropped connection ends the session as aborted
    let _ = handler.finalize(true);
    let _ = ws.close(None);
    let _ = ws.flush();
    drop(handler);
    let _ = writer.join();
}

fn reject_busy(stream: TcpStream) {
    if let Ok(mut ws) = tungstenite::accept(stream) {
        let _ = send_json(&mut ws, &json!({"type": "error", "msg": "busy"}));
        let _ = ws.close(None);
        let _ = ws.flush();
        // drain until the peer acknowledges the close
        while ws.read().is_ok() {}
    }
}

pub struct Service {
    listener: TcpListener,
    cfg: ServiceConfig,
    busy: Arc<AtomicBool>,
}

impl Service {
    pub fn bind(addr: impl std::net::ToSocketAddrs, cfg: ServiceConfig) -> Result<Self> {
        if !(cfg.ring_radius_px > 0.0) || cfg.rounds == 0 {
            return Err(Error::invalid("ring radius and rounds must be positive"));
        }
        let listener = TcpListener::bind(addr)?;
        Ok(Self { listener, cfg, busy: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections forever.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            if self.busy.swap(true, Ordering::SeqCst) {
                thread::spawn(move || reject_busy(stream));
                continue;
            }
            let busy = Arc::clone(&self.busy);
            let cfg = self.cfg.clone();
            thread::spawn(move || {
                serve_connection(stream, cfg);
                busy.store(false, Ordering::SeqCst);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> JoinHandle<Result<()>> {
        thread::spawn(move || self.run())
    }
}
