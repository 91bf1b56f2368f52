use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use gazekit::io::{find_sessions, read_session, validate};
use gazekit::service::{Service, ServiceConfig};
use gazekit::session::replay;
use gazekit::sim::{simulate_session, SimConfig, SimulatedSession};
use gazekit::task::{BlockConfig, Condition};
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{connect, Message, WebSocket};

type Ws = WebSocket<MaybeTlsStream<TcpStream>>;

fn start(rounds: usize) -> (SocketAddr, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = ServiceConfig::new(out.path());
    cfg.rounds = rounds;
    let service = Service::bind("127.0.0.1:0", cfg).unwrap();
    let addr = service.local_addr().unwrap();
    service.spawn();
    (addr, out)
}

fn open(addr: SocketAddr) -> Ws {
    let (ws, _) = connect(format!("ws://{addr}")).unwrap();
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    }
    ws
}

fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::text(v.to_string())).unwrap();
}

fn recv(ws: &mut Ws) -> Value {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return serde_json::from_str(&t).unwrap(),
            Message::Close(_) => panic!("closed"),
            _ => {}
        }
    }
}

fn hello(ws: &mut Ws, condition: &str) -> (Value, Value) {
    send(ws, json!({"type": "hello", "subject_id": "p01", "condition": condition}));
    let config = recv(ws);
    let highlight = recv(ws);
    assert_eq!(config["type"], "config");
    assert_eq!(highlight["type"], "highlight");
    (config, highlight)
}

fn simulated(condition: Condition, rounds: usize, seed: u64) -> SimulatedSession {
    let sim = SimConfig { dropout_rate: 0.03, pinch_offset_sd_ms: 160.0, ..SimConfig::with_seed(seed) };
    simulate_session(&BlockConfig::new(condition).with_rounds(rounds), &sim).unwrap()
}

/// Streams a simulated session in lockstep and returns the `done` path.
fn play(ws: &mut Ws, run: &SimulatedSession) -> PathBuf {
    let pinches = run.log.pinch_times();
    let last = *pinches.last().unwrap();
    let mut next_pinch = pinches.iter().copied().peekable();
    let mut highlights = vec![];
    for s in &run.samples {
        while let Some(p) = next_pinch.next_if(|&p| p < s.t) {
            send(ws, json!({"type": "pinch", "t_ms": p}));
            let outcome = recv(ws);
            assert_eq!(outcome["type"], "outcome");
            if p < last {
                let h = recv(ws);
                assert_eq!(h["type"], "highlight");
                highlights.push(h);
            }
        }
        send(ws, json!({"type": "frame", "t_ms": s.t, "x_m": s.pos.x, "y_m": s.pos.y, "valid": s.valid}));
        assert_eq!(recv(ws)["type"], "hover");
        if next_pinch.peek().is_none() && s.t >= last + 350.0 {
            let done = recv(ws);
            assert_eq!(done["type"], "done", "{done}");
            assert_eq!(highlights.len(), pinches.len() - 1);
            return PathBuf::from(done["session_path"].as_str().unwrap());
        }
    }
    panic!("stream ended before the session finished");
}

#[test]
fn live_round_matches_offline_replay() {
    let (addr, out) = start(1);
    let mut ws = open(addr);
    let (config, highlight) = hello(&mut ws, "sticky_magnetic");
    assert_eq!(config["condition"], "sticky_magnetic");
    assert_eq!(config["layouts"].as_array().unwrap().len(), 1);
    assert!(config["meters_per_pixel"].as_f64().unwrap() > 0.0);
    assert_eq!((highlight["round"].as_u64(), highlight["trial"].as_u64()), (Some(0), Some(0)));

    let run = simulated(Condition::StickyMagnetic, 1, 8);
    let dir = play(&mut ws, &run);
    assert!(dir.starts_with(out.path()));

    let report = validate(&dir);
    assert!(report.findings.is_empty(), "{:?}", report.findings);
    let log = read_session(&dir).unwrap();
    assert!(!log.manifest.aborted);
    assert_eq!(log.selections.len(), 9);
    assert_eq!(log.selections, run.log.selections);
    assert_eq!(log.frames[..], run.log.frames[..log.frames.len()]);

    let again = replay(&log.manifest, &log.samples(), &log.pinch_times()).unwrap();
    let effective: Vec<_> = again.frames().iter().map(|f| f.effective_target).collect();
    assert_eq!(effective, log.frames.iter().map(|f| f.effective_target).collect::<Vec<_>>());
}

#[test]
fn second_connection_is_busy() {
    let (addr, _out) = start(1);
    let mut first = open(addr);
    hello(&mut first, "none");
    let mut second = open(addr);
    let msg = recv(&mut second);
    assert_eq!(msg, json!({"type": "error", "msg": "busy"}));
}

#[test]
fn malformed_message_closes_with_error() {
    let (addr, _out) = start(1);
    let mut ws = open(addr);
    send(&mut ws, json!({"type": "frame", "t_ms": 0.0}));
    let msg = recv(&mut ws);
    assert_eq!(msg["type"], "error");
    assert!(msg["msg"].as_str().unwrap().contains("malformed"), "{msg}");
    assert!(matches!(ws.read(), Ok(Message::Close(_)) | Err(_)));
}

#[test]
fn disconnect_leaves_an_aborted_session() {
    let (addr, out) = start(1);
    let run = simulated(Condition::Sticky, 1, 3);
    {
        let mut ws = open(addr);
        hello(&mut ws, "sticky");
        let first_pinch = run.log.pinch_times()[0];
        for s in run.samples.iter().take_while(|s| s.t < first_pinch + 400.0) {
            if s.t > first_pinch && s.t - first_pinch <= 1000.0 / 90.0 {
                send(&mut ws, json!({"type": "pinch", "t_ms": first_pinch}));
                assert_eq!(recv(&mut ws)["type"], "outcome");
                assert_eq!(recv(&mut ws)["type"], "highlight");
            }
            send(&mut ws, json!({"type": "frame", "t_ms": s.t, "x_m": s.pos.x, "y_m": s.pos.y, "valid": s.valid}));
            recv(&mut ws);
        }
        ws.close(None).unwrap();
        while ws.read().is_ok() {}
    }
    // the service finishes the log after the socket drops
    let mut dirs = vec![];
    for _ in 0..100 {
        dirs = find_sessions(out.path()).unwrap();
        if dirs.len() == 1 && read_session(&dirs[0]).is_ok_and(|l| l.manifest.aborted) {
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let log = read_session(&dirs[0]).unwrap();
    assert!(log.manifest.aborted);
    assert_eq!(log.selections.len(), 1);
    assert_eq!(log.selections[0], run.log.selections[0]);
    assert_eq!(validate(&dirs[0]).exit_code(), 0);
}

#[test]
fn new_hello_closes_the_previous_session() {
    let (addr, out) = start(1);
    let mut ws = open(addr);
    hello(&mut ws, "magnetic");
    send(&mut ws, json!({"type": "frame", "t_ms": 0.0, "x_m": 0.0, "y_m": 0.0, "valid": true}));
    assert_eq!(recv(&mut ws)["type"], "hover");
    send(&mut ws, json!({"type": "hello", "subject_id": "p01", "condition": "none"}));
    let done = recv(&mut ws);
    assert_eq!(done["type"], "done");
    assert_eq!(recv(&mut ws)["type"], "config");
    let first = read_session(&PathBuf::from(done["session_path"].as_str().unwrap())).unwrap();
    assert!(first.manifest.aborted);
    assert_eq!(first.frames.len(), 1);
    assert!(first.selections.is_empty());
    assert!(find_sessions(out.path()).unwrap().len() <= 2);
}
