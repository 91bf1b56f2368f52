//! Drives the WebSocket service with a simulated participant.
//!
//! Starts a service on an ephemeral port, streams one simulated round to it
//! frame by frame and prints every message that is not a hover update.

use std::time::Duration;

use gazekit::service::{Service, ServiceConfig};
use gazekit::sim::{simulate_session, SimConfig};
use gazekit::task::{BlockConfig, Condition};
use serde_json::{json, Value};
use tungstenite::{connect, Message};

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("gazekit-live-client");
    let mut cfg = ServiceConfig::new(&out);
    cfg.rounds = 1;
    let service = Service::bind("127.0.0.1:0", cfg)?;
    let addr = service.local_addr()?;
    service.spawn();

    let (mut ws, _) = connect(format!("ws://{addr}"))?;
    if let tungstenite::stream::MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(5)))?;
    }
    let send = |ws: &mut tungstenite::WebSocket<_>, v: Value| -> anyhow::Result<()> {
        Ok(ws.send(Message::text(v.to_string()))?)
    };
    let recv = |ws: &mut tungstenite::WebSocket<_>| -> anyhow::Result<Value> {
        loop {
            if let Message::Text(t) = ws.read()? {
                return Ok(serde_json::from_str(&t)?);
            }
        }
    };

    send(&mut ws, json!({"type": "hello", "subject_id": "demo", "condition": "sticky_magnetic"}))?;
    let config = recv(&mut ws)?;
    println!(
        "config: {} layouts, {} m/px",
        config["layouts"].as_array().map_or(0, Vec::len),
        config["meters_per_pixel"]
    );
    println!("{}", recv(&mut ws)?);

    let run = simulate_session(&BlockConfig::new(Condition::StickyMagnetic).with_rounds(1), &SimConfig::with_seed(3))?;
    let mut pinches = run.log.pinch_times().into_iter().peekable();
    let last = run.log.pinch_times().last().copied().unwrap_or(0.0);
    for s in &run.samples {
        while let Some(p) = pinches.next_if(|&p| p < s.t) {
            send(&mut ws, json!({"type": "pinch", "t_ms": p}))?;
            println!("{}", recv(&mut ws)?);
            if p < last {
                println!("{}", recv(&mut ws)?);
            }
        }
        send(&mut ws, json!({"type": "frame", "t_ms": s.t, "x_m": s.pos.x, "y_m": s.pos.y, "valid": s.valid}))?;
        recv(&mut ws)?;
        if pinches.peek().is_none() && s.t >= last + 350.0 {
            println!("{}", recv(&mut ws)?);
            break;
        }
    }
    Ok(())
}
