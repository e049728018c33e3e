use std::time::Duration;

use dice_cli::serve::{spawn, Server};
use dice_core::link::LinkConditions;
use dice_core::sim::{Engine, SimConfig};
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

async fn start() -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let engine = Engine::new(SimConfig::default(), LinkConditions::default()).unwrap();
    spawn(listener, engine, None).unwrap()
}

async fn get_state(server: &Server) -> Value {
    let mut s = TcpStream::connect(server.addr).await.unwrap();
    s.write_all(b"GET /state HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    assert!(buf.starts_with("HTTP/1.1 200"), "{buf}");
    assert!(buf
        .to_ascii_lowercase()
        .contains("content-type: application/json"));
    let body = buf.split("\r\n\r\n").nth(1).unwrap();
    serde_json::from_str(body).unwrap()
}

async fn connect(server: &Server) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws", server.addr))
        .await
        .unwrap();
    ws
}

async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("message within 5 s")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

/// Reads until a reply (ack or error) arrives, skipping snapshots.
async fn reply(ws: &mut Ws) -> Value {
    loop {
        let v = next_json(ws).await;
        if v.get("ack").is_some() || v.get("error").is_some() {
            return v;
        }
    }
}

async fn snapshot_where(ws: &mut Ws, pred: impl Fn(&Value) -> bool) -> Value {
    let deadline = tokio::time::Instant::now() + Duration::from_secs(5);
    loop {
        assert!(
            tokio::time::Instant::now() < deadline,
            "condition not reached"
        );
        let v = next_json(ws).await;
        if v.get("proto").is_some() && v.get("t_ms").is_some() && pred(&v) {
            return v;
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn fresh_state_is_neutral() {
    let server = start().await;
    let s = get_state(&server).await;
    assert_eq!(s["proto"], 1);
    assert_eq!(s["sensor"]["face"], "pos_z");
    assert_eq!(s["actuator"]["face"], "pos_z");
    assert_eq!(s["stale"], false);
    assert_eq!(s["mappings"].as_object().unwrap().len(), 12);
    assert!(s["custom_mappings"].as_array().unwrap().is_empty());
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn light_drives_sound() {
    let server = start().await;
    let mut ws = connect(&server).await;
    assert_eq!(next_json(&mut ws).await, json!({ "proto": 1 }));

    send(
        &mut ws,
        json!({"cmd": "rotate", "cube": "actuator", "top": "sound"}),
    )
    .await;
    assert_eq!(reply(&mut ws).await, json!({ "ack": "rotate" }));
    send(
        &mut ws,
        json!({"cmd": "rotate", "cube": "sensor", "top": "light"}),
    )
    .await;
    assert_eq!(reply(&mut ws).await["ack"], "rotate");
    send(
        &mut ws,
        json!({"cmd": "stimulus", "sensor": "light", "value": 65535}),
    )
    .await;
    assert_eq!(reply(&mut ws).await["ack"], "stimulus");

    let snap = snapshot_where(&mut ws, |v| v["command"]["sounding"] == 74).await;
    assert_eq!(snap["sensor"]["kind"], "light");
    assert_eq!(snap["actuator"]["kind"], "sound");
    let light = snap["sensors"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["sensor"] == "light")
        .unwrap();
    assert_eq!(light["normalized"], 24);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn bad_commands_leave_state_alone() {
    let server = start().await;
    let mut ws = connect(&server).await;
    next_json(&mut ws).await;
    let before = get_state(&server).await;

    send(&mut ws, json!("not an object")).await;
    let r = reply(&mut ws).await;
    assert_eq!(r["error"], "parse");
    assert!(r["detail"].is_string());

    ws.send(Message::Text("{\"cmd\":".into())).await.unwrap();
    assert_eq!(reply(&mut ws).await["error"], "parse");

    send(
        &mut ws,
        json!({"cmd": "rotate", "cube": "sensor", "top": "fan"}),
    )
    .await;
    assert_eq!(reply(&mut ws).await["error"], "command");

    send(&mut ws, json!({"cmd": "set_link", "loss": 2.0})).await;
    assert_eq!(reply(&mut ws).await["error"], "command");

    send(&mut ws, json!({"cmd": "end"})).await;
    assert_eq!(reply(&mut ws).await["error"], "command");

    let after = get_state(&server).await;
    for key in [
        "sensor",
        "actuator",
        "link_conditions",
        "mappings",
        "peltier_mode",
    ] {
        assert_eq!(before[key], after[key], "{key}");
    }
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn broken_mapping_reports_position_and_keeps_running() {
    let server = start().await;
    let mut ws = connect(&server).await;
    next_json(&mut ws).await;

    let good = "0..24 => lin(0..24 -> 0..255)";
    send(
        &mut ws,
        json!({"cmd": "set_mapping", "target": "actuator:fan", "program": good}),
    )
    .await;
    assert_eq!(reply(&mut ws).await["ack"], "set_mapping");

    send(&mut ws, json!({"cmd": "set_mapping", "target": "actuator:fan", "program": "0..24 => lin(0..24 -> "})).await;
    let r = reply(&mut ws).await;
    assert_eq!(r["error"], "command");

    let snap = get_state(&server).await;
    assert_eq!(snap["mappings"]["actuator:fan"], good);
    let fb = &snap["last_mapping_feedback"];
    assert_eq!(fb["ok"], false);
    assert_eq!(
        (fb["line"].as_u64(), fb["col"].as_u64()),
        (Some(1), Some(23))
    );

    send(
        &mut ws,
        json!({"cmd": "set_peltier_mode", "mode": "heat_only"}),
    )
    .await;
    assert_eq!(reply(&mut ws).await["ack"], "set_peltier_mode");
    snapshot_where(&mut ws, |v| v["peltier_mode"] == "heat_only").await;
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn snapshots_stream_at_ten_hertz() {
    let server = start().await;
    let mut ws = connect(&server).await;
    next_json(&mut ws).await;
    let first = next_json(&mut ws).await["t_ms"].as_u64().unwrap();
    let mut last = first;
    for _ in 0..5 {
        last = next_json(&mut ws).await["t_ms"].as_u64().unwrap();
    }
    let span = last - first;
    assert!((400..=900).contains(&span), "5 snapshots spanned {span} ms");
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_share_one_engine() {
    let server = start().await;
    let mut a = connect(&server).await;
    let mut b = connect(&server).await;
    next_json(&mut a).await;
    next_json(&mut b).await;
    send(
        &mut a,
        json!({"cmd": "rotate", "cube": "actuator", "top": "ring_graph"}),
    )
    .await;
    assert_eq!(reply(&mut a).await["ack"], "rotate");
    snapshot_where(&mut b, |v| v["actuator"]["kind"] == "ring_graph").await;
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn udp_bridge_links_two_sessions() {
    use dice_cli::serve::UdpBridge;
    use dice_core::link::udp::UdpFrameSocket;

    let sock_a = UdpFrameSocket::bind("127.0.0.1:0").unwrap();
    let sock_b = UdpFrameSocket::bind("127.0.0.1:0").unwrap();
    let (addr_a, addr_b) = (sock_a.local_addr().unwrap(), sock_b.local_addr().unwrap());
    let session = |socket, peer| async move {
        let mut engine = Engine::new(SimConfig::default(), LinkConditions::default()).unwrap();
        engine.use_external_link();
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        spawn(listener, engine, Some(UdpBridge { socket, peer })).unwrap()
    };
    let a = session(sock_a, addr_b).await;
    let b = session(sock_b, addr_a).await;

    // Light on A's sensor cube; B's actuator cube plays the note.
    let mut ws_a = connect(&a).await;
    let mut ws_b = connect(&b).await;
    next_json(&mut ws_a).await;
    next_json(&mut ws_b).await;
    send(
        &mut ws_b,
        json!({"cmd": "rotate", "cube": "actuator", "top": "sound"}),
    )
    .await;
    assert_eq!(reply(&mut ws_b).await["ack"], "rotate");
    send(
        &mut ws_a,
        json!({"cmd": "rotate", "cube": "sensor", "top": "light"}),
    )
    .await;
    assert_eq!(reply(&mut ws_a).await["ack"], "rotate");
    send(
        &mut ws_a,
        json!({"cmd": "stimulus", "sensor": "light", "value": 65535}),
    )
    .await;
    assert_eq!(reply(&mut ws_a).await["ack"], "stimulus");

    let snap = snapshot_where(&mut ws_b, |v| v["command"]["sounding"] == 74).await;
    assert_eq!(snap["last_value"]["sensor"], "light");
    a.shutdown().await;
    b.shutdown().await;
}
