//! Live session: the engine runs on its own thread against the wall clock;
//! HTTP and WebSocket clients read snapshots and queue commands.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use clap::Args;
use dice_core::link::udp::UdpFrameSocket;
use dice_core::link::LinkConditions;
use dice_core::sim::{Command, Engine, RecordCause, SimConfig};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};

use crate::{exit, load_config, parse_probability, Failure};

pub const PROTO: u32 = 1;
const PUBLISH_EVERY_MS: u64 = 100;
const TICK: Duration = Duration::from_millis(5);

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0, value_parser = parse_probability)]
    pub loss: f64,
    #[arg(long, default_value_t = 0)]
    pub latency_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub jitter_ms: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Send this process's sensor frames over UDP instead of the simulated
    /// link. Requires `--udp-peer`.
    #[arg(long, requires = "udp_peer")]
    pub udp_bind: Option<SocketAddr>,
    /// Where outgoing frames go; incoming frames drive the local actuator.
    #[arg(long, requires = "udp_bind")]
    pub udp_peer: Option<SocketAddr>,
}

/// Frames carried over a real socket instead of the simulated link.
pub struct UdpBridge {
    pub socket: UdpFrameSocket,
    pub peer: SocketAddr,
}

struct Request {
    command: Command,
    reply: oneshot::Sender<Result<(), String>>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Request>,
    snapshots: watch::Receiver<Arc<String>>,
}

/// A running session. Dropping it does not stop it; call [`Server::shutdown`].
pub struct Server {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    engine: Option<thread::JoinHandle<()>>,
    http: tokio::task::JoinHandle<()>,
}

impl Server {
    pub async fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.http.abort();
        let _ = (&mut self.http).await;
        if let Some(h) = self.engine.take() {
            let _ = tokio::task::spawn_blocking(move || h.join()).await;
        }
    }
}

fn snapshot_json(engine: &Engine) -> Arc<String> {
    Arc::new(serde_json::to_string(&engine.snapshot()).expect("snapshot serializes"))
}

fn engine_loop(
    mut engine: Engine,
    requests: mpsc::Receiver<Request>,
    publish: watch::Sender<Arc<String>>,
    udp: Option<UdpBridge>,
    stop: Arc<AtomicBool>,
) {
    let start = Instant::now();
    let mut next_publish = 0;
    while !stop.load(Ordering::SeqCst) {
        let now = start.elapsed().as_millis() as u64;
        for r in engine.step(now) {
            if r.cause == RecordCause::Warning {
                log::warn!("t={} {}", r.t_ms, r.warning.unwrap_or_default());
            }
        }
        if let Some(bridge) = &udp {
            for bytes in engine.drain_outbox() {
                if let Err(e) = bridge.socket.send_to(&bytes, bridge.peer) {
                    log::warn!("udp send: {e}");
                }
            }
            loop {
                match bridge.socket.recv() {
                    Ok(Ok(frame)) => match frame.encode() {
                        Ok(bytes) => engine.inject_frame(bytes),
                        Err(e) => log::warn!("udp frame: {e}"),
                    },
                    Ok(Err(e)) => log::warn!("udp frame rejected: {e}"),
                    Err(_) => break,
                }
            }
            // Injected frames are due now.
            engine.step(now);
        }

        let mut changed = false;
        match requests.recv_timeout(TICK) {
            Ok(first) => {
                let now = start.elapsed().as_millis() as u64;
                engine.step(now);
                for req in std::iter::once(first).chain(requests.try_iter()) {
                    let result = engine.apply(req.command).map_err(|e| e.to_string());
                    let _ = req.reply.send(result);
                }
                changed = true;
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        }
        if changed || engine.now() >= next_publish {
            publish.send_replace(snapshot_json(&engine));
            next_publish = engine.now() + PUBLISH_EVERY_MS;
        }
    }
}

/// Starts the engine thread and serves `/state` and `/ws` on `listener`.
pub fn spawn(
    listener: TcpListener,
    engine: Engine,
    udp: Option<UdpBridge>,
) -> std::io::Result<Server> {
    let addr = listener.local_addr()?;
    if let Some(bridge) = &udp {
        bridge
            .socket
            .set_read_timeout(Some(Duration::from_millis(1)))?;
    }
    let (tx, rx) = mpsc::channel();
    let (publish, snapshots) = watch::channel(snapshot_json(&engine));
    let stop = Arc::new(AtomicBool::new(false));
    let engine = {
        let stop = stop.clone();
        thread::Builder::new()
            .name("engine".into())
            .spawn(move || engine_loop(engine, rx, publish, udp, stop))?
    };
    let app = Router::new()
        .route("/state", get(get_state))
        .route("/ws", get(ws_upgrade))
        .with_state(AppState {
            commands: tx,
            snapshots,
        });
    let http = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("http: {e}");
        }
    });
    Ok(Server {
        addr,
        stop,
        engine: Some(engine),
        http,
    })
}

async fn get_state(State(s): State<AppState>) -> Response {
    let body = s.snapshots.borrow().as_str().to_owned();
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(s): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, s))
}

async fn session(mut socket: WebSocket, s: AppState) {
    let hello = json!({ "proto": PROTO }).to_string();
    if socket.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    let mut snapshots = s.snapshots.clone();
    snapshots.mark_changed();
    loop {
        tokio::select! {
            changed = snapshots.changed() => {
                if changed.is_err() {
                    break;
                }
                let text = snapshots.borrow_and_update().as_str().to_owned();
                if socket.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            msg = socket.recv() => {
                let text = match msg {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = handle_command(&s, text.as_str()).await;
                if socket.send(Message::Text(reply.to_string().into())).await.is_err() {
                    break;
                }
            }
        }
    }
}

async fn handle_command(s: &AppState, text: &str) -> serde_json::Value {
    let command = match Command::from_client_json(text) {
        Ok(c) => c,
        Err(e) => return json!({ "error": "parse", "detail": e.to_string() }),
    };
    if command == Command::End {
        return json!({ "error": "command", "detail": "a live session cannot be ended by a client" });
    }
    let name = serde_json::to_value(&command)
        .ok()
        .and_then(|v| v.get("event").cloned())
        .unwrap_or_default();
    let (reply, answer) = oneshot::channel();
    if s.commands.send(Request { command, reply }).is_err() {
        return json!({ "error": "command", "detail": "engine stopped" });
    }
    match answer.await {
        Ok(Ok(())) => json!({ "ack": name }),
        Ok(Err(detail)) => json!({ "error": "command", "detail": detail }),
        Err(_) => json!({ "error": "command", "detail": "engine stopped" }),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), Failure> {
    let cfg: SimConfig = load_config(args.config.as_deref())?;
    let link = LinkConditions {
        drop_probability: args.loss,
        base_latency_ms: args.latency_ms,
        jitter_ms: args.jitter_ms,
        seed: args.seed,
    };
    let mut engine =
        Engine::new(cfg, link).map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    let udp = match (args.udp_bind, args.udp_peer) {
        (Some(bind), Some(peer)) => {
            let socket = UdpFrameSocket::bind(bind)
                .map_err(|e| Failure::new(exit::IO, format!("udp bind {bind}: {e}")))?;
            engine.use_external_link();
            Some(UdpBridge { socket, peer })
        }
        _ => None,
    };

    let runtime =
        tokio::runtime::Runtime::new().map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::new(exit::IO, format!("bind {addr}: {e}")))?;
        let server =
            spawn(listener, engine, udp).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
        eprintln!(
            "serving on http://{} (GET /state, WebSocket /ws)",
            server.addr
        );
        let _ = tokio::signal::ctrl_c().await;
        server.shutdown().await;
        Ok(())
    })
}
