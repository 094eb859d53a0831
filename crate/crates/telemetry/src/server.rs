//! HTTP and WebSocket front end.

use std::io;
use std::net::SocketAddr;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use aeromap_core::sim::SimError;
use aeromap_core::SimConfig;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::Value;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::engine::{Engine, EngineOptions};
use crate::session::TICK_MS;
use crate::wire::{decode_command, encode_frame, Command, Frame, Payload};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("server stopped with an error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub sim: SimConfig,
    pub addr: SocketAddr,
    pub engine: EngineOptions,
    pub tick_ms: u64,
}

impl ServeConfig {
    pub fn new(sim: SimConfig, addr: SocketAddr) -> Self {
        Self { sim, addr, engine: EngineOptions::default(), tick_ms: TICK_MS }
    }
}

enum Request {
    Command(Command, oneshot::Sender<Frame>),
    Reject(String, oneshot::Sender<Frame>),
    Contact,
    State(oneshot::Sender<Value>),
    Log(oneshot::Sender<String>),
}

#[derive(Clone)]
struct App {
    requests: mpsc::Sender<Request>,
    frames: broadcast::Sender<String>,
    stop: watch::Receiver<bool>,
}

pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: watch::Sender<bool>,
    http: JoinHandle<io::Result<()>>,
    engine: JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops the engine, closes client sockets and waits for the listener.
    pub async fn shutdown(self) -> Result<(), ServeError> {
        let _ = self.stop.send(true);
        let _ = self.engine.await;
        self.http.await.map_err(io::Error::other)??;
        Ok(())
    }

    /// Runs until the listener fails or `signal` resolves.
    pub async fn run_until(self, signal: impl std::future::Future<Output = ()>) -> Result<(), ServeError> {
        signal.await;
        self.shutdown().await
    }
}

/// Binds `config.addr` and starts the engine and the listener.
pub async fn serve(config: ServeConfig) -> Result<ServerHandle, ServeError> {
    let engine = Engine::new(config.sim, config.engine)?;
    let listener = TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::Bind { addr: config.addr, source })?;
    let local_addr = listener.local_addr()?;

    let (req_tx, req_rx) = mpsc::channel(256);
    let (frames, _) = broadcast::channel(4096);
    let (stop_tx, stop_rx) = watch::channel(false);

    let engine = tokio::spawn(run_engine(engine, req_rx, frames.clone(), config.tick_ms, stop_rx.clone()));
    let app = App { requests: req_tx, frames, stop: stop_rx.clone() };
    let router = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/api/state", get(get_state))
        .route("/api/log", get(get_log))
        .route("/api/command", post(post_command))
        .with_state(app);
    let mut stop = stop_rx;
    let http = tokio::spawn(async move {
        axum::serve(listener, router)
            .with_graceful_shutdown(async move {
                stopped(&mut stop).await;
            })
            .await
    });
    Ok(ServerHandle { local_addr, stop: stop_tx, http, engine })
}

async fn run_engine(
    mut engine: Engine,
    mut requests: mpsc::Receiver<Request>,
    frames: broadcast::Sender<String>,
    tick_ms: u64,
    mut stop: watch::Receiver<bool>,
) {
    let start = Instant::now();
    let now = || start.elapsed().as_millis() as u64;
    let publish = |out: &[Frame]| {
        for f in out {
            // no subscribers is fine: live frames are not buffered
            let _ = frames.send(encode_frame(f));
        }
    };
    let mut ticker = tokio::time::interval(Duration::from_millis(tick_ms.max(1)));
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        let deadline = engine.watchdog_deadline().map(|ms| start + Duration::from_millis(ms));
        tokio::select! {
            _ = stopped(&mut stop) => break,
            _ = watchdog_at(deadline) => publish(engine.check_watchdog(now()).as_slice()),
            _ = ticker.tick() => publish(&engine.tick(now())),
            req = requests.recv() => {
                let Some(req) = req else { break };
                match req {
                    Request::Command(cmd, reply) => {
                        let out = engine.handle(cmd, now());
                        publish(&out);
                        let _ = reply.send(out[0].clone());
                    }
                    Request::Reject(message, reply) => {
                        let f = engine.reject(now(), message);
                        publish(std::slice::from_ref(&f));
                        let _ = reply.send(f);
                    }
                    Request::Contact => engine.contact(now()),
                    Request::State(reply) => {
                        let _ = reply.send(engine.state_document());
                    }
                    Request::Log(reply) => {
                        let _ = reply.send(engine.log_json());
                    }
                }
            }
        }
    }
}

async fn watchdog_at(deadline: Option<Instant>) {
    match deadline {
        Some(d) => tokio::time::sleep_until(d.into()).await,
        None => std::future::pending().await,
    }
}

async fn stopped(stop: &mut watch::Receiver<bool>) {
    let _ = stop.wait_for(|s| *s).await;
}

async fn submit(app: &App, text: &str) -> Option<Frame> {
    let (tx, rx) = oneshot::channel();
    let req = match decode_command(text) {
        Ok(cmd) => Request::Command(cmd, tx),
        Err(e) => Request::Reject(e.to_string(), tx),
    };
    app.requests.send(req).await.ok()?;
    rx.await.ok()
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(app): State<App>) -> Response {
    ws.on_upgrade(move |socket| client(socket, app))
}

async fn client(mut socket: WebSocket, app: App) {
    let mut frames = app.frames.subscribe();
    let mut stop = app.stop.clone();
    let _ = app.requests.send(Request::Contact).await;
    loop {
        tokio::select! {
            _ = stopped(&mut stop) => {
                let _ = socket.send(Message::Close(None)).await;
                break;
            }
            f = frames.recv() => match f {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Text(text))) => {
                    submit(&app, text.as_str()).await;
                }
                Some(Ok(Message::Binary(_))) => {
                    let (tx, _rx) = oneshot::channel();
                    let _ = app.requests.send(Request::Reject("binary messages are not accepted".into(), tx)).await;
                }
                Some(Ok(_)) => {}
                Some(Err(_)) | None => break,
            },
        }
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn get_state(State(app): State<App>) -> Response {
    let (tx, rx) = oneshot::channel();
    if app.requests.send(Request::State(tx)).await.is_err() {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    match rx.await {
        Ok(v) => json_response(StatusCode::OK, v.to_string()),
        Err(_) => StatusCode::SERVICE_UNAVAILABLE.into_response(),
    }
}

async fn get_log(State(app): State<App>) -> Response {
    let (tx, rx) = oneshot::channel();
    if app.requests.send(Request::Log(tx)).await.is_err() {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    let Ok(body) = rx.await else {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    };
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let disposition = format!("attachment; filename=\"mission-{stamp}.json\"");
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "application/json".to_owned()), (header::CONTENT_DISPOSITION, disposition)],
        body,
    )
        .into_response()
}

async fn post_command(State(app): State<App>, body: String) -> Response {
    let Some(frame) = submit(&app, &body).await else {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    };
    let status = match &frame.payload {
        Payload::Error(e) if e.code == "bad_command" => StatusCode::BAD_REQUEST,
        Payload::Error(_) => StatusCode::CONFLICT,
        _ => StatusCode::OK,
    };
    json_response(status, encode_frame(&frame))
}
