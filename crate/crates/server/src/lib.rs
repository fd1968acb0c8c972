//! Network transports for [`SessionService`].
//!
//! Two equivalent ways in: a persistent TCP connection carrying
//! length-delimited JSON frames, and an HTTP request/poll API for clients
//! that cannot hold a socket. Both drive the same service, and a ticker task
//! fires deadlines for sessions nobody is talking to.

mod clock;
mod http;
mod tcp;

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use canteen_core::session::SessionService;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use clock::{Clock, ManualClock};
pub use http::{router, CreateSession, SendRequest};
pub use tcp::{frame_codec, serve_tcp, MAX_FRAME_BYTES};

/// Shared by every connection and request handler.
#[derive(Debug, Clone)]
pub struct AppState {
    pub service: Arc<SessionService>,
    pub clock: Clock,
    /// How often a TCP connection checks its seat's outbox.
    pub flush_every: Duration,
}

impl AppState {
    pub fn new(clock: Clock) -> Self {
        AppState {
            service: Arc::new(SessionService::new()),
            clock,
            flush_every: Duration::from_millis(20),
        }
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }
}

/// Periodically advances all sessions so deadlines fire without traffic.
pub fn spawn_ticker(state: AppState, period: Duration) -> JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tick.tick().await;
            state.service.advance_all(state.now());
        }
    })
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub tcp: SocketAddr,
    pub http: SocketAddr,
    pub tick: Duration,
}

impl ServerConfig {
    /// TCP on `port`, HTTP on `port + 1`, both on localhost.
    pub fn localhost(port: u16) -> Self {
        ServerConfig {
            tcp: SocketAddr::from(([127, 0, 0, 1], port)),
            http: SocketAddr::from(([127, 0, 0, 1], port.wrapping_add(1))),
            tick: Duration::from_millis(100),
        }
    }
}

/// Binds both transports and serves until one of them fails.
pub async fn run(cfg: ServerConfig, state: AppState) -> io::Result<()> {
    let tcp = TcpListener::bind(cfg.tcp).await?;
    let http = TcpListener::bind(cfg.http).await?;
    tracing::info!(tcp = %tcp.local_addr()?, http = %http.local_addr()?, "serving");
    let ticker = spawn_ticker(state.clone(), cfg.tick);
    let app = router(state.clone());
    let result = tokio::select! {
        r = serve_tcp(tcp, state) => r,
        r = axum::serve(http, app) => r,
    };
    ticker.abort();
    result
}
