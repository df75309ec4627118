//! Line-delimited JSON wire protocol for an external generator/verifier.
//!
//! Each request is one JSON object on one line; the endpoint answers with one
//! JSON line. Transport failures, timeouts and unparseable answers surface as
//! [`WorldError`]s, which the episode records as violation observations.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::scene::SceneQuery;
use crate::world::{AbstractVideo, ConditioningBundle, VerifierScore, World, WorldError};

pub const WIRE_PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WireRequest {
    Generate {
        protocol: u32,
        query: SceneQuery,
        conditioning: ConditioningBundle,
        noise_seed: u64,
    },
    Verify {
        protocol: u32,
        query: SceneQuery,
        video: AbstractVideo,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WireResponse {
    Video { video: AbstractVideo },
    Score { score: VerifierScore },
    Error { message: String },
}

/// Sends one request line and returns the response line.
pub trait Transport: Send + Sync {
    fn round_trip(&self, line: &str, timeout: Duration) -> Result<String, WorldError>;
}

/// New connection per request.
#[derive(Debug, Clone)]
pub struct TcpTransport {
    pub addr: SocketAddr,
}

impl Transport for TcpTransport {
    fn round_trip(&self, line: &str, timeout: Duration) -> Result<String, WorldError> {
        let io = |e: std::io::Error| match e.kind() {
            std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => WorldError::Timeout,
            _ => WorldError::Backend(e.to_string()),
        };
        let mut stream = TcpStream::connect_timeout(&self.addr, timeout).map_err(io)?;
        stream.set_read_timeout(Some(timeout)).map_err(io)?;
        stream.set_write_timeout(Some(timeout)).map_err(io)?;
        stream.write_all(line.as_bytes()).map_err(io)?;
        stream.write_all(b"\n").map_err(io)?;
        let mut reply = String::new();
        BufReader::new(stream).read_line(&mut reply).map_err(io)?;
        if reply.is_empty() {
            return Err(WorldError::Malformed("endpoint closed without a response".into()));
        }
        Ok(reply.trim_end().to_string())
    }
}

type Handler = dyn Fn(&str) -> String + Send + Sync;

/// In-process endpoint. The handler runs on its own thread so a slow handler
/// trips the timeout exactly like a slow remote would.
#[derive(Clone)]
pub struct LoopbackTransport {
    handler: Arc<Handler>,
}

impl LoopbackTransport {
    pub fn new(handler: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        LoopbackTransport {
            handler: Arc::new(handler),
        }
    }

    /// Endpoint answering every request with `response`.
    pub fn fixed(response: WireResponse) -> Self {
        let line = serde_json::to_string(&response).expect("responses serialize");
        Self::new(move |_| line.clone())
    }
}

impl Transport for LoopbackTransport {
    fn round_trip(&self, line: &str, timeout: Duration) -> Result<String, WorldError> {
        let (tx, rx) = mpsc::channel();
        let handler = Arc::clone(&self.handler);
        let line = line.to_string();
        std::thread::spawn(move || {
            let _ = tx.send(handler(&line));
        });
        rx.recv_timeout(timeout).map_err(|e| match e {
            mpsc::RecvTimeoutError::Timeout => WorldError::Timeout,
            mpsc::RecvTimeoutError::Disconnected => WorldError::Backend("endpoint panicked".into()),
        })
    }
}

/// [`World`] backed by a remote endpoint.
pub struct WireWorld<T: Transport> {
    pub transport: T,
    pub timeout: Duration,
}

impl<T: Transport> WireWorld<T> {
    pub fn new(transport: T, timeout: Duration) -> Self {
        WireWorld { transport, timeout }
    }

    fn call(&self, request: &WireRequest) -> Result<WireResponse, WorldError> {
        let line = serde_json::to_string(request).map_err(|e| WorldError::Backend(e.to_string()))?;
        let reply = self.transport.round_trip(&line, self.timeout)?;
        serde_json::from_str(&reply).map_err(|e| WorldError::Malformed(e.to_string()))
    }
}

impl<T: Transport> World for WireWorld<T> {
    /// The endpoint decides which scenes it knows; unknown ones fail per call.
    fn contains(&self, _: &SceneQuery) -> bool {
        true
    }

    fn generate(
        &self,
        query: &SceneQuery,
        conditioning: &ConditioningBundle,
        noise_seed: u64,
    ) -> Result<AbstractVideo, WorldError> {
        let request = WireRequest::Generate {
            protocol: WIRE_PROTOCOL_VERSION,
            query: query.clone(),
            conditioning: conditioning.clone(),
            noise_seed,
        };
        match self.call(&request)? {
            WireResponse::Video { video } => Ok(video),
            WireResponse::Error { message } => Err(WorldError::Backend(message)),
            other => Err(WorldError::Malformed(format!("expected a video, got {other:?}"))),
        }
    }

    fn verify(&self, query: &SceneQuery, video: &AbstractVideo) -> Result<VerifierScore, WorldError> {
        let request = WireRequest::Verify {
            protocol: WIRE_PROTOCOL_VERSION,
            query: query.clone(),
            video: video.clone(),
        };
        match self.call(&request)? {
            WireResponse::Score { score } if score.sa.is_finite() && score.pc.is_finite() => {
                Ok(VerifierScore::new(score.sa, score.pc))
            }
            WireResponse::Error { message } => Err(WorldError::Backend(message)),
            other => Err(WorldError::Malformed(format!("expected a score, got {other:?}"))),
        }
    }
}

/// Answers one request line from a local world.
pub fn serve_line(world: &dyn World, line: &str) -> String {
    let response = match serde_json::from_str::<WireRequest>(line) {
        Err(e) => WireResponse::Error {
            message: format!("bad request: {e}"),
        },
        Ok(WireRequest::Generate { protocol, .. } | WireRequest::Verify { protocol, .. })
            if protocol != WIRE_PROTOCOL_VERSION =>
        {
            WireResponse::Error {
                message: format!("unsupported protocol {protocol}"),
            }
        }
        Ok(WireRequest::Generate {
            query,
            conditioning,
            noise_seed,
            ..
        }) => match world.generate(&query, &conditioning, noise_seed) {
            Ok(video) => WireResponse::Video { video },
            Err(e) => WireResponse::Error { message: e.to_string() },
        },
        Ok(WireRequest::Verify { query, video, .. }) => match world.verify(&query, &video) {
            Ok(score) => WireResponse::Score { score },
            Err(e) => WireResponse::Error { message: e.to_string() },
        },
    };
    serde_json::to_string(&response).expect("responses serialize")
}

/// Serves `connections` connections (one request each) from `listener`.
pub fn serve_tcp(listener: &TcpListener, world: &dyn World, connections: usize) -> std::io::Result<()> {
    for stream in listener.incoming().take(connections) {
        let mut stream = stream?;
        let mut line = String::new();
        BufReader::new(&stream).read_line(&mut line)?;
        stream.write_all(serve_line(world, line.trim_end()).as_bytes())?;
        stream.write_all(b"\n")?;
    }
    Ok(())
}
