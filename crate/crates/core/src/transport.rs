//! Framing, TCP endpoints and an in-process loopback.
//!
//! Every message travels in one frame:
//!
//! | bytes | field                         |
//! |-------|-------------------------------|
//! | 4     | payload length, big-endian    |
//! | 1     | message type                  |
//! | 4     | session id, big-endian        |
//! | n     | payload                       |
//!
//! Message type codes: 1 `SESSION_INIT`, 2 `PUBLIC_PARAMS`,
//! 3 `OT_QUERY_BATCH`, 4 `OT_REPLY_BATCH`, 5 `SORT_PAIRS`,
//! 6 `SORT_OUTCOMES`, 7 `SESSION_CLOSE`, 8 `ERROR`.
//!
//! A client opens with session id 0 and adopts the id of the server's first
//! reply. A frame that cannot be decoded is answered with an `ERROR` frame
//! and the connection is closed; the server keeps accepting.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::protocol::{
    run_query, Channel, ClientConfig, ClientSession, Codec, Message, MessageType, PrivateAnswer, PrivateQuery,
    ProtocolError, Server, ServerSession,
};
use crate::rules::Transaction;

pub const HEADER_LEN: usize = 9;
pub const DEFAULT_MAX_PAYLOAD: usize = 64 << 20;
pub const DEFAULT_PORT: u16 = 7464;
/// Environment variable overriding [`DEFAULT_PORT`].
pub const PORT_ENV: &str = "PRIVREC_PORT";

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("stream ended inside a frame")]
    Truncated,
    #[error("payload of {len} bytes exceeds the {max}-byte limit")]
    TooLarge { len: usize, max: usize },
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("frame for session {got}, expected {expected}")]
    WrongSession { got: u32, expected: u32 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// One framed message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: MessageType,
    pub session: u32,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

pub fn encode(f: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(f.encoded_len());
    out.extend_from_slice(&(f.payload.len() as u32).to_be_bytes());
    out.push(f.kind.code());
    out.extend_from_slice(&f.session.to_be_bytes());
    out.extend_from_slice(&f.payload);
    out
}

fn parse_header(h: &[u8; HEADER_LEN], max: usize) -> Result<(usize, MessageType, u32), TransportError> {
    let len = u32::from_be_bytes(h[0..4].try_into().expect("4 bytes")) as usize;
    if len > max {
        return Err(TransportError::TooLarge { len, max });
    }
    let kind = MessageType::from_code(h[4]).ok_or(TransportError::UnknownType(h[4]))?;
    let session = u32::from_be_bytes(h[5..9].try_into().expect("4 bytes"));
    Ok((len, kind, session))
}

/// Decodes one frame from the front of `bytes`; returns it with the number
/// of bytes consumed.
pub fn decode(bytes: &[u8], max: usize) -> Result<(Frame, usize), TransportError> {
    let header: &[u8; HEADER_LEN] = bytes.get(..HEADER_LEN).ok_or(TransportError::Truncated)?.try_into().expect("9 bytes");
    let (len, kind, session) = parse_header(header, max)?;
    let payload = bytes.get(HEADER_LEN..HEADER_LEN + len).ok_or(TransportError::Truncated)?;
    Ok((Frame { kind, session, payload: payload.to_vec() }, HEADER_LEN + len))
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), TransportError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TransportError::Truncated,
        _ => TransportError::Io(e),
    })
}

/// Reads one frame; `Ok(None)` on a clean end of stream before a header.
pub fn read_frame<R: Read>(r: &mut R, max: usize) -> Result<Option<Frame>, TransportError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(TransportError::Truncated),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (len, kind, session) = parse_header(&header, max)?;
    let mut payload = vec![0u8; len];
    read_exact_or_truncated(r, &mut payload)?;
    Ok(Some(Frame { kind, session, payload }))
}

pub fn write_frame<W: Write>(w: &mut W, f: &Frame) -> Result<(), TransportError> {
    w.write_all(&encode(f))?;
    w.flush()?;
    Ok(())
}

/// Direction of a recorded frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToServer,
    ToClient,
}

/// In-process channel to a server session that records every frame.
pub struct Loopback {
    session: ServerSession,
    max_payload: usize,
    pub transcript: Vec<(Direction, Frame)>,
}

impl Loopback {
    pub fn new(server: &Arc<Server>) -> Self {
        Loopback { session: server.session(), max_payload: DEFAULT_MAX_PAYLOAD, transcript: Vec::new() }
    }

    pub fn session(&self) -> &ServerSession {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut ServerSession {
        &mut self.session
    }

    /// Frames sent by the client.
    pub fn sent(&self) -> impl Iterator<Item = &Frame> {
        self.transcript.iter().filter(|(d, _)| *d == Direction::ToServer).map(|(_, f)| f)
    }

    /// Frames sent by the server.
    pub fn received(&self) -> impl Iterator<Item = &Frame> {
        self.transcript.iter().filter(|(d, _)| *d == Direction::ToClient).map(|(_, f)| f)
    }
}

impl Channel for Loopback {
    fn call(&mut self, codec: &Codec, msg: &Message) -> Result<Message, ProtocolError> {
        let out = Frame { kind: msg.kind(), session: self.session.id(), payload: codec.encode(msg)? };
        let bytes = encode(&out);
        let (frame, _) = decode(&bytes, self.max_payload).map_err(|e| ProtocolError::Transport(e.to_string()))?;
        let reply = self.session.handle_frame(frame.kind.code(), &frame.payload);
        self.transcript.push((Direction::ToServer, frame));
        let back = Frame { kind: reply.kind, session: self.session.id(), payload: reply.payload };
        let (back, _) = decode(&encode(&back), self.max_payload).map_err(|e| ProtocolError::Transport(e.to_string()))?;
        let msg = codec.decode(back.kind, &back.payload);
        self.transcript.push((Direction::ToClient, back));
        msg
    }
}

/// Client end of a TCP connection.
pub struct TcpChannel {
    stream: TcpStream,
    session: u32,
    max_payload: usize,
}

impl TcpChannel {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpChannel { stream, session: 0, max_payload: DEFAULT_MAX_PAYLOAD })
    }

    /// Session id assigned by the server, 0 before the handshake.
    pub fn session(&self) -> u32 {
        self.session
    }

    fn round_trip(&mut self, codec: &Codec, msg: &Message) -> Result<Message, TransportError> {
        let frame = Frame { kind: msg.kind(), session: self.session, payload: codec.encode(msg)? };
        write_frame(&mut self.stream, &frame)?;
        let reply = read_frame(&mut self.stream, self.max_payload)?.ok_or(TransportError::Truncated)?;
        if self.session == 0 {
            self.session = reply.session;
        } else if reply.session != self.session {
            return Err(TransportError::WrongSession { got: reply.session, expected: self.session });
        }
        Ok(codec.decode(reply.kind, &reply.payload)?)
    }
}

impl Channel for TcpChannel {
    fn call(&mut self, codec: &Codec, msg: &Message) -> Result<Message, ProtocolError> {
        self.round_trip(codec, msg).map_err(|e| match e {
            TransportError::Protocol(p) => p,
            other => ProtocolError::Transport(other.to_string()),
        })
    }
}

/// Closes our side, then drains what the peer already sent so that the
/// close is not turned into a reset.
fn hang_up(stream: TcpStream) {
    let _ = stream.shutdown(Shutdown::Write);
    let _ = stream.set_read_timeout(Some(Duration::from_secs(1)));
    let _ = io::copy(&mut (&stream).take(DEFAULT_MAX_PAYLOAD as u64), &mut io::sink());
}

/// Serves one connection until the client closes the session or the
/// stream ends.
pub fn serve_connection(server: &Arc<Server>, mut stream: TcpStream) -> Result<(), TransportError> {
    stream.set_nodelay(true)?;
    let mut session = server.session();
    let id = session.id();
    let max = DEFAULT_MAX_PAYLOAD;
    loop {
        let frame = match read_frame(&mut stream, max) {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e @ (TransportError::UnknownType(_) | TransportError::TooLarge { .. })) => {
                let msg = e.to_string().into_bytes();
                write_frame(&mut stream, &Frame { kind: MessageType::Error, session: id, payload: msg })?;
                hang_up(stream);
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        if frame.session != 0 && frame.session != id {
            let e = TransportError::WrongSession { got: frame.session, expected: id };
            write_frame(&mut stream, &Frame { kind: MessageType::Error, session: id, payload: e.to_string().into_bytes() })?;
            hang_up(stream);
            return Err(e);
        }
        let reply = session.handle_frame(frame.kind.code(), &frame.payload);
        write_frame(&mut stream, &Frame { kind: reply.kind, session: id, payload: reply.payload })?;
        if reply.close {
            hang_up(stream);
            break;
        }
    }
    let stages: Vec<String> = session.timings().stages.iter().map(|(k, v)| format!("{k}={:.1}ms", v.as_secs_f64() * 1e3)).collect();
    eprintln!("session {id} closed: {}", stages.join(" "));
    Ok(())
}

/// A server accepting connections on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and waits for the accept loop to exit.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept call.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

fn accept_loop(listener: TcpListener, server: Arc<Server>, stop: Arc<AtomicBool>) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let server = Arc::clone(&server);
        thread::spawn(move || {
            if let Err(e) = serve_connection(&server, stream) {
                eprintln!("connection aborted: {e}");
            }
        });
    }
}

/// Binds `addr` and serves every connection on its own thread.
pub fn spawn_server<A: ToSocketAddrs>(addr: A, server: Arc<Server>) -> Result<ServerHandle, TransportError> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = thread::spawn(move || accept_loop(listener, server, flag));
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}

/// Binds `addr`, reports the bound address to `on_bind`, then serves
/// forever.
pub fn run_server<A: ToSocketAddrs>(
    addr: A,
    server: Arc<Server>,
    on_bind: impl FnOnce(SocketAddr),
) -> Result<(), TransportError> {
    let listener = TcpListener::bind(addr)?;
    on_bind(listener.local_addr()?);
    accept_loop(listener, server, Arc::new(AtomicBool::new(false)));
    Ok(())
}

/// Connects, runs one query and closes the session.
pub fn run_client<A: ToSocketAddrs>(
    addr: A,
    config: &ClientConfig,
    t: &Transaction,
    q: &PrivateQuery,
) -> Result<PrivateAnswer, TransportError> {
    let chan = TcpChannel::connect(addr)?;
    let mut session = ClientSession::open(chan, &ClientConfig { mode: q.mode(), ..*config })?;
    let answer = run_query(&mut session, t, q)?;
    session.close()?;
    Ok(answer)
}

/// Port from [`PORT_ENV`], else [`DEFAULT_PORT`].
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV).ok().and_then(|p| p.parse().ok()).unwrap_or(DEFAULT_PORT)
}
