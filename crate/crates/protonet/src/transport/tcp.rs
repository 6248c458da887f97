//! Framed TCP transport: 4-byte big-endian length prefix + UTF-8 JSON
//! envelope.
//!
//! [`TcpBus`] keeps the bus semantics while moving every envelope through
//! real sockets: each registered sender writes frames over its own
//! connection to a hub listener, and reader threads enqueue decoded
//! envelopes into an inner [`Bus`]. `send` blocks until the hub has
//! enqueued the frame, so single-threaded stepping stays deterministic
//! and produces the same traces as the in-memory bus.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use crate::model::MessageEnvelope;

use super::{Bus, MessageBus, TransportError};

/// Encodes one envelope as a length-prefixed frame.
pub fn encode_frame(env: &MessageEnvelope) -> Vec<u8> {
    let payload = serde_json::to_vec(env).expect("envelopes always serialize");
    let mut frame = Vec::with_capacity(4 + payload.len());
    frame.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    frame.extend_from_slice(&payload);
    frame
}

/// Reads one frame; `Ok(None)` on clean EOF at a frame boundary.
pub fn read_frame(stream: &mut impl Read) -> std::io::Result<Option<MessageEnvelope>> {
    let mut len_buf = [0u8; 4];
    match stream.read_exact(&mut len_buf) {
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        other => other?,
    }
    let len = u32::from_be_bytes(len_buf) as usize;
    let mut payload = vec![0u8; len];
    stream.read_exact(&mut payload)?;
    let env = serde_json::from_slice(&payload)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    Ok(Some(env))
}

struct Shared {
    state: Mutex<HubState>,
    arrived: Condvar,
    shutdown: AtomicBool,
}

struct HubState {
    bus: Bus,
    received: u64,
}

/// Bus-compatible transport over localhost TCP.
pub struct TcpBus {
    shared: Arc<Shared>,
    addr: SocketAddr,
    writers: BTreeMap<String, TcpStream>,
    accept_thread: Option<JoinHandle<()>>,
    reader_threads: Vec<JoinHandle<()>>,
    reader_rx: std::sync::mpsc::Receiver<JoinHandle<()>>,
}

impl TcpBus {
    pub fn new() -> Result<Self, TransportError> {
        let listener = TcpListener::bind(("127.0.0.1", 0)).map_err(io_err)?;
        let addr = listener.local_addr().map_err(io_err)?;
        let shared = Arc::new(Shared {
            state: Mutex::new(HubState { bus: Bus::new(), received: 0 }),
            arrived: Condvar::new(),
            shutdown: AtomicBool::new(false),
        });
        let (tx, rx) = std::sync::mpsc::channel();
        let accept_shared = Arc::clone(&shared);
        let accept_thread = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if accept_shared.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { break };
                let reader_shared = Arc::clone(&accept_shared);
                let handle = std::thread::spawn(move || reader_loop(stream, reader_shared));
                if tx.send(handle).is_err() {
                    break;
                }
            }
        });
        Ok(TcpBus {
            shared,
            addr,
            writers: BTreeMap::new(),
            accept_thread: Some(accept_thread),
            reader_threads: Vec::new(),
            reader_rx: rx,
        })
    }

    /// The hub address, for frame-level tests.
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    fn writer_for(&mut self, sender: &str) -> Result<&mut TcpStream, TransportError> {
        if !self.writers.contains_key(sender) {
            let stream = TcpStream::connect(self.addr).map_err(io_err)?;
            stream.set_nodelay(true).map_err(io_err)?;
            self.writers.insert(sender.to_string(), stream);
        }
        Ok(self.writers.get_mut(sender).expect("just inserted"))
    }
}

fn reader_loop(mut stream: TcpStream, shared: Arc<Shared>) {
    while let Ok(Some(env)) = read_frame(&mut stream) {
        let mut state = shared.state.lock().expect("hub lock");
        if let Err(e) = state.bus.send(env) {
            // Receivers are validated before the frame is written, so
            // this only happens if registration raced a frame.
            log::warn!("tcp hub dropped envelope: {e}");
        }
        state.received += 1;
        drop(state);
        shared.arrived.notify_all();
    }
}

fn io_err(e: std::io::Error) -> TransportError {
    TransportError::Io(e.to_string())
}

impl MessageBus for TcpBus {
    fn register(&mut self, name: &str) -> Result<(), TransportError> {
        self.shared.state.lock().expect("hub lock").bus.register(name)?;
        Ok(())
    }

    fn send(&mut self, env: MessageEnvelope) -> Result<(), TransportError> {
        let target = {
            let state = self.shared.state.lock().expect("hub lock");
            if !state.bus.is_registered(&env.receiver) {
                return Err(TransportError::UnknownReceiver(env.receiver.clone()));
            }
            state.received + 1
        };
        let frame = encode_frame(&env);
        let writer = self.writer_for(&env.sender)?;
        writer.write_all(&frame).map_err(io_err)?;
        writer.flush().map_err(io_err)?;
        // Block until the hub thread enqueued the frame: this keeps
        // single-threaded stepping identical to the in-memory bus.
        let mut state = self.shared.state.lock().expect("hub lock");
        while state.received < target {
            state = self.shared.arrived.wait(state).expect("hub lock");
        }
        Ok(())
    }

    fn pump(&mut self) -> Option<(String, MessageEnvelope)> {
        self.shared.state.lock().expect("hub lock").bus.pump()
    }
}

impl Drop for TcpBus {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop, then drop writers to end the readers.
        let _ = TcpStream::connect(self.addr);
        self.writers.clear();
        while let Ok(handle) = self.reader_rx.try_recv() {
            self.reader_threads.push(handle);
        }
        for handle in self.reader_threads.drain(..) {
            let _ = handle.join();
        }
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}
