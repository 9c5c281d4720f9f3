//! The running service: a perception thread that turns frames into
//! instructions, and stream-socket and WebSocket listeners that each run a
//! [`Connection`] per client.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use sightwalk_core::{ClassTable, RgbdFrame};
use sightwalk_nets::navnet::NavModel;
use sightwalk_nets::{predict_instruction, segment, InstructionResult, SegModel};

use crate::connection::{Connection, ConnectionConfig, FramePercept};
use crate::protocol::{encode_message, is_fatal, Message, MessageReader};
use crate::transport::{Received, TcpTransport, Transport, WsTransport, POLL};
use crate::Result;

/// Where frames come from. `None` means the stream is over; the last
/// perceived frame stays available for snapshots.
pub trait FrameSource: Send {
    fn next_frame(&mut self) -> Option<RgbdFrame>;
}

impl<I: Iterator<Item = RgbdFrame> + Send> FrameSource for I {
    fn next_frame(&mut self) -> Option<RgbdFrame> {
        self.next()
    }
}

/// Frame to semantic map and walk instruction.
pub trait Perception: Send + Sync {
    fn classes(&self) -> &ClassTable;
    fn perceive(&self, frame: &RgbdFrame) -> Result<FramePercept>;
}

/// Segmentation feeding the navigation network, the full RGBDS pipeline.
pub struct ModelPerception {
    pub seg: SegModel,
    pub nav: NavModel,
}

impl Perception for ModelPerception {
    fn classes(&self) -> &ClassTable {
        &self.seg.classes
    }

    fn perceive(&self, frame: &RgbdFrame) -> Result<FramePercept> {
        let semantic = segment(&self.seg, frame)?;
        let instruction = predict_instruction(&self.nav, frame, Some(&semantic))?;
        Ok(FramePercept {
            frame: frame.clone(),
            semantic,
            instruction,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    /// Stream-socket listener; port 0 picks a free port.
    pub tcp: Option<SocketAddr>,
    /// WebSocket listener for browser clients.
    pub ws: Option<SocketAddr>,
    /// Pause between frames of the source.
    pub frame_interval: Duration,
    pub connection: ConnectionConfig,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            tcp: Some(SocketAddr::from(([127, 0, 0, 1], 7878))),
            ws: Some(SocketAddr::from(([127, 0, 0, 1], 7879))),
            frame_interval: Duration::from_millis(100),
            connection: ConnectionConfig::default(),
        }
    }
}

struct Shared {
    latest: Mutex<Option<Arc<FramePercept>>>,
    subscribers: Mutex<Vec<Sender<InstructionResult>>>,
    ids: Arc<AtomicU64>,
    stop: AtomicBool,
    frames: AtomicUsize,
    source_done: AtomicBool,
    perception: Arc<dyn Perception>,
    config: ServeConfig,
}

pub struct Server {
    shared: Arc<Shared>,
    tcp_addr: Option<SocketAddr>,
    ws_addr: Option<SocketAddr>,
    threads: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn tcp_addr(&self) -> Option<SocketAddr> {
        self.tcp_addr
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws_addr
    }

    /// Frames perceived so far.
    pub fn frames_perceived(&self) -> usize {
        self.shared.frames.load(Ordering::SeqCst)
    }

    pub fn source_finished(&self) -> bool {
        self.shared.source_done.load(Ordering::SeqCst)
    }

    /// Blocks until the frame source is exhausted or `timeout` passes.
    pub fn wait_for_source(&self, timeout: Duration) -> bool {
        let t0 = std::time::Instant::now();
        while !self.source_finished() {
            if t0.elapsed() > timeout {
                return false;
            }
            thread::sleep(POLL);
        }
        true
    }

    /// Stops accepting, closes every connection and joins the workers.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Runs until the process is killed.
    pub fn run_forever(mut self) {
        for t in std::mem::take(&mut self.threads) {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Starts the service. Listeners are bound before this returns, so the
/// reported addresses accept connections immediately.
pub fn serve(config: ServeConfig, source: Box<dyn FrameSource>, perception: Arc<dyn Perception>) -> Result<Server> {
    let tcp = config.tcp.map(TcpListener::bind).transpose()?;
    let ws = config.ws.map(TcpListener::bind).transpose()?;
    let shared = Arc::new(Shared {
        latest: Mutex::new(None),
        subscribers: Mutex::new(Vec::new()),
        ids: Arc::new(AtomicU64::new(0)),
        stop: AtomicBool::new(false),
        frames: AtomicUsize::new(0),
        source_done: AtomicBool::new(false),
        perception,
        config,
    });
    let mut server = Server {
        shared: shared.clone(),
        tcp_addr: tcp.as_ref().map(|l| l.local_addr()).transpose()?,
        ws_addr: ws.as_ref().map(|l| l.local_addr()).transpose()?,
        threads: Vec::new(),
    };
    {
        let sh = shared.clone();
        server.threads.push(thread::spawn(move || perceive_loop(sh, source)));
    }
    if let Some(l) = tcp {
        let sh = shared.clone();
        server.threads.push(thread::spawn(move || accept_loop(sh, l, false)));
    }
    if let Some(l) = ws {
        let sh = shared.clone();
        server.threads.push(thread::spawn(move || accept_loop(sh, l, true)));
    }
    Ok(server)
}

fn perceive_loop(sh: Arc<Shared>, mut source: Box<dyn FrameSource>) {
    while !sh.stop.load(Ordering::SeqCst) {
        let Some(frame) = source.next_frame() else { break };
        match sh.perception.perceive(&frame) {
            Ok(p) => {
                let instruction = p.instruction;
                *sh.latest.lock().unwrap() = Some(Arc::new(p));
                sh.subscribers.lock().unwrap().retain(|tx| tx.send(instruction).is_ok());
                sh.frames.fetch_add(1, Ordering::SeqCst);
            }
            Err(e) => log::warn!("frame {}: {e}", frame.frame_id()),
        }
        thread::sleep(sh.config.frame_interval);
    }
    sh.source_done.store(true, Ordering::SeqCst);
}

fn accept_loop(sh: Arc<Shared>, listener: TcpListener, websocket: bool) {
    if let Err(e) = listener.set_nonblocking(true) {
        log::error!("listener: {e}");
        return;
    }
    let mut workers = Vec::new();
    while !sh.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let sh = sh.clone();
                workers.push(thread::spawn(move || {
                    log::info!("{} connection from {peer}", if websocket { "websocket" } else { "tcp" });
                    let result = if websocket {
                        WsTransport::accept(stream).map(|t| serve_connection(&sh, t))
                    } else {
                        TcpTransport::new(stream).map(|t| serve_connection(&sh, t))
                    };
                    if let Err(e) = result {
                        log::warn!("connection from {peer}: {e}");
                    }
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept: {e}");
                thread::sleep(POLL);
            }
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

fn send(t: &mut impl Transport, m: &Message) -> Result<()> {
    t.send(encode_message(m)?)
}

fn serve_connection(sh: &Shared, mut t: impl Transport) {
    let (tx, rx): (Sender<InstructionResult>, Receiver<InstructionResult>) = mpsc::channel();
    sh.subscribers.lock().unwrap().push(tx);
    let mut conn = Connection::new(sh.config.connection, sh.ids.clone());
    let mut reader = MessageReader::new();
    let result = (|| -> Result<()> {
        'outer: while !sh.stop.load(Ordering::SeqCst) {
            match t.recv()? {
                Received::Closed => break,
                Received::Idle => {}
                Received::Data(bytes) => {
                    reader.push(&bytes);
                    loop {
                        match reader.next_message() {
                            Ok(None) => break,
                            Ok(Some(msg)) => {
                                let latest = sh.latest.lock().unwrap().clone();
                                for reply in conn.handle(msg, latest.as_deref(), sh.perception.classes()) {
                                    send(&mut t, &reply)?;
                                }
                            }
                            Err(e) => {
                                let m = conn.decode_error(&e);
                                send(&mut t, &m)?;
                                if is_fatal(&e) {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
            while let Ok(instruction) = rx.try_recv() {
                if let Some(m) = conn.instruction(&instruction) {
                    send(&mut t, &m)?;
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::info!("connection closed: {e}");
    }
    conn.close();
}
