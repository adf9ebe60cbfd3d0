//! Framing: each message is a 4-byte big-endian payload length followed by
//! that many bytes of UTF-8 JSON. Replies use the same framing and come back
//! in request order on the connection that sent them.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use serde_json::Value;

use crate::error::GatewayError;
use crate::Gateway;

/// Frames longer than this are skipped and answered with a protocol error.
pub const MAX_FRAME_BYTES: usize = 16 << 20;

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Next frame's length, or `None` on a clean end of stream.
fn read_len(r: &mut impl Read) -> io::Result<Option<usize>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Some(u32::from_be_bytes(buf) as usize))
}

/// Reads one frame. `Ok(Some(Err(len)))` marks an oversized frame whose body
/// was discarded.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Result<Vec<u8>, usize>>> {
    let Some(len) = read_len(r)? else {
        return Ok(None);
    };
    if len > MAX_FRAME_BYTES {
        let skipped = io::copy(&mut r.take(len as u64), &mut io::sink())?;
        if skipped < len as u64 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        return Ok(Some(Err(len)));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(Ok(payload)))
}

fn protocol_error_text(message: String) -> String {
    let reply = crate::error_reply(
        Value::Null,
        None,
        Value::Null,
        &GatewayError::Protocol(message),
    );
    serde_json::to_string(&reply).expect("reply serialises")
}

/// Serves one connection until the peer closes it.
pub fn serve_connection(gw: &Gateway, stream: TcpStream) -> io::Result<()> {
    let mut reader = io::BufReader::new(stream.try_clone()?);
    let mut writer = io::BufWriter::new(stream);
    while let Some(frame) = read_frame(&mut reader)? {
        let reply = match frame {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(text) => gw.handle_text(&text),
                Err(_) => protocol_error_text("frame is not valid UTF-8".into()),
            },
            Err(len) => protocol_error_text(format!(
                "frame of {len} bytes exceeds the {MAX_FRAME_BYTES}-byte limit"
            )),
        };
        write_frame(&mut writer, reply.as_bytes())?;
    }
    Ok(())
}

/// Accepts connections forever, one thread each.
pub fn serve(listener: TcpListener, gw: Arc<Gateway>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let gw = Arc::clone(&gw);
        thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = serve_connection(&gw, stream) {
                eprintln!("connection {peer:?}: {e}");
            }
        });
    }
    Ok(())
}

/// Blocking client for tests and scripts.
pub struct Client {
    stream: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client { stream })
    }

    pub fn send_raw(&mut self, payload: &[u8]) -> io::Result<Value> {
        write_frame(&mut self.stream, payload)?;
        self.receive()
    }

    pub fn request(&mut self, message: &Value) -> io::Result<Value> {
        self.send_raw(message.to_string().as_bytes())
    }

    fn receive(&mut self) -> io::Result<Value> {
        match read_frame(&mut self.stream)? {
            Some(Ok(bytes)) => serde_json::from_slice(&bytes)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Some(Err(len)) => Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("oversized reply ({len} bytes)"),
            )),
            None => Err(io::ErrorKind::UnexpectedEof.into()),
        }
    }
}
