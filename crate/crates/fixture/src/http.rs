//! Minimal HTTP/1.1 server: one thread per connection, keep-alive, `Content-Length` bodies.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

const MAX_HEAD: usize = 64 * 1024;
const MAX_HEADERS: usize = 64;

#[derive(Debug)]
pub(crate) struct Request {
    pub method: String,
    /// Path and query, as sent.
    pub target: String,
    pub body: Vec<u8>,
}

#[derive(Debug)]
pub(crate) struct Reply {
    pub status: u16,
    pub content_type: Option<&'static str>,
    pub body: Vec<u8>,
}

pub(crate) type Handler = dyn Fn(Request) -> Reply + Send + Sync;

type Connections = Arc<Mutex<HashMap<u64, TcpStream>>>;

pub(crate) struct Server {
    addr: SocketAddr,
    stopping: Arc<AtomicBool>,
    connections: Connections,
    acceptor: Option<JoinHandle<()>>,
}

impl Server {
    pub fn bind(port: u16, handler: Arc<Handler>) -> io::Result<Server> {
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        let addr = listener.local_addr()?;
        let stopping = Arc::new(AtomicBool::new(false));
        let connections: Connections = Arc::default();
        let acceptor = {
            let stopping = Arc::clone(&stopping);
            let connections = Arc::clone(&connections);
            std::thread::spawn(move || accept_loop(listener, handler, &stopping, &connections))
        };
        Ok(Server {
            addr,
            stopping,
            connections,
            acceptor: Some(acceptor),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and closes every open connection.
    pub fn stop(&mut self) {
        let Some(acceptor) = self.acceptor.take() else { return };
        self.stopping.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        let _ = acceptor.join();
        let open = std::mem::take(&mut *lock(&self.connections));
        for stream in open.values() {
            let _ = stream.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop();
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn accept_loop(listener: TcpListener, handler: Arc<Handler>, stopping: &AtomicBool, connections: &Connections) {
    let next_id = AtomicU64::new(0);
    for stream in listener.incoming() {
        if stopping.load(Ordering::SeqCst) {
            return;
        }
        let Ok(stream) = stream else { continue };
        let Ok(registered) = stream.try_clone() else { continue };
        let _ = stream.set_nodelay(true);
        let id = next_id.fetch_add(1, Ordering::Relaxed);
        lock(connections).insert(id, registered);
        let handler = Arc::clone(&handler);
        let connections = Arc::clone(connections);
        std::thread::spawn(move || {
            let _ = serve(stream, &*handler);
            lock(&connections).remove(&id);
        });
    }
}

fn serve(stream: TcpStream, handler: &Handler) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    loop {
        let (request, close) = match read_request(&mut reader) {
            Ok(Some(r)) => r,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                let reply = Reply {
                    status: 400,
                    content_type: Some("text/plain"),
                    body: e.to_string().into_bytes(),
                };
                return write_reply(&mut writer, &reply, false, true);
            }
            Err(e) => return Err(e),
        };
        let head = request.method == "HEAD";
        let reply = handler(request);
        write_reply(&mut writer, &reply, head, close)?;
        if close {
            return Ok(());
        }
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

/// Reads one request. `None` on a clean end of stream between requests.
/// The flag is set when the connection must close after the reply.
fn read_request(reader: &mut impl BufRead) -> io::Result<Option<(Request, bool)>> {
    let mut head = Vec::new();
    loop {
        let start = head.len();
        if reader.read_until(b'\n', &mut head)? == 0 {
            return if head.is_empty() {
                Ok(None)
            } else {
                Err(io::ErrorKind::UnexpectedEof.into())
            };
        }
        let line = &head[start..];
        if line == b"\r\n" || line == b"\n" {
            if start == 0 {
                // stray blank line before a request line
                head.clear();
                continue;
            }
            break;
        }
        if head.len() > MAX_HEAD {
            return Err(invalid("request head too large"));
        }
    }

    let mut headers = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut parsed = httparse::Request::new(&mut headers);
    match parsed.parse(&head) {
        Ok(httparse::Status::Complete(_)) => {}
        Ok(httparse::Status::Partial) => return Err(invalid("incomplete request head")),
        Err(e) => return Err(invalid(&e.to_string())),
    }
    let method = parsed.method.unwrap_or_default().to_string();
    let target = parsed.path.unwrap_or_default().to_string();
    let mut close = parsed.version == Some(0);
    let mut length = 0usize;
    for h in parsed.headers.iter() {
        let value = std::str::from_utf8(h.value).unwrap_or_default().trim();
        if h.name.eq_ignore_ascii_case("content-length") {
            length = value.parse().map_err(|_| invalid("bad Content-Length"))?;
        } else if h.name.eq_ignore_ascii_case("transfer-encoding") {
            return Err(invalid("chunked request bodies are not supported"));
        } else if h.name.eq_ignore_ascii_case("connection") {
            let value = value.to_ascii_lowercase();
            if value.contains("close") {
                close = true;
            } else if value.contains("keep-alive") {
                close = false;
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    Ok(Some((Request { method, target, body }, close)))
}

fn write_reply(out: &mut impl Write, reply: &Reply, head: bool, close: bool) -> io::Result<()> {
    let reason = http::StatusCode::from_u16(reply.status)
        .ok()
        .and_then(|s| s.canonical_reason())
        .unwrap_or("");
    let mut buf = format!("HTTP/1.1 {} {reason}\r\n", reply.status).into_bytes();
    let bodiless = reply.status == 204 || reply.status == 304 || (100..200).contains(&reply.status);
    if !bodiless {
        write!(buf, "Content-Length: {}\r\n", reply.body.len())?;
    }
    if let Some(ct) = reply.content_type {
        write!(buf, "Content-Type: {ct}\r\n")?;
    }
    if close {
        buf.extend_from_slice(b"Connection: close\r\n");
    }
    buf.extend_from_slice(b"\r\n");
    if !head && !bodiless {
        buf.extend_from_slice(&reply.body);
    }
    out.write_all(&buf)?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(raw: &str) -> io::Result<Option<(Request, bool)>> {
        read_request(&mut BufReader::new(raw.as_bytes()))
    }

    #[test]
    fn parses_requests_in_sequence() {
        let raw = "POST /a?x=1 HTTP/1.1\r\nContent-Length: 3\r\n\r\nabcGET /b HTTP/1.1\r\nConnection: close\r\n\r\n";
        let mut r = BufReader::new(raw.as_bytes());
        let (a, close) = read_request(&mut r).unwrap().unwrap();
        assert_eq!((a.method.as_str(), a.target.as_str(), a.body.as_slice(), close), ("POST", "/a?x=1", &b"abc"[..], false));
        let (b, close) = read_request(&mut r).unwrap().unwrap();
        assert_eq!((b.method.as_str(), b.target.as_str(), close), ("GET", "/b", true));
        assert!(read_request(&mut r).unwrap().is_none());
    }

    #[test]
    fn http10_closes_unless_kept_alive() {
        assert!(read("GET / HTTP/1.0\r\n\r\n").unwrap().unwrap().1);
        assert!(!read("GET / HTTP/1.0\r\nConnection: keep-alive\r\n\r\n").unwrap().unwrap().1);
    }

    #[test]
    fn rejects_malformed_heads() {
        for raw in [
            "GET / HTTP/1.1\r\nContent-Length: x\r\n\r\n",
            "POST / HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n",
            "NOT A REQUEST\r\n\r\n",
        ] {
            assert_eq!(read(raw).unwrap_err().kind(), io::ErrorKind::InvalidData, "{raw}");
        }
        assert_eq!(read("GET / HTTP/1.1\r\n").unwrap_err().kind(), io::ErrorKind::UnexpectedEof);
    }

    #[test]
    fn replies_omit_bodies_where_required() {
        let reply = Reply { status: 204, content_type: None, body: b"x".to_vec() };
        let mut out = Vec::new();
        write_reply(&mut out, &reply, false, false).unwrap();
        assert_eq!(out, b"HTTP/1.1 204 No Content\r\n\r\n");

        let reply = Reply { status: 418, content_type: Some("text/plain"), body: b"tea".to_vec() };
        let mut out = Vec::new();
        write_reply(&mut out, &reply, true, true).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "HTTP/1.1 418 I'm a teapot\r\nContent-Length: 3\r\nContent-Type: text/plain\r\nConnection: close\r\n\r\n"
        );
    }
}
