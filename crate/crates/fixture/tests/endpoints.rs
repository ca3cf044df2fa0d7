use std::time::Duration;

use quickrest_fixture::{Fixture, Options};
use serde_json::{json, Value};

struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    fn new(f: &Fixture) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        Client {
            agent,
            base: f.base_url(),
        }
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut r = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    fn send(&self, method: &str, path: &str, body: Option<Value>) -> (u16, String) {
        let url = format!("{}{path}", self.base);
        let mut r = match (method, body) {
            ("POST", Some(b)) => self.agent.post(&url).header("content-type", "application/json").send(b.to_string()),
            ("PUT", Some(b)) => self.agent.put(&url).header("content-type", "application/json").send(b.to_string()),
            ("POST", None) => self.agent.post(&url).send_empty(),
            ("DELETE", _) => self.agent.delete(&url).call(),
            _ => unreachable!(),
        }
        .unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }
}

#[test]
fn object_search() {
    let f = Fixture::start(Options::default()).unwrap();
    let c = Client::new(&f);
    let (s, body) = c.get("/objects?q=abc");
    assert_eq!(s, 200);
    assert!(serde_json::from_str::<Value>(&body).unwrap().is_array());
    let (s, body) = c.get("/objects?q=alp");
    assert_eq!(s, 200);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap().as_array().unwrap().len(), 1);
    assert_eq!(c.get("/objects?q=a!").0, 500);
    assert_eq!(c.get("/objects?q=a%21").0, 500);
    assert_eq!(c.get("/objects?q=").0, 200);
    assert_eq!(c.get("/objects").0, 400);
}

#[test]
fn post_objects_three_codes() {
    let f = Fixture::start(Options::default()).unwrap();
    let c = Client::new(&f);
    let id = "3fa85f64-5717-4562-b3fc-2c963f66afa6";
    assert_eq!(c.send("POST", "/objects", Some(json!({"name": "abcdefABCDEF12", "id": id}))).0, 201);
    assert_eq!(c.get(&format!("/objects/{id}")).0, 200);
    assert_eq!(c.send("POST", "/objects", Some(json!({"name": "short", "id": id}))).0, 400);
    assert_eq!(c.send("POST", "/objects", Some(json!({"name": "nãme", "id": id}))).0, 500);
    assert_eq!(c.send("POST", "/objects", Some(json!({"id": id}))).0, 400);
}

#[test]
fn items_and_oracle_targets() {
    let f = Fixture::start(Options::default()).unwrap();
    let c = Client::new(&f);
    assert_eq!(c.get("/items/0").0, 500);
    assert_eq!(c.get("/items/-4").0, 500);
    assert_eq!(c.get("/items/3").0, 200);
    assert_eq!(c.get("/items/x").0, 400);
    assert_eq!(c.get("/teapot").0, 418);
    let (s, body) = c.get("/badbody");
    assert_eq!(s, 200);
    assert!(serde_json::from_str::<Value>(&body).unwrap().get("id").is_none());
    assert_eq!(c.get("/objects/3fa85f64-5717-4562-b3fc-2c963f66afa6").0, 404);
}

#[test]
fn create_delete_edit_is_a_server_error() {
    let f = Fixture::start(Options::default()).unwrap();
    let c = Client::new(&f);
    let (s, body) = c.send("POST", "/resources", Some(json!({"name": "r"})));
    assert_eq!(s, 201);
    let id = serde_json::from_str::<Value>(&body).unwrap()["id"].as_str().unwrap().to_string();
    assert_eq!(c.send("PUT", &format!("/resources/{id}"), Some(json!({}))).0, 200);
    assert_eq!(c.send("DELETE", &format!("/resources/{id}"), None).0, 204);
    assert_eq!(c.send("PUT", &format!("/resources/{id}"), Some(json!({}))).0, 500);
    assert_eq!(c.send("DELETE", &format!("/resources/{id}"), None).0, 404);
    // reset restores a deterministic id sequence
    assert_eq!(c.send("POST", "/reset", None).0, 204);
    let (_, again) = c.send("POST", "/resources", Some(json!({})));
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap()["id"], json!(id));
    assert_eq!(c.send("PUT", &format!("/resources/{id}"), Some(json!({}))).0, 200);
}

#[test]
fn clean_mode_has_no_seeded_bugs() {
    let f = Fixture::start(Options {
        clean: true,
        ..Default::default()
    })
    .unwrap();
    let c = Client::new(&f);
    assert_eq!(c.get("/objects?q=a!").0, 400);
    assert_eq!(c.get("/items/0").0, 400);
    assert_eq!(c.get("/teapot").0, 200);
}

#[test]
fn serves_its_document() {
    let f = Fixture::start(Options::default()).unwrap();
    let c = Client::new(&f);
    let (s, body) = c.get("/swagger.json");
    assert_eq!(s, 200);
    let doc: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(doc["swagger"], "2.0");
    assert_eq!(doc["host"], f.addr().to_string());
    f.shutdown();
}

fn raw_get(stream: &mut std::net::TcpStream, path: &str) -> String {
    use std::io::{BufRead, BufReader, Read, Write};
    write!(stream, "GET {path} HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
    let mut reader = BufReader::new(stream);
    let mut status = String::new();
    reader.read_line(&mut status).unwrap();
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            length = v.trim().parse().unwrap();
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    status
}

/// Idle keep-alive connections must not delay new ones.
#[test]
fn idle_connections_do_not_starve_new_ones() {
    use std::net::TcpStream;
    use std::time::{Duration, Instant};
    let f = Fixture::start(Options::default()).unwrap();
    let mut idle: Vec<TcpStream> = (0..16).map(|_| TcpStream::connect(f.addr()).unwrap()).collect();
    for s in &mut idle {
        assert!(raw_get(s, "/health").starts_with("HTTP/1.1 200"));
    }
    let started = Instant::now();
    let burst: Vec<_> = (0..64)
        .map(|_| {
            let addr = f.addr();
            std::thread::spawn(move || {
                let mut s = TcpStream::connect(addr).unwrap();
                s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
                raw_get(&mut s, "/items/3")
            })
        })
        .collect();
    for t in burst {
        assert!(t.join().unwrap().starts_with("HTTP/1.1 200"));
    }
    assert!(started.elapsed() < Duration::from_secs(2), "{:?}", started.elapsed());
    // keep-alive still works on the idle ones
    assert!(raw_get(&mut idle[0], "/health").starts_with("HTTP/1.1 200"));

    f.shutdown();
    let mut buf = [0u8; 1];
    idle[1].set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    assert_eq!(std::io::Read::read(&mut idle[1], &mut buf).unwrap(), 0);
}
