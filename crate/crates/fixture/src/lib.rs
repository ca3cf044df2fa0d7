//! A small HTTP service with seeded bugs.
//!
//! | endpoint | seeded behavior |
//! |---|---|
//! | `GET /objects?q=` | 500 when `q` has a character outside `[a-zA-Z0-9]` |
//! | `POST /objects` | 201 for names matching `^[a-zA-Z0-9]{12,}$`, 500 for names with a code point above 127, else 400 |
//! | `GET /items/{n}` | 500 when `n <= 0` |
//! | `PUT /resources/{id}` | 500 when the resource was deleted |
//! | `GET /teapot` | 418, which the document omits |
//! | `GET /badbody` | 200 with a body missing the required `id` |
//!
//! `POST /reset` clears all state and `GET /swagger.json` serves the document.
//! With [`Options::clean`] every seeded bug answers with a documented 4xx
//! instead.

mod document;
mod http;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use percent_encoding::percent_decode_str;
use serde_json::{json, Value};

pub use document::document;
use http::{Reply, Request, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub port: u16,
    /// Disable the seeded bugs.
    pub clean: bool,
    /// How long `GET /slow` waits before answering.
    pub slow_delay: Duration,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            port: 0,
            clean: false,
            slow_delay: Duration::from_secs(2),
        }
    }
}

/// Fixed objects searchable through `GET /objects`.
const CATALOG: &[(&str, &str)] = &[
    ("alpha", "0b7e4c0a-6c5e-4f11-9b0e-3f1d2a9c7e01"),
    ("beta", "5d2f8a44-1e3b-4c7d-8f6a-9e0b1c2d3e02"),
    ("gamma", "a9c8e7f6-5d4c-4b3a-9f8e-7d6c5b4a3e03"),
    ("delta42", "1f2e3d4c-5b6a-4978-8a9b-0c1d2e3f4a04"),
];

#[derive(Debug, Default)]
struct State {
    objects: BTreeMap<String, Value>,
    resources: BTreeMap<String, Value>,
    deleted: BTreeSet<String>,
    counter: u64,
}

/// A running fixture. Stops when dropped.
pub struct Fixture {
    server: Server,
}

impl Fixture {
    pub fn start(options: Options) -> io::Result<Fixture> {
        let state = Arc::new(Mutex::new(State::default()));
        // the document names its own host, known only once bound
        let doc: Arc<Mutex<Arc<String>>> = Arc::default();
        let handler = {
            let doc = Arc::clone(&doc);
            Arc::new(move |req: Request| {
                let doc = Arc::clone(&doc.lock().unwrap_or_else(|e| e.into_inner()));
                handle(req, &state, &doc, &options)
            })
        };
        let server = Server::bind(options.port, handler)?;
        *doc.lock().unwrap_or_else(|e| e.into_inner()) =
            Arc::new(document(&server.addr().to_string()).to_string());
        Ok(Fixture { server })
    }

    pub fn addr(&self) -> SocketAddr {
        self.server.addr()
    }

    /// `http://127.0.0.1:<port>`, without a trailing slash.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr())
    }

    pub fn document_url(&self) -> String {
        format!("{}/swagger.json", self.base_url())
    }

    pub fn shutdown(mut self) {
        self.server.stop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Get,
    Post,
    Put,
    Delete,
    Other,
}

impl Method {
    fn parse(s: &str) -> Method {
        match s {
            "GET" => Method::Get,
            "POST" => Method::Post,
            "PUT" => Method::Put,
            "DELETE" => Method::Delete,
            _ => Method::Other,
        }
    }
}

fn json_reply(status: u16, body: &Value) -> Reply {
    Reply {
        status,
        content_type: Some("application/json"),
        body: body.to_string().into_bytes(),
    }
}

fn text_reply(status: u16, text: &str) -> Reply {
    Reply {
        status,
        content_type: Some("text/plain"),
        body: text.as_bytes().to_vec(),
    }
}

fn empty(status: u16) -> Reply {
    Reply {
        status,
        content_type: None,
        body: Vec::new(),
    }
}

fn is_alphanumeric(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_alphanumeric())
}

fn is_uuid(s: &str) -> bool {
    uuid::Uuid::try_parse(s).is_ok() && s.len() == 36
}

/// Resource ids are a function of the creation counter, so runs are repeatable.
fn resource_id(counter: u64) -> String {
    let mut z = counter.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    let hi = z ^ (z >> 31);
    uuid::Builder::from_u128(u128::from(hi) << 64 | u128::from(counter))
        .with_version(uuid::Version::Random)
        .with_variant(uuid::Variant::RFC4122)
        .into_uuid()
        .hyphenated()
        .to_string()
}

fn handle(req: Request, state: &Mutex<State>, doc: &str, options: &Options) -> Reply {
    let body = String::from_utf8(req.body).ok();
    let url = req.target;
    let (path, query) = url.split_once('?').unwrap_or((&url, ""));
    let segments: Vec<String> = path
        .trim_start_matches('/')
        .split('/')
        .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
        .collect();
    let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
    let query: Vec<(String, String)> = url::form_urlencoded::parse(query.as_bytes())
        .into_owned()
        .collect();
    route(Method::parse(&req.method), &segs, &query, body.as_deref(), state, doc, options)
}

fn route(
    method: Method,
    segs: &[&str],
    query: &[(String, String)],
    body: Option<&str>,
    state: &Mutex<State>,
    doc: &str,
    options: &Options,
) -> Reply {
    let clean = options.clean;
    let json_body = || body.and_then(|b| serde_json::from_str::<Value>(b).ok());
    let mut st = state.lock().unwrap_or_else(|e| e.into_inner());
    match (method, segs) {
        (Method::Get, ["swagger.json"]) => Reply {
            status: 200,
            content_type: Some("application/json"),
            body: doc.as_bytes().to_vec(),
        },
        (Method::Post, ["reset"]) => {
            *st = State::default();
            empty(204)
        }
        (Method::Get, ["health"]) => json_reply(200, &json!({"status": "ok"})),
        (Method::Get, ["slow"]) => {
            drop(st);
            std::thread::sleep(options.slow_delay);
            json_reply(200, &json!({"status": "slow"}))
        }
        (Method::Get, ["teapot"]) => {
            if clean {
                empty(200)
            } else {
                text_reply(418, "I'm a teapot")
            }
        }
        (Method::Get, ["badbody"]) => {
            if clean {
                json_reply(200, &json!({"name": "x", "id": CATALOG[0].1}))
            } else {
                json_reply(200, &json!({"name": "x"}))
            }
        }
        (Method::Get, ["objects"]) => {
            let Some((_, q)) = query.iter().find(|(k, _)| k == "q") else {
                return text_reply(400, "missing q");
            };
            if !is_alphanumeric(q) {
                return if clean {
                    text_reply(400, "q must be alphanumeric")
                } else {
                    text_reply(500, "search index failure")
                };
            }
            let matches: Vec<Value> = CATALOG
                .iter()
                .map(|(name, id)| json!({"name": name, "id": id}))
                .chain(st.objects.values().cloned())
                .filter(|o| o["name"].as_str().is_some_and(|n| n.contains(q.as_str())))
                .collect();
            json_reply(200, &Value::Array(matches))
        }
        (Method::Post, ["objects"]) => {
            let Some(obj) = json_body().filter(Value::is_object) else {
                return text_reply(400, "body must be an object");
            };
            let (Some(name), Some(id)) = (obj["name"].as_str(), obj["id"].as_str()) else {
                return text_reply(400, "name and id are required strings");
            };
            if name.chars().any(|c| c as u32 > 127) {
                return if clean {
                    text_reply(400, "name must be ASCII")
                } else {
                    text_reply(500, "encoding failure")
                };
            }
            if name.len() >= 12 && is_alphanumeric(name) && is_uuid(id) {
                let created = json!({"name": name, "id": id});
                st.objects.insert(id.to_string(), created.clone());
                json_reply(201, &created)
            } else {
                text_reply(400, "name must be at least 12 alphanumeric characters")
            }
        }
        (Method::Get, ["objects", id]) => {
            let found = CATALOG
                .iter()
                .find(|(_, cid)| cid == id)
                .map(|(name, cid)| json!({"name": name, "id": cid}))
                .or_else(|| st.objects.get(*id).cloned());
            match found {
                Some(o) => json_reply(200, &o),
                None => text_reply(404, "no such object"),
            }
        }
        (Method::Get, ["items", n]) => match n.parse::<i64>() {
            Err(_) => text_reply(400, "n must be an integer"),
            Ok(n) if n <= 0 && !clean => text_reply(500, "item index underflow"),
            Ok(n) if n <= 0 => text_reply(400, "n must be positive"),
            Ok(n) => json_reply(200, &json!({"n": n})),
        },
        (Method::Post, ["resources"]) => {
            let Some(obj) = json_body().filter(Value::is_object) else {
                return text_reply(400, "body must be an object");
            };
            st.counter += 1;
            let id = resource_id(st.counter);
            let mut res = json!({"id": id});
            if let Some(name) = obj.get("name").and_then(Value::as_str) {
                res["name"] = json!(name);
            }
            st.resources.insert(id, res.clone());
            json_reply(201, &res)
        }
        (Method::Get, ["resources", id]) => match st.resources.get(*id) {
            Some(r) => json_reply(200, r),
            None => text_reply(404, "no such resource"),
        },
        (Method::Delete, ["resources", id]) => match st.resources.remove(*id) {
            Some(_) => {
                st.deleted.insert(id.to_string());
                empty(204)
            }
            None => text_reply(404, "no such resource"),
        },
        (Method::Put, ["resources", id]) => {
            let Some(obj) = json_body().filter(Value::is_object) else {
                return text_reply(400, "body must be an object");
            };
            if st.deleted.contains(*id) && !clean {
                return text_reply(500, "resource row is gone");
            }
            match st.resources.get_mut(*id) {
                Some(r) => {
                    if let Some(name) = obj.get("name").and_then(Value::as_str) {
                        r["name"] = json!(name);
                    }
                    json_reply(200, r)
                }
                None => text_reply(404, "no such resource"),
            }
        }
        (_, ["swagger.json" | "reset" | "health" | "slow" | "teapot" | "badbody" | "objects" | "resources"])
        | (_, ["objects" | "items" | "resources", _]) => text_reply(405, "method not allowed"),
        _ => text_reply(404, "not found"),
    }
}
