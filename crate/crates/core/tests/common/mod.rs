#![allow(dead_code)]

use quickrest_core::exec::{Client, ClientConfig};
use quickrest_core::oas::{parse_document, ApiDescription};
use quickrest_core::spec::{compile_api, CompiledApi, CompiledOperation, ValidationOptions};
use quickrest_fixture::{Fixture, Options};

pub struct Env {
    pub fixture: Fixture,
    pub doc: ApiDescription,
    pub api: CompiledApi,
    pub client: Client,
}

impl Env {
    pub fn start() -> Env {
        Env::with(Options::default())
    }

    pub fn with(options: Options) -> Env {
        let fixture = Fixture::start(options).expect("fixture starts");
        let text = quickrest_fixture::document(&fixture.addr().to_string()).to_string();
        let doc = parse_document(&text).expect("fixture document parses");
        let api = compile_api(&doc, ValidationOptions::default()).expect("fixture document compiles");
        Env {
            fixture,
            doc,
            api,
            client: Client::new(&ClientConfig::default()).unwrap(),
        }
    }

    pub fn base(&self) -> String {
        self.fixture.base_url()
    }

    pub fn op(&self, id: &str) -> &CompiledOperation {
        self.api.operation(id).unwrap_or_else(|| panic!("no operation {id}"))
    }
}
