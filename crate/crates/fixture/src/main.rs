use std::time::Duration;

use clap::Parser;
use quickrest_fixture::{Fixture, Options};

/// Test service with seeded bugs, serving its own OpenAPI document at /swagger.json.
#[derive(Parser)]
#[command(name = "quickrest-fixture", version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Answer the seeded bugs with documented 4xx responses instead
    #[arg(long)]
    clean: bool,
    /// Delay of GET /slow in milliseconds
    #[arg(long, default_value_t = 2000)]
    slow_ms: u64,
}

fn main() {
    let args = Args::parse();
    let options = Options {
        port: args.port,
        clean: args.clean,
        slow_delay: Duration::from_millis(args.slow_ms),
    };
    let fixture = Fixture::start(options).unwrap_or_else(|e| {
        eprintln!("cannot listen on port {}: {e}", args.port);
        std::process::exit(1)
    });
    println!("listening on {}", fixture.base_url());
    println!("document at {}", fixture.document_url());
    loop {
        std::thread::park();
    }
}
