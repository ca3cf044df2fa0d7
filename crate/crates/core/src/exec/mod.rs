//! Turning assignments into HTTP requests and executing them.

mod client;
mod request;

pub use client::{
    AuthHeaderError, CallOutcome, CallRecord, Client, ClientConfig, ResponseBody, SeedContext,
    TransportErrorKind,
};
pub use request::{build_request, render_scalar, BuildError, RequestBody, RequestPlan};
