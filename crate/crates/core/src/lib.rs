pub mod checker;
pub mod exec;
pub mod gen;
pub mod oas;
pub mod par;
pub mod report;
pub mod spec;
pub mod stateful;
