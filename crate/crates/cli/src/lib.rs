//! Library surface of the benchmark harness, shared by the `hrfna` binary and
//! its integration tests.

pub mod config;
pub mod jsonl;
pub mod report;
pub mod run;
