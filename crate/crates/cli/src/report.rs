//! Report records written by every subcommand.
//!
//! The `body` is deterministic for a fixed configuration and seed. Wall-clock
//! data lives only under `timings`.

use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};

pub const SCHEMA: &str = "quatcal-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    PropertyFailure,
}

impl Status {
    pub fn tag(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::PropertyFailure => "property-failure",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::PropertyFailure => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub mode: &'static str,
    pub inputs: Value,
    pub seed: Option<u64>,
    pub results: Value,
    pub residuals: Value,
    pub tolerances: Value,
    pub warnings: Vec<String>,
    pub status: Status,
}

impl Report {
    pub fn new(mode: &'static str, inputs: Value) -> Self {
        Self {
            mode,
            inputs,
            seed: None,
            results: json!({}),
            residuals: json!({}),
            tolerances: json!({}),
            warnings: Vec::new(),
            status: Status::Ok,
        }
    }

    pub fn body(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "versions": {
                "quatcal": env!("CARGO_PKG_VERSION"),
                "format": quatcal::quatspace::FORMAT_VERSION,
            },
            "inputs": self.inputs,
            "seed": self.seed,
            "results": self.results,
            "residuals": self.residuals,
            "tolerances": self.tolerances,
            "warnings": self.warnings,
            "status": self.status.tag(),
        })
    }

    pub fn render(&self, elapsed: Duration, threads: usize) -> String {
        let record = json!({
            "body": self.body(),
            "timings": { "wall_seconds": elapsed.as_secs_f64(), "threads": threads },
        });
        let mut s = serde_json::to_string_pretty(&record).expect("reports are plain JSON");
        s.push('\n');
        s
    }
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("plain JSON");
    s.push('\n');
    std::fs::write(path, s)
}
