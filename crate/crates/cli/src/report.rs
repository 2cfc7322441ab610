//! Machine-diffable JSON reports. Keys are sorted because `serde_json::Map`
//! is a `BTreeMap` here.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA: &str = "conformal-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

pub struct Report {
    command: String,
    args: Vec<String>,
    config: Value,
    results: BTreeMap<String, Value>,
    timing_ms: BTreeMap<String, u128>,
    status: Status,
    started: Instant,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config,
            results: BTreeMap::new(),
            timing_ms: BTreeMap::new(),
            status: Status::Pass,
            started: Instant::now(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.results.insert(key.to_string(), v);
    }

    pub fn timed<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timing_ms.insert(key.to_string(), t.elapsed().as_millis());
        out
    }

    /// Worsens the status; a failure is never overwritten by a pass.
    pub fn mark(&mut self, status: Status) {
        let rank = |s: Status| match s {
            Status::Pass => 0,
            Status::Inconclusive => 1,
            Status::Fail => 2,
            Status::Error => 3,
        };
        if rank(status) > rank(self.status) {
            self.status = status;
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn to_json(&self) -> Value {
        let mut timing = self.timing_ms.clone();
        timing.insert("total".into(), self.started.elapsed().as_millis());
        json!({
            "schema": SCHEMA,
            "command": {"name": self.command, "args": self.args},
            "config": self.config,
            "results": self.results,
            "status": self.status,
            "pass": self.status == Status::Pass,
            "timing_ms": timing,
        })
    }

    pub fn emit(&self, output: Option<&Path>) -> Result<(), CliError> {
        write_json(&self.to_json(), output)
    }
}

pub fn write_json(value: &impl Serialize, output: Option<&Path>) -> Result<(), CliError> {
    let value = serde_json::to_value(value).expect("JSON values serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
