//! Report envelope and serialization (JSON default, CSV on request).
//!
//! Field names are frozen by `schema/report.v1.json`; bump the schema version
//! on any change. Given an identical run configuration the JSON output is
//! byte-identical except for `duration_ms`.

use std::collections::BTreeMap;

use serde::Serialize;

pub const SCHEMA: &str = "orlicz.report.v1";

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub statistics: BTreeMap<String, f64>,
    pub pass: bool,
    pub seed: u64,
    pub workers: u32,
    pub duration_ms: u64,
}

impl Report {
    pub fn new(command: &str, seed: u64, workers: u32) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            params: BTreeMap::new(),
            statistics: BTreeMap::new(),
            pass: true,
            seed,
            workers,
            duration_ms: 0,
        }
    }

    pub fn param_str(&mut self, key: &str, value: &str) {
        self.params.insert(
            key.to_string(),
            serde_json::Value::String(value.to_string()),
        );
    }

    pub fn param_num(&mut self, key: &str, value: f64) {
        self.params
            .insert(key.to_string(), serde_json::json!(value));
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.statistics.insert(key.to_string(), value);
    }

    pub fn absorb(&mut self, rep: &orlicz_core::ExperimentReport) {
        for (k, v) in &rep.statistics {
            self.statistics.insert(k.clone(), *v);
        }
        self.pass = rep.pass;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// RFC-4180-style key,value rows (numeric values never need quoting).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\r\n");
        out.push_str(&format!("command,{}\r\n", self.command));
        out.push_str(&format!("pass,{}\r\n", self.pass));
        out.push_str(&format!("seed,{}\r\n", self.seed));
        out.push_str(&format!("workers,{}\r\n", self.workers));
        for (k, v) in &self.statistics {
            out.push_str(&format!("{k},{v}\r\n"));
        }
        out
    }
}

/// Sample matrix as RFC-4180 CSV with a dimension-labeled header.
pub fn batch_to_csv(batch: &orlicz_core::SampleBatch) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=batch.dim).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in batch.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push_str("\r\n");
    }
    out
}
