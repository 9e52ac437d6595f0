//! CSV and JSON artifacts of one experiment run.

use crate::settings::ExperimentConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::PathBuf;

pub const SCHEMA: &str = "# curvlab-schema v1";

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `<=`, `<`, `>=`, `>` or `==`.
    pub comparison: &'static str,
    pub pass: bool,
}

#[derive(Debug)]
pub struct Report {
    pub experiment: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    pub assertions: Vec<Assertion>,
    pub diagnostics: Map<String, Value>,
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

impl Report {
    pub fn new(experiment: &str, header: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            assertions: Vec::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn check(&mut self, name: String, value: f64, threshold: f64, comparison: &'static str, pass: bool) -> bool {
        self.assertions.push(Assertion { name, value, threshold, comparison, pass });
        pass
    }

    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        self.check(name.into(), value, threshold, "<=", value <= threshold)
    }

    pub fn below(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        self.check(name.into(), value, threshold, "<", value < threshold)
    }

    pub fn above(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        self.check(name.into(), value, threshold, ">", value > threshold)
    }

    pub fn holds(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.check(name.into(), if ok { 1.0 } else { 0.0 }, 1.0, "==", ok)
    }

    pub fn diag(&mut self, key: &str, v: impl Serialize) {
        self.diagnostics.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn csv_text(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut out = String::new();
        out.push_str(SCHEMA);
        out.push('\n');
        out.push_str(&format!("# experiment: {}\n", self.experiment));
        for line in cfg.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        out.push_str(&String::from_utf8(w.into_inner().context("flushing csv")?)?);
        Ok(out)
    }

    pub fn json_value(&self, cfg: &ExperimentConfig) -> Value {
        json!({
            "schema": "curvlab-schema v1",
            "experiment": self.experiment,
            "config": cfg,
            "assertions": self.assertions,
            "diagnostics": self.diagnostics,
            "pass": self.passed(),
        })
    }

    /// Writes `<name>.csv` and `<name>.json` into the output directory.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
        let dir = cfg.output_dir();
        std::fs::create_dir_all(&dir).with_context(|| format!("field `output`: creating {}", dir.display()))?;
        let name = cfg.name.clone().unwrap_or_else(|| self.experiment.clone());
        let csv_path = dir.join(format!("{name}.csv"));
        let json_path = dir.join(format!("{name}.json"));
        std::fs::write(&csv_path, self.csv_text(cfg)?).with_context(|| format!("writing {}", csv_path.display()))?;
        let json = serde_json::to_string_pretty(&self.json_value(cfg))?;
        std::fs::write(&json_path, json + "\n").with_context(|| format!("writing {}", json_path.display()))?;
        Ok((csv_path, json_path))
    }
}
