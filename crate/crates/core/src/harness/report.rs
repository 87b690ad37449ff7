//! Tables, run reports and their CSV / JSON output.

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::fds::LevelRanks;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // shortest representation that round-trips
            Value::Float(v) => write!(f, "{v:e}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

/// Rows under a fixed header.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Float column by name (non-float cells are skipped).
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r[c] {
                Value::Float(v) => Some(v),
                Value::Int(v) => Some(v as f64),
                Value::Text(_) => None,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Accumulated wall time per phase, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    pub assembly: f64,
    pub compression: f64,
    pub factorization: f64,
    pub top_solve: f64,
    pub upward: f64,
    pub downward: f64,
    /// Mean time per additional right-hand side.
    pub per_rhs: f64,
}

impl Phases {
    pub fn sum(&self) -> f64 {
        self.assembly + self.compression + self.factorization + self.top_solve + self.upward + self.downward + self.per_rhs
    }
}

/// A named scalar result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

/// Everything an experiment reports beyond its table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub threads: usize,
    pub total_seconds: f64,
    /// Phases of the last FDS build and solve.
    pub phases: Phases,
    /// Ranks per level of the last FDS build, leaves first.
    pub ranks: Vec<LevelRanks>,
    /// Errors against the reference, and other figures of merit.
    pub metrics: Vec<Metric>,
    /// Largest storage of a factorization or dense matrix, in bytes.
    pub peak_memory_bytes: u64,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self { config, threads: rayon::current_num_threads(), total_seconds: 0.0, phases: Phases::default(), ranks: Vec::new(), metrics: Vec::new(), peak_memory_bytes: 0 }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn note_memory(&mut self, bytes: u64) {
        self.peak_memory_bytes = self.peak_memory_bytes.max(bytes);
    }
}

/// Result of one experiment.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub report: RunReport,
}

impl Outcome {
    /// Writes the CSV to `path` and the report (with the config echo) next to
    /// it with a `.json` extension. Returns both paths.
    pub fn write(&self, path: &Path) -> Result<(PathBuf, PathBuf)> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        self.table.write_csv(std::fs::File::create(path)?)?;
        let json = path.with_extension("json");
        let mut f = std::fs::File::create(&json)?;
        serde_json::to_writer_pretty(&mut f, &self.report)?;
        writeln!(f)?;
        Ok((path.to_path_buf(), json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Experiment;

    #[test]
    fn floats_round_trip_through_csv() {
        let mut t = Table::new(&["n", "err", "solver"]);
        let x = 1.0 / 3.0 * 1e-9;
        t.push(vec![400.into(), x.into(), "fds".into()]);
        let s = t.to_csv_string();
        assert!(s.starts_with("n,err,solver\n"));
        let field = s.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        assert!(field.contains('e'));
        assert_eq!(field.parse::<f64>().unwrap(), x);
    }

    #[test]
    #[should_panic]
    fn row_width_is_checked() {
        Table::new(&["a", "b"]).push(vec![1usize.into()]);
    }

    #[test]
    fn outputs_are_written_side_by_side() {
        let dir = std::env::temp_dir().join(format!("elastic-fds-report-{}", std::process::id()));
        let mut t = Table::new(&["a"]);
        t.push(vec![2.5.into()]);
        let o = Outcome { table: t, report: RunReport::new(ExperimentConfig::new(Experiment::NullField)) };
        let (csv, json) = o.write(&dir.join("out.csv")).unwrap();
        assert_eq!(std::fs::read_to_string(csv).unwrap(), "a\n2.5e0\n");
        let back: RunReport = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back.config.experiment, Experiment::NullField);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
