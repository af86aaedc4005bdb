//! CSV output with a `#` preamble describing how the numbers were produced.

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every double
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn body(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> CliResult<String> {
        Ok(preamble(cfg) + &self.body()?)
    }
}

/// sha256 of the canonical config echo.
pub fn input_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.echo().as_bytes()))
}

pub fn preamble(cfg: &ExperimentConfig) -> String {
    let mut s = format!("# exitgrid {}\r\n", env!("CARGO_PKG_VERSION"));
    for line in cfg.echo().lines() {
        s.push_str(&format!("# config: {line}\r\n"));
    }
    s.push_str(&format!("# seed: {}\r\n", cfg.seed));
    s.push_str(&format!("# inputs-sha256: {}\r\n", input_hash(cfg)));
    s
}

/// The CSV text without its `#` preamble.
pub fn strip_preamble(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = match rest.find('\n') {
            Some(i) => &rest[i + 1..],
            None => "",
        };
    }
    rest
}
