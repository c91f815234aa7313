//! Long-format metric rows and their CSV encoding.
//!
//! One row per (seed, episode, agent, metric). The schema is fixed:
//! `experiment,seed,episode,agent,metric,value`. Fields never contain commas
//! or quotes, so both the writer and the reader are deliberately strict;
//! anything that does not match the schema is a parse error, not a guess.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,seed,episode,agent,metric,value";

/// Which agent a metric row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AgentTag {
    /// 1-based agent label.
    Agent(u8),
    /// System-level metric.
    Joint,
}

impl fmt::Display for AgentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentTag::Agent(i) => write!(f, "{i}"),
            AgentTag::Joint => write!(f, "joint"),
        }
    }
}

/// One recorded value.
#[derive(Debug, Clone)]
pub struct MetricRow {
    pub seed: u32,
    pub episode: u32,
    pub agent: AgentTag,
    pub metric: &'static str,
    pub value: f64,
}

/// All rows of one experiment, in deterministic order.
#[derive(Debug, Clone)]
pub struct MetricsTable {
    pub experiment: String,
    pub rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn new(experiment: impl Into<String>) -> Self {
        MetricsTable {
            experiment: experiment.into(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 32 + 64);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.experiment, row.seed, row.episode, row.agent, row.metric, row.value
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Values of one (agent, metric) series for one seed, episode-ordered.
    pub fn series(&self, seed: u32, agent: AgentTag, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.seed == seed && r.agent == agent && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    pub fn seeds(&self) -> Vec<u32> {
        let mut seeds: Vec<u32> = self.rows.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        seeds
    }
}

/// A row read back from disk; all labels owned.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub experiment: String,
    pub seed: u32,
    pub episode: u32,
    pub agent: String,
    pub metric: String,
    pub value: f64,
}

/// Strict reader for the fixed six-column schema.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<ParsedRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(Error::parse(
                1,
                format!("bad header '{other}', expected '{CSV_HEADER}'"),
            ));
        }
        None => return Err(Error::parse(1, "empty metrics file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            return Err(Error::parse(lineno, "blank line"));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let seed = fields[1]
            .parse::<u32>()
            .map_err(|e| Error::parse(lineno, format!("bad seed '{}': {e}", fields[1])))?;
        let episode = fields[2]
            .parse::<u32>()
            .map_err(|e| Error::parse(lineno, format!("bad episode '{}': {e}", fields[2])))?;
        let value = fields[5]
            .parse::<f64>()
            .map_err(|e| Error::parse(lineno, format!("bad value '{}': {e}", fields[5])))?;
        if !value.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite value '{}'", fields[5])));
        }
        if fields[0].is_empty() || fields[3].is_empty() || fields[4].is_empty() {
            return Err(Error::parse(lineno, "empty label field"));
        }
        rows.push(ParsedRow {
            experiment: fields[0].to_string(),
            seed,
            episode,
            agent: fields[3].to_string(),
            metric: fields[4].to_string(),
            value,
        });
    }
    Ok(rows)
}
