//! Simulated measurements and per-trial result tables.

use std::collections::BTreeMap;

use fingerloc::fingerprint::FingerprintVector;
use fingerloc::geom::{Grid, Position};
use serde::{Deserialize, Serialize};

use crate::config::Pipeline;
use crate::error::CliError;

pub const MEASUREMENTS_VERSION: &str = "fingerloc-meas-1";

/// Named fingerprints reported by the sensors for one transmission.
pub type Features = BTreeMap<String, FingerprintVector>;

/// A training measurement at a grid location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub grid_index: usize,
    pub snapshot: u64,
    /// Whether the user was moving (binary-sensor pipeline only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving: Option<bool>,
    pub features: Features,
}

/// A test transmission from a known true position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub position: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving: Option<bool>,
    /// Dead-reckoning displacement since the previous step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdr: Option<(f64, f64)>,
    pub features: Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub version: String,
    pub pipeline: Pipeline,
    pub grid: Grid,
    pub train: Vec<Sample>,
    pub test: Vec<Observation>,
}

impl Measurements {
    pub fn new(pipeline: Pipeline, grid: Grid, train: Vec<Sample>, test: Vec<Observation>) -> Self {
        Self {
            version: MEASUREMENTS_VERSION.to_string(),
            pipeline,
            grid,
            train,
            test,
        }
    }

    pub fn check(&self, pipeline: Pipeline) -> Result<(), CliError> {
        if self.version != MEASUREMENTS_VERSION {
            return Err(CliError::Config(format!(
                "unsupported measurement version {:?}",
                self.version
            )));
        }
        if self.pipeline != pipeline {
            return Err(CliError::Config(format!(
                "measurements are for {}, config is {}",
                self.pipeline.name(),
                pipeline.name()
            )));
        }
        if self.train.is_empty() {
            return Err(CliError::Config(
                "measurement set has no training samples".into(),
            ));
        }
        if let Some(s) = self.train.iter().find(|s| s.grid_index >= self.grid.len()) {
            return Err(CliError::Config(format!(
                "training sample at grid index {} outside grid",
                s.grid_index
            )));
        }
        Ok(())
    }
}

pub fn feature<'a>(f: &'a Features, key: &str) -> Result<&'a FingerprintVector, CliError> {
    f.get(key)
        .ok_or_else(|| CliError::Config(format!("measurement lacks feature {key:?}")))
}

/// One trial or time step: the true position and each method's estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub id: usize,
    pub truth: Position,
    pub estimates: Vec<Position>,
    /// Optional free-form column (the threshold set of a tracking step).
    pub note: Option<String>,
}

/// Per-trial estimates of several methods, written as one CSV row per
/// trial with `{method}_x, {method}_y, {method}_error_m` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTable {
    pub id_column: String,
    pub methods: Vec<String>,
    pub note_column: Option<String>,
    pub rows: Vec<TrialRow>,
}

impl TrialTable {
    pub fn new(id_column: &str, methods: &[&str], note_column: Option<&str>) -> Self {
        Self {
            id_column: id_column.to_string(),
            methods: methods.iter().map(|m| m.to_string()).collect(),
            note_column: note_column.map(str::to_string),
            rows: Vec::new(),
        }
    }

    pub fn errors(&self, method: &str) -> Option<Vec<f64>> {
        let j = self.methods.iter().position(|m| m == method)?;
        Some(
            self.rows
                .iter()
                .map(|r| r.truth.distance(&r.estimates[j]))
                .collect(),
        )
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec![self.id_column.clone(), "true_x".into(), "true_y".into()];
        for m in &self.methods {
            h.push(format!("{m}_x"));
            h.push(format!("{m}_y"));
            h.push(format!("{m}_error_m"));
        }
        if let Some(n) = &self.note_column {
            h.push(n.clone());
        }
        h
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.id.to_string(),
                r.truth.x.to_string(),
                r.truth.y.to_string(),
            ];
            for e in &r.estimates {
                rec.push(e.x.to_string());
                rec.push(e.y.to_string());
                rec.push(r.truth.distance(e).to_string());
            }
            if self.note_column.is_some() {
                rec.push(r.note.clone().unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parses a table written by [`TrialTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[1] != "true_x" || header[2] != "true_y" {
            return Err(CliError::Config("not a trial table".into()));
        }
        let rest = &header[3..];
        let n_methods = rest.len() / 3;
        let methods: Vec<String> = (0..n_methods)
            .map(|k| rest[3 * k].trim_end_matches("_x").to_string())
            .collect();
        let note_column = (rest.len() % 3 == 1).then(|| rest[rest.len() - 1].clone());
        let num = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|_| CliError::Config(format!("bad number {s:?} in trial table")))
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let id = rec[0]
                .parse()
                .map_err(|_| CliError::Config("bad trial id".into()))?;
            let truth = Position::new(num(&rec[1])?, num(&rec[2])?);
            let estimates = (0..n_methods)
                .map(|k| Ok(Position::new(num(&rec[3 + 3 * k])?, num(&rec[4 + 3 * k])?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let note = note_column.as_ref().map(|_| rec[rec.len() - 1].to_string());
            rows.push(TrialRow {
                id,
                truth,
                estimates,
                note,
            });
        }
        Ok(Self {
            id_column: header[0].clone(),
            methods,
            note_column,
            rows,
        })
    }
}

/// `a;b;c` encoding of an index set.
pub fn join_indices(ix: &[usize]) -> String {
    ix.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_indices(s: &str) -> Result<Vec<usize>, CliError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::Config(format!("bad index {p:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_table_round_trip() {
        let mut t = TrialTable::new("t", &["tracked", "snapshot"], Some("triggered"));
        t.rows.push(TrialRow {
            id: 0,
            truth: Position::new(0.0, 0.0),
            estimates: vec![Position::new(3.0, 4.0), Position::new(0.0, 0.0)],
            note: Some(join_indices(&[1, 4])),
        });
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("t,true_x,true_y,tracked_x,tracked_y,tracked_error_m,snapshot_x"));
        assert!(csv.contains(",5,"));
        let back = TrialTable::from_csv(&csv).unwrap();
        assert_eq!(back, t);
        assert_eq!(parse_indices("1;4").unwrap(), vec![1, 4]);
        assert_eq!(back.errors("tracked").unwrap(), vec![5.0]);
    }
}
