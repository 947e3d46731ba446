//! Newline-delimited dataset files and single-document model checkpoints.
//!
//! Every dataset file starts with a header record
//! `{"schema_version":1,"kind":...,"dims":...}` followed by one record per
//! graph, sequence or point-process event. Floats are written with shortest
//! round-trip formatting so a read after a write reproduces every bit.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::types::{EventSequence, GraphDataset, GraphDims, MarkedPointProcess, PoliticalGraph, SequenceSet};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u64 },
    #[error("expected a {expected} file, found kind {found:?}")]
    Kind { expected: &'static str, found: String },
    #[error("missing header record")]
    MissingHeader,
    #[error("invalid content: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    GraphDataset,
    EventSequences,
    PointProcess,
}

impl FileKind {
    fn name(self) -> &'static str {
        match self {
            FileKind::GraphDataset => "graph_dataset",
            FileKind::EventSequences => "event_sequences",
            FileKind::PointProcess => "point_process",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u64,
    kind: String,
    dims: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SequenceDims {
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointProcessDims {
    n: usize,
    horizon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    t: f64,
    node: usize,
}

/// Any persisted dataset value.
#[derive(Debug, Clone, PartialEq)]
pub enum DataFile {
    Graphs(GraphDataset),
    Sequences(SequenceSet),
    PointProcess(MarkedPointProcess),
}

fn json_line<T: Serialize>(out: &mut String, value: &T) -> Result<(), FormatError> {
    let s = serde_json::to_string(value).map_err(|e| FormatError::Invalid(e.to_string()))?;
    out.push_str(&s);
    out.push('\n');
    Ok(())
}

fn to_value<T: Serialize>(value: &T) -> Result<Value, FormatError> {
    serde_json::to_value(value).map_err(|e| FormatError::Invalid(e.to_string()))
}

impl DataFile {
    pub fn kind(&self) -> FileKind {
        match self {
            DataFile::Graphs(_) => FileKind::GraphDataset,
            DataFile::Sequences(_) => FileKind::EventSequences,
            DataFile::PointProcess(_) => FileKind::PointProcess,
        }
    }

    pub fn to_ndjson(&self) -> Result<String, FormatError> {
        let mut out = String::new();
        match self {
            DataFile::Graphs(ds) => {
                let header = Header {
                    schema_version: SCHEMA_VERSION as u64,
                    kind: FileKind::GraphDataset.name().into(),
                    dims: to_value(&ds.dims)?,
                    ground_truth: ds.ground_truth.clone(),
                };
                json_line(&mut out, &header)?;
                for g in &ds.graphs {
                    json_line(&mut out, g)?;
                }
            }
            DataFile::Sequences(set) => {
                let header = Header {
                    schema_version: SCHEMA_VERSION as u64,
                    kind: FileKind::EventSequences.name().into(),
                    dims: to_value(&SequenceDims { count: set.sequences.len() })?,
                    ground_truth: set.ground_truth.clone(),
                };
                json_line(&mut out, &header)?;
                for s in &set.sequences {
                    json_line(&mut out, s)?;
                }
            }
            DataFile::PointProcess(pp) => {
                let header = Header {
                    schema_version: SCHEMA_VERSION as u64,
                    kind: FileKind::PointProcess.name().into(),
                    dims: to_value(&PointProcessDims { n: pp.n, horizon: pp.horizon })?,
                    ground_truth: None,
                };
                json_line(&mut out, &header)?;
                for &(t, node) in &pp.events {
                    json_line(&mut out, &PointRecord { t, node })?;
                }
            }
        }
        Ok(out)
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FormatError> {
        let mut lines = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            if !line.trim().is_empty() {
                lines.push((k + 1, line));
            }
        }
        let mut it = lines.into_iter();
        let (hline, htext) = it.next().ok_or(FormatError::MissingHeader)?;
        let header: Header = parse_line(hline, &htext)?;
        if header.schema_version != SCHEMA_VERSION as u64 {
            return Err(FormatError::Version { found: header.schema_version });
        }
        let dims_err = |e: serde_json::Error| FormatError::Parse {
            line: hline,
            message: format!("bad dims: {e}"),
        };
        match header.kind.as_str() {
            "graph_dataset" => {
                let dims: GraphDims = serde_json::from_value(header.dims).map_err(dims_err)?;
                let graphs = it
                    .map(|(line, text)| parse_line::<PoliticalGraph>(line, &text))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DataFile::Graphs(GraphDataset {
                    dims,
                    graphs,
                    ground_truth: header.ground_truth,
                }))
            }
            "event_sequences" => {
                let dims: SequenceDims = serde_json::from_value(header.dims).map_err(dims_err)?;
                let sequences = it
                    .map(|(line, text)| parse_line::<EventSequence>(line, &text))
                    .collect::<Result<Vec<_>, _>>()?;
                if sequences.len() != dims.count {
                    return Err(FormatError::Invalid(format!(
                        "header declares {} sequences, found {}",
                        dims.count,
                        sequences.len()
                    )));
                }
                Ok(DataFile::Sequences(SequenceSet {
                    sequences,
                    ground_truth: header.ground_truth,
                }))
            }
            "point_process" => {
                let dims: PointProcessDims = serde_json::from_value(header.dims).map_err(dims_err)?;
                let events = it
                    .map(|(line, text)| parse_line::<PointRecord>(line, &text).map(|r| (r.t, r.node)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DataFile::PointProcess(MarkedPointProcess {
                    horizon: dims.horizon,
                    n: dims.n,
                    events,
                }))
            }
            other => Err(FormatError::Kind {
                expected: "known",
                found: other.to_string(),
            }),
        }
    }

    pub fn from_ndjson(text: &str) -> Result<Self, FormatError> {
        Self::from_reader(text.as_bytes())
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        fs::write(path, self.to_ndjson()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        Self::from_reader(BufReader::new(fs::File::open(path)?))
    }

    pub fn into_graphs(self) -> Result<GraphDataset, FormatError> {
        match self {
            DataFile::Graphs(ds) => Ok(ds),
            other => Err(FormatError::Kind {
                expected: FileKind::GraphDataset.name(),
                found: other.kind().name().into(),
            }),
        }
    }

    pub fn into_sequences(self) -> Result<SequenceSet, FormatError> {
        match self {
            DataFile::Sequences(s) => Ok(s),
            other => Err(FormatError::Kind {
                expected: FileKind::EventSequences.name(),
                found: other.kind().name().into(),
            }),
        }
    }

    pub fn into_point_process(self) -> Result<MarkedPointProcess, FormatError> {
        match self {
            DataFile::PointProcess(p) => Ok(p),
            other => Err(FormatError::Kind {
                expected: FileKind::PointProcess.name(),
                found: other.kind().name().into(),
            }),
        }
    }
}

fn parse_line<T: DeserializeOwned>(line: usize, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Parse {
        line,
        message: e.to_string(),
    })
}

/// Serializes then deserializes, returning the reconstructed value.
pub fn roundtrip(value: &DataFile) -> Result<DataFile, FormatError> {
    DataFile::from_ndjson(&value.to_ndjson()?)
}

/// Model parameters that persist as a flat real array in a fixed order.
pub trait FlatParams: Sized {
    const MODEL_KIND: &'static str;

    /// Shape information needed to rebuild the parameters from the flat array.
    fn dims_json(&self) -> Value;

    fn to_flat(&self) -> Vec<f64>;

    fn from_flat(dims: &Value, flat: &[f64]) -> Result<Self, FormatError>;

    fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            model_kind: Self::MODEL_KIND.into(),
            dims: self.dims_json(),
            params: self.to_flat(),
        }
    }

    fn from_checkpoint(ck: &Checkpoint) -> Result<Self, FormatError> {
        if ck.schema_version != SCHEMA_VERSION {
            return Err(FormatError::Version { found: ck.schema_version as u64 });
        }
        if ck.model_kind != Self::MODEL_KIND {
            return Err(FormatError::Kind {
                expected: Self::MODEL_KIND,
                found: ck.model_kind.clone(),
            });
        }
        Self::from_flat(&ck.dims, &ck.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub model_kind: String,
    pub dims: Value,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String, FormatError> {
        let mut s = serde_json::to_string(self).map_err(|e| FormatError::Invalid(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        serde_json::from_str(text).map_err(|e| FormatError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Reads `dims[key]` as an unsigned integer.
pub(crate) fn dim(dims: &Value, key: &str) -> Result<usize, FormatError> {
    dims.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| FormatError::Invalid(format!("checkpoint dims missing integer {key:?}")))
}

/// Sequential reader over a flat parameter array.
pub(crate) struct FlatReader<'a> {
    flat: &'a [f64],
    pos: usize,
}

impl<'a> FlatReader<'a> {
    pub(crate) fn new(flat: &'a [f64]) -> Self {
        Self { flat, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<Vec<f64>, FormatError> {
        let end = self.pos + len;
        if end > self.flat.len() {
            return Err(FormatError::Invalid(format!(
                "parameter array too short: need {end}, have {}",
                self.flat.len()
            )));
        }
        let out = self.flat[self.pos..end].to_vec();
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn scalar(&mut self) -> Result<f64, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn finish(self) -> Result<(), FormatError> {
        if self.pos != self.flat.len() {
            return Err(FormatError::Invalid(format!(
                "parameter array has {} trailing values",
                self.flat.len() - self.pos
            )));
        }
        Ok(())
    }
}
