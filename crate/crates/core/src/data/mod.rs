//! Data model shared by every module: attributed directed graphs, event
//! sequences and node-marked point processes, plus validation and persistence.

mod io;
mod types;
mod validate;

pub use io::{roundtrip, Checkpoint, DataFile, FileKind, FlatParams, FormatError, SCHEMA_VERSION};
pub(crate) use io::{dim, FlatReader};
pub use types::{
    Edge, Event, EventSequence, GraphDataset, GraphDims, LabelKind, MarkedPointProcess, Node, NodeKind,
    PoliticalGraph, SequenceSet, MAX_OTHER_LABEL_LEN,
};
pub use validate::{validate_dataset, validate_graph, ValidationReport, Violation};
