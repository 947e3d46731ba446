//! Record files to graphs and event sequences, plus dataset splits and
//! train-only feature normalization.
//!
//! Records live in a directory of newline-delimited JSON tables:
//! `members.ndjson` (required), `committees.ndjson`, `sponsorships.ndjson`,
//! `votes.ndjson` and `events.ndjson` (each optional, empty when absent).

mod build;
mod normalize;
mod records;
mod split;

use thiserror::Error;

pub use build::{build_graphs_from_records, district_hash, encode_event_log, party_codes, BillIndex};
pub use normalize::{apply_stats, normalize_features, ColumnStats, NormStats};
pub use records::{Committee, EventRecord, Member, RecordBundle, Sponsorship, Vote, VoteChoice};
pub use split::{split_dataset, split_sequences, SplitKind, SplitPolicy};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("unknown member id {id} referenced by {context}")]
    Referential { id: u64, context: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid records: {0}")]
    Invalid(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("{table}, line {line}: {message}")]
    Parse { table: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
