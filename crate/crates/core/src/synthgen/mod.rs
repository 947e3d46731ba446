//! Seeded generators with planted, recorded mechanisms: legislative graphs
//! with party-driven votes, actor-presence sequences with a hidden outcome
//! state, and multivariate Hawkes processes.

mod graphs;
mod hawkes;
mod sequences;

use thiserror::Error;

pub use graphs::{
    draw_votes, gen_graph_dataset, graph_dims, vote_probabilities, GraphGenConfig, GraphGenTruth, GraphTruth,
    EDGE_FEATURES, EDGE_FREQUENCY, FEATURE_PARTY, FEATURE_SENIORITY, FEATURE_Z1, FEATURE_Z2, NODE_FEATURES,
    RELATIONSHIP_TYPES,
};
pub use hawkes::{simulate_hawkes, HawkesParams, SimulateOptions};
pub use sequences::{gen_sequences, hidden_trajectory, SeqGenConfig, SeqGenTruth, SequenceTruth};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("supercritical Hawkes process (max row sum of W = {max_row_sum} >= 1); set force to simulate anyway")]
    Supercritical { max_row_sum: f64 },
    #[error("simulation exceeded {events} events by t = {time}")]
    Exploded { events: usize, time: f64 },
}
