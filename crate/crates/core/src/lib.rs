//! Graph and sequence featurizations of political processes, trained on
//! synthetic data with planted mechanisms, plus intervention search and a
//! defensive audit over the trained models.
//!
//! Modules, bottom up:
//! - [`data`]: graphs, event sequences, point processes; validation and files.
//! - [`synthgen`]: seeded generators whose hidden variables are kept as a sidecar.
//! - [`featurize`]: legislative record tables to graphs and sequences; splits and scaling.
//! - [`graphlearn`]: gated message-passing model for graph, node and link targets.
//! - [`seqlearn`]: autoregressive baseline and a recurrent model with generation.
//! - [`ppnet`]: Hawkes likelihood, penalized fit and edge extraction.
//! - [`intervene`]: ranked interventions and the minimax defense.
//! - [`harness`]: config-driven pipeline runs, manifests and reports.

pub mod data;
pub mod intervene;
pub mod math;
pub mod metrics;
pub mod ppnet;
pub mod rng;
pub mod seqlearn;
pub mod featurize;
pub mod graphlearn;
pub mod harness;
pub mod synthgen;
