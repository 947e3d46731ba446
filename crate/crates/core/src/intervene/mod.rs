//! What-if search over trained models: ranked edge additions, jurisdiction
//! nomination, persuadable nodes, action-sequence search, budgeted portfolio
//! selection and a single-round minimax defense. Every search here is exact.

mod graph_ops;
mod portfolio;
mod report;
mod sequence;

use thiserror::Error;

use crate::graphlearn::GraphLearnError;
use crate::seqlearn::SeqLearnError;

pub use graph_ops::{
    defend_minimax, nominate_jurisdiction, rank_by_margin, rank_edge_additions, rank_persuadable_nodes, Defense,
    EdgeCandidate, PersuadableNode,
};
pub use portfolio::{portfolio_select, Opportunity, Portfolio};
pub use report::{InterventionReport, RankedAction};
pub use sequence::{optimize_action_sequence, ActionPlan};

#[derive(Debug, Error)]
pub enum InterveneError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error(transparent)]
    Graph(#[from] GraphLearnError),
    #[error(transparent)]
    Sequence(#[from] SeqLearnError),
}
