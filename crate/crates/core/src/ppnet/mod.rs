//! Network inference from event timing with an exponential-kernel
//! multivariate Hawkes process: exact log-likelihood, L1-penalized fitting by
//! projected proximal gradient ascent, and thresholded edge extraction.

mod edges;
mod fit;
mod likelihood;

use thiserror::Error;

pub use edges::{infer_edges, InferredEdges};
pub use fit::{fit_hawkes, HawkesFit, HawkesFitConfig};
pub use likelihood::{log_likelihood, log_likelihood_and_gradient, LikelihoodGradient};

#[derive(Debug, Error)]
pub enum PpnetError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("intensity {value} at event {event} is not positive")]
    NonPositiveIntensity { event: usize, value: f64 },
    #[error("non-finite gradient at iteration {iteration}")]
    Numeric { iteration: usize },
}
