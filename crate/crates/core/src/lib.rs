//! Distance-based Bayesian models for populations of interaction networks.
//!
//! Observations are collections of paths over a finite vertex set, either
//! ordered ([`InteractionSeq`]) or unordered ([`InteractionMultiset`]). Models
//! place probability `exp(-gamma * d(x, mode))` on a bounded space of such
//! observations, and the posterior over `(mode, gamma)` is explored with
//! exchange-type MCMC driven by involutive proposals.

pub mod assignment;
pub mod distances;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod ingest;
pub mod models;
pub mod moves;
pub mod posterior;
pub mod samplers;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    a_count, canonicalize, in_bounds, in_support, log_a_count, multiplicity_profile, vertex_count,
    Dataset, InteractionMultiset, InteractionSeq, Observation, Path, SpaceBounds, Vertex,
    VertexSet,
};
