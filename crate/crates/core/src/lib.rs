//! Random intersection graphs of affiliation networks: simulation of the
//! actor graph, empirical degree-conditioned clustering, and numerical
//! evaluation of the limiting clustering curves with their tail asymptotics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod graphgen;
pub mod mixedpoisson;
pub mod pmf;
pub mod quad;
pub mod spectrum;
pub mod stoppedsum;
pub mod theory;
pub mod weights;

pub use error::{Error, Result};
pub use graphgen::{Generator, ProjectedGraph};
pub use pmf::Pmf;
pub use spectrum::ClusteringSpectrum;
pub use theory::ModelParams;
pub use weights::WeightLaw;
