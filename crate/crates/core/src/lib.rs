//! Geometric inhomogeneous random graphs: an expected-linear-time sampler,
//! hyperbolic random graphs through the same sampler, succinct adjacency
//! storage and structural statistics.
//!
//! Vertex ids are 0-based throughout the library; text files and the command
//! line use 1-based ids.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod hyperbolic;
pub mod io;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod spatial_index;
pub mod stats;
pub mod succinct;

pub use error::{GirgError, Result};
pub use geometry::{Positions, TorusPoint};
pub use graph::Graph;
pub use hyperbolic::{HyperbolicParams, PolarPoint};
pub use model::{Alpha, GirgParams, WeightSequence, WeightSpec};
pub use sampler::{sample_girg, sample_girg_naive, GirgSample, SamplerOptions};
pub use succinct::{encode_graph, CompressedGraph};
