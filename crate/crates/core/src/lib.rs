//! Deterministic padded hierarchies over weighted graphs, and the structures
//! built from them: ultrametric trees with constant-time LCA, approximate
//! distance oracles, low-stretch spanning tree collections produced by petal
//! decomposition, and a stateless compact routing scheme with a hop-by-hop
//! simulator.
//!
//! Everything is deterministic: ties break on the smaller vertex id, all
//! charging inequalities are evaluated in exact integer arithmetic, and the
//! recommended edge weights are integers or dyadic rationals so that every
//! threshold comparison is bit-exact.
//!
//! The core is generic over the scalar type via [`Weight`]; `*64` aliases at
//! the crate root pin the default `f64` instantiation.

pub mod arith;
pub mod codec;
pub mod forest;
pub mod gen;
pub mod graph;
pub mod oracle;
pub mod petal;
pub mod ramsey;
pub mod routing;
pub mod set;
pub mod ultrametric;
pub mod verify;
pub mod weight;

pub use graph::{DistanceField, GraphError, SubgraphView, WeightedGraph};
pub use ramsey::Hierarchy;
pub use ultrametric::{LcaIndex, UltrametricTree};
pub use weight::Weight;

/// Default `f64` instantiations.
pub type Graph64 = graph::WeightedGraph<f64>;
pub type Graph32 = graph::WeightedGraph<f32>;
pub type Hierarchy64 = ramsey::Hierarchy<f64>;
