//! Keyword-aware top-k route query engine over road networks.
//!
//! Given a start vertex and a set of keywords, the engine returns the k best
//! routes through POIs covering all keywords in any order, scored by a
//! weighted trade-off of route distance and cumulative POI ratings. Query
//! processing is exact and uses an explore-and-bound pipeline: a distance
//! radius around the start that provably contains the answers, batch pruning
//! of whole subgraphs, per-candidate score bounds, and a Euclidean-ordered
//! permutation search for the best visit order.

pub mod bench;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod partition;
pub mod poi;
pub mod search_graph;
pub mod synth;
pub mod testkit;

pub use error::{KatrError, Result};
pub use graph::{KeywordId, Poi, PoiId, RoadNetwork, SubgraphId, Vertex, VertexId};
