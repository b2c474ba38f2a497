use crate::graph::{KeywordId, VertexId};

pub type Result<T> = std::result::Result<T, KatrError>;

#[derive(Debug, thiserror::Error)]
pub enum KatrError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at {file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("empty graph: no vertices")]
    EmptyGraph,
    #[error("edge {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(u64),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("invalid partition size {0}: must be at least 2")]
    InvalidPartitionSize(usize),
    #[error("unknown subgraph id {0}")]
    UnknownSubgraph(usize),
    #[error("partition assignment is inconsistent: {0}")]
    InvalidAssignment(String),
    #[error("index cache rejected: {0}")]
    IndexCache(String),
    #[error("keyword {keyword} has no POI{}", scope_suffix(.in_region))]
    Uncoverable { keyword: KeywordId, in_region: bool },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("destination vertex {0} is unreachable")]
    DestinationUnreachable(VertexId),
    #[error("enumeration too large: {cp_sets} CP-Sets x {permutations} permutations exceeds guard {guard}")]
    EnumerationTooLarge {
        cp_sets: u64,
        permutations: u64,
        guard: u64,
    },
    #[error("infeasible generator parameters: {0}")]
    InfeasibleGenerator(String),
    #[error("empty benchmark input")]
    EmptyBench,
}

fn scope_suffix(in_region: &bool) -> &'static str {
    if *in_region {
        " in the restricted region"
    } else {
        ""
    }
}
