//! Per-query pruning counters and the optional trace events used by audits
//! and tests.

use serde::Serialize;

use crate::graph::{PoiId, SubgraphId};

/// Candidate counts at the pipeline stages: on the raw network (`rn`), inside
/// the established safe region (`sr`), after subgraph batch pruning (`bp`),
/// and through the permutation search (`cpr_*`). Counts never increase from
/// one stage to the next.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PruneCounters {
    /// Relevant subgraphs on the whole network.
    pub n_sg_rn: u64,
    /// Relevant subgraphs intersecting the established safe region.
    pub n_sg_sr: u64,
    /// Region subgraphs still requiring exploration at termination.
    pub n_sg_bp: u64,
    /// CP-Sets on the whole network (product of posting sizes).
    pub n_cps_rn: u64,
    /// CP-Sets inside the established safe region.
    pub n_cps_sr: u64,
    /// CP-Sets surviving batch pruning at termination.
    pub n_cps_bp: u64,
    /// Candidate routes of every CP-Set that reached the permutation search.
    pub n_cpr_sr: u64,
    /// Permutations whose graph distance was actually computed.
    pub n_cpr_edrs: u64,
    /// Vertices settled by the frontier.
    pub visited_vertices: u64,
    /// Shortest-path leg computations (memoized hits excluded).
    pub graph_distance_computations: u64,
}

impl PruneCounters {
    /// Stage monotonicity: RN >= SR >= BP for subgraphs and CP-Sets, and
    /// SR >= EDRS for candidate routes.
    pub fn stages_monotone(&self) -> bool {
        self.n_sg_rn >= self.n_sg_sr
            && self.n_sg_sr >= self.n_sg_bp
            && self.n_cps_rn >= self.n_cps_sr
            && self.n_cps_sr >= self.n_cps_bp
            && self.n_cpr_sr >= self.n_cpr_edrs
    }
}

/// Trace of the pruning decisions taken during a query, collected only when
/// requested. The soundness audit replays these against the brute-force
/// answer.
#[derive(Debug, Clone, PartialEq)]
pub enum PruneEvent {
    VertexSettled {
        vertex: usize,
        distance: f64,
    },
    CpSetEmitted {
        pois: Vec<PoiId>,
    },
    /// One fixpoint iteration while establishing the region.
    EstablishIteration {
        tau_u: Option<f64>,
        d_ub: f64,
    },
    RegionEstablished {
        d_ub: f64,
        region: Vec<SubgraphId>,
    },
    RegionRefined {
        d_ub: f64,
    },
    SubgraphBypassed {
        subgraph: SubgraphId,
        d_lb: f64,
        bound: f64,
        /// Unprocessed km-POIs eliminated by the bypass.
        eliminated: Vec<PoiId>,
    },
    CpSetEliminated {
        pois: Vec<PoiId>,
        bound: f64,
    },
}
