//! A loaded network plus its indexes, and the JSON rendering of query
//! results shared by the CLI and the HTTP service (so both emit identical
//! payloads).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{PruneCounters, QueryOutcome, RouteResult};
use crate::error::{KatrError, Result};
use crate::graph::{IngestReport, KeywordId, RoadNetwork, VertexId};
use crate::io;
use crate::partition::{partition, PartitionIndex};
use crate::poi::{build_poi_index, PoiInvertedIndex};

pub struct Dataset {
    pub net: RoadNetwork,
    pub partition: PartitionIndex,
    pub poi: PoiInvertedIndex,
    pub report: IngestReport,
}

impl Dataset {
    /// Loads the text files from `dir` and builds (or reuses) the partition
    /// cache next to them when `use_cache` is set. The cache is keyed on the
    /// content hash of the network files and rebuilt on mismatch.
    pub fn load(dir: &Path, partition_size: usize, seed: u64, use_cache: bool) -> Result<Dataset> {
        let (net, report, tags) = io::load_network_dir(dir)?;
        let pidx = if use_cache {
            let hash = io::network_files_hash(dir)?;
            let cache = cache_path(dir, partition_size, seed);
            match PartitionIndex::load(&cache, &hash) {
                Ok(loaded) => loaded,
                Err(err) => {
                    if cache.exists() {
                        log::info!("rebuilding partition cache: {err}");
                    }
                    let built = partition(&net, partition_size, seed)?;
                    built.save(&cache, &hash)?;
                    built
                }
            }
        } else {
            partition(&net, partition_size, seed)?
        };
        let poi = build_poi_index(&net, &pidx, &tags);
        Ok(Dataset {
            net,
            partition: pidx,
            poi,
            report,
        })
    }

    /// Builds a dataset from an in-memory network (tests, benches).
    pub fn from_network(
        net: RoadNetwork,
        partition_size: usize,
        seed: u64,
        tags: &HashMap<KeywordId, String>,
    ) -> Result<Dataset> {
        let pidx = partition(&net, partition_size, seed)?;
        let poi = build_poi_index(&net, &pidx, tags);
        Ok(Dataset {
            net,
            partition: pidx,
            poi,
            report: IngestReport::default(),
        })
    }

    pub fn resolve_vertex(&self, original: u64) -> Result<VertexId> {
        self.net
            .resolve_original(original)
            .ok_or(KatrError::UnknownVertex(original))
    }

    pub fn render_routes(&self, outcome: &QueryOutcome) -> RoutesPayload {
        RoutesPayload {
            routes: outcome
                .routes
                .iter()
                .enumerate()
                .map(|(i, r)| self.render_route(i, r))
                .collect(),
            counters: outcome.counters,
            partial: outcome.partial,
            infeasible_budget: outcome.infeasible_budget,
        }
    }

    fn render_route(&self, rank: usize, r: &RouteResult) -> RouteJson {
        let net = &self.net;
        RouteJson {
            rank: rank + 1,
            score: r.score,
            distance: net.denormalize_distance(r.graph_distance),
            distance_normalized: r.graph_distance,
            rating_sum: net.denormalize_rating(r.rating_sum),
            rating_sum_normalized: r.rating_sum,
            pois: r
                .visit_order
                .iter()
                .map(|&p| {
                    let poi = net.poi(p);
                    let v = net.vertex(poi.vertex);
                    RoutePoiJson {
                        keyword_id: poi.keyword,
                        tag: self
                            .poi
                            .tag(poi.keyword)
                            .unwrap_or_default()
                            .to_string(),
                        vertex: net.original_id(poi.vertex),
                        rating: net.denormalize_rating(poi.rating),
                        lon: v.lon,
                        lat: v.lat,
                    }
                })
                .collect(),
            path: r.path.iter().map(|&v| net.original_id(v)).collect(),
            path_coordinates: r
                .path
                .iter()
                .map(|&v| {
                    let vx = net.vertex(v);
                    (vx.lon, vx.lat)
                })
                .collect(),
        }
    }
}

fn cache_path(dir: &Path, partition_size: usize, seed: u64) -> PathBuf {
    dir.join(format!("partition-{partition_size}-{seed}.pidx"))
}

/// Deterministic route payload: a pure function of (dataset, query).
#[derive(Debug, Clone, Serialize)]
pub struct RoutesPayload {
    pub routes: Vec<RouteJson>,
    pub counters: PruneCounters,
    pub partial: bool,
    pub infeasible_budget: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteJson {
    pub rank: usize,
    pub score: f64,
    /// Raw input units.
    pub distance: f64,
    pub distance_normalized: f64,
    /// Raw rating units.
    pub rating_sum: f64,
    pub rating_sum_normalized: f64,
    /// POIs in visit order.
    pub pois: Vec<RoutePoiJson>,
    /// Expanded vertex path in original ids.
    pub path: Vec<u64>,
    pub path_coordinates: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutePoiJson {
    pub keyword_id: KeywordId,
    pub tag: String,
    pub vertex: u64,
    pub rating: f64,
    pub lon: f64,
    pub lat: f64,
}
