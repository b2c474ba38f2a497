//! Brute-force ground truth: every CP-Set times every visit order, scored
//! with exact shortest-path legs. No pruning of any kind. Used by the
//! acceptance suite to verify the engine bit by bit, with a second
//! independent all-pairs variant guarding against a shared single-source
//! bug.

use std::collections::HashMap;

use itertools::Itertools;

use crate::engine::{validate_query, Query, RouteResult};
use crate::error::{KatrError, Result};
use crate::graph::{path_from_pred, PoiId, RoadNetwork, VertexId, NO_PRED};

/// Cap on `#CP-Sets x permutations` to stop runaway enumerations.
pub const ENUMERATION_GUARD: u64 = 10_000_000;

/// Largest network the all-pairs variant accepts.
pub const FLOYD_WARSHALL_MAX_VERTICES: usize = 150;

#[derive(Debug)]
pub struct OracleResult {
    pub routes: Vec<RouteResult>,
    pub cp_sets_enumerated: u64,
    pub permutations_evaluated: u64,
}

trait LegSource {
    fn distance(&mut self, from: VertexId, to: VertexId) -> f64;
    fn path(&mut self, from: VertexId, to: VertexId) -> Vec<VertexId>;
}

/// Lazy single-source trees, one full Dijkstra per needed source.
struct DijkstraLegs<'a> {
    net: &'a RoadNetwork,
    trees: HashMap<VertexId, (Vec<f64>, Vec<VertexId>)>,
}

impl<'a> DijkstraLegs<'a> {
    fn tree(&mut self, s: VertexId) -> &(Vec<f64>, Vec<VertexId>) {
        self.trees
            .entry(s)
            .or_insert_with(|| self.net.dijkstra_full(s))
    }
}

impl LegSource for DijkstraLegs<'_> {
    fn distance(&mut self, from: VertexId, to: VertexId) -> f64 {
        self.tree(from).0[to]
    }

    fn path(&mut self, from: VertexId, to: VertexId) -> Vec<VertexId> {
        let (_, pred) = self.tree(from);
        path_from_pred(pred, from, to).unwrap_or_default()
    }
}

/// All-pairs tables from [`floyd_warshall`].
struct FloydWarshallLegs {
    n: usize,
    dist: Vec<f64>,
    next: Vec<usize>,
}

impl LegSource for FloydWarshallLegs {
    fn distance(&mut self, from: VertexId, to: VertexId) -> f64 {
        self.dist[from * self.n + to]
    }

    fn path(&mut self, from: VertexId, to: VertexId) -> Vec<VertexId> {
        if !self.dist[from * self.n + to].is_finite() {
            return Vec::new();
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self.next[cur * self.n + to];
            path.push(cur);
        }
        path
    }
}

/// All-pairs shortest distances plus next-hop matrix, `O(n^3)`.
pub fn floyd_warshall(net: &RoadNetwork) -> (Vec<f64>, Vec<usize>) {
    let n = net.vertex_count();
    let mut dist = vec![f64::INFINITY; n * n];
    let mut next = vec![NO_PRED; n * n];
    for v in 0..n {
        dist[v * n + v] = 0.0;
        next[v * n + v] = v;
    }
    for u in 0..n {
        for &(v, w) in net.neighbors(u) {
            if w < dist[u * n + v] {
                dist[u * n + v] = w;
                next[u * n + v] = v;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + dist[k * n + j];
                if through < dist[i * n + j] {
                    dist[i * n + j] = through;
                    next[i * n + j] = next[i * n + k];
                }
            }
        }
    }
    (dist, next)
}

/// Exhaustive top-k with single-source Dijkstra legs.
pub fn oracle_topk(net: &RoadNetwork, q: &Query) -> Result<OracleResult> {
    validate_query(net, q)?;
    let mut legs = DijkstraLegs {
        net,
        trees: HashMap::new(),
    };
    enumerate(net, q, &mut legs)
}

/// Exhaustive top-k with Floyd-Warshall legs; the independent second oracle
/// for very small networks.
pub fn oracle_topk_floyd_warshall(net: &RoadNetwork, q: &Query) -> Result<OracleResult> {
    validate_query(net, q)?;
    if net.vertex_count() > FLOYD_WARSHALL_MAX_VERTICES {
        return Err(KatrError::InvalidQuery(format!(
            "all-pairs oracle capped at {FLOYD_WARSHALL_MAX_VERTICES} vertices"
        )));
    }
    let (dist, next) = floyd_warshall(net);
    let mut legs = FloydWarshallLegs {
        n: net.vertex_count(),
        dist,
        next,
    };
    enumerate(net, q, &mut legs)
}

fn enumerate(net: &RoadNetwork, q: &Query, legs: &mut impl LegSource) -> Result<OracleResult> {
    let m = q.keywords.len();
    let postings: Vec<Vec<PoiId>> = q
        .keywords
        .iter()
        .map(|&kw| {
            (0..net.pois().len())
                .filter(|&p| net.poi(p).keyword == kw)
                .collect()
        })
        .collect();
    let n_sets = postings
        .iter()
        .fold(1u64, |acc, p| acc.saturating_mul(p.len() as u64));
    let orders: Vec<Vec<usize>> = if q.fixed_order {
        vec![(0..m).collect()]
    } else {
        (0..m).permutations(m).collect()
    };
    let projected = n_sets.saturating_mul(orders.len() as u64);
    if projected > ENUMERATION_GUARD {
        return Err(KatrError::EnumerationTooLarge {
            cp_sets: n_sets,
            permutations: projected,
            guard: ENUMERATION_GUARD,
        });
    }
    let budget_norm = q.distance_budget.map(|b| net.normalize_distance(b));

    let mut permutations_evaluated = 0u64;
    let mut candidates: Vec<RouteResult> = Vec::new();
    let mut choice = vec![0usize; m];
    loop {
        let pois: Vec<PoiId> = choice
            .iter()
            .enumerate()
            .map(|(s, &i)| postings[s][i])
            .collect();
        let vertices: Vec<VertexId> = pois.iter().map(|&p| net.poi(p).vertex).collect();
        let tau: f64 = pois.iter().map(|&p| net.poi(p).rating).sum();

        // Best visit order: minimum distance, exact ties resolved by the
        // lexicographically smaller expanded path.
        let mut per_order: Vec<(f64, &Vec<usize>)> = Vec::with_capacity(orders.len());
        for order in &orders {
            permutations_evaluated += 1;
            let mut dist = 0.0;
            let mut prev = q.source;
            for &slot in order {
                dist += legs.distance(prev, vertices[slot]);
                prev = vertices[slot];
            }
            if let Some(d) = q.destination {
                dist += legs.distance(prev, d);
            }
            per_order.push((dist, order));
        }
        let min_dist = per_order
            .iter()
            .map(|&(d, _)| d)
            .fold(f64::INFINITY, f64::min);
        let feasible = min_dist.is_finite() && budget_norm.is_none_or(|b| min_dist <= b);
        if feasible {
            let mut best: Option<(Vec<VertexId>, &Vec<usize>)> = None;
            for &(_, order) in per_order.iter().filter(|&&(d, _)| d == min_dist) {
                let path = expand(q, legs, &vertices, order);
                if best.as_ref().is_none_or(|(p, _)| path < *p) {
                    best = Some((path, order));
                }
            }
            let (path, order) = best.expect("at least one minimal order");
            let mut euclid = 0.0;
            let mut prev = q.source;
            for &slot in order {
                euclid += net.euclid_lower_bound(prev, vertices[slot]);
                prev = vertices[slot];
            }
            if let Some(d) = q.destination {
                euclid += net.euclid_lower_bound(prev, d);
            }
            candidates.push(RouteResult {
                visit_order: order.iter().map(|&s| pois[s]).collect(),
                pois,
                graph_distance: min_dist,
                euclid_distance: euclid,
                rating_sum: tau,
                score: crate::engine::score(q.alpha, min_dist, tau),
                path,
            });
        }

        // Odometer over the per-keyword choices.
        let mut slot = 0;
        while slot < m {
            choice[slot] += 1;
            if choice[slot] < postings[slot].len() {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
        if slot == m {
            break;
        }
    }

    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.graph_distance.total_cmp(&b.graph_distance))
            .then_with(|| a.path.cmp(&b.path))
    });
    candidates.truncate(q.k);
    Ok(OracleResult {
        routes: candidates,
        cp_sets_enumerated: n_sets,
        permutations_evaluated,
    })
}

fn expand(
    q: &Query,
    legs: &mut impl LegSource,
    vertices: &[VertexId],
    order: &[usize],
) -> Vec<VertexId> {
    let mut path = vec![q.source];
    let mut prev = q.source;
    for &slot in order {
        let leg = legs.path(prev, vertices[slot]);
        path.extend_from_slice(&leg[1..]);
        prev = vertices[slot];
    }
    if let Some(d) = q.destination {
        let leg = legs.path(prev, d);
        path.extend_from_slice(&leg[1..]);
    }
    path
}
