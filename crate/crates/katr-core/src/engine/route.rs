//! Optimal visit-order search for a candidate POI set.
//!
//! Permutations are ranked by their Euclidean route distance (an admissible
//! lower bound on the graph distance). Graph distances are then computed in
//! that order until the next Euclidean distance already meets the best graph
//! distance found, at which point no remaining order can win. Leg distances
//! come from A* over the query overlay with the calibrated straight-line
//! heuristic, memoized per query.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use itertools::Itertools;

use crate::graph::{RoadNetwork, VertexId};
use crate::partition::PartitionIndex;
use crate::search_graph::{ArcKind, SearchGraph};

/// Visit orders of one CP-Set with their Euclidean route distances, sorted
/// ascending by (distance, order). Retained so the elimination bound and the
/// order search share one computation.
#[derive(Debug, Clone)]
pub struct PermutationTable {
    pub perms: Vec<(Vec<u8>, f64)>,
}

impl PermutationTable {
    /// Euclidean route distance of every visit order (just the pinned one in
    /// fixed-order mode). `vertices` are the CP-Set's POI locations aligned
    /// with the query keyword slots.
    pub fn build(
        net: &RoadNetwork,
        source: VertexId,
        destination: Option<VertexId>,
        vertices: &[VertexId],
        fixed_order: bool,
    ) -> PermutationTable {
        let m = vertices.len();
        let orders: Vec<Vec<u8>> = if fixed_order {
            vec![(0..m as u8).collect()]
        } else {
            (0..m as u8).permutations(m).collect()
        };
        let mut perms: Vec<(Vec<u8>, f64)> = orders
            .into_iter()
            .map(|order| {
                let mut ed = 0.0;
                let mut prev = source;
                for &slot in &order {
                    let v = vertices[slot as usize];
                    ed += net.euclid_lower_bound(prev, v);
                    prev = v;
                }
                if let Some(d) = destination {
                    ed += net.euclid_lower_bound(prev, d);
                }
                (order, ed)
            })
            .collect();
        perms.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        PermutationTable { perms }
    }

    /// Minimum Euclidean route distance over all orders.
    pub fn ed_min(&self) -> f64 {
        self.perms[0].1
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }
}

/// Per-query memo of shortest-path legs between pivot vertices.
#[derive(Debug, Default)]
pub struct LegCache {
    memo: HashMap<(VertexId, VertexId), (f64, Vec<VertexId>)>,
    /// Leg computations that actually ran a search (memo misses).
    pub computations: u64,
}

impl LegCache {
    pub fn new() -> LegCache {
        LegCache::default()
    }

    /// Exact shortest distance and expanded path between two overlay
    /// vertices. The overlay preserves original-graph distances, so this is
    /// the full-graph shortest distance.
    pub fn leg(
        &mut self,
        net: &RoadNetwork,
        pi: &PartitionIndex,
        sg: &SearchGraph,
        from: VertexId,
        to: VertexId,
    ) -> (f64, Vec<VertexId>) {
        if from == to {
            return (0.0, vec![from]);
        }
        let key = (from.min(to), from.max(to));
        if let Some((d, path)) = self.memo.get(&key) {
            return (*d, orient(path, from));
        }
        // The intra table gives an upper bound when both pivots share a
        // subgraph; shorter paths may still leave the subgraph, so it only
        // primes the search.
        let mut upper = f64::INFINITY;
        let sg_from = pi.subgraph_of(from);
        if sg_from == pi.subgraph_of(to) {
            upper = pi.subgraphs[sg_from].intra_distance(from, to);
        }
        self.computations += 1;
        let (dist, path) = astar(net, pi, sg, key.0, key.1, upper, None);
        self.memo.insert(key, (dist, path));
        let (d, path) = &self.memo[&key];
        (*d, orient(path, from))
    }

    /// Distance-only variant for inner loops.
    pub fn leg_distance(
        &mut self,
        net: &RoadNetwork,
        pi: &PartitionIndex,
        sg: &SearchGraph,
        from: VertexId,
        to: VertexId,
    ) -> f64 {
        self.leg(net, pi, sg, from, to).0
    }
}

fn orient(path: &[VertexId], from: VertexId) -> Vec<VertexId> {
    if path.first() == Some(&from) {
        path.to_vec()
    } else {
        path.iter().rev().copied().collect()
    }
}

/// A* over the overlay with the calibrated Euclidean heuristic (admissible
/// and consistent). `upper` prunes nodes whose f-value strictly exceeds a
/// known path length. `trace`, when given, records `(vertex, g, h)` at every
/// settle so tests can assert admissibility along the actual expansion.
/// Returns infinity and an empty path when unreachable.
fn astar(
    net: &RoadNetwork,
    pi: &PartitionIndex,
    sg: &SearchGraph,
    start: VertexId,
    goal: VertexId,
    upper: f64,
    mut trace: Option<&mut Vec<(VertexId, f64, f64)>>,
) -> (f64, Vec<VertexId>) {
    let (Some(src), Some(dst)) = (sg.overlay_index(start), sg.overlay_index(goal)) else {
        return (f64::INFINITY, Vec::new());
    };
    // Relative slack: g + h can exceed the true distance by a few ulps, and
    // a hard prune at an exact upper bound would cut the only optimal path.
    let upper = upper * (1.0 + 1e-9) + 1e-12;
    let n = sg.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<(usize, ArcKind)> = vec![(usize::MAX, ArcKind::Real); n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(AstarEntry {
        f: net.euclid_lower_bound(start, goal),
        g: 0.0,
        node: src,
    });
    while let Some(AstarEntry { g, node, .. }) = heap.pop() {
        if g > dist[node] {
            continue;
        }
        if let Some(t) = trace.as_deref_mut() {
            let global = sg.global_id(node);
            t.push((global, g, net.euclid_lower_bound(global, goal)));
        }
        if node == dst {
            return (g, expand_path(pi, sg, &pred, src, dst));
        }
        let u_global = sg.global_id(node);
        for arc in sg.arcs(node) {
            let ng = g + arc.weight;
            let to_global = sg.global_id(arc.to);
            if ng < dist[arc.to] {
                let h = net.euclid_lower_bound(to_global, goal);
                if ng + h > upper {
                    continue;
                }
                dist[arc.to] = ng;
                pred[arc.to] = (node, arc.kind);
                heap.push(AstarEntry {
                    f: ng + h,
                    g: ng,
                    node: arc.to,
                });
            } else if ng == dist[arc.to]
                && pred[arc.to].0 != usize::MAX
                && u_global < sg.global_id(pred[arc.to].0)
            {
                pred[arc.to] = (node, arc.kind);
            }
        }
    }
    (f64::INFINITY, Vec::new())
}

fn expand_path(
    pi: &PartitionIndex,
    sg: &SearchGraph,
    pred: &[(usize, ArcKind)],
    src: usize,
    dst: usize,
) -> Vec<VertexId> {
    let mut hops = Vec::new();
    let mut cur = dst;
    while cur != src {
        let (p, kind) = pred[cur];
        hops.push((sg.global_id(p), sg.global_id(cur), kind));
        cur = p;
    }
    hops.reverse();
    let mut path = vec![sg.global_id(src)];
    for (from, to, kind) in hops {
        let seg = sg.expand_arc(pi, from, to, kind);
        path.extend_from_slice(&seg[1..]);
    }
    path
}

#[derive(PartialEq)]
struct AstarEntry {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for AstarEntry {}

impl Ord for AstarEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for AstarEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of the order search for one CP-Set.
#[derive(Debug, Clone)]
pub struct EdrsResult {
    /// Winning visit order as keyword-slot indices.
    pub order: Vec<u8>,
    pub graph_distance: f64,
    /// Euclidean route distance of the winning order.
    pub euclid_distance: f64,
    pub path: Vec<VertexId>,
    /// Orders whose graph distance was computed.
    pub evaluated: u64,
}

/// Finds the CP-Set's shortest visit order. With `exhaustive` every order is
/// evaluated (the early stop is disabled); the result is identical either
/// way.
#[allow(clippy::too_many_arguments)]
pub fn edrs(
    net: &RoadNetwork,
    pi: &PartitionIndex,
    sg: &SearchGraph,
    cache: &mut LegCache,
    source: VertexId,
    destination: Option<VertexId>,
    vertices: &[VertexId],
    table: &PermutationTable,
    exhaustive: bool,
) -> EdrsResult {
    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0u64;
    for (i, (order, ed)) in table.perms.iter().enumerate() {
        if !exhaustive {
            if let Some((_, gd)) = best {
                if *ed >= gd {
                    break;
                }
            }
        }
        evaluated += 1;
        let mut gd = 0.0;
        let mut prev = source;
        for &slot in order {
            let v = vertices[slot as usize];
            gd += cache.leg_distance(net, pi, sg, prev, v);
            prev = v;
        }
        if let Some(d) = destination {
            gd += cache.leg_distance(net, pi, sg, prev, d);
        }
        if best.is_none_or(|(_, b)| gd < b) {
            best = Some((i, gd));
        }
    }
    let (idx, gd) = best.expect("permutation table is never empty");
    let (order, ed) = &table.perms[idx];
    let mut path = Vec::new();
    if gd.is_finite() {
        path.push(source);
        let mut prev = source;
        for &slot in order {
            let v = vertices[slot as usize];
            let (_, leg) = cache.leg(net, pi, sg, prev, v);
            path.extend_from_slice(&leg[1..]);
            prev = v;
        }
        if let Some(d) = destination {
            let (_, leg) = cache.leg(net, pi, sg, prev, d);
            path.extend_from_slice(&leg[1..]);
        }
    }
    EdrsResult {
        order: order.clone(),
        graph_distance: gd,
        euclid_distance: *ed,
        path,
        evaluated,
    }
}
