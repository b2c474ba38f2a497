//! Query-specific overlay: subgraphs holding query-keyword POIs are kept
//! whole, all others collapse to their border vertices joined by intra
//! shortcuts. Shortest distances between overlay vertices match the original
//! graph exactly.

use std::collections::{BTreeSet, HashMap};

use crate::error::{KatrError, Result};
use crate::graph::{KeywordId, PoiId, RoadNetwork, SubgraphId, VertexId};
use crate::partition::PartitionIndex;
use crate::poi::PoiInvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    Real,
    /// Stands for the shortest intra path of `subgraph` between its
    /// endpoints; expanded back to the vertex sequence on demand.
    Shortcut { subgraph: SubgraphId },
}

#[derive(Debug, Clone, Copy)]
pub struct OverlayArc {
    pub to: usize,
    pub weight: f64,
    pub kind: ArcKind,
}

/// The overlay graph for one query, owned by that query's execution.
#[derive(Debug)]
pub struct SearchGraph {
    /// Subgraphs containing at least one km-POI.
    pub relevant: BTreeSet<SubgraphId>,
    /// Global ids of overlay vertices, ascending.
    nodes: Vec<VertexId>,
    node_index: HashMap<VertexId, usize>,
    adjacency: Vec<Vec<OverlayArc>>,
    /// POIs matching each query keyword, aligned with the query's keyword
    /// order.
    pub km_pois: Vec<Vec<PoiId>>,
    pub query_vertex: VertexId,
    pub destination: Option<VertexId>,
}

/// Builds the overlay for query vertex `source`, keywords `keywords`, and an
/// optional destination pivot. Fails when a keyword has no POI anywhere.
pub fn build_search_graph(
    net: &RoadNetwork,
    pi: &PartitionIndex,
    idx: &PoiInvertedIndex,
    source: VertexId,
    keywords: &[KeywordId],
    destination: Option<VertexId>,
) -> Result<SearchGraph> {
    let mut km_pois = Vec::with_capacity(keywords.len());
    let mut relevant = BTreeSet::new();
    for &kw in keywords {
        let pois = idx.postings(kw).to_vec();
        if pois.is_empty() {
            return Err(KatrError::Uncoverable {
                keyword: kw,
                in_region: false,
            });
        }
        relevant.extend(idx.subgraphs_with(kw).iter().copied());
        km_pois.push(pois);
    }

    let mut node_set: BTreeSet<VertexId> = BTreeSet::new();
    node_set.insert(source);
    if let Some(d) = destination {
        node_set.insert(d);
    }
    for sg in &pi.subgraphs {
        if relevant.contains(&sg.id) {
            node_set.extend(sg.members.iter().copied());
        } else {
            node_set.extend(sg.borders.iter().copied());
        }
    }
    let nodes: Vec<VertexId> = node_set.into_iter().collect();
    let node_index: HashMap<VertexId, usize> =
        nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut graph = SearchGraph {
        relevant,
        adjacency: vec![Vec::new(); nodes.len()],
        nodes,
        node_index,
        km_pois,
        query_vertex: source,
        destination,
    };

    // Intra edges of relevant subgraphs.
    let relevant: Vec<SubgraphId> = graph.relevant.iter().copied().collect();
    for sg_id in relevant {
        for &u in &pi.subgraphs[sg_id].members {
            for &(v, w) in net.neighbors(u) {
                if u < v && pi.subgraph_of(v) == sg_id {
                    graph.push_edge(u, v, w, ArcKind::Real);
                }
            }
        }
    }
    // External edges survive regardless of relevance; chains of collapsed
    // subgraphs stay connected through them.
    for &(u, v, w) in &pi.external_edges {
        graph.push_edge(u, v, w, ArcKind::Real);
    }
    // Border shortcuts inside collapsed subgraphs.
    for sg in &pi.subgraphs {
        if graph.relevant.contains(&sg.id) {
            continue;
        }
        for (u, v, d) in pi.border_shortcuts(sg.id)? {
            graph.push_edge(u, v, d, ArcKind::Shortcut { subgraph: sg.id });
        }
    }
    // Pivots sitting inside a collapsed subgraph get shortcuts to its borders
    // (and to each other when co-resident).
    let mut pivots = vec![source];
    pivots.extend(destination);
    pivots.dedup();
    for (i, &p) in pivots.iter().enumerate() {
        let sg_id = pi.subgraph_of(p);
        if graph.relevant.contains(&sg_id) {
            continue;
        }
        let sg = &pi.subgraphs[sg_id];
        for &b in &sg.borders {
            if b == p {
                continue;
            }
            let d = sg.intra_distance(p, b);
            if d.is_finite() {
                graph.push_edge(p, b, d, ArcKind::Shortcut { subgraph: sg_id });
            }
        }
        for &q in &pivots[i + 1..] {
            if q != p && pi.subgraph_of(q) == sg_id && !sg.is_border(p) && !sg.is_border(q) {
                let d = sg.intra_distance(p, q);
                if d.is_finite() {
                    graph.push_edge(p, q, d, ArcKind::Shortcut { subgraph: sg_id });
                }
            }
        }
    }
    Ok(graph)
}

impl SearchGraph {
    fn push_edge(&mut self, u: VertexId, v: VertexId, w: f64, kind: ArcKind) {
        let iu = self.node_index[&u];
        let iv = self.node_index[&v];
        self.adjacency[iu].push(OverlayArc {
            to: iv,
            weight: w,
            kind,
        });
        self.adjacency[iv].push(OverlayArc {
            to: iu,
            weight: w,
            kind,
        });
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.node_index.contains_key(&v)
    }

    pub fn overlay_index(&self, v: VertexId) -> Option<usize> {
        self.node_index.get(&v).copied()
    }

    pub fn global_id(&self, overlay: usize) -> VertexId {
        self.nodes[overlay]
    }

    pub fn arcs(&self, overlay: usize) -> &[OverlayArc] {
        &self.adjacency[overlay]
    }

    /// Appends the border shortcuts of `subgraph` (plus rows for the given
    /// interior pivots, typically the query vertex or destination when they
    /// live inside it). Used when exploration decides to bypass a subgraph;
    /// the added edges are returned so the caller can re-relax endpoints that
    /// settled before the shortcuts existed.
    pub fn add_bypass_shortcuts(
        &mut self,
        pi: &PartitionIndex,
        subgraph: SubgraphId,
        interior_pivots: &[VertexId],
    ) -> Result<Vec<(VertexId, VertexId, f64)>> {
        let mut added = pi.border_shortcuts(subgraph)?;
        let sg = pi.subgraph(subgraph)?;
        for &p in interior_pivots {
            if sg.local_index(p).is_none() || sg.is_border(p) {
                continue;
            }
            for &b in &sg.borders {
                let d = sg.intra_distance(p, b);
                if d.is_finite() {
                    added.push((p, b, d));
                }
            }
        }
        for &(u, v, d) in &added {
            self.push_edge(u, v, d, ArcKind::Shortcut { subgraph });
        }
        Ok(added)
    }

    /// Expands an arc `from -> to` into the full vertex sequence, including
    /// both endpoints.
    pub fn expand_arc(
        &self,
        pi: &PartitionIndex,
        from: VertexId,
        to: VertexId,
        kind: ArcKind,
    ) -> Vec<VertexId> {
        match kind {
            ArcKind::Real => vec![from, to],
            ArcKind::Shortcut { subgraph } => pi.subgraphs[subgraph]
                .intra_path(from, to)
                .unwrap_or_else(|| vec![from, to]),
        }
    }
}

/// Plain Dijkstra over the overlay, returning distances keyed by global ids.
/// Used by fidelity tests and the skeleton-free fallback paths.
pub fn dijkstra_overlay(sg: &SearchGraph, from: VertexId) -> HashMap<VertexId, f64> {
    let Some(src) = sg.overlay_index(from) else {
        return HashMap::new();
    };
    let mut dist = vec![f64::INFINITY; sg.len()];
    let mut heap = std::collections::BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(crate::graph::MinEntry {
        dist: 0.0,
        vertex: src,
    });
    while let Some(crate::graph::MinEntry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for arc in sg.arcs(u) {
            let nd = d + arc.weight;
            if nd < dist[arc.to] {
                dist[arc.to] = nd;
                heap.push(crate::graph::MinEntry {
                    dist: nd,
                    vertex: arc.to,
                });
            }
        }
    }
    sg.nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| dist[i].is_finite())
        .map(|(i, &v)| (v, dist[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{from_assignment, partition};
    use crate::poi::build_poi_index;
    use crate::testkit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap as StdHashMap;

    #[test]
    fn all_relevant_overlay_is_the_original_graph() {
        let net = testkit::random_poi_net(51, 40, 4, 2, 20, 1.0, 9.0);
        let pi = partition(&net, 8, 0).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        // 20 POIs per keyword over 40 vertices: essentially every subgraph is
        // relevant; pick a seed where that holds.
        let sg = build_search_graph(&net, &pi, &idx, 0, &[1, 2], None).unwrap();
        if sg.relevant.len() == pi.subgraphs.len() {
            assert_eq!(sg.len(), net.vertex_count());
            let shortcuts = (0..sg.len())
                .flat_map(|i| sg.arcs(i))
                .filter(|a| a.kind != ArcKind::Real)
                .count();
            assert_eq!(shortcuts, 0);
        }
    }

    #[test]
    fn irrelevant_subgraph_keeps_only_borders() {
        // Line of 9 vertices in three cells; km-POIs only in the outer cells.
        let coords: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 0.0)).collect();
        let edges: Vec<(usize, usize, f64)> = (0..8).map(|i| (i, i + 1, 1.0)).collect();
        let pois = [(1, 1, 5.0), (8, 2, 5.0)];
        let net = crate::graph::RoadNetwork::from_parts(&coords, &edges, &pois).unwrap();
        let pi = from_assignment(&net, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        let sg = build_search_graph(&net, &pi, &idx, 0, &[1, 2], None).unwrap();
        // Middle cell {3,4,5} is irrelevant: interior vertex 4 vanishes.
        assert!(!sg.contains(4));
        assert!(sg.contains(3) && sg.contains(5));
        assert_eq!(sg.len(), net.vertex_count() - 1);
        // Its borders are joined by a shortcut of the interior length.
        let i3 = sg.overlay_index(3).unwrap();
        let shortcut = sg
            .arcs(i3)
            .iter()
            .find(|a| a.kind == ArcKind::Shortcut { subgraph: 1 })
            .expect("border shortcut must exist");
        assert_eq!(sg.global_id(shortcut.to), 5);
        assert_eq!(shortcut.weight, 2.0);
        assert_eq!(sg.expand_arc(&pi, 3, 5, shortcut.kind), vec![3, 4, 5]);
    }

    #[test]
    fn query_vertex_in_collapsed_subgraph_gets_shortcuts() {
        let coords: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 0.0)).collect();
        let edges: Vec<(usize, usize, f64)> = (0..8).map(|i| (i, i + 1, 1.0)).collect();
        let pois = [(1, 1, 5.0), (8, 2, 5.0)];
        let net = crate::graph::RoadNetwork::from_parts(&coords, &edges, &pois).unwrap();
        let pi = from_assignment(&net, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        // Query from vertex 4, the interior of the irrelevant middle cell.
        let sg = build_search_graph(&net, &pi, &idx, 4, &[1, 2], None).unwrap();
        assert!(sg.contains(4));
        let dist = dijkstra_overlay(&sg, 4);
        assert_eq!(dist[&1], net.shortest_distance(4, 1).unwrap());
        assert_eq!(dist[&8], net.shortest_distance(4, 8).unwrap());
    }

    #[test]
    fn km_pois_cover_exactly_the_query_keywords() {
        let net = testkit::random_poi_net(53, 50, 4, 4, 5, 1.0, 9.0);
        let pi = partition(&net, 8, 1).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        let sg = build_search_graph(&net, &pi, &idx, 3, &[2, 4], None).unwrap();
        for (slot, &kw) in [2u32, 4u32].iter().enumerate() {
            let mut got = sg.km_pois[slot].clone();
            got.sort_unstable();
            let mut expect: Vec<PoiId> = (0..net.pois().len())
                .filter(|&p| net.poi(p).keyword == kw)
                .collect();
            expect.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn uncoverable_keyword_is_rejected_with_its_id() {
        let net = testkit::random_poi_net(57, 30, 4, 2, 3, 1.0, 9.0);
        let pi = partition(&net, 8, 0).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        match build_search_graph(&net, &pi, &idx, 0, &[1, 77], None) {
            Err(KatrError::Uncoverable { keyword: 77, .. }) => {}
            other => panic!("expected uncoverable, got {other:?}"),
        }
    }

    #[test]
    fn overlay_is_never_larger_and_shrinks_when_interiors_exist() {
        let net = testkit::random_poi_net(59, 120, 4, 6, 2, 1.0, 9.0);
        let pi = partition(&net, 10, 2).unwrap();
        let idx = build_poi_index(&net, &pi, &StdHashMap::new());
        let sg = build_search_graph(&net, &pi, &idx, 0, &[1], None).unwrap();
        assert!(sg.len() <= net.vertex_count());
        let has_interior = pi
            .subgraphs
            .iter()
            .filter(|s| !sg.relevant.contains(&s.id))
            .any(|s| {
                s.members
                    .iter()
                    .any(|&v| !s.is_border(v) && v != 0)
            });
        if has_interior {
            assert!(sg.len() < net.vertex_count());
        }
    }

    #[test]
    fn overlay_distances_match_original_exactly() {
        // Dyadic weights make path sums associativity-proof, so equality is
        // exact.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for round in 0..50 {
            let net = testkit::random_poi_net(round, 60, 4, 3, 3, 1.0, 9.0);
            let pi = partition(&net, rng.gen_range(4..12), round).unwrap();
            let idx = build_poi_index(&net, &pi, &StdHashMap::new());
            let source = rng.gen_range(0..net.vertex_count());
            let sg = build_search_graph(&net, &pi, &idx, source, &[1, 2], None).unwrap();
            let overlay = dijkstra_overlay(&sg, source);
            let (full, _) = net.dijkstra_full(source);
            let mut checked = 0;
            let mut guard = 0;
            while checked < 10 && guard < 1000 {
                guard += 1;
                let v = rng.gen_range(0..net.vertex_count());
                if !sg.contains(v) {
                    continue;
                }
                checked += 1;
                assert_eq!(
                    overlay[&v], full[v],
                    "round {round}: overlay distance to {v} diverged"
                );
            }
        }
    }
}
