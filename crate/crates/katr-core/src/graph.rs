//! Road-network data model, normalization, and exact shortest-distance
//! primitives.
//!
//! A [`RoadNetwork`] is immutable after construction; every read operation is
//! safe to call concurrently.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{KatrError, Result};

pub type VertexId = usize;
pub type KeywordId = u32;
pub type PoiId = usize;
pub type SubgraphId = usize;

/// Sentinel for "no predecessor" in shortest-path trees.
pub const NO_PRED: VertexId = usize::MAX;

/// Intersection with planar coordinates. Ids are dense `0..n` after ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub lon: f64,
    pub lat: f64,
}

/// A point of interest pinned to a vertex. One keyword per record; a location
/// tagged with several keywords is modeled as several co-located records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub vertex: VertexId,
    pub keyword: KeywordId,
    pub rating: f64,
}

/// Unnormalized network as parsed from the text formats. Vertex ids are the
/// caller's and may be sparse; `normalize` maps them onto dense indices.
#[derive(Debug, Default, Clone)]
pub struct RawNetwork {
    pub vertices: Vec<(u64, f64, f64)>,
    pub edges: Vec<(u64, u64, f64)>,
    pub pois: Vec<(u64, KeywordId, f64)>,
}

/// What ingestion had to drop or merge to satisfy the network invariants.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub dropped_components: usize,
    pub dropped_vertices: usize,
    pub dropped_pois: usize,
    pub dropped_self_loops: usize,
    pub merged_parallel_edges: usize,
}

/// Connected, normalized road network with attached POIs.
///
/// Edge weights live in `(0, 1]` and ratings in `[0, 10]` after [`normalize`];
/// the scale factors needed to recover raw units are kept on the struct.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<(VertexId, f64)>>,
    edge_count: usize,
    pois: Vec<Poi>,
    pois_at: HashMap<VertexId, Vec<PoiId>>,
    original_ids: Vec<u64>,
    original_index: HashMap<u64, VertexId>,
    /// raw distance = normalized distance * weight_scale
    pub weight_scale: f64,
    /// raw rating = normalized rating * rating_scale
    pub rating_scale: f64,
    euclid_coeff: f64,
}

/// Scales raw inputs into the engine's working ranges and keeps the largest
/// connected component.
///
/// Edge weights are divided by the maximum raw weight, ratings are mapped by
/// `r -> 10 * r / r_max`, so the rating range is ten times the edge-weight
/// range. Self-loops are dropped and parallel edges merged keeping the
/// lightest; both are counted in the report.
pub fn normalize(raw: &RawNetwork) -> Result<(RoadNetwork, IngestReport)> {
    if raw.vertices.is_empty() {
        return Err(KatrError::EmptyGraph);
    }
    let mut report = IngestReport::default();

    let mut index: HashMap<u64, usize> = HashMap::with_capacity(raw.vertices.len());
    for &(id, lon, lat) in &raw.vertices {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(KatrError::InvalidQuery(format!(
                "vertex {id} has non-finite coordinates"
            )));
        }
        if index.insert(id, index.len()).is_some() {
            return Err(KatrError::DuplicateVertex(id));
        }
    }

    let mut max_weight = 0.0_f64;
    let mut edges: HashMap<(usize, usize), f64> = HashMap::with_capacity(raw.edges.len());
    for (i, &(u, v, w)) in raw.edges.iter().enumerate() {
        if w <= 0.0 || !w.is_finite() {
            return Err(KatrError::NonPositiveWeight {
                index: i,
                weight: w,
            });
        }
        let &ui = index.get(&u).ok_or(KatrError::UnknownVertex(u))?;
        let &vi = index.get(&v).ok_or(KatrError::UnknownVertex(v))?;
        if ui == vi {
            report.dropped_self_loops += 1;
            continue;
        }
        max_weight = max_weight.max(w);
        let key = (ui.min(vi), ui.max(vi));
        match edges.entry(key) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                report.merged_parallel_edges += 1;
                if w < *e.get() {
                    e.insert(w);
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(w);
            }
        }
    }

    // Largest connected component; everything else is dropped and reported.
    let n = raw.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(ui, vi) in edges.keys() {
        adj[ui].push(vi);
        adj[vi].push(ui);
    }
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[start] = n_comp;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = n_comp;
                    queue.push_back(v);
                }
            }
        }
        n_comp += 1;
    }
    let mut sizes = vec![0usize; n_comp];
    for &c in &comp {
        sizes[c] += 1;
    }
    let keep = sizes
        .iter()
        .enumerate()
        .max_by_key(|&(c, s)| (*s, std::cmp::Reverse(c)))
        .map(|(c, _)| c)
        .unwrap();
    report.dropped_components = n_comp - 1;
    report.dropped_vertices = n - sizes[keep];
    if report.dropped_vertices > 0 {
        log::warn!(
            "dropping {} vertices in {} non-largest components",
            report.dropped_vertices,
            report.dropped_components
        );
    }

    let mut dense = vec![usize::MAX; n];
    let mut vertices = Vec::with_capacity(sizes[keep]);
    let mut original_ids = Vec::with_capacity(sizes[keep]);
    for (old, &(id, lon, lat)) in raw.vertices.iter().enumerate() {
        if comp[old] == keep {
            dense[old] = vertices.len();
            vertices.push(Vertex {
                id: vertices.len(),
                lon,
                lat,
            });
            original_ids.push(id);
        }
    }

    let weight_scale = if max_weight > 0.0 { max_weight } else { 1.0 };
    let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); vertices.len()];
    let mut edge_count = 0;
    for (&(ui, vi), &w) in &edges {
        if comp[ui] != keep {
            continue;
        }
        let (a, b) = (dense[ui], dense[vi]);
        let wn = w / weight_scale;
        adjacency[a].push((b, wn));
        adjacency[b].push((a, wn));
        edge_count += 1;
    }
    for list in &mut adjacency {
        list.sort_by_key(|e| e.0);
    }

    let mut max_rating = 0.0_f64;
    for &(_, _, r) in &raw.pois {
        if r < 0.0 || !r.is_finite() {
            return Err(KatrError::InvalidQuery(format!(
                "negative or non-finite POI rating {r}"
            )));
        }
        max_rating = max_rating.max(r);
    }
    let mut pois = Vec::new();
    for &(vid, keyword, rating) in &raw.pois {
        let &old = index.get(&vid).ok_or(KatrError::UnknownVertex(vid))?;
        if comp[old] != keep {
            report.dropped_pois += 1;
            continue;
        }
        // r_max == 0 degenerates to the identical-rating case: map all to 10.
        let rating = if max_rating > 0.0 {
            rating / max_rating * 10.0
        } else {
            10.0
        };
        pois.push(Poi {
            vertex: dense[old],
            keyword,
            rating,
        });
    }
    let rating_scale = max_rating / 10.0;

    Ok((
        RoadNetwork::assemble(
            vertices,
            adjacency,
            edge_count,
            pois,
            original_ids,
            weight_scale,
            rating_scale,
        ),
        report,
    ))
}

impl RoadNetwork {
    /// Builds a network from already-scaled parts with dense `0..n` ids.
    /// The graph must be connected. Scales are identity.
    pub fn from_parts(
        coords: &[(f64, f64)],
        edges: &[(VertexId, VertexId, f64)],
        pois: &[(VertexId, KeywordId, f64)],
    ) -> Result<RoadNetwork> {
        if coords.is_empty() {
            return Err(KatrError::EmptyGraph);
        }
        let n = coords.len();
        let vertices = coords
            .iter()
            .enumerate()
            .map(|(id, &(lon, lat))| Vertex { id, lon, lat })
            .collect::<Vec<_>>();
        let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(KatrError::UnknownVertex(u.max(v) as u64));
            }
            if u == v {
                return Err(KatrError::InvalidAssignment(format!("self-loop at {u}")));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(KatrError::NonPositiveWeight {
                    index: i,
                    weight: w,
                });
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.0);
        }
        let pois = pois
            .iter()
            .map(|&(vertex, keyword, rating)| {
                if vertex >= n {
                    return Err(KatrError::UnknownVertex(vertex as u64));
                }
                Ok(Poi {
                    vertex,
                    keyword,
                    rating,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let net = RoadNetwork::assemble(
            vertices,
            adjacency,
            edges.len(),
            pois,
            (0..n as u64).collect(),
            1.0,
            1.0,
        );
        // Reachability check from vertex 0.
        let dist = net.dijkstra_full(0).0;
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(KatrError::Disconnected);
        }
        Ok(net)
    }

    fn assemble(
        vertices: Vec<Vertex>,
        adjacency: Vec<Vec<(VertexId, f64)>>,
        edge_count: usize,
        pois: Vec<Poi>,
        original_ids: Vec<u64>,
        weight_scale: f64,
        rating_scale: f64,
    ) -> RoadNetwork {
        let mut pois_at: HashMap<VertexId, Vec<PoiId>> = HashMap::new();
        for (id, poi) in pois.iter().enumerate() {
            pois_at.entry(poi.vertex).or_default().push(id);
        }
        let original_index = original_ids
            .iter()
            .enumerate()
            .map(|(dense, &orig)| (orig, dense))
            .collect();
        let euclid_coeff = calibrate_euclid(&vertices, &adjacency);
        RoadNetwork {
            vertices,
            adjacency,
            edge_count,
            pois,
            pois_at,
            original_ids,
            original_index,
            weight_scale,
            rating_scale,
            euclid_coeff,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v]
    }

    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }

    pub fn poi(&self, id: PoiId) -> &Poi {
        &self.pois[id]
    }

    pub fn pois_at_vertex(&self, v: VertexId) -> &[PoiId] {
        self.pois_at.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn original_id(&self, v: VertexId) -> u64 {
        self.original_ids[v]
    }

    pub fn resolve_original(&self, id: u64) -> Option<VertexId> {
        self.original_index.get(&id).copied()
    }

    pub fn denormalize_distance(&self, d: f64) -> f64 {
        d * self.weight_scale
    }

    pub fn denormalize_rating(&self, r: f64) -> f64 {
        r * self.rating_scale
    }

    pub fn normalize_distance(&self, raw: f64) -> f64 {
        raw / self.weight_scale
    }

    /// Global calibration coefficient for the Euclidean lower bound.
    pub fn euclid_coeff(&self) -> f64 {
        self.euclid_coeff
    }

    pub fn coord_distance(&self, u: VertexId, v: VertexId) -> f64 {
        let a = &self.vertices[u];
        let b = &self.vertices[v];
        (a.lon - b.lon).hypot(a.lat - b.lat)
    }

    /// Admissible lower bound on `shortest_distance(s, t)`: the calibrated
    /// straight-line distance. Zero is returned for co-located pairs and on
    /// degenerate calibrations, which keeps the bound valid everywhere.
    pub fn euclid_lower_bound(&self, s: VertexId, t: VertexId) -> f64 {
        self.euclid_coeff * self.coord_distance(s, t)
    }

    /// Exact shortest distance via Dijkstra with early exit; `None` when `t`
    /// is unreachable from `s`.
    pub fn shortest_distance(&self, s: VertexId, t: VertexId) -> Option<f64> {
        if s == t {
            return Some(0.0);
        }
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(MinEntry {
            dist: 0.0,
            vertex: s,
        });
        while let Some(MinEntry { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == t {
                return Some(d);
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(MinEntry { dist: nd, vertex: v });
                }
            }
        }
        None
    }

    /// Full single-source Dijkstra: distances plus a predecessor tree with
    /// ties broken toward the smaller predecessor id.
    pub fn dijkstra_full(&self, s: VertexId) -> (Vec<f64>, Vec<VertexId>) {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        let mut pred = vec![NO_PRED; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(MinEntry {
            dist: 0.0,
            vertex: s,
        });
        while let Some(MinEntry { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                    heap.push(MinEntry { dist: nd, vertex: v });
                } else if nd == dist[v] && u < pred[v] {
                    pred[v] = u;
                }
            }
        }
        (dist, pred)
    }
}

/// `c = min over edges of weight / coordinate-distance`, clamped to `<= 1`.
/// Any edge between co-located vertices degrades the calibration to 0.
fn calibrate_euclid(vertices: &[Vertex], adjacency: &[Vec<(VertexId, f64)>]) -> f64 {
    let mut coeff = 1.0_f64;
    let mut saw_edge = false;
    for (u, list) in adjacency.iter().enumerate() {
        for &(v, w) in list {
            if v < u {
                continue;
            }
            saw_edge = true;
            let a = &vertices[u];
            let b = &vertices[v];
            let len = (a.lon - b.lon).hypot(a.lat - b.lat);
            if len == 0.0 {
                return 0.0;
            }
            coeff = coeff.min(w / len);
        }
    }
    if saw_edge {
        coeff
    } else {
        0.0
    }
}

/// Min-heap entry ordered by (distance asc, vertex id asc) for deterministic
/// settle order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MinEntry {
    pub dist: f64,
    pub vertex: usize,
}

impl Eq for MinEntry {}

impl Ord for MinEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for MinEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reconstructs the path `s -> t` from a predecessor tree rooted at `s`.
pub fn path_from_pred(pred: &[VertexId], s: VertexId, t: VertexId) -> Option<Vec<VertexId>> {
    if s == t {
        return Some(vec![s]);
    }
    let mut path = vec![t];
    let mut cur = t;
    while pred[cur] != NO_PRED {
        cur = pred[cur];
        path.push(cur);
        if cur == s {
            path.reverse();
            return Some(path);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn raw_line(weights: &[f64]) -> RawNetwork {
        // Path graph 0-1-2-... with the given weights.
        RawNetwork {
            vertices: (0..=weights.len() as u64).map(|i| (i, i as f64, 0.0)).collect(),
            edges: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (i as u64, i as u64 + 1, w))
                .collect(),
            pois: Vec::new(),
        }
    }

    #[test]
    fn normalize_scales_max_weight_to_one() {
        let mut raw = raw_line(&[250.0, 500.0]);
        raw.pois.push((0, 1, 4.2));
        let (net, _) = normalize(&raw).unwrap();
        let w: Vec<f64> = net.neighbors(1).iter().map(|&(_, w)| w).collect();
        assert!(w.contains(&0.5) && w.contains(&1.0));
        assert_eq!(net.weight_scale, 500.0);
    }

    #[test]
    fn normalize_identical_ratings_stay_identical() {
        let mut raw = raw_line(&[1.0]);
        raw.pois = vec![(0, 1, 4.2), (1, 2, 4.2)];
        let (net, _) = normalize(&raw).unwrap();
        assert_eq!(net.poi(0).rating, net.poi(1).rating);
        assert_eq!(net.poi(0).rating, 10.0);
    }

    #[test]
    fn normalize_rating_map_endpoints() {
        // Chosen linear map r -> 10 r / r_max, verified against {1,3,5} -> {2,6,10}.
        let mut raw = raw_line(&[1.0, 1.0]);
        raw.pois = vec![(0, 1, 1.0), (1, 2, 3.0), (2, 3, 5.0)];
        let (net, _) = normalize(&raw).unwrap();
        let got: Vec<f64> = net.pois().iter().map(|p| p.rating).collect();
        assert_eq!(got, vec![2.0, 6.0, 10.0]);
        // De-normalization recovers raw values.
        for (p, raw_r) in net.pois().iter().zip([1.0, 3.0, 5.0]) {
            assert!((net.denormalize_rating(p.rating) - raw_r).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(matches!(
            normalize(&RawNetwork::default()),
            Err(KatrError::EmptyGraph)
        ));
        let mut raw = raw_line(&[1.0]);
        raw.edges.push((0, 1, -2.0));
        match normalize(&raw) {
            Err(KatrError::NonPositiveWeight { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NonPositiveWeight, got {other:?}"),
        }
    }

    #[test]
    fn normalize_keeps_largest_component() {
        let raw = RawNetwork {
            vertices: vec![(10, 0.0, 0.0), (11, 1.0, 0.0), (12, 2.0, 0.0), (99, 9.0, 9.0)],
            edges: vec![(10, 11, 1.0), (11, 12, 1.0)],
            pois: vec![(10, 1, 5.0), (99, 2, 5.0)],
        };
        let (net, report) = normalize(&raw).unwrap();
        assert_eq!(net.vertex_count(), 3);
        assert_eq!(report.dropped_vertices, 1);
        assert_eq!(report.dropped_pois, 1);
        assert_eq!(net.resolve_original(99), None);
        assert_eq!(net.original_id(0), 10);
    }

    #[test]
    fn shortest_distance_identity_and_single_edge() {
        let net = RoadNetwork::from_parts(&[(0.0, 0.0), (3.0, 0.0)], &[(0, 1, 7.0)], &[]).unwrap();
        assert_eq!(net.shortest_distance(0, 0), Some(0.0));
        assert_eq!(net.shortest_distance(0, 1), Some(7.0));
        assert_eq!(net.shortest_distance(1, 0), Some(7.0));
    }

    #[test]
    fn shortest_distance_matches_bellman_ford() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let net = testkit::random_geometric_net(rng.gen(), 50, 4);
            let s = rng.gen_range(0..net.vertex_count());
            let expect = testkit::bellman_ford(&net, s);
            let (got, _) = net.dijkstra_full(s);
            for v in 0..net.vertex_count() {
                assert!(
                    (got[v] - expect[v]).abs() < 1e-9,
                    "mismatch at {v}: dijkstra {} vs bellman-ford {}",
                    got[v],
                    expect[v]
                );
            }
        }
    }

    #[test]
    fn euclid_bound_is_admissible_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = testkit::random_geometric_net(rng.gen(), 120, 5);
        for _ in 0..100 {
            let s = rng.gen_range(0..net.vertex_count());
            let t = rng.gen_range(0..net.vertex_count());
            let lb = net.euclid_lower_bound(s, t);
            let sd = net.shortest_distance(s, t).unwrap();
            assert!(
                lb <= sd + 1e-12,
                "euclid bound {lb} exceeds shortest distance {sd} for ({s},{t})"
            );
        }
        assert_eq!(net.euclid_lower_bound(3, 3), 0.0);
    }

    #[test]
    fn euclid_bound_exact_when_weights_geometric() {
        // Weights equal coordinate distances, so c = 1 and the bound is the
        // straight-line distance itself.
        let coords = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)];
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, std::f64::consts::SQRT_2)];
        let net = RoadNetwork::from_parts(&coords, &edges, &[]).unwrap();
        assert!((net.euclid_coeff() - 1.0).abs() < 1e-12);
        assert!((net.euclid_lower_bound(0, 2) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn euclid_calibration_degrades_on_colocated_edge() {
        let coords = [(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)];
        let edges = [(0, 1, 0.5), (1, 2, 1.0)];
        let net = RoadNetwork::from_parts(&coords, &edges, &[]).unwrap();
        assert_eq!(net.euclid_coeff(), 0.0);
        assert_eq!(net.euclid_lower_bound(0, 2), 0.0);
    }

    #[test]
    fn triangle_inequality_holds() {
        let net = testkit::random_geometric_net(99, 80, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = rng.gen_range(0..net.vertex_count());
            let b = rng.gen_range(0..net.vertex_count());
            let c = rng.gen_range(0..net.vertex_count());
            let ab = net.shortest_distance(a, b).unwrap();
            let bc = net.shortest_distance(b, c).unwrap();
            let ac = net.shortest_distance(a, c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn normalization_preserves_orderings() {
        // Order-preserving linear maps keep the argmin of distances and the
        // argmax of rating sums among any fixed set of routes.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let raw_dists: Vec<f64> = (0..10).map(|_| rng.gen_range(1.0..500.0)).collect();
        let raw_taus: Vec<f64> = (0..10).map(|_| rng.gen_range(0.1..9.0)).collect();
        let scale_w = 500.0;
        let max_r = raw_taus.iter().cloned().fold(0.0, f64::max);
        let norm_dists: Vec<f64> = raw_dists.iter().map(|d| d / scale_w).collect();
        let norm_taus: Vec<f64> = raw_taus.iter().map(|r| r / max_r * 10.0).collect();
        let argmin = |xs: &[f64]| {
            xs.iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        let argmax = |xs: &[f64]| {
            xs.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_eq!(argmin(&raw_dists), argmin(&norm_dists));
        assert_eq!(argmax(&raw_taus), argmax(&norm_taus));
    }

    #[test]
    fn pred_tree_ties_break_to_smaller_id() {
        // Two equal-cost paths 0-1-3 and 0-2-3; predecessor of 3 must be 1.
        let coords = [(0.0, 0.0), (1.0, 1.0), (1.0, -1.0), (2.0, 0.0)];
        let edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)];
        let net = RoadNetwork::from_parts(&coords, &edges, &[]).unwrap();
        let (_, pred) = net.dijkstra_full(0);
        assert_eq!(pred[3], 1);
        assert_eq!(path_from_pred(&pred, 0, 3), Some(vec![0, 1, 3]));
    }
}
