//! Test support: seeded instance builders and independent reference
//! algorithms. Everything here is deliberately separate from the engine's
//! code paths so it can serve as an oracle for them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{KeywordId, PoiId, RoadNetwork, VertexId};

/// Snaps a weight onto a dyadic grid (multiples of 2^-20) so that path sums
/// are exact in f64 regardless of summation order. Used by tests that assert
/// distance equality with zero tolerance.
pub fn snap_dyadic(w: f64) -> f64 {
    const GRID: f64 = 1048576.0; // 2^20
    ((w * GRID).round() / GRID).max(1.0 / GRID)
}

/// Random connected geometric graph: vertices uniform in the unit square,
/// each linked to its `degree` nearest neighbors, weights equal to the
/// (dyadic-snapped) coordinate distance. Extra bridge edges are added if the
/// nearest-neighbor graph came out disconnected, so the result is always
/// connected.
pub fn random_geometric_net(seed: u64, n: usize, degree: usize) -> RoadNetwork {
    let (coords, edges) = random_geometric_parts(seed, n, degree);
    RoadNetwork::from_parts(&coords, &edges, &[]).expect("generated net must be valid")
}

/// Same as [`random_geometric_net`] plus `pois_per_keyword` POIs for each of
/// `n_keywords` keywords (ids `1..=n_keywords`), ratings uniform in
/// `[rating_lo, rating_hi]`.
pub fn random_poi_net(
    seed: u64,
    n: usize,
    degree: usize,
    n_keywords: u32,
    pois_per_keyword: usize,
    rating_lo: f64,
    rating_hi: f64,
) -> RoadNetwork {
    let (coords, edges) = random_geometric_parts(seed, n, degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut pois = Vec::new();
    for kw in 1..=n_keywords {
        let mut verts: Vec<VertexId> = (0..n).collect();
        verts.shuffle(&mut rng);
        for &v in verts.iter().take(pois_per_keyword) {
            let rating = if rating_hi > rating_lo {
                rng.gen_range(rating_lo..=rating_hi)
            } else {
                rating_lo
            };
            pois.push((v, kw as KeywordId, rating));
        }
    }
    RoadNetwork::from_parts(&coords, &edges, &pois).expect("generated net must be valid")
}

type GeometricParts = (Vec<(f64, f64)>, Vec<(VertexId, VertexId, f64)>);

fn random_geometric_parts(seed: u64, n: usize, degree: usize) -> GeometricParts {
    assert!(n >= 2 && degree >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let mut edge_set = std::collections::BTreeSet::new();
    for u in 0..n {
        let mut by_dist: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != u)
            .map(|v| {
                let d = (coords[u].0 - coords[v].0).hypot(coords[u].1 - coords[v].1);
                (d, v)
            })
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, v) in by_dist.iter().take(degree) {
            edge_set.insert((u.min(v), u.max(v)));
        }
    }
    // Bridge components until connected.
    loop {
        let comp = components(n, &edge_set);
        let n_comp = comp.iter().copied().max().unwrap() + 1;
        if n_comp == 1 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..n {
            for v in (u + 1)..n {
                if comp[u] != comp[v] {
                    let d = (coords[u].0 - coords[v].0).hypot(coords[u].1 - coords[v].1);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, u, v));
                    }
                }
            }
        }
        let (_, u, v) = best.unwrap();
        edge_set.insert((u, v));
    }
    let edges = edge_set
        .into_iter()
        .map(|(u, v)| {
            let d = (coords[u].0 - coords[v].0).hypot(coords[u].1 - coords[v].1);
            (u, v, snap_dyadic(d))
        })
        .collect();
    (coords, edges)
}

fn components(n: usize, edges: &std::collections::BTreeSet<(usize, usize)>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for &(u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let mut ids = std::collections::HashMap::new();
    roots
        .iter()
        .map(|&r| {
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect()
}

/// Bellman-Ford single-source distances; the independent check for Dijkstra.
pub fn bellman_ford(net: &RoadNetwork, source: VertexId) -> Vec<f64> {
    let n = net.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            if !dist[u].is_finite() {
                continue;
            }
            for &(v, w) in net.neighbors(u) {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Enumerates every CP-Set (one POI per keyword, choices given as POI-id
/// lists) and returns them with their rating sums. Brute-force companion for
/// the inverted-index bound computations.
pub fn enumerate_cp_sets(net: &RoadNetwork, choices: &[Vec<PoiId>]) -> Vec<(Vec<PoiId>, f64)> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(choices.len());
    fn recurse(
        net: &RoadNetwork,
        choices: &[Vec<PoiId>],
        depth: usize,
        current: &mut Vec<PoiId>,
        out: &mut Vec<(Vec<PoiId>, f64)>,
    ) {
        if depth == choices.len() {
            let tau = current.iter().map(|&p| net.poi(p).rating).sum();
            out.push((current.clone(), tau));
            return;
        }
        for &p in &choices[depth] {
            current.push(p);
            recurse(net, choices, depth + 1, current, out);
            current.pop();
        }
    }
    recurse(net, choices, 0, &mut current, &mut out);
    out
}
