//! Seeded synthetic road networks: random geometric graphs in the unit
//! square with uniformly placed POIs. Desk-scale stand-ins for real map
//! extracts, written in the standard text formats.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KatrError, Result};
use crate::graph::{KeywordId, RawNetwork};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_vertices: usize,
    /// Each vertex links to this many nearest neighbors.
    pub avg_degree: usize,
    pub n_keywords: u32,
    pub pois_per_keyword: usize,
    /// Ratings drawn uniformly from `[rating_low, rating_high]`;
    /// `low == high` gives identical ratings.
    pub rating_low: f64,
    pub rating_high: f64,
}

impl Default for SynthConfig {
    /// Desk-scale default comparable to a small city extract: 5,000
    /// vertices with POI density matching real city datasets (about 0.4
    /// POIs per vertex).
    fn default() -> SynthConfig {
        SynthConfig {
            seed: 1,
            n_vertices: 5000,
            avg_degree: 4,
            n_keywords: 20,
            pois_per_keyword: 100,
            rating_low: 5.0,
            rating_high: 10.0,
        }
    }
}

/// Generates the network plus default tag names (`tag<k>`). Weights equal
/// coordinate distances, so the Euclidean calibration is exact by
/// construction.
pub fn generate(cfg: &SynthConfig) -> Result<(RawNetwork, HashMap<KeywordId, String>)> {
    if cfg.n_vertices < 2 {
        return Err(KatrError::InfeasibleGenerator(format!(
            "{} vertices cannot form an edge",
            cfg.n_vertices
        )));
    }
    if cfg.avg_degree < 2 || cfg.avg_degree >= cfg.n_vertices {
        return Err(KatrError::InfeasibleGenerator(format!(
            "degree {} infeasible for {} vertices",
            cfg.avg_degree, cfg.n_vertices
        )));
    }
    if cfg.pois_per_keyword > cfg.n_vertices {
        return Err(KatrError::InfeasibleGenerator(
            "more POIs per keyword than vertices".into(),
        ));
    }
    if cfg.rating_low <= 0.0 || cfg.rating_high < cfg.rating_low {
        return Err(KatrError::InfeasibleGenerator(format!(
            "bad rating range [{}, {}]",
            cfg.rating_low, cfg.rating_high
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_vertices;
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();

    // Nearest-neighbor edges via a coarse grid, so generation stays fast at
    // thousands of vertices.
    let cell = (1.0 / (n as f64).sqrt()).max(1e-6);
    let grid_n = (1.0 / cell).ceil() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &(x, y)) in coords.iter().enumerate() {
        grid.entry(((x / cell) as i64, (y / cell) as i64))
            .or_default()
            .push(i);
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for u in 0..n {
        let (x, y) = coords[u];
        let (cx, cy) = ((x / cell) as i64, (y / cell) as i64);
        let mut ring = 1i64;
        let mut near: Vec<(f64, usize)> = Vec::new();
        while near.len() < cfg.avg_degree + 1 && ring <= grid_n + 1 {
            near.clear();
            for gx in (cx - ring)..=(cx + ring) {
                for gy in (cy - ring)..=(cy + ring) {
                    for &v in grid.get(&(gx, gy)).map_or(&[][..], Vec::as_slice) {
                        if v != u {
                            let d = (x - coords[v].0).hypot(y - coords[v].1);
                            near.push((d, v));
                        }
                    }
                }
            }
            ring += 1;
        }
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, v) in near.iter().take(cfg.avg_degree) {
            edges.insert((u.min(v), u.max(v)));
        }
    }

    let raw_edges: Vec<(u64, u64, f64)> = edges
        .iter()
        .map(|&(u, v)| {
            let d = (coords[u].0 - coords[v].0).hypot(coords[u].1 - coords[v].1);
            (u as u64, v as u64, d.max(1e-9))
        })
        .collect();

    let mut pois = Vec::new();
    for kw in 1..=cfg.n_keywords {
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(&mut rng);
        for &v in verts.iter().take(cfg.pois_per_keyword) {
            let rating = if cfg.rating_high > cfg.rating_low {
                rng.gen_range(cfg.rating_low..=cfg.rating_high)
            } else {
                cfg.rating_low
            };
            pois.push((v as u64, kw as KeywordId, rating));
        }
    }

    let raw = RawNetwork {
        vertices: coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i as u64, x, y))
            .collect(),
        edges: raw_edges,
        pois,
    };
    let tags = (1..=cfg.n_keywords)
        .map(|kw| (kw as KeywordId, format!("tag{kw}")))
        .collect();
    Ok((raw, tags))
}

/// Size of the largest connected component, for generator validation.
pub fn largest_component(raw: &RawNetwork) -> usize {
    let n = raw.vertices.len();
    let index: HashMap<u64, usize> = raw
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &(id, _, _))| (id, i))
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v, _) in &raw.edges {
        let (ui, vi) = (index[&u], index[&v]);
        adj[ui].push(vi);
        adj[vi].push(ui);
    }
    let mut seen = vec![false; n];
    let mut best = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        best = best.max(size);
    }
    best
}
