//! Offline preprocessing: partition the network into size-bounded connected
//! subgraphs, record border vertices and external edges, and precompute
//! all-pairs shortest distances restricted to each subgraph's interior.
//!
//! The intra-subgraph tables double as shortcut weights: replacing a
//! subgraph's interior by shortcuts between its border vertices preserves all
//! shortest distances between vertices outside it.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{KatrError, Result};
use crate::graph::{RoadNetwork, SubgraphId, VertexId};

pub const DEFAULT_PARTITION_SIZE: usize = 64;

const LOCAL_NONE: u32 = u32::MAX;

/// One partition cell: its members, border vertices, and dense intra-only
/// distance/predecessor tables (row-major, `members.len()` squared).
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub id: SubgraphId,
    /// Sorted ascending.
    pub members: Vec<VertexId>,
    /// Members with at least one neighbor in another subgraph; sorted.
    pub borders: Vec<VertexId>,
    intra_dist: Vec<f64>,
    intra_pred: Vec<u32>,
    member_index: HashMap<VertexId, u32>,
}

impl Subgraph {
    pub fn local_index(&self, v: VertexId) -> Option<usize> {
        self.member_index.get(&v).map(|&i| i as usize)
    }

    pub fn is_border(&self, v: VertexId) -> bool {
        self.borders.binary_search(&v).is_ok()
    }

    /// Shortest distance between two members using only intra-subgraph paths;
    /// `f64::INFINITY` when they are intra-disconnected.
    pub fn intra_distance(&self, u: VertexId, v: VertexId) -> f64 {
        let (iu, iv) = match (self.local_index(u), self.local_index(v)) {
            (Some(a), Some(b)) => (a, b),
            _ => return f64::INFINITY,
        };
        self.intra_dist[iu * self.members.len() + iv]
    }

    /// Intra-subgraph shortest path `u -> v` as a vertex sequence, or `None`
    /// when intra-disconnected.
    pub fn intra_path(&self, u: VertexId, v: VertexId) -> Option<Vec<VertexId>> {
        let n = self.members.len();
        let iu = self.local_index(u)?;
        let iv = self.local_index(v)?;
        if iu == iv {
            return Some(vec![u]);
        }
        if !self.intra_dist[iu * n + iv].is_finite() {
            return None;
        }
        let mut path = vec![v];
        let mut cur = iv;
        while cur != iu {
            let p = self.intra_pred[iu * n + cur];
            debug_assert_ne!(p, LOCAL_NONE);
            cur = p as usize;
            path.push(self.members[cur]);
        }
        path.reverse();
        Some(path)
    }
}

/// Partition of the whole network plus the precomputed per-subgraph tables.
#[derive(Debug, Clone)]
pub struct PartitionIndex {
    pub assignment: Vec<SubgraphId>,
    pub subgraphs: Vec<Subgraph>,
    /// Every edge crossing two subgraphs, stored once as (u, v, weight).
    pub external_edges: Vec<(VertexId, VertexId, f64)>,
    pub max_size: usize,
    pub seed: u64,
}

impl PartitionIndex {
    pub fn subgraph_of(&self, v: VertexId) -> SubgraphId {
        self.assignment[v]
    }

    pub fn subgraph(&self, id: SubgraphId) -> Result<&Subgraph> {
        self.subgraphs.get(id).ok_or(KatrError::UnknownSubgraph(id))
    }

    /// Finite intra distances between all border pairs of a subgraph, as
    /// `(u, v, distance)` with `u < v`.
    pub fn border_shortcuts(&self, id: SubgraphId) -> Result<Vec<(VertexId, VertexId, f64)>> {
        let sg = self.subgraph(id)?;
        let mut out = Vec::new();
        for (i, &u) in sg.borders.iter().enumerate() {
            for &v in &sg.borders[i + 1..] {
                let d = sg.intra_distance(u, v);
                if d.is_finite() {
                    out.push((u, v, d));
                }
            }
        }
        Ok(out)
    }
}

/// Seeded BFS-grow partitioner: repeatedly grows a connected region of up to
/// `max_size` vertices around a randomly chosen unassigned seed. Deterministic
/// for a given input and seed.
pub fn partition(net: &RoadNetwork, max_size: usize, seed: u64) -> Result<PartitionIndex> {
    if max_size < 2 {
        return Err(KatrError::InvalidPartitionSize(max_size));
    }
    let n = net.vertex_count();
    let mut order: Vec<VertexId> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut assignment = vec![usize::MAX; n];
    let mut next_id = 0;
    for &start in &order {
        if assignment[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        assignment[start] = next_id;
        let mut size = 1;
        while let Some(u) = queue.pop_front() {
            if size >= max_size {
                break;
            }
            for &(v, _) in net.neighbors(u) {
                if assignment[v] == usize::MAX {
                    assignment[v] = next_id;
                    size += 1;
                    queue.push_back(v);
                    if size >= max_size {
                        break;
                    }
                }
            }
        }
        next_id += 1;
    }
    build_index(net, assignment, max_size, seed)
}

/// Builds the index from an externally supplied assignment (e.g. a different
/// partitioning scheme). Subgraphs need not be connected; intra-disconnected
/// pairs are recorded as infinite.
pub fn from_assignment(net: &RoadNetwork, assignment: Vec<SubgraphId>) -> Result<PartitionIndex> {
    if assignment.len() != net.vertex_count() {
        return Err(KatrError::InvalidAssignment(format!(
            "assignment covers {} of {} vertices",
            assignment.len(),
            net.vertex_count()
        )));
    }
    let n_sub = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; n_sub];
    for &s in &assignment {
        sizes[s] += 1;
    }
    if sizes.contains(&0) {
        return Err(KatrError::InvalidAssignment(
            "subgraph ids must be dense".into(),
        ));
    }
    let max_size = sizes.into_iter().max().unwrap_or(0);
    build_index(net, assignment, max_size, 0)
}

fn build_index(
    net: &RoadNetwork,
    assignment: Vec<SubgraphId>,
    max_size: usize,
    seed: u64,
) -> Result<PartitionIndex> {
    let n_sub = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); n_sub];
    for (v, &s) in assignment.iter().enumerate() {
        members[s].push(v);
    }

    let mut external_edges = Vec::new();
    let mut borders: Vec<Vec<VertexId>> = vec![Vec::new(); n_sub];
    for u in 0..net.vertex_count() {
        let su = assignment[u];
        let mut is_border = false;
        for &(v, w) in net.neighbors(u) {
            if assignment[v] != su {
                is_border = true;
                if u < v {
                    external_edges.push((u, v, w));
                }
            }
        }
        if is_border {
            borders[su].push(u);
        }
    }
    external_edges.sort_by_key(|e| (e.0, e.1));

    let mut subgraphs: Vec<Subgraph> = members
        .into_iter()
        .zip(borders)
        .enumerate()
        .map(|(id, (members, borders))| Subgraph {
            id,
            member_index: members
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, i as u32))
                .collect(),
            members,
            borders,
            intra_dist: Vec::new(),
            intra_pred: Vec::new(),
        })
        .collect();

    // Intra tables are independent work items.
    subgraphs
        .par_iter_mut()
        .for_each(|sg| fill_intra_tables(net, &assignment, sg));

    Ok(PartitionIndex {
        assignment,
        subgraphs,
        external_edges,
        max_size,
        seed,
    })
}

/// Per-member Dijkstra over intra-subgraph edges only. Ties in predecessor
/// choice go to the smaller global id.
fn fill_intra_tables(net: &RoadNetwork, assignment: &[SubgraphId], sg: &mut Subgraph) {
    let n = sg.members.len();
    sg.intra_dist = vec![f64::INFINITY; n * n];
    sg.intra_pred = vec![LOCAL_NONE; n * n];
    for src_local in 0..n {
        let row = src_local * n;
        let dist = &mut sg.intra_dist[row..row + n];
        let pred = &mut sg.intra_pred[row..row + n];
        dist[src_local] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(IntraEntry {
            dist: 0.0,
            local: src_local as u32,
        });
        while let Some(IntraEntry { dist: d, local }) = heap.pop() {
            let lu = local as usize;
            if d > dist[lu] {
                continue;
            }
            let u = sg.members[lu];
            for &(v, w) in net.neighbors(u) {
                if assignment[v] != sg.id {
                    continue;
                }
                let lv = sg.member_index[&v] as usize;
                let nd = d + w;
                if nd < dist[lv] {
                    dist[lv] = nd;
                    pred[lv] = local;
                    heap.push(IntraEntry {
                        dist: nd,
                        local: lv as u32,
                    });
                } else if nd == dist[lv] && u < sg.members[pred[lv] as usize] {
                    pred[lv] = local;
                }
            }
        }
    }
}

#[derive(PartialEq)]
struct IntraEntry {
    dist: f64,
    local: u32,
}

impl Eq for IntraEntry {}

impl Ord for IntraEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.local.cmp(&self.local))
    }
}

impl PartialOrd for IntraEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// ---------------------------------------------------------------------------
// Persistence: little-endian binary cache keyed on the network content hash.

const MAGIC: &[u8; 8] = b"KATRPIDX";
const VERSION: u32 = 1;

impl PartitionIndex {
    pub fn save(&self, path: &Path, network_hash: &[u8; 32]) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(network_hash);
        buf.extend_from_slice(&(self.max_size as u64).to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        write_usize_vec(&mut buf, &self.assignment);
        buf.extend_from_slice(&(self.external_edges.len() as u64).to_le_bytes());
        for &(u, v, w) in &self.external_edges {
            buf.extend_from_slice(&(u as u64).to_le_bytes());
            buf.extend_from_slice(&(v as u64).to_le_bytes());
            buf.extend_from_slice(&w.to_le_bytes());
        }
        buf.extend_from_slice(&(self.subgraphs.len() as u64).to_le_bytes());
        for sg in &self.subgraphs {
            write_usize_vec(&mut buf, &sg.members);
            write_usize_vec(&mut buf, &sg.borders);
            buf.extend_from_slice(&(sg.intra_dist.len() as u64).to_le_bytes());
            for &d in &sg.intra_dist {
                buf.extend_from_slice(&d.to_le_bytes());
            }
            for &p in &sg.intra_pred {
                buf.extend_from_slice(&p.to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Loads a cache written by [`save`]. Rejects files whose magic, version,
    /// or network hash do not match; the caller rebuilds in that case.
    pub fn load(path: &Path, expected_hash: &[u8; 32]) -> Result<PartitionIndex> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(KatrError::IndexCache("bad magic".into()));
        }
        if u32::from_le_bytes(r.take(4)?.try_into().unwrap()) != VERSION {
            return Err(KatrError::IndexCache("unsupported version".into()));
        }
        if r.take(32)? != expected_hash {
            return Err(KatrError::IndexCache("network hash mismatch".into()));
        }
        let max_size = r.u64()? as usize;
        let seed = r.u64()?;
        let assignment = r.usize_vec()?;
        let n_ext = r.u64()? as usize;
        let mut external_edges = Vec::with_capacity(n_ext);
        for _ in 0..n_ext {
            let u = r.u64()? as usize;
            let v = r.u64()? as usize;
            let w = r.f64()?;
            external_edges.push((u, v, w));
        }
        let n_sub = r.u64()? as usize;
        let mut subgraphs = Vec::with_capacity(n_sub);
        for id in 0..n_sub {
            let members = r.usize_vec()?;
            let borders = r.usize_vec()?;
            let table_len = r.u64()? as usize;
            if table_len != members.len() * members.len() {
                return Err(KatrError::IndexCache("table size mismatch".into()));
            }
            let mut intra_dist = Vec::with_capacity(table_len);
            for _ in 0..table_len {
                intra_dist.push(r.f64()?);
            }
            let mut intra_pred = Vec::with_capacity(table_len);
            for _ in 0..table_len {
                intra_pred.push(u32::from_le_bytes(r.take(4)?.try_into().unwrap()));
            }
            subgraphs.push(Subgraph {
                id,
                member_index: members
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, i as u32))
                    .collect(),
                members,
                borders,
                intra_dist,
                intra_pred,
            });
        }
        Ok(PartitionIndex {
            assignment,
            subgraphs,
            external_edges,
            max_size,
            seed,
        })
    }
}

fn write_usize_vec(buf: &mut Vec<u8>, xs: &[usize]) {
    buf.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for &x in xs {
        buf.extend_from_slice(&(x as u64).to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(KatrError::IndexCache("truncated file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize_vec(&mut self) -> Result<Vec<usize>> {
        let n = self.u64()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.u64()? as usize);
        }
        Ok(out)
    }
}
