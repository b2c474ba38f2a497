//! The query engine: frontier exploration from the source vertex that emits
//! candidate POI sets as their members settle, bounded by a distance radius
//! that provably contains the top-k answers, with whole-subgraph batch
//! pruning and per-candidate score bounds on top.

pub mod bounds;
pub mod counters;
pub mod route;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use serde::Serialize;

use crate::error::{KatrError, Result};
use crate::graph::{KeywordId, MinEntry, PoiId, RoadNetwork, SubgraphId, VertexId};
use crate::partition::PartitionIndex;
use crate::poi::PoiInvertedIndex;
use crate::search_graph::{build_search_graph, SearchGraph};

pub use bounds::{
    compute_d_ub, cpset_bound, estimate_search_fraction, estimate_search_fraction_strict, score,
    subgraph_bound, ScopeParams,
};
pub use counters::{PruneCounters, PruneEvent};
pub use route::{edrs, EdrsResult, LegCache, PermutationTable};

/// Hard ceiling on query keywords; the order search enumerates m! visit
/// orders per candidate set.
pub const MAX_KEYWORDS: usize = 8;

/// A top-k route query from `source` over the keywords in `keywords`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub source: VertexId,
    pub keywords: Vec<KeywordId>,
    pub k: usize,
    /// Trade-off weight in `[0, 1]`: 1 scores by distance alone, 0 by
    /// ratings alone (which disables the distance radius).
    pub alpha: f64,
    /// Pin the visit order to the keyword list order.
    pub fixed_order: bool,
    /// Reject routes longer than this, in raw (pre-normalization) units.
    pub distance_budget: Option<f64>,
    /// Routes get a final leg to this vertex.
    pub destination: Option<VertexId>,
    /// All POI ratings are equal; rating ceilings collapse to a constant.
    pub identical_ratings: bool,
}

impl Query {
    pub fn new(source: VertexId, keywords: Vec<KeywordId>, k: usize, alpha: f64) -> Query {
        Query {
            source,
            keywords,
            k,
            alpha,
            fixed_order: false,
            distance_budget: None,
            destination: None,
            identical_ratings: false,
        }
    }

    pub fn fixed_order(mut self) -> Query {
        self.fixed_order = true;
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Query {
        self.distance_budget = Some(budget);
        self
    }

    pub fn with_destination(mut self, destination: VertexId) -> Query {
        self.destination = Some(destination);
        self
    }

    pub fn identical_ratings(mut self) -> Query {
        self.identical_ratings = true;
        self
    }
}

/// Knobs for ablation runs and instrumentation. Disabling a pruning stage
/// treats its bound as +infinity; results are identical, only cost changes.
#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    pub disable_safe_region: bool,
    pub disable_subgraph_pruning: bool,
    pub disable_edrs: bool,
    /// Collect [`PruneEvent`]s for audits and tests.
    pub trace: bool,
    /// Cooperative abort checked at frontier pops.
    pub deadline: Option<Instant>,
}

/// One returned route. Distances are in normalized units; multiply by the
/// network's `weight_scale` for raw units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteResult {
    /// One POI per query keyword, aligned with the query's keyword order.
    pub pois: Vec<PoiId>,
    /// The same POIs in visit order.
    pub visit_order: Vec<PoiId>,
    pub graph_distance: f64,
    pub euclid_distance: f64,
    pub rating_sum: f64,
    pub score: f64,
    /// Expanded vertex path from the source through every POI (and the
    /// destination when given). Legs may revisit vertices.
    pub path: Vec<VertexId>,
}

#[derive(Debug)]
pub struct QueryOutcome {
    /// Best routes, one per CP-Set, sorted by score descending with ties
    /// broken by (shorter distance, lexicographic path).
    pub routes: Vec<RouteResult>,
    pub counters: PruneCounters,
    pub events: Vec<PruneEvent>,
    /// Fewer than k routes exist.
    pub partial: bool,
    /// Budget mode found no feasible route at all.
    pub infeasible_budget: bool,
    /// The deadline fired; routes hold the best found so far.
    pub timed_out: bool,
}

/// Validates a query against a network. Shared by the engine and the
/// brute-force enumerator so both reject identically.
pub fn validate_query(net: &RoadNetwork, q: &Query) -> Result<()> {
    if q.k == 0 {
        return Err(KatrError::InvalidQuery("k must be at least 1".into()));
    }
    if q.keywords.is_empty() {
        return Err(KatrError::InvalidQuery("no keywords given".into()));
    }
    if q.keywords.len() > MAX_KEYWORDS {
        return Err(KatrError::InvalidQuery(format!(
            "{} keywords exceed the limit of {MAX_KEYWORDS}",
            q.keywords.len()
        )));
    }
    let set: HashSet<KeywordId> = q.keywords.iter().copied().collect();
    if set.len() != q.keywords.len() {
        return Err(KatrError::InvalidQuery("keywords must be distinct".into()));
    }
    if !(0.0..=1.0).contains(&q.alpha) || !q.alpha.is_finite() {
        return Err(KatrError::InvalidQuery(format!(
            "alpha {} outside [0, 1]",
            q.alpha
        )));
    }
    if q.source >= net.vertex_count() {
        return Err(KatrError::UnknownVertex(q.source as u64));
    }
    if let Some(d) = q.destination {
        if d >= net.vertex_count() {
            return Err(KatrError::UnknownVertex(d as u64));
        }
    }
    if let Some(b) = q.distance_budget {
        if b <= 0.0 || !b.is_finite() {
            return Err(KatrError::InvalidQuery(format!(
                "distance budget {b} must be positive"
            )));
        }
    }
    for &kw in &q.keywords {
        if !net.pois().iter().any(|p| p.keyword == kw) {
            return Err(KatrError::Uncoverable {
                keyword: kw,
                in_region: false,
            });
        }
    }
    if q.identical_ratings {
        let mut ratings = net
            .pois()
            .iter()
            .filter(|p| set.contains(&p.keyword))
            .map(|p| p.rating);
        if let Some(first) = ratings.next() {
            if ratings.any(|r| r != first) {
                return Err(KatrError::InvalidQuery(
                    "identical-ratings mode set but matching POI ratings differ".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Runs a query against prebuilt indexes.
pub fn katr_query(
    net: &RoadNetwork,
    pi: &PartitionIndex,
    idx: &PoiInvertedIndex,
    q: &Query,
    opts: &EngineOptions,
) -> Result<QueryOutcome> {
    validate_query(net, q)?;
    let sg = build_search_graph(net, pi, idx, q.source, &q.keywords, q.destination)?;
    Run::new(net, pi, idx, q, opts, sg).execute()
}

/// Internal candidate with the precomputed ordering key.
#[derive(Debug, Clone)]
struct Candidate {
    pois: Vec<PoiId>,
    order: Vec<u8>,
    tau: f64,
    graph_distance: f64,
    euclid_distance: f64,
    score: f64,
    path: Vec<VertexId>,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.graph_distance.total_cmp(&b.graph_distance))
        .then_with(|| a.path.cmp(&b.path))
}

struct Run<'a> {
    net: &'a RoadNetwork,
    pi: &'a PartitionIndex,
    idx: &'a PoiInvertedIndex,
    q: &'a Query,
    opts: &'a EngineOptions,
    sg: SearchGraph,
    keyword_slot: HashMap<KeywordId, usize>,
    budget_norm: Option<f64>,

    heap: BinaryHeap<MinEntry>,
    sd: Vec<f64>,
    processed: Vec<bool>,
    /// Settled km-POIs per keyword slot, in settle order.
    found: Vec<Vec<PoiId>>,
    /// Settled plus batch-eliminated POIs; the exclusion set for rating
    /// ceilings.
    excluded_pois: HashSet<PoiId>,
    emitted: HashSet<Vec<PoiId>>,
    emitted_count: u64,

    topk: Vec<Candidate>,
    sc_min: f64,
    d_ub: f64,
    established: bool,
    /// `None` means unrestricted (all subgraphs).
    region: Option<BTreeSet<SubgraphId>>,
    /// Snapshot of the region right after establishment; the batch-pruning
    /// counters are measured against it.
    sr_region: Option<BTreeSet<SubgraphId>>,
    min_border_dist: HashMap<SubgraphId, f64>,
    first_touch: HashMap<SubgraphId, f64>,
    bypassed: HashSet<SubgraphId>,
    /// Constant rating ceiling in identical-ratings mode.
    identical_tau: Option<f64>,

    cache: LegCache,
    counters: PruneCounters,
    events: Vec<PruneEvent>,
    timed_out: bool,
}

impl<'a> Run<'a> {
    fn new(
        net: &'a RoadNetwork,
        pi: &'a PartitionIndex,
        idx: &'a PoiInvertedIndex,
        q: &'a Query,
        opts: &'a EngineOptions,
        sg: SearchGraph,
    ) -> Run<'a> {
        let overlay_len = sg.len();
        let budget_norm = q.distance_budget.map(|b| net.normalize_distance(b));
        let identical_tau = if q.identical_ratings {
            sg.km_pois
                .first()
                .and_then(|list| list.first())
                .map(|&p| net.poi(p).rating * q.keywords.len() as f64)
        } else {
            None
        };
        Run {
            net,
            pi,
            idx,
            q,
            opts,
            keyword_slot: q
                .keywords
                .iter()
                .enumerate()
                .map(|(i, &kw)| (kw, i))
                .collect(),
            budget_norm,
            heap: BinaryHeap::new(),
            sd: vec![f64::INFINITY; overlay_len],
            processed: vec![false; overlay_len],
            found: vec![Vec::new(); q.keywords.len()],
            excluded_pois: HashSet::new(),
            emitted: HashSet::new(),
            emitted_count: 0,
            topk: Vec::new(),
            sc_min: f64::NEG_INFINITY,
            d_ub: budget_norm.unwrap_or(f64::INFINITY),
            established: false,
            region: None,
            sr_region: None,
            min_border_dist: HashMap::new(),
            first_touch: HashMap::new(),
            bypassed: HashSet::new(),
            identical_tau,
            cache: LegCache::new(),
            counters: PruneCounters::default(),
            events: Vec::new(),
            timed_out: false,
            sg,
        }
    }

    fn execute(mut self) -> Result<QueryOutcome> {
        self.counters.n_sg_rn = self.sg.relevant.len() as u64;
        self.counters.n_cps_rn = self
            .sg
            .km_pois
            .iter()
            .fold(1u64, |acc, list| acc.saturating_mul(list.len() as u64));

        let src = self
            .sg
            .overlay_index(self.q.source)
            .expect("source is always an overlay vertex");
        self.sd[src] = 0.0;
        self.heap.push(MinEntry {
            dist: 0.0,
            vertex: src,
        });

        // Seeding: explore until at least k distinct CP-Sets have been
        // emitted or the overlay is exhausted.
        let mut exhausted = false;
        while self.emitted_count < self.q.k as u64 {
            if !self.step()? {
                exhausted = true;
                break;
            }
        }

        self.establish()?;

        if !exhausted && !self.timed_out {
            while self.step()? {}
        }

        self.finalize()
    }

    /// Pops and settles the next frontier vertex. Returns false when the
    /// frontier is exhausted, leaves the region, or the deadline fired.
    fn step(&mut self) -> Result<bool> {
        if let Some(deadline) = self.opts.deadline {
            if Instant::now() >= deadline {
                self.timed_out = true;
                return Ok(false);
            }
        }
        loop {
            let Some(MinEntry { dist, vertex }) = self.heap.pop() else {
                return Ok(false);
            };
            if dist > self.sd[vertex] || self.processed[vertex] {
                continue;
            }
            if dist > self.d_ub {
                return Ok(false);
            }
            self.visit(vertex, dist)?;
            return Ok(true);
        }
    }

    fn visit(&mut self, vertex: usize, dist: f64) -> Result<()> {
        let global = self.sg.global_id(vertex);
        let sub = self.pi.subgraph_of(global);

        if self.bypassed.contains(&sub) {
            self.settle_bypassed(vertex, dist, sub, global);
            return Ok(());
        }

        // Batch check: can any route through this subgraph's remaining POIs
        // still beat the current k-th score?
        if self.established
            && !self.opts.disable_subgraph_pruning
            && self.sc_min.is_finite()
            && self.sg.relevant.contains(&sub)
        {
            let unprocessed = self.unprocessed_kms_of(sub);
            if !unprocessed.is_empty() {
                let d_lb = self.first_touch.get(&sub).copied().unwrap_or(dist);
                let tau_max = match self.identical_tau {
                    Some(t) => Some(t),
                    None => self.idx.max_cumulative_rating_with_forced_poi(
                        self.net,
                        &self.q.keywords,
                        &unprocessed,
                    ),
                };
                if let Some(tau_max) = tau_max {
                    let bound = bounds::subgraph_bound(self.q.alpha, d_lb, tau_max);
                    if bound < self.sc_min {
                        self.bypass(sub, d_lb, bound, unprocessed)?;
                        self.settle_bypassed(vertex, dist, sub, global);
                        return Ok(());
                    }
                }
            }
        }

        self.first_touch.entry(sub).or_insert(dist);
        self.processed[vertex] = true;
        self.counters.visited_vertices += 1;
        if self.opts.trace {
            self.events.push(PruneEvent::VertexSettled {
                vertex: global,
                distance: dist,
            });
        }
        self.relax(vertex, dist);

        let mut any_poi = false;
        for &poi_id in self.net.pois_at_vertex(global) {
            let Some(&slot) = self.keyword_slot.get(&self.net.poi(poi_id).keyword) else {
                continue;
            };
            any_poi = true;
            self.excluded_pois.insert(poi_id);
            if self.worth_emitting(slot, poi_id) {
                let combos = self.cross_products(slot, poi_id);
                for pois in combos {
                    self.handle_cpset(pois)?;
                }
            }
            self.found[slot].push(poi_id);
        }
        if any_poi {
            self.refit()?;
        }
        Ok(())
    }

    /// O(m) guard before enumerating combinations: every set formed now
    /// contains this POI, so its Euclidean route distance is at least the
    /// straight line to it and its rating sum at most the best discovered
    /// partners. Skipped under tracing so audits see each elimination
    /// individually.
    fn worth_emitting(&self, slot: usize, poi_id: PoiId) -> bool {
        if self.opts.trace {
            return true;
        }
        let ed_floor = self
            .net
            .euclid_lower_bound(self.q.source, self.net.poi(poi_id).vertex);
        if let Some(budget) = self.budget_norm {
            if ed_floor > budget {
                return false;
            }
        }
        if !self.established || !self.sc_min.is_finite() {
            return true;
        }
        let mut tau_cap = self.net.poi(poi_id).rating;
        for (j, list) in self.found.iter().enumerate() {
            if j == slot {
                continue;
            }
            match list
                .iter()
                .map(|&q| self.net.poi(q).rating)
                .fold(f64::NEG_INFINITY, f64::max)
            {
                best if best.is_finite() => tau_cap += best,
                _ => return false, // no partner for some keyword yet
            }
        }
        bounds::cpset_bound(self.q.alpha, ed_floor, tau_cap) >= self.sc_min
    }

    /// A vertex of a bypassed subgraph: borders keep relaying traffic, the
    /// interior is skipped entirely, and no POI is emitted either way.
    fn settle_bypassed(&mut self, vertex: usize, dist: f64, sub: SubgraphId, global: VertexId) {
        self.processed[vertex] = true;
        if self.pi.subgraphs[sub].is_border(global)
            || global == self.q.source
            || Some(global) == self.q.destination
        {
            self.counters.visited_vertices += 1;
            self.relax(vertex, dist);
        }
    }

    fn relax(&mut self, vertex: usize, dist: f64) {
        for i in 0..self.sg.arcs(vertex).len() {
            let arc = self.sg.arcs(vertex)[i];
            let nd = dist + arc.weight;
            if !self.processed[arc.to] && nd < self.sd[arc.to] {
                self.sd[arc.to] = nd;
                self.heap.push(MinEntry {
                    dist: nd,
                    vertex: arc.to,
                });
            }
        }
    }

    /// New CP-Sets formed by fixing `poi_id` in `slot` and crossing every
    /// settled combination of the other keyword slots.
    fn cross_products(&self, slot: usize, poi_id: PoiId) -> Vec<Vec<PoiId>> {
        if self
            .found
            .iter()
            .enumerate()
            .any(|(j, list)| j != slot && list.is_empty())
        {
            return Vec::new();
        }
        let mut combos = vec![vec![0; self.found.len()]];
        for (j, list) in self.found.iter().enumerate() {
            if j == slot {
                for combo in &mut combos {
                    combo[j] = poi_id;
                }
                continue;
            }
            let mut next = Vec::with_capacity(combos.len() * list.len());
            for combo in combos {
                for &p in list {
                    let mut c = combo.clone();
                    c[j] = p;
                    next.push(c);
                }
            }
            combos = next;
        }
        combos
    }

    fn handle_cpset(&mut self, pois: Vec<PoiId>) -> Result<()> {
        let mut key = pois.clone();
        key.sort_unstable();
        if !self.emitted.insert(key) {
            return Ok(());
        }
        self.emitted_count += 1;
        if self.opts.trace {
            self.events.push(PruneEvent::CpSetEmitted { pois: pois.clone() });
        }
        let tau: f64 = pois.iter().map(|&p| self.net.poi(p).rating).sum();
        let vertices: Vec<VertexId> = pois.iter().map(|&p| self.net.poi(p).vertex).collect();
        let table = PermutationTable::build(
            self.net,
            self.q.source,
            self.q.destination,
            &vertices,
            self.q.fixed_order,
        );
        if self.established && self.sc_min.is_finite() {
            let bound = bounds::cpset_bound(self.q.alpha, table.ed_min(), tau);
            if bound < self.sc_min {
                if self.opts.trace {
                    self.events.push(PruneEvent::CpSetEliminated { pois, bound });
                }
                return Ok(());
            }
        }
        self.counters.n_cpr_sr += table.len() as u64;
        let result = route::edrs(
            self.net,
            self.pi,
            &self.sg,
            &mut self.cache,
            self.q.source,
            self.q.destination,
            &vertices,
            &table,
            self.opts.disable_edrs,
        );
        self.counters.n_cpr_edrs += result.evaluated;
        if !result.graph_distance.is_finite() {
            return Ok(());
        }
        if let Some(budget) = self.budget_norm {
            if result.graph_distance > budget {
                return Ok(());
            }
        }
        let cand = Candidate {
            order: result.order.clone(),
            tau,
            graph_distance: result.graph_distance,
            euclid_distance: result.euclid_distance,
            score: bounds::score(self.q.alpha, result.graph_distance, tau),
            path: result.path,
            pois,
        };
        debug_assert!(cand.euclid_distance <= cand.graph_distance + 1e-9);
        self.try_insert(cand)
    }

    fn try_insert(&mut self, cand: Candidate) -> Result<()> {
        if self.topk.len() < self.q.k {
            let pos = self
                .topk
                .partition_point(|c| candidate_order(c, &cand) != Ordering::Greater);
            self.topk.insert(pos, cand);
            if self.topk.len() == self.q.k {
                self.bump_sc_min()?;
            }
            return Ok(());
        }
        let last = self.topk.last().expect("topk holds k candidates");
        if candidate_order(&cand, last) == Ordering::Less {
            let pos = self
                .topk
                .partition_point(|c| candidate_order(c, &cand) != Ordering::Greater);
            self.topk.insert(pos, cand);
            self.topk.pop();
            self.bump_sc_min()?;
        }
        Ok(())
    }

    fn bump_sc_min(&mut self) -> Result<()> {
        let new = self.topk[self.q.k - 1].score;
        debug_assert!(new >= self.sc_min || !self.sc_min.is_finite());
        if new > self.sc_min {
            self.sc_min = new;
            self.refit()?;
        }
        Ok(())
    }

    fn bypass(
        &mut self,
        sub: SubgraphId,
        d_lb: f64,
        bound: f64,
        eliminated: Vec<PoiId>,
    ) -> Result<()> {
        self.bypassed.insert(sub);
        for &p in &eliminated {
            self.excluded_pois.insert(p);
        }
        if self.opts.trace {
            self.events.push(PruneEvent::SubgraphBypassed {
                subgraph: sub,
                d_lb,
                bound,
                eliminated,
            });
        }
        let mut pivots = Vec::new();
        if self.pi.subgraph_of(self.q.source) == sub {
            pivots.push(self.q.source);
        }
        if let Some(d) = self.q.destination {
            if self.pi.subgraph_of(d) == sub {
                pivots.push(d);
            }
        }
        let added = self.sg.add_bypass_shortcuts(self.pi, sub, &pivots)?;
        // Catch-up relaxation: endpoints settled before the shortcuts existed
        // never relaxed them.
        for (a, b, w) in added {
            for (x, y) in [(a, b), (b, a)] {
                let (ix, iy) = (
                    self.sg.overlay_index(x).unwrap(),
                    self.sg.overlay_index(y).unwrap(),
                );
                let nd = self.sd[ix] + w;
                if self.sd[ix].is_finite() && !self.processed[iy] && nd < self.sd[iy] {
                    self.sd[iy] = nd;
                    self.heap.push(MinEntry {
                        dist: nd,
                        vertex: iy,
                    });
                }
            }
        }
        self.refit()
    }

    fn unprocessed_kms_of(&self, sub: SubgraphId) -> Vec<PoiId> {
        self.q
            .keywords
            .iter()
            .flat_map(|&kw| self.idx.postings_in(kw, sub))
            .copied()
            .filter(|p| !self.excluded_pois.contains(p))
            .collect()
    }

    /// Exact shortest distances from the source to every border vertex,
    /// computed once over the border skeleton (borders joined by external
    /// edges and intra shortcuts). Region membership reuses these for every
    /// later radius shrink.
    fn compute_border_distances(&mut self) {
        let mut adj: HashMap<VertexId, Vec<(VertexId, f64)>> = HashMap::new();
        let push = |adj: &mut HashMap<VertexId, Vec<(VertexId, f64)>>, u, v, w| {
            adj.entry(u).or_default().push((v, w));
            adj.entry(v).or_default().push((u, w));
        };
        for &(u, v, w) in &self.pi.external_edges {
            push(&mut adj, u, v, w);
        }
        for sg in &self.pi.subgraphs {
            for (i, &u) in sg.borders.iter().enumerate() {
                for &v in &sg.borders[i + 1..] {
                    let d = sg.intra_distance(u, v);
                    if d.is_finite() {
                        push(&mut adj, u, v, d);
                    }
                }
            }
        }
        let mut pivots = vec![self.q.source];
        pivots.extend(self.q.destination);
        for &p in &pivots {
            let sg = &self.pi.subgraphs[self.pi.subgraph_of(p)];
            for &b in &sg.borders {
                if b != p {
                    let d = sg.intra_distance(p, b);
                    if d.is_finite() {
                        push(&mut adj, p, b, d);
                    }
                }
            }
        }
        if pivots.len() == 2 && self.pi.subgraph_of(pivots[0]) == self.pi.subgraph_of(pivots[1]) {
            let sg = &self.pi.subgraphs[self.pi.subgraph_of(pivots[0])];
            let d = sg.intra_distance(pivots[0], pivots[1]);
            if d.is_finite() && pivots[0] != pivots[1] {
                push(&mut adj, pivots[0], pivots[1], d);
            }
        }

        let mut dist: HashMap<VertexId, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(self.q.source, 0.0);
        heap.push(MinEntry {
            dist: 0.0,
            vertex: self.q.source,
        });
        while let Some(MinEntry { dist: d, vertex: u }) = heap.pop() {
            if d > dist[&u] {
                continue;
            }
            for &(v, w) in adj.get(&u).map_or(&[][..], Vec::as_slice) {
                let nd = d + w;
                if dist.get(&v).is_none_or(|&cur| nd < cur) {
                    dist.insert(v, nd);
                    heap.push(MinEntry { dist: nd, vertex: v });
                }
            }
        }
        for sg in &self.pi.subgraphs {
            let best = sg
                .borders
                .iter()
                .filter_map(|b| dist.get(b))
                .copied()
                .fold(f64::INFINITY, f64::min);
            self.min_border_dist.insert(sg.id, best);
        }
    }

    fn establish(&mut self) -> Result<()> {
        self.compute_border_distances();
        self.established = true;
        self.recompute_region(true)?;
        self.sr_region = self.region.clone();
        self.counters.n_sg_sr = self.relevant_in_region();
        self.counters.n_cps_sr = self.cps_product(|sub| self.in_region(sub));
        Ok(())
    }

    fn refit(&mut self) -> Result<()> {
        if !self.established {
            return Ok(());
        }
        let before = self.d_ub;
        self.recompute_region(false)?;
        if self.opts.trace && self.d_ub < before {
            self.events.push(PruneEvent::RegionRefined { d_ub: self.d_ub });
        }
        Ok(())
    }

    /// Fixpoint of (rating ceiling, radius, region): shrink the radius from
    /// the ceiling, re-restrict the ceiling to the shrunk region, and repeat
    /// while it strictly decreases. Border distances are already cached, so
    /// iterations cost no graph traversal.
    fn recompute_region(&mut self, establishing: bool) -> Result<()> {
        let budget_cap = self.budget_norm.unwrap_or(f64::INFINITY);
        if self.opts.disable_safe_region {
            self.d_ub = budget_cap;
            self.region = None;
            if establishing && self.opts.trace {
                self.events.push(PruneEvent::RegionEstablished {
                    d_ub: self.d_ub,
                    region: self.sg.relevant.iter().copied().collect(),
                });
            }
            return Ok(());
        }
        let mut tau = self.current_tau_u();
        loop {
            let target = match tau {
                None => 0.0,
                Some(t) => {
                    if self.q.alpha == 0.0 || !self.sc_min.is_finite() {
                        f64::INFINITY
                    } else {
                        bounds::compute_d_ub(self.q.alpha, t, self.sc_min)?
                    }
                }
            };
            self.d_ub = target.min(budget_cap).min(self.d_ub);
            if establishing && self.opts.trace {
                self.events.push(PruneEvent::EstablishIteration {
                    tau_u: tau,
                    d_ub: self.d_ub,
                });
            }
            self.region = self.region_for(self.d_ub);
            if tau.is_none() {
                break;
            }
            let next_tau = self.current_tau_u();
            let decreased = match (tau, next_tau) {
                (Some(a), Some(b)) => b < a,
                (Some(_), None) => true,
                _ => false,
            };
            if !decreased {
                break;
            }
            tau = next_tau;
        }
        if establishing && self.opts.trace {
            self.events.push(PruneEvent::RegionEstablished {
                d_ub: self.d_ub,
                region: match &self.region {
                    None => self.sg.relevant.iter().copied().collect(),
                    Some(r) => r.iter().copied().collect(),
                },
            });
        }
        Ok(())
    }

    fn region_for(&self, d_ub: f64) -> Option<BTreeSet<SubgraphId>> {
        if d_ub.is_infinite() {
            return None;
        }
        let mut region: BTreeSet<SubgraphId> = self
            .min_border_dist
            .iter()
            .filter(|&(_, &d)| d <= d_ub)
            .map(|(&s, _)| s)
            .collect();
        region.insert(self.pi.subgraph_of(self.q.source));
        Some(region)
    }

    /// Highest rating sum over undiscovered CP-Sets: sets with at least one
    /// POI outside the exclusion set, restricted to the current region.
    fn current_tau_u(&self) -> Option<f64> {
        if let Some(t) = self.identical_tau {
            return Some(t);
        }
        self.idx.max_cumulative_rating_excluding(
            self.net,
            &self.q.keywords,
            self.region.as_ref(),
            &self.excluded_pois,
        )
    }

    fn in_region(&self, sub: SubgraphId) -> bool {
        self.region.as_ref().is_none_or(|r| r.contains(&sub))
    }

    fn relevant_in_region(&self) -> u64 {
        self.sg
            .relevant
            .iter()
            .filter(|&&s| self.in_region(s))
            .count() as u64
    }

    fn cps_product(&self, keep: impl Fn(SubgraphId) -> bool) -> u64 {
        self.q.keywords.iter().fold(1u64, |acc, &kw| {
            let count = self
                .idx
                .subgraphs_with(kw)
                .iter()
                .filter(|&&s| keep(s))
                .map(|&s| self.idx.postings_in(kw, s).len() as u64)
                .sum::<u64>();
            acc.saturating_mul(count)
        })
    }

    fn finalize(mut self) -> Result<QueryOutcome> {
        let in_sr = |sub: SubgraphId| -> bool {
            self.sr_region.as_ref().is_none_or(|r| r.contains(&sub))
        };
        self.counters.n_sg_bp = self
            .sg
            .relevant
            .iter()
            .filter(|&&s| in_sr(s) && !self.bypassed.contains(&s))
            .count() as u64;
        self.counters.n_cps_bp =
            self.cps_product(|sub| in_sr(sub) && !self.bypassed.contains(&sub));
        self.counters.graph_distance_computations = self.cache.computations;
        debug_assert!(self.counters.stages_monotone());

        let routes: Vec<RouteResult> = self
            .topk
            .iter()
            .map(|c| RouteResult {
                pois: c.pois.clone(),
                visit_order: c.order.iter().map(|&s| c.pois[s as usize]).collect(),
                graph_distance: c.graph_distance,
                euclid_distance: c.euclid_distance,
                rating_sum: c.tau,
                score: c.score,
                path: c.path.clone(),
            })
            .collect();
        let partial = routes.len() < self.q.k;
        let infeasible_budget = self.q.distance_budget.is_some() && routes.is_empty();
        Ok(QueryOutcome {
            routes,
            counters: self.counters,
            events: self.events,
            partial,
            infeasible_budget,
            timed_out: self.timed_out,
        })
    }
}
