//! Benchmark harness: seeded query workloads, engine-variant runs with
//! pruning counters, CSV emission, and aggregate reports.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::engine::{
    estimate_search_fraction, estimate_search_fraction_strict, katr_query, EngineOptions,
    PruneCounters, Query, ScopeParams,
};
use crate::error::{KatrError, Result};
use crate::graph::KeywordId;
use crate::oracle::{self, ENUMERATION_GUARD};

/// Reproducible query workload over a parameter grid. Sources are sampled
/// uniformly over vertices; keywords come from the catalog, so every query is
/// coverable.
#[derive(Debug, Clone)]
pub struct Workload {
    pub seed: u64,
    pub count: usize,
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub alphas: Vec<f64>,
}

impl Default for Workload {
    /// Larger keyword counts are supported but not defaulted: with
    /// city-density POIs the candidate count grows as the posting size to
    /// the m-th power, and m >= 4 queries run for seconds to minutes at
    /// desk scale.
    fn default() -> Workload {
        Workload {
            seed: 1,
            count: 100,
            ms: vec![2, 3],
            ks: (1..=8).collect(),
            alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

/// Engine variants: each ablation disables exactly one pruning stage (its
/// bound becomes +infinity) and must return identical route scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoSafeRegion,
    NoSubgraphPruning,
    NoEdrs,
    /// Brute force, skipped when the enumeration guard trips.
    Oracle,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoSafeRegion,
        Variant::NoSubgraphPruning,
        Variant::NoEdrs,
        Variant::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSafeRegion => "no-safe-region",
            Variant::NoSubgraphPruning => "no-subgraph-pruning",
            Variant::NoEdrs => "no-edrs",
            Variant::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| KatrError::InvalidQuery(format!("unknown variant {name:?}")))
    }

    pub fn options(self) -> EngineOptions {
        EngineOptions {
            disable_safe_region: self == Variant::NoSafeRegion,
            disable_subgraph_pruning: self == Variant::NoSubgraphPruning,
            disable_edrs: self == Variant::NoEdrs,
            ..EngineOptions::default()
        }
    }
}

/// One (query, variant) measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub query_id: usize,
    pub variant: Variant,
    pub m: usize,
    pub k: usize,
    pub alpha: f64,
    pub source: u64,
    pub wall_ms: f64,
    pub counters: PruneCounters,
    pub scores: Vec<f64>,
    pub distances: Vec<f64>,
    pub rating_sums: Vec<f64>,
}

/// Samples `wl.count` coverable queries.
pub fn generate_queries(ds: &Dataset, wl: &Workload) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(wl.seed);
    let catalog: Vec<KeywordId> = ds.poi.catalog().iter().map(|e| e.keyword_id).collect();
    let mut queries = Vec::with_capacity(wl.count);
    for _ in 0..wl.count {
        let m = (*wl.ms.choose(&mut rng).unwrap()).min(catalog.len());
        let mut kws = catalog.clone();
        kws.shuffle(&mut rng);
        kws.truncate(m);
        let k = *wl.ks.choose(&mut rng).unwrap();
        let alpha = *wl.alphas.choose(&mut rng).unwrap();
        let source = rng.gen_range(0..ds.net.vertex_count());
        queries.push(Query::new(source, kws, k, alpha));
    }
    queries
}

/// Runs every query under every variant. Records come back ordered by
/// (query id, variant); timings are wall-clock and excluded from golden
/// comparisons.
pub fn run_bench(ds: &Dataset, queries: &[Query], variants: &[Variant]) -> Result<Vec<BenchRecord>> {
    let jobs: Vec<(usize, &Query, Variant)> = queries
        .iter()
        .enumerate()
        .flat_map(|(id, q)| variants.iter().map(move |&v| (id, q, v)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(query_id, q, variant)| run_one(ds, query_id, q, variant))
        .collect::<Result<Vec<Option<BenchRecord>>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    records.sort_by_key(|r| {
        (
            r.query_id,
            Variant::ALL.iter().position(|&v| v == r.variant),
        )
    });
    Ok(records)
}

fn run_one(
    ds: &Dataset,
    query_id: usize,
    q: &Query,
    variant: Variant,
) -> Result<Option<BenchRecord>> {
    let started = Instant::now();
    let (counters, routes) = match variant {
        Variant::Oracle => {
            let sets: u64 = q.keywords.iter().fold(1u64, |acc, &kw| {
                acc.saturating_mul(ds.poi.postings(kw).len() as u64)
            });
            let perms: u64 = (1..=q.keywords.len() as u64).product();
            if sets.saturating_mul(perms) > ENUMERATION_GUARD {
                return Ok(None);
            }
            let res = oracle::oracle_topk(&ds.net, q)?;
            (PruneCounters::default(), res.routes)
        }
        _ => {
            let outcome = katr_query(&ds.net, &ds.partition, &ds.poi, q, &variant.options())?;
            (outcome.counters, outcome.routes)
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(Some(BenchRecord {
        query_id,
        variant,
        m: q.keywords.len(),
        k: q.k,
        alpha: q.alpha,
        source: ds.net.original_id(q.source),
        wall_ms,
        counters,
        scores: routes.iter().map(|r| r.score).collect(),
        distances: routes.iter().map(|r| r.graph_distance).collect(),
        rating_sums: routes.iter().map(|r| r.rating_sum).collect(),
    }))
}

/// Stage-taxonomy CSV. `include_timing` adds the wall-clock column, which
/// golden files leave out.
pub fn records_to_csv(records: &[BenchRecord], include_timing: bool) -> String {
    let mut out = String::new();
    out.push_str("query_id,variant,m,k,alpha,source");
    if include_timing {
        out.push_str(",wall_ms");
    }
    out.push_str(
        ",n_sg_rn,n_sg_sr,n_sg_bp,n_cps_rn,n_cps_sr,n_cps_bp,n_cpr_sr,n_cpr_edrs,\
         visited_vertices,graph_distance_computations,scores,distances,rating_sums\n",
    );
    for r in records {
        let c = &r.counters;
        write!(
            out,
            "{},{},{},{},{},{}",
            r.query_id,
            r.variant.name(),
            r.m,
            r.k,
            r.alpha,
            r.source
        )
        .unwrap();
        if include_timing {
            write!(out, ",{:.3}", r.wall_ms).unwrap();
        }
        writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.n_sg_rn,
            c.n_sg_sr,
            c.n_sg_bp,
            c.n_cps_rn,
            c.n_cps_sr,
            c.n_cps_bp,
            c.n_cpr_sr,
            c.n_cpr_edrs,
            c.visited_vertices,
            c.graph_distance_computations,
            join(&r.scores),
            join(&r.distances),
            join(&r.rating_sums),
        )
        .unwrap();
    }
    out
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.9}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Aggregates over the full-engine records plus the estimator comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub queries: usize,
    pub mean_wall_ms: f64,
    pub p50_wall_ms: f64,
    pub p95_wall_ms: f64,
    /// Mean of n_sg_sr / n_sg_rn.
    pub sg_region_ratio: f64,
    /// Mean of n_cps_sr / n_cps_rn.
    pub cps_region_ratio: f64,
    /// Mean of n_cps_bp / n_cps_sr.
    pub cps_batch_ratio: f64,
    /// Mean of 1 - n_cpr_edrs / n_cpr_sr.
    pub permutations_skipped_ratio: f64,
    pub estimated_fraction: Option<f64>,
    pub estimated_fraction_strict: Option<f64>,
}

/// Summarizes full-engine records; `scope` feeds the closed-form search
/// fraction estimate logged next to the measured region ratio (a diagnostic,
/// never a gate).
pub fn report(records: &[BenchRecord], scope: Option<ScopeParams>) -> Result<ReportSummary> {
    let full: Vec<&BenchRecord> = records
        .iter()
        .filter(|r| r.variant == Variant::Full)
        .collect();
    if full.is_empty() {
        return Err(KatrError::EmptyBench);
    }
    let mut walls: Vec<f64> = full.iter().map(|r| r.wall_ms).collect();
    walls.sort_by(f64::total_cmp);
    let pct = |p: f64| walls[((walls.len() - 1) as f64 * p).round() as usize];
    let ratio = |num: fn(&PruneCounters) -> u64, den: fn(&PruneCounters) -> u64| {
        let rs: Vec<f64> = full
            .iter()
            .filter(|r| den(&r.counters) > 0)
            .map(|r| num(&r.counters) as f64 / den(&r.counters) as f64)
            .collect();
        if rs.is_empty() {
            0.0
        } else {
            rs.iter().sum::<f64>() / rs.len() as f64
        }
    };
    let summary = ReportSummary {
        queries: full.len(),
        mean_wall_ms: walls.iter().sum::<f64>() / walls.len() as f64,
        p50_wall_ms: pct(0.50),
        p95_wall_ms: pct(0.95),
        sg_region_ratio: ratio(|c| c.n_sg_sr, |c| c.n_sg_rn),
        cps_region_ratio: ratio(|c| c.n_cps_sr, |c| c.n_cps_rn),
        cps_batch_ratio: ratio(|c| c.n_cps_bp, |c| c.n_cps_sr),
        permutations_skipped_ratio: ratio(|c| c.n_cpr_sr - c.n_cpr_edrs, |c| c.n_cpr_sr),
        estimated_fraction: scope.map(estimate_search_fraction),
        estimated_fraction_strict: scope.map(estimate_search_fraction_strict),
    };
    if let Some(est) = summary.estimated_fraction {
        log::info!(
            "measured region ratio {:.4} vs estimated {:.4} (strict {:.4})",
            summary.cps_region_ratio,
            est,
            summary.estimated_fraction_strict.unwrap_or(f64::NAN)
        );
    }
    Ok(summary)
}

/// Scope-estimator inputs derived from a dataset and workload averages.
pub fn scope_params_for(ds: &Dataset, queries: &[Query]) -> Option<ScopeParams> {
    if queries.is_empty() {
        return None;
    }
    let catalog = ds.poi.catalog();
    if catalog.is_empty() {
        return None;
    }
    let n_p =
        catalog.iter().map(|e| e.count).sum::<usize>() as f64 / catalog.len() as f64;
    let ratings: Vec<f64> = ds.net.pois().iter().map(|p| p.rating).collect();
    let tau_h = ratings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_l = ratings.iter().copied().fold(f64::INFINITY, f64::min);
    // Coordinate area mapped into normalized-distance units.
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for v in ds.net.vertices() {
        lo_x = lo_x.min(v.lon);
        hi_x = hi_x.max(v.lon);
        lo_y = lo_y.min(v.lat);
        hi_y = hi_y.max(v.lat);
    }
    let scale = 1.0 / ds.net.weight_scale;
    let z = ((hi_x - lo_x) * scale) * ((hi_y - lo_y) * scale);
    Some(ScopeParams {
        z,
        m: queries.iter().map(|q| q.keywords.len()).sum::<usize>() / queries.len(),
        k: queries.iter().map(|q| q.k).sum::<usize>() / queries.len(),
        n_p,
        alpha: queries.iter().map(|q| q.alpha).sum::<f64>() / queries.len() as f64,
        tau_h,
        tau_l,
    })
}

/// Checks the ablation contract: all engine variants of a query return the
/// same scores. Returns the ids of queries violating it (empty = pass).
pub fn ablation_mismatches(records: &[BenchRecord]) -> Vec<usize> {
    let mut bad = HashSet::new();
    let mut by_query: std::collections::BTreeMap<usize, Vec<&BenchRecord>> = Default::default();
    for r in records {
        if r.variant != Variant::Oracle {
            by_query.entry(r.query_id).or_default().push(r);
        }
    }
    for (id, rs) in by_query {
        let base = &rs[0].scores;
        for r in &rs[1..] {
            if r.scores.len() != base.len()
                || r.scores
                    .iter()
                    .zip(base)
                    .any(|(a, b)| (a - b).abs() > 1e-9)
            {
                bad.insert(id);
            }
        }
    }
    let mut out: Vec<usize> = bad.into_iter().collect();
    out.sort_unstable();
    out
}
