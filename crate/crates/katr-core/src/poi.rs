//! POI inverted index: posting lists per keyword sorted by rating, plus the
//! cumulative-rating maxima every score bound in the engine is built from.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::error::{KatrError, Result};
use crate::graph::{KeywordId, PoiId, RoadNetwork, SubgraphId};
use crate::partition::PartitionIndex;

/// Catalog entry for `list_poi_tags`-style output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagEntry {
    pub keyword_id: KeywordId,
    pub tag: String,
    pub count: usize,
}

/// Inverted index over POIs. Posting lists are sorted by
/// (rating desc, vertex asc, poi id asc), so the head of a list is the
/// maximum-rating POI of its keyword.
#[derive(Debug, Clone)]
pub struct PoiInvertedIndex {
    postings: HashMap<KeywordId, Vec<PoiId>>,
    per_subgraph: HashMap<(KeywordId, SubgraphId), Vec<PoiId>>,
    /// Subgraphs holding at least one POI of the keyword.
    subgraphs_with: HashMap<KeywordId, Vec<SubgraphId>>,
    tags: BTreeMap<KeywordId, String>,
    tag_lookup: HashMap<String, KeywordId>,
}

/// Builds the index. Keywords with zero POIs do not appear in the catalog;
/// tags default to `kw<id>` when no tag map entry exists.
pub fn build_poi_index(
    net: &RoadNetwork,
    pi: &PartitionIndex,
    tag_names: &HashMap<KeywordId, String>,
) -> PoiInvertedIndex {
    let mut postings: HashMap<KeywordId, Vec<PoiId>> = HashMap::new();
    let mut per_subgraph: HashMap<(KeywordId, SubgraphId), Vec<PoiId>> = HashMap::new();
    for (id, poi) in net.pois().iter().enumerate() {
        postings.entry(poi.keyword).or_default().push(id);
        per_subgraph
            .entry((poi.keyword, pi.subgraph_of(poi.vertex)))
            .or_default()
            .push(id);
    }
    let sort_key = |&id: &PoiId| {
        let p = net.poi(id);
        (std::cmp::Reverse(p.rating.to_bits()), p.vertex, id)
    };
    for list in postings.values_mut() {
        list.sort_by_key(sort_key);
    }
    for list in per_subgraph.values_mut() {
        list.sort_by_key(sort_key);
    }
    let mut subgraphs_with: HashMap<KeywordId, Vec<SubgraphId>> = HashMap::new();
    for &(kw, sg) in per_subgraph.keys() {
        subgraphs_with.entry(kw).or_default().push(sg);
    }
    for list in subgraphs_with.values_mut() {
        list.sort_unstable();
    }
    let tags: BTreeMap<KeywordId, String> = postings
        .keys()
        .map(|&kw| {
            let tag = tag_names
                .get(&kw)
                .cloned()
                .unwrap_or_else(|| format!("kw{kw}"));
            (kw, tag)
        })
        .collect();
    let tag_lookup = tags.iter().map(|(&kw, tag)| (tag.clone(), kw)).collect();
    PoiInvertedIndex {
        postings,
        per_subgraph,
        subgraphs_with,
        tags,
        tag_lookup,
    }
}

impl PoiInvertedIndex {
    pub fn postings(&self, keyword: KeywordId) -> &[PoiId] {
        self.postings.get(&keyword).map_or(&[], Vec::as_slice)
    }

    pub fn postings_in(&self, keyword: KeywordId, subgraph: SubgraphId) -> &[PoiId] {
        self.per_subgraph
            .get(&(keyword, subgraph))
            .map_or(&[], Vec::as_slice)
    }

    /// Subgraph ids holding at least one POI of the keyword, ascending.
    pub fn subgraphs_with(&self, keyword: KeywordId) -> &[SubgraphId] {
        self.subgraphs_with.get(&keyword).map_or(&[], Vec::as_slice)
    }

    pub fn keyword_count(&self) -> usize {
        self.tags.len()
    }

    pub fn has_keyword(&self, keyword: KeywordId) -> bool {
        self.postings.contains_key(&keyword)
    }

    pub fn tag(&self, keyword: KeywordId) -> Option<&str> {
        self.tags.get(&keyword).map(String::as_str)
    }

    pub fn keyword_by_tag(&self, tag: &str) -> Option<KeywordId> {
        self.tag_lookup.get(tag).copied()
    }

    /// Full catalog ordered by keyword id.
    pub fn catalog(&self) -> Vec<TagEntry> {
        self.tags
            .iter()
            .map(|(&keyword_id, tag)| TagEntry {
                keyword_id,
                tag: tag.clone(),
                count: self.postings[&keyword_id].len(),
            })
            .collect()
    }

    /// Known tags closest to `input` by edit distance, for error messages.
    pub fn nearest_tags(&self, input: &str, n: usize) -> Vec<String> {
        let mut scored: Vec<(usize, &String)> = self
            .tags
            .values()
            .map(|tag| (edit_distance(input, tag), tag))
            .collect();
        scored.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(n).map(|(_, t)| t.clone()).collect()
    }

    /// Sum over keywords of the maximum POI rating, optionally restricted to
    /// a subgraph set. This is the unconstrained cumulative-rating ceiling.
    pub fn max_cumulative_rating(
        &self,
        net: &RoadNetwork,
        keywords: &[KeywordId],
        restrict: Option<&BTreeSet<SubgraphId>>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for &kw in keywords {
            total += self.best_rating(net, kw, restrict, None).ok_or(
                KatrError::Uncoverable {
                    keyword: kw,
                    in_region: restrict.is_some(),
                },
            )?;
        }
        Ok(total)
    }

    /// Maximum cumulative rating over CP-Sets containing at least one POI
    /// outside `excluded` (the processed set), optionally region-restricted.
    /// `None` means no such CP-Set exists.
    ///
    /// With exactly one membership constraint the optimum is the unconstrained
    /// head sum when some keyword's head is unexcluded, and otherwise the best
    /// single swap of one keyword's head for its best unexcluded POI.
    pub fn max_cumulative_rating_excluding(
        &self,
        net: &RoadNetwork,
        keywords: &[KeywordId],
        restrict: Option<&BTreeSet<SubgraphId>>,
        excluded: &HashSet<PoiId>,
    ) -> Option<f64> {
        let mut head_sum = 0.0;
        let mut heads = Vec::with_capacity(keywords.len());
        for &kw in keywords {
            let best = self.best_rating(net, kw, restrict, None)?;
            head_sum += best;
            heads.push(best);
        }
        let mut best: Option<f64> = None;
        for (i, &kw) in keywords.iter().enumerate() {
            if let Some(free) = self.best_rating(net, kw, restrict, Some(excluded)) {
                let candidate = head_sum - heads[i] + free;
                if best.is_none_or(|b| candidate > b) {
                    best = Some(candidate);
                }
            }
        }
        best
    }

    /// Maximum cumulative rating over CP-Sets containing at least one of the
    /// forced candidates (unprocessed POIs of one subgraph, in the batch
    /// pruning use). Candidates whose keyword is not queried are ignored;
    /// `None` when all are.
    pub fn max_cumulative_rating_with_forced_poi(
        &self,
        net: &RoadNetwork,
        keywords: &[KeywordId],
        forced: &[PoiId],
    ) -> Option<f64> {
        let mut head_sum = 0.0;
        let mut head_of: HashMap<KeywordId, f64> = HashMap::new();
        for &kw in keywords {
            let best = self.best_rating(net, kw, None, None)?;
            head_sum += best;
            head_of.insert(kw, best);
        }
        let mut best_forced: HashMap<KeywordId, f64> = HashMap::new();
        for &p in forced {
            let poi = net.poi(p);
            if !head_of.contains_key(&poi.keyword) {
                continue;
            }
            let slot = best_forced.entry(poi.keyword).or_insert(f64::NEG_INFINITY);
            if poi.rating > *slot {
                *slot = poi.rating;
            }
        }
        best_forced
            .iter()
            .map(|(kw, &r)| head_sum - head_of[kw] + r)
            .max_by(f64::total_cmp)
    }

    /// Best rating of a keyword within the restriction, skipping excluded
    /// POIs when an exclusion set is given. Posting lists are
    /// rating-descending, so the scan stops at the first hit.
    fn best_rating(
        &self,
        net: &RoadNetwork,
        keyword: KeywordId,
        restrict: Option<&BTreeSet<SubgraphId>>,
        excluded: Option<&HashSet<PoiId>>,
    ) -> Option<f64> {
        let head = |list: &[PoiId]| -> Option<f64> {
            match excluded {
                None => list.first().map(|&p| net.poi(p).rating),
                Some(ex) => list
                    .iter()
                    .find(|p| !ex.contains(p))
                    .map(|&p| net.poi(p).rating),
            }
        };
        match restrict {
            None => head(self.postings(keyword)),
            Some(region) => {
                let mut best: Option<f64> = None;
                for &sg in self.subgraphs_with(keyword) {
                    if !region.contains(&sg) {
                        continue;
                    }
                    if let Some(r) = head(self.postings_in(keyword, sg)) {
                        if best.is_none_or(|b| r > b) {
                            best = Some(r);
                        }
                    }
                }
                best
            }
        }
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
