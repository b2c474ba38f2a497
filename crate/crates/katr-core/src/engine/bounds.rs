//! Score and bound formulas shared by the engine, the oracle, and the
//! diagnostics.

use crate::error::{KatrError, Result};

/// Route score: `-alpha * distance + (1 - alpha) * rating_sum`. Higher is
/// better.
pub fn score(alpha: f64, graph_distance: f64, rating_sum: f64) -> f64 {
    -alpha * graph_distance + (1.0 - alpha) * rating_sum
}

/// Radius of the safe region: the largest route distance any candidate could
/// have while still scoring at least `sc_min`, given the cumulative-rating
/// ceiling `tau_u`. Negative results clamp to zero (no superior route can
/// exist anywhere). `alpha == 0` has no finite radius and is signaled.
pub fn compute_d_ub(alpha: f64, tau_u: f64, sc_min: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(KatrError::InvalidQuery(
            "distance radius is undefined for alpha = 0".into(),
        ));
    }
    Ok((((1.0 - alpha) * tau_u - sc_min) / alpha).max(0.0))
}

/// Score upper bound for a subgraph: distance lower bound `d_lb` against the
/// cumulative-rating ceiling `tau_max` of CP-Sets forced through it.
pub fn subgraph_bound(alpha: f64, d_lb: f64, tau_max: f64) -> f64 {
    score(alpha, d_lb, tau_max)
}

/// Score upper bound for a CP-Set: minimum Euclidean route distance `ed_min`
/// against its fixed rating sum.
pub fn cpset_bound(alpha: f64, ed_min: f64, tau: f64) -> f64 {
    score(alpha, ed_min, tau)
}

/// Inputs of the search-scope estimator: `z` is the network area proxy,
/// `n_p` the average POIs per keyword, `tau_h`/`tau_l` the rating extremes.
#[derive(Debug, Clone, Copy)]
pub struct ScopeParams {
    pub z: f64,
    pub m: usize,
    pub k: usize,
    pub n_p: f64,
    pub alpha: f64,
    pub tau_h: f64,
    pub tau_l: f64,
}

/// Closed-form estimate of the fraction of the network area the search
/// touches. Diagnostic only; never used for pruning.
///
/// The radius combines the rating headroom `(1-alpha)*m*(tau_h-tau_l)/alpha`
/// with the seed-area diameter `2*sqrt(k*z/(n_p^m*pi))`; the touched area is
/// the disk of that radius over `z`. See [`estimate_search_fraction_strict`]
/// for the variant that also divides the diameter term by `alpha`; the two
/// disagree and the measured ratio is logged against both in bench reports.
pub fn estimate_search_fraction(p: ScopeParams) -> f64 {
    let diameter = seed_area_diameter(p);
    let radius = (1.0 - p.alpha) * p.m as f64 * (p.tau_h - p.tau_l) / p.alpha + diameter;
    std::f64::consts::PI * radius * radius / p.z
}

/// Strict algebraic variant: the whole radius, including the seed diameter,
/// divided by `alpha`.
pub fn estimate_search_fraction_strict(p: ScopeParams) -> f64 {
    let diameter = seed_area_diameter(p);
    let radius = ((1.0 - p.alpha) * p.m as f64 * (p.tau_h - p.tau_l) + diameter) / p.alpha;
    std::f64::consts::PI * radius * radius / p.z
}

fn seed_area_diameter(p: ScopeParams) -> f64 {
    2.0 * (p.k as f64 * p.z / (p.n_p.powi(p.m as i32) * std::f64::consts::PI)).sqrt()
}
