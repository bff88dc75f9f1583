//! Solution scoring: semantic matchmaking quality over the causal links,
//! normalization bounds over the relevant services, and the weighted fitness.
//!
//! `MT` multiplies the per-link match scores, `SIM` averages the per-link
//! similarities. Availability/reliability are normalized between the product
//! and the maximum over the relevant services, time/cost between the minimum
//! and the sum; time and cost are inverted so that higher normalized values
//! are always better. Degenerate bounds (min == max) normalize to 1.

use serde::{Deserialize, Serialize};

use crate::codec::{CompositionGraph, GraphNode};
use crate::discovery::LayerSet;
use crate::error::{Error, Result};
use crate::ingest::Repository;
use crate::model::aggregate_dag;

/// Weights over (MT, SIM, A, R, T, CT); non-negative, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct FitnessWeights {
    w: [f64; 6],
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl FitnessWeights {
    pub fn new(w: [f64; 6]) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidConfig(
                "fitness weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "fitness weights must sum to 1, got {sum}"
            )));
        }
        Ok(FitnessWeights { w })
    }

    /// The balanced setting: 0.25 for MT and SIM, 0.125 for each QoS term.
    pub fn balanced() -> Self {
        FitnessWeights {
            w: [0.25, 0.25, 0.125, 0.125, 0.125, 0.125],
        }
    }

    pub fn values(&self) -> [f64; 6] {
        self.w
    }
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self::balanced()
    }
}

impl TryFrom<[f64; 6]> for FitnessWeights {
    type Error = Error;
    fn try_from(w: [f64; 6]) -> Result<Self> {
        FitnessWeights::new(w)
    }
}

impl From<FitnessWeights> for [f64; 6] {
    fn from(w: FitnessWeights) -> [f64; 6] {
        w.w
    }
}

/// Per-criterion (min, max) normalization bounds for A, R, T, CT. MT and SIM
/// are already in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityBounds {
    pub availability: (f64, f64),
    pub reliability: (f64, f64),
    pub time: (f64, f64),
    pub cost: (f64, f64),
}

/// Closed-form normalization extremes over the relevant services: products
/// and maxima for availability/reliability, minima and sums for time/cost.
/// These bound any sequence/parallel DAG over the relevant set.
pub fn compute_bounds(layers: &LayerSet, repo: &Repository) -> QualityBounds {
    if layers.is_empty() {
        return QualityBounds {
            availability: (0.0, 1.0),
            reliability: (0.0, 1.0),
            time: (0.0, 0.0),
            cost: (0.0, 0.0),
        };
    }
    let mut a_min = 1.0f64;
    let mut a_max = 0.0f64;
    let mut r_min = 1.0f64;
    let mut r_max = 0.0f64;
    let mut t_min = f64::INFINITY;
    let mut t_sum = 0.0f64;
    let mut ct_min = f64::INFINITY;
    let mut ct_sum = 0.0f64;
    for &id in layers.relevant() {
        let q = repo.services[id].qos;
        a_min *= q.availability;
        a_max = a_max.max(q.availability);
        r_min *= q.reliability;
        r_max = r_max.max(q.reliability);
        t_min = t_min.min(q.time);
        t_sum += q.time;
        ct_min = ct_min.min(q.cost);
        ct_sum += q.cost;
    }
    QualityBounds {
        availability: (a_min, a_max),
        reliability: (r_min, r_max),
        time: (t_min, t_sum),
        cost: (ct_min, ct_sum),
    }
}

/// Aggregate matchmaking quality over a graph's causal links: the product of
/// match scores and the mean similarity.
///
/// Structural links without matched pairs are never scored. When
/// `score_boundary_links` is false, links from Start and into End are also
/// excluded. A graph with no scored links is vacuously perfect.
pub fn qosm(graph: &CompositionGraph, score_boundary_links: bool) -> (f64, f64) {
    let mut mt = 1.0;
    let mut sim_sum = 0.0;
    let mut m = 0usize;
    for link in graph.links() {
        if link.pairs.is_empty() {
            continue;
        }
        if !score_boundary_links && (link.from == GraphNode::Start || link.to == GraphNode::End) {
            continue;
        }
        mt *= link.quality.match_score;
        sim_sum += link.quality.similarity;
        m += 1;
    }
    if m == 0 {
        log::debug!("qosm over a graph without scored links: vacuous (1, 1)");
        return (1.0, 1.0);
    }
    (mt, sim_sum / m as f64)
}

fn normalize_benefit(q: f64, (min, max): (f64, f64)) -> f64 {
    if max - min == 0.0 {
        1.0
    } else {
        ((q - min) / (max - min)).clamp(0.0, 1.0)
    }
}

fn normalize_cost(q: f64, (min, max): (f64, f64)) -> f64 {
    if max - min == 0.0 {
        1.0
    } else {
        ((max - q) / (max - min)).clamp(0.0, 1.0)
    }
}

/// Weighted fitness of a decoded composition graph, in [0, 1]; higher is
/// better.
pub fn fitness(
    graph: &CompositionGraph,
    repo: &Repository,
    bounds: &QualityBounds,
    weights: &FitnessWeights,
    score_boundary_links: bool,
) -> Result<f64> {
    let (mt, sim) = qosm(graph, score_boundary_links);
    let qos = aggregate_dag(graph, &repo.services)?;
    let w = weights.values();
    let value = w[0] * mt.clamp(0.0, 1.0)
        + w[1] * sim.clamp(0.0, 1.0)
        + w[2] * normalize_benefit(qos.availability, bounds.availability)
        + w[3] * normalize_benefit(qos.reliability, bounds.reliability)
        + w[4] * normalize_cost(qos.time, bounds.time)
        + w[5] * normalize_cost(qos.cost, bounds.cost);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode, Permutation};
    use crate::discovery::discover;
    use crate::fixtures;

    fn approx(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(FitnessWeights::new([0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(FitnessWeights::new([0.5, 0.4, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(FitnessWeights::new([1.5, -0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    /// Two services where the second consumes a plugin-matched concept:
    /// edge qualities are {1, 1} and {0.75, 0.8}.
    fn mixed_graph() -> (CompositionGraph, Repository, LayerSet) {
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["b_spec"], "qos": {"t": 2, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 1, "inputs": ["b"], "outputs": ["c"], "qos": {"t": 3, "ct": 2, "r": 0.8, "a": 0.8}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "b"], ["b", "b_spec"], ["r", "c"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["c"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(
            &Permutation::from_order(vec![0, 1]).unwrap(),
            &layers,
            &task,
            &repo,
            0.75,
        )
        .unwrap();
        (g, repo, layers)
    }

    #[test]
    fn qosm_all_exact_is_perfect() {
        let (repo, task) = fixtures::chain().unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(
            &Permutation::from_order(vec![0, 1]).unwrap(),
            &layers,
            &task,
            &repo,
            0.75,
        )
        .unwrap();
        let (mt, sim) = qosm(&g, true);
        approx(mt, 1.0);
        approx(sim, 1.0);
    }

    #[test]
    fn qosm_multiplies_and_averages() {
        // Links: Start->S0 (1, 1), S0->S1 (0.75, 2*2/(3+2) = 0.8), S1->End (1, 1).
        let (g, _, _) = mixed_graph();
        let (mt, sim) = qosm(&g, true);
        approx(mt, 0.75);
        approx(sim, (1.0 + 0.8 + 1.0) / 3.0);
        // Without boundary links only the interior edge is scored.
        let (mt, sim) = qosm(&g, false);
        approx(mt, 0.75);
        approx(sim, 0.8);
    }

    #[test]
    fn qosm_two_scored_edges() {
        // Exactly two links: Start->S0 exact and S0->End plugin, so the
        // types are {1, 0.75} and the similarities {1, 0.8}.
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["b_spec"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "b"], ["b", "b_spec"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["b"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(
            &Permutation::from_order(vec![0]).unwrap(),
            &layers,
            &task,
            &repo,
            0.75,
        )
        .unwrap();
        let (mt, sim) = qosm(&g, true);
        approx(mt, 0.75);
        approx(sim, 0.9);
    }

    #[test]
    fn qosm_plugin_product_decays() {
        // Two plugin links of score p multiply to p^2.
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["b_spec"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 1, "inputs": ["b"], "outputs": ["c_spec"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "b"], ["b", "b_spec"], ["r", "c"], ["c", "c_spec"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["c"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(
            &Permutation::from_order(vec![0, 1]).unwrap(),
            &layers,
            &task,
            &repo,
            0.75,
        )
        .unwrap();
        let (mt, _) = qosm(&g, true);
        approx(mt, 0.75f64.powi(2));
    }

    #[test]
    fn bounds_single_service_degenerate() {
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["c"], "qos": {"t": 2, "ct": 3, "r": 0.9, "a": 0.8}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "c"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["c"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let b = compute_bounds(&layers, &repo);
        assert_eq!(b.time, (2.0, 2.0));
        assert_eq!(b.availability, (0.8, 0.8));
        assert_eq!(normalize_cost(2.0, b.time), 1.0);
        assert_eq!(normalize_benefit(0.8, b.availability), 1.0);
    }

    #[test]
    fn bounds_min_sum_and_product_max() {
        let (repo, task) = fixtures::two_service_bounds().unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let b = compute_bounds(&layers, &repo);
        assert_eq!(b.time, (2.0, 5.0));
        approx(b.availability.0, 0.72);
        approx(b.availability.1, 0.9);
    }

    #[test]
    fn fitness_is_one_when_all_terms_are_one() {
        let w = FitnessWeights::balanced();
        let sum: f64 = w.values().iter().map(|wk| wk * 1.0).sum();
        approx(sum, 1.0);
    }

    #[test]
    fn fitness_weighted_sum_example() {
        // MT = 0.75, SIM = 0.9, all QoS terms normalized to 1:
        // 0.25*0.75 + 0.25*0.9 + 0.5 = 0.9125.
        let w = FitnessWeights::balanced().values();
        let value = w[0] * 0.75 + w[1] * 0.9 + w[2] + w[3] + w[4] + w[5];
        approx(value, 0.9125);
    }

    #[test]
    fn fitness_zero_when_slowest_and_only_time_matters() {
        let (repo, task) = fixtures::two_service_bounds().unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let bounds = compute_bounds(&layers, &repo);
        // The full chain uses both services, so T = 5 = T_max.
        let g = decode(
            &Permutation::from_order(vec![0, 1]).unwrap(),
            &layers,
            &task,
            &repo,
            0.75,
        )
        .unwrap();
        let weights = FitnessWeights::new([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let f = fitness(&g, &repo, &bounds, &weights, true).unwrap();
        approx(f, 0.0);
    }

    #[test]
    fn fitness_within_unit_interval_and_monotone_in_time() {
        let (g, repo, layers) = mixed_graph();
        let bounds = compute_bounds(&layers, &repo);
        let f = fitness(&g, &repo, &bounds, &FitnessWeights::balanced(), true).unwrap();
        assert!((0.0..=1.0).contains(&f));
        // Lowering raw T (wider max) never lowers the fitness term.
        let wider = QualityBounds {
            time: (bounds.time.0, bounds.time.1 + 10.0),
            ..bounds
        };
        let f2 = fitness(&g, &repo, &wider, &FitnessWeights::balanced(), true).unwrap();
        assert!(f2 >= f);
    }
}
