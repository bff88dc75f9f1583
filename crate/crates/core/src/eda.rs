//! The evolution loop: node-histogram model learning, sampling, the elite
//! archive with its evaluation cache, and generation management.
//!
//! Each generation decodes and evaluates the sampled population (skipping
//! canonical forms already seen), merges it with the archive, optionally
//! applies local search to a fitness-uniform selection, retains the top half
//! as the archive's elites, learns a node histogram from them, and samples
//! the next population.
//!
//! Randomness comes from a single seeded master stream; per-improve child
//! generators are split off deterministically, so results do not depend on
//! evaluation scheduling.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{canonicalize, decode, CompositionGraph, Permutation};
use crate::discovery::{discover, LayerSet};
use crate::error::{Error, Result};
use crate::evaluate::{compute_bounds, fitness, FitnessWeights, QualityBounds};
use crate::ingest::Repository;
use crate::localsearch::{improve, select_for_ls, ReplacePolicy, SwapOperator};
use crate::model::CompositionTask;
use crate::ontology::DEFAULT_PLUGIN_SCORE;

/// Algorithm variants: plain EDA or memetic EDA with one swap operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Eda,
    MeedaOp,
    MeedaTp,
    MeedaOb,
    MeedaLop,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Eda,
        Algorithm::MeedaOp,
        Algorithm::MeedaTp,
        Algorithm::MeedaOb,
        Algorithm::MeedaLop,
    ];

    /// The local-search operator of a memetic variant.
    pub fn operator(&self) -> Option<SwapOperator> {
        match self {
            Algorithm::Eda => None,
            Algorithm::MeedaOp => Some(SwapOperator::OnePoint),
            Algorithm::MeedaTp => Some(SwapOperator::TwoPoint),
            Algorithm::MeedaOb => Some(SwapOperator::OneBlock),
            Algorithm::MeedaLop => Some(SwapOperator::LayerOnePoint),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eda" => Ok(Algorithm::Eda),
            "meeda-op" => Ok(Algorithm::MeedaOp),
            "meeda-tp" => Ok(Algorithm::MeedaTp),
            "meeda-ob" => Ok(Algorithm::MeedaOb),
            "meeda-lop" => Ok(Algorithm::MeedaLop),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm `{other}` (expected eda, meeda-op, meeda-tp, meeda-ob, or meeda-lop)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Eda => "eda",
            Algorithm::MeedaOp => "meeda-op",
            Algorithm::MeedaTp => "meeda-tp",
            Algorithm::MeedaOb => "meeda-ob",
            Algorithm::MeedaLop => "meeda-lop",
        })
    }
}

/// Run-level parameters with the experimental defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Population size `m` (even).
    pub population: usize,
    /// Number of generations `G`.
    pub generations: usize,
    /// Bias ratio for the histogram epsilon.
    pub b_ratio: f64,
    /// Local-search candidates per generation.
    pub n_set: usize,
    /// Neighbors explored per candidate.
    pub n_nb: usize,
    /// Plugin match score `p`.
    pub plugin_score: f64,
    pub weights: FitnessWeights,
    pub seed: u64,
    pub ls_replace: ReplacePolicy,
    /// Absolute epsilon override for exact histogram replay.
    pub epsilon_abs: Option<f64>,
    /// Score the links touching Start/End in the matchmaking quality.
    pub score_boundary_links: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::MeedaLop,
            population: 200,
            generations: 100,
            b_ratio: 0.0002,
            n_set: 6,
            n_nb: 20,
            plugin_score: DEFAULT_PLUGIN_SCORE,
            weights: FitnessWeights::balanced(),
            seed: 0,
            ls_replace: ReplacePolicy::IfBetter,
            epsilon_abs: None,
            score_boundary_links: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population must be even and positive, got {}",
                self.population
            )));
        }
        if self.n_set < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_set must be at least 2, got {}",
                self.n_set
            )));
        }
        if self.n_nb < 1 {
            return Err(Error::InvalidConfig("n_nb must be at least 1".into()));
        }
        if !(self.plugin_score > 0.0 && self.plugin_score < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "plugin score must lie in (0, 1), got {}",
                self.plugin_score
            )));
        }
        if self.b_ratio < 0.0 || !self.b_ratio.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "b_ratio must be finite and non-negative, got {}",
                self.b_ratio
            )));
        }
        if let Some(e) = self.epsilon_abs {
            if e <= 0.0 || !e.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "epsilon override must be positive, got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// Position-by-service count matrix with an additive epsilon bias.
///
/// `entry(pos, svc)` is the number of sampled individuals placing service
/// `svc` at position `pos`, plus epsilon.
#[derive(Debug, Clone)]
pub struct NodeHistogramMatrix {
    n: usize,
    epsilon: f64,
    entries: Vec<f64>, // row-major [position][service]
}

impl NodeHistogramMatrix {
    /// Learns the histogram with `epsilon = m / (n - 1) * b_ratio`.
    pub fn learn(individuals: &[Permutation], b_ratio: f64) -> Result<Self> {
        let n = dimension(individuals)?;
        let m = individuals.len() as f64;
        let epsilon = if n > 1 {
            m / (n as f64 - 1.0) * b_ratio
        } else {
            0.0
        };
        Self::learn_with_bias(individuals, epsilon)
    }

    /// Learns the histogram with an explicit epsilon bias.
    pub fn learn_with_bias(individuals: &[Permutation], epsilon: f64) -> Result<Self> {
        let n = dimension(individuals)?;
        let mut entries = vec![epsilon; n * n];
        for ind in individuals {
            for (pos, &svc) in ind.order().iter().enumerate() {
                entries[pos * n + svc] += 1.0;
            }
        }
        Ok(NodeHistogramMatrix {
            n,
            epsilon,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn entry(&self, position: usize, service: usize) -> f64 {
        self.entries[position * self.n + service]
    }

    /// Node histogram-based sampling: positions are filled in a uniformly
    /// random scan order; each position draws a not-yet-used service with
    /// probability proportional to its entry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let n = self.n;
        let mut scan: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(scan.as_mut_slice(), rng);
        let mut order = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for &pos in &scan {
            let row = &self.entries[pos * n..(pos + 1) * n];
            let total: f64 = (0..n).filter(|&s| !used[s]).map(|s| row[s]).sum();
            let pick = if total > 0.0 {
                let mut x = rng.random_range(0.0..total);
                let mut chosen = None;
                for s in (0..n).filter(|&s| !used[s]) {
                    x -= row[s];
                    if x < 0.0 {
                        chosen = Some(s);
                        break;
                    }
                }
                // Guard against accumulated rounding at the tail.
                chosen.unwrap_or_else(|| (0..n).rfind(|&s| !used[s]).expect("unused remains"))
            } else {
                // Degenerate zero-mass row (epsilon = 0): uniform fallback.
                let unused: Vec<usize> = (0..n).filter(|&s| !used[s]).collect();
                unused[rng.random_range(0..unused.len())]
            };
            used[pick] = true;
            order[pos] = pick;
        }
        Permutation::from_order(order).expect("sampling yields a bijection")
    }
}

fn dimension(individuals: &[Permutation]) -> Result<usize> {
    let first = individuals.first().ok_or_else(|| {
        Error::InvalidConfig("cannot learn a histogram from no individuals".into())
    })?;
    let n = first.len();
    for ind in individuals {
        if ind.len() != n {
            return Err(Error::MixedDimensions(n, ind.len()));
        }
    }
    Ok(n)
}

/// Elite store plus the canonical-form evaluation cache.
///
/// `seen` maps canonical (encoded) permutation orders to their fitness and
/// used-prefix length; hits bypass decoding and evaluation, so no canonical
/// form is evaluated twice within a run.
#[derive(Debug, Clone)]
pub struct Archive {
    capacity: usize,
    elites: Vec<Permutation>,
    seen: HashMap<Vec<usize>, (f64, usize)>,
    evaluations: u64,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Archive {
            capacity,
            elites: Vec::new(),
            seen: HashMap::new(),
            evaluations: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Fitness-sorted elite permutations, at most `capacity`, distinct.
    pub fn elites(&self) -> &[Permutation] {
        &self.elites
    }

    pub fn lookup(&self, order: &[usize]) -> Option<(f64, usize)> {
        self.seen.get(order).copied()
    }

    pub fn record(&mut self, order: Vec<usize>, fitness: f64, used_len: usize) {
        let fresh = self.seen.insert(order, (fitness, used_len)).is_none();
        debug_assert!(fresh, "a canonical form must be evaluated at most once");
        self.evaluations += 1;
    }

    /// Number of full decode+evaluate executions so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn seen_count(&self) -> usize {
        self.seen.len()
    }

    /// Replaces the elites with the top `capacity` distinct entries of a
    /// fitness-sorted pool.
    pub fn retain_top(&mut self, sorted_pool: &[Permutation]) {
        let mut elites: Vec<Permutation> = Vec::with_capacity(self.capacity);
        let mut seen_orders: std::collections::HashSet<&[usize]> = std::collections::HashSet::new();
        for p in sorted_pool {
            if elites.len() == self.capacity {
                break;
            }
            if seen_orders.insert(p.order()) {
                elites.push(p.clone());
            }
        }
        self.elites = elites;
    }
}

/// Shared evaluation context: decodes, canonicalizes, and scores
/// permutations through the archive cache.
pub struct Evaluator<'a> {
    pub repo: &'a Repository,
    pub task: &'a CompositionTask,
    pub layers: &'a LayerSet,
    pub plugin_score: f64,
    pub bounds: QualityBounds,
    pub weights: FitnessWeights,
    pub score_boundary_links: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        repo: &'a Repository,
        task: &'a CompositionTask,
        layers: &'a LayerSet,
        config: &RunConfig,
    ) -> Self {
        Evaluator {
            repo,
            task,
            layers,
            plugin_score: config.plugin_score,
            bounds: compute_bounds(layers, repo),
            weights: config.weights,
            score_boundary_links: config.score_boundary_links,
        }
    }

    /// Returns the canonical encoded form with fitness attached, consulting
    /// and updating the archive cache.
    pub fn evaluate(&self, archive: &mut Archive, perm: &Permutation) -> Result<Permutation> {
        if let Some((f, used)) = archive.lookup(perm.order()) {
            let enc = Permutation::encoded_unchecked(perm.order().to_vec(), used);
            return Ok(enc.with_fitness(f));
        }
        let (encoded, graph) =
            canonicalize(perm, self.layers, self.task, self.repo, self.plugin_score)?;
        if let Some((f, _)) = archive.lookup(encoded.order()) {
            return Ok(encoded.with_fitness(f));
        }
        let f = fitness(
            &graph,
            self.repo,
            &self.bounds,
            &self.weights,
            self.score_boundary_links,
        )?;
        archive.record(
            encoded.order().to_vec(),
            f,
            encoded.used_len().expect("encoded"),
        );
        Ok(encoded.with_fitness(f))
    }

    pub fn decode_graph(&self, perm: &Permutation) -> Result<CompositionGraph> {
        decode(perm, self.layers, self.task, self.repo, self.plugin_score)
    }
}

/// One row of the per-generation trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub generation: usize,
    pub evaluations: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub elapsed_ms: f64,
    pub better_neighbor_rate: f64,
}

/// Outcome of a single run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Permutation,
    pub best_fitness: f64,
    pub best_graph: CompositionGraph,
    pub trace: Vec<TraceRow>,
    pub evaluations: u64,
}

fn mean_fitness(pop: &[Permutation]) -> f64 {
    if pop.is_empty() {
        return 0.0;
    }
    pop.iter()
        .map(|p| p.fitness().expect("evaluated"))
        .sum::<f64>()
        / pop.len() as f64
}

fn sort_desc(pool: &mut [Permutation]) {
    pool.sort_by(|a, b| {
        b.fitness()
            .expect("evaluated")
            .total_cmp(&a.fitness().expect("evaluated"))
    });
}

/// Runs the evolution loop and returns the best-ever solution with its
/// per-generation trace.
pub fn evolve(config: &RunConfig, repo: &Repository, task: &CompositionTask) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let layers = discover(repo, task, config.plugin_score)?;
    let n = layers.len();
    let evaluator = Evaluator::new(repo, task, &layers, config);
    let mut archive = Archive::new(config.population / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut evaluated = Vec::with_capacity(config.population);
    for _ in 0..config.population {
        let raw = Permutation::random(n, &mut rng);
        evaluated.push(evaluator.evaluate(&mut archive, &raw)?);
    }
    let mut best = evaluated
        .iter()
        .max_by(|a, b| {
            a.fitness()
                .expect("evaluated")
                .total_cmp(&b.fitness().expect("evaluated"))
        })
        .expect("population is non-empty")
        .clone();

    let mut trace = Vec::with_capacity(config.generations + 1);
    let elapsed = |start: Instant| start.elapsed().as_secs_f64() * 1e3;
    trace.push(TraceRow {
        generation: 0,
        evaluations: archive.evaluations(),
        best_fitness: best.fitness().expect("evaluated"),
        mean_fitness: mean_fitness(&evaluated),
        elapsed_ms: elapsed(start),
        better_neighbor_rate: 0.0,
    });

    for generation in 1..=config.generations {
        // Merge the evaluated population with the archive's elites; all are
        // in canonical encoded form.
        let mut merged = evaluated;
        merged.extend(archive.elites().iter().cloned());

        let mut rate = 0.0;
        if let Some(op) = config.algorithm.operator() {
            let selected = select_for_ls(&merged, config.n_set, &mut rng);
            let mut rates = Vec::with_capacity(selected.len());
            for idx in selected {
                let child_seed = rng.random::<u64>();
                let mut child = ChaCha8Rng::seed_from_u64(child_seed);
                let (improved, r) = improve(
                    &merged[idx],
                    op,
                    config.n_nb,
                    config.ls_replace,
                    &layers,
                    &mut child,
                    &mut |p| evaluator.evaluate(&mut archive, p),
                )?;
                merged[idx] = improved;
                rates.push(r);
            }
            if !rates.is_empty() {
                rate = rates.iter().sum::<f64>() / rates.len() as f64;
            }
        }

        sort_desc(&mut merged);
        archive.retain_top(&merged);
        if merged[0].fitness().expect("evaluated") > best.fitness().expect("evaluated") {
            best = merged[0].clone();
        }

        let nhm = match config.epsilon_abs {
            Some(eps) => NodeHistogramMatrix::learn_with_bias(archive.elites(), eps)?,
            None => NodeHistogramMatrix::learn(archive.elites(), config.b_ratio)?,
        };

        evaluated = Vec::with_capacity(config.population);
        for _ in 0..config.population {
            let raw = nhm.sample(&mut rng);
            evaluated.push(evaluator.evaluate(&mut archive, &raw)?);
        }
        for p in &evaluated {
            if p.fitness().expect("evaluated") > best.fitness().expect("evaluated") {
                best = p.clone();
            }
        }

        trace.push(TraceRow {
            generation,
            evaluations: archive.evaluations(),
            best_fitness: best.fitness().expect("evaluated"),
            mean_fitness: mean_fitness(&evaluated),
            elapsed_ms: elapsed(start),
            better_neighbor_rate: rate,
        });
    }

    let best_graph = evaluator.decode_graph(&best)?;
    Ok(RunResult {
        best_fitness: best.fitness().expect("evaluated"),
        best,
        best_graph,
        trace,
        evaluations: archive.evaluations(),
    })
}
