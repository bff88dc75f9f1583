//! Multi-run experiment orchestration, statistics, synthetic instance
//! generation, and the exhaustive oracle.
//!
//! Experiments execute `runs` seeded repetitions of each algorithm on each
//! dataset in a worker pool (seeds are `seed_base + run`, so results are
//! independent of scheduling), aggregate per-run records, and compare
//! variants pairwise. Result CSVs are deterministic; wall-clock timings go
//! to separate files since they can never be bit-reproducible.

mod oracle;
mod stats;
mod synthetic;

pub use oracle::{brute_force_optimum, ORACLE_MAX_RELEVANT};
pub use stats::{
    compare, regularized_incomplete_beta, t_test, ComparisonTable, MethodTaskStats, PairTally,
    RunRecord, TTest,
};
pub use synthetic::{generate_synthetic, write_synthetic, SyntheticInstance};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eda::{evolve, Algorithm, RunConfig, TraceRow};
use crate::error::{Error, Result};
use crate::evaluate::FitnessWeights;
use crate::ingest::{load_canonical, load_canonical_dir, Repository};
use crate::localsearch::ReplacePolicy;
use crate::model::CompositionTask;

/// A dataset reference: either a canonical dataset directory or the three
/// explicit file paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub services: Option<PathBuf>,
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    #[serde(default)]
    pub task: Option<PathBuf>,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<(Repository, CompositionTask)> {
        match (&self.dir, &self.services, &self.taxonomy, &self.task) {
            (Some(dir), _, _, _) => load_canonical_dir(dir),
            (None, Some(s), Some(x), Some(t)) => load_canonical(s, x, t),
            _ => Err(Error::InvalidConfig(format!(
                "dataset `{}` needs either `dir` or all of services/taxonomy/task",
                self.name
            ))),
        }
    }
}

/// Algorithm-independent run parameters shared across an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseConfig {
    pub population: usize,
    pub generations: usize,
    pub b_ratio: f64,
    pub n_set: usize,
    pub n_nb: usize,
    pub plugin_score: f64,
    pub weights: FitnessWeights,
    pub ls_replace: ReplacePolicy,
    pub epsilon_abs: Option<f64>,
    pub score_boundary_links: bool,
}

impl Default for BaseConfig {
    fn default() -> Self {
        let d = RunConfig::default();
        BaseConfig {
            population: d.population,
            generations: d.generations,
            b_ratio: d.b_ratio,
            n_set: d.n_set,
            n_nb: d.n_nb,
            plugin_score: d.plugin_score,
            weights: d.weights,
            ls_replace: d.ls_replace,
            epsilon_abs: d.epsilon_abs,
            score_boundary_links: d.score_boundary_links,
        }
    }
}

impl BaseConfig {
    pub fn run_config(&self, algorithm: Algorithm, seed: u64) -> RunConfig {
        RunConfig {
            algorithm,
            population: self.population,
            generations: self.generations,
            b_ratio: self.b_ratio,
            n_set: self.n_set,
            n_nb: self.n_nb,
            plugin_score: self.plugin_score,
            weights: self.weights,
            seed,
            ls_replace: self.ls_replace,
            epsilon_abs: self.epsilon_abs,
            score_boundary_links: self.score_boundary_links,
        }
    }
}

fn default_runs() -> usize {
    30
}

fn default_alpha() -> f64 {
    0.05
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

/// A full experiment description, loadable from JSON or TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Seeded repetitions per (dataset, algorithm).
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub config: BaseConfig,
    /// Extra per-run result CSVs (e.g. published baselines) merged into the
    /// comparison.
    #[serde(default)]
    pub external_results: Vec<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidConfig(
                "experiment needs at least one dataset".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "experiment needs at least one algorithm".into(),
            ));
        }
        if self.runs < 2 {
            return Err(Error::InvalidConfig(
                "statistical comparison needs at least two runs".into(),
            ));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Everything an experiment produced, ready to be written out.
#[derive(Debug)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub traces: Vec<TraceFile>,
    pub table: ComparisonTable,
}

/// The per-generation trace of one run.
#[derive(Debug)]
pub struct TraceFile {
    pub task: String,
    pub method: String,
    pub run: usize,
    pub rows: Vec<TraceRow>,
}

/// Executes every (dataset, algorithm, run) job in a worker pool and builds
/// the comparison table. A failing run reports its task, algorithm, and
/// seed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut datasets = Vec::with_capacity(spec.datasets.len());
    for d in &spec.datasets {
        let (repo, task) = d.load()?;
        datasets.push((d.name.clone(), repo, task));
    }

    let mut jobs = Vec::new();
    for (d_idx, _) in datasets.iter().enumerate() {
        for &algorithm in &spec.algorithms {
            for run in 0..spec.runs {
                jobs.push((d_idx, algorithm, run));
            }
        }
    }

    let outcomes: Result<Vec<(RunRecord, TraceFile)>> = jobs
        .par_iter()
        .map(|&(d_idx, algorithm, run)| {
            let (name, repo, task) = &datasets[d_idx];
            let seed = spec.seed_base + run as u64;
            let config = spec.config.run_config(algorithm, seed);
            let begun = Instant::now();
            let result = evolve(&config, repo, task).map_err(|e| Error::RunFailed {
                task: name.clone(),
                algorithm: algorithm.to_string(),
                seed,
                source: Box::new(e),
            })?;
            let elapsed_ms = begun.elapsed().as_secs_f64() * 1e3;
            let record = RunRecord {
                task: name.clone(),
                method: algorithm.to_string(),
                run,
                seed,
                fitness: result.best_fitness,
                elapsed_ms,
            };
            let trace = TraceFile {
                task: name.clone(),
                method: algorithm.to_string(),
                run,
                rows: result.trace,
            };
            Ok((record, trace))
        })
        .collect();

    let mut outcomes = outcomes?;
    outcomes
        .sort_by(|a, b| (&a.0.task, &a.0.method, a.0.run).cmp(&(&b.0.task, &b.0.method, b.0.run)));
    let (mut records, traces): (Vec<RunRecord>, Vec<TraceFile>) = outcomes.into_iter().unzip();

    for path in &spec.external_results {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        records.extend(parse_records_csv(&text, path)?);
    }

    let table = compare(&records, spec.alpha)?;
    Ok(ExperimentResult {
        records,
        traces,
        table,
    })
}

/// Renders the deterministic per-run results CSV (no wall-clock columns).
pub fn results_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("task,method,run,seed,fitness\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.task, r.method, r.run, r.seed, r.fitness
        ));
    }
    out
}

/// Renders the wall-clock timings CSV (not bit-reproducible).
pub fn timings_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("task,method,run,seed,elapsed_ms\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.task, r.method, r.run, r.seed, r.elapsed_ms
        ));
    }
    out
}

/// Renders one run's per-generation trace CSV.
pub fn trace_csv(rows: &[TraceRow], run: usize) -> String {
    let mut out = String::from(
        "run,generation,evaluations,best_fitness,mean_fitness,elapsed_ms,better_neighbor_rate\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            run,
            row.generation,
            row.evaluations,
            row.best_fitness,
            row.mean_fitness,
            row.elapsed_ms,
            row.better_neighbor_rate
        ));
    }
    out
}

/// Parses a per-run results CSV: `task,method,run,seed,fitness` with an
/// optional trailing `elapsed_ms` column.
pub fn parse_records_csv(text: &str, path: &Path) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((i, line)) => break (i, line),
            None => return Ok(Vec::new()),
        }
    };
    let columns: Vec<&str> = header.1.split(',').map(str::trim).collect();
    let expected_5 = ["task", "method", "run", "seed", "fitness"];
    let with_time = columns.len() == 6 && columns[5] == "elapsed_ms";
    if !(columns.len() == 5 || with_time) || columns[..5] != expected_5 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: header.0 + 1,
            column: 1,
            message: format!("unexpected results header `{}`", header.1),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("expected {} fields, got {}", columns.len(), fields.len()),
            });
        }
        let parse_err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column,
            message,
        };
        records.push(RunRecord {
            task: fields[0].to_string(),
            method: fields[1].to_string(),
            run: fields[2]
                .parse()
                .map_err(|e| parse_err(3, format!("bad run index: {e}")))?,
            seed: fields[3]
                .parse()
                .map_err(|e| parse_err(4, format!("bad seed: {e}")))?,
            fitness: fields[4]
                .parse()
                .map_err(|e| parse_err(5, format!("bad fitness: {e}")))?,
            elapsed_ms: if with_time {
                fields[5]
                    .parse()
                    .map_err(|e| parse_err(6, format!("bad elapsed_ms: {e}")))?
            } else {
                0.0
            },
        });
    }
    Ok(records)
}

/// Writes results, timings, traces, and the comparison table into `dir`.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<()> {
    let write = |path: PathBuf, text: &str| -> Result<()> {
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    };
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir.join("results.csv"), &results_csv(&result.records))?;
    write(dir.join("timings.csv"), &timings_csv(&result.records))?;
    let (stats, tallies) = result.table.to_csv();
    write(dir.join("comparison.csv"), &stats)?;
    write(dir.join("tallies.csv"), &tallies)?;
    write(dir.join("comparison.txt"), &result.table.render())?;
    let traces = dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(|source| Error::Io {
        path: traces.clone(),
        source,
    })?;
    for t in &result.traces {
        let name = format!("{}_{}_run{}.csv", t.task, t.method, t.run);
        write(traces.join(name), &trace_csv(&t.rows, t.run))?;
    }
    Ok(())
}

/// Convenience used by tests and the CLI for a standard synthetic suite:
/// instances `synthetic-<n>-<depth>-<seed>` for seeds `base..base+count`.
pub fn synthetic_suite(count: usize, base_seed: u64) -> Result<Vec<SyntheticInstance>> {
    (0..count)
        .map(|i| {
            let seed = base_seed + i as u64;
            let n_services = 8 + (i % 5); // 8..=12
            let depth = 2 + (i % 3); // 2..=4
            generate_synthetic(n_services, depth, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tiny_spec(dir: &Path) -> ExperimentSpec {
        ExperimentSpec {
            datasets: vec![DatasetSpec {
                name: "chain".into(),
                dir: Some(dir.to_path_buf()),
                services: None,
                taxonomy: None,
                task: None,
            }],
            algorithms: vec![Algorithm::Eda, Algorithm::MeedaLop],
            runs: 3,
            seed_base: 0,
            alpha: 0.05,
            config: BaseConfig {
                population: 8,
                generations: 3,
                ..BaseConfig::default()
            },
            external_results: Vec::new(),
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let dir = fixtures::tmpdir("experiment");
        let (repo, task) = fixtures::example1().unwrap();
        crate::ingest::dump_canonical(&repo, &task, &dir).unwrap();
        let spec = tiny_spec(&dir);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(results_csv(&a.records), results_csv(&b.records));
        assert_eq!(a.traces.len(), 2 * 3);
        // Traces agree on everything except wall-clock columns.
        for (ta, tb) in a.traces.iter().zip(&b.traces) {
            for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
                assert_eq!(ra.best_fitness, rb.best_fitness);
                assert_eq!(ra.evaluations, rb.evaluations);
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn spec_validation_catches_thin_runs() {
        let dir = fixtures::tmpdir("experiment_thin");
        let mut spec = tiny_spec(&dir);
        spec.runs = 1;
        assert!(matches!(
            run_experiment(&spec),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn records_csv_round_trips() {
        let records = vec![
            RunRecord {
                task: "t".into(),
                method: "eda".into(),
                run: 0,
                seed: 0,
                fitness: 0.75,
                elapsed_ms: 12.5,
            },
            RunRecord {
                task: "t".into(),
                method: "eda".into(),
                run: 1,
                seed: 1,
                fitness: 0.8,
                elapsed_ms: 11.0,
            },
        ];
        let text = results_csv(&records);
        let parsed = parse_records_csv(&text, Path::new("results.csv")).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].fitness, 0.75);
        assert_eq!(parsed[0].elapsed_ms, 0.0); // results.csv carries no timing
        let err = parse_records_csv("a,b\n1,2\n", Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn write_experiment_creates_artifacts() {
        let dir = fixtures::tmpdir("experiment_write");
        let (repo, task) = fixtures::example1().unwrap();
        crate::ingest::dump_canonical(&repo, &task, &dir).unwrap();
        let mut spec = tiny_spec(&dir);
        spec.runs = 2;
        let result = run_experiment(&spec).unwrap();
        let out = dir.join("out");
        write_experiment(&result, &out).unwrap();
        for f in [
            "results.csv",
            "timings.csv",
            "comparison.csv",
            "tallies.csv",
            "comparison.txt",
        ] {
            assert!(out.join(f).exists(), "{f}");
        }
        assert!(out.join("traces").read_dir().unwrap().count() >= 4);
        std::fs::remove_dir_all(&dir).ok();
    }
}
