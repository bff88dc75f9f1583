//! Command-line interface for the composition solver: dataset inspection
//! (`discover`, `decode`), single-task optimization (`run`), experiment
//! orchestration (`bench`), instance generation (`gen-synthetic`), the
//! exhaustive optimum (`oracle`), and CSV statistics (`stats`).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wscomp::eda::{Algorithm, RunConfig};
use wscomp::harness::{
    self, brute_force_optimum, compare, parse_records_csv, results_csv, run_experiment,
    timings_csv, trace_csv, write_experiment, ExperimentSpec, RunRecord,
};
use wscomp::localsearch::ReplacePolicy;
use wscomp::{
    discover, evolve, import_wsc, load_canonical, CompositionGraph, CompositionTask,
    FitnessWeights, GraphNode, LayerSet, Permutation, Repository,
};

#[derive(Parser)]
#[command(
    name = "wscomp",
    version,
    about = "Quality-aware web service composition solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DatasetArgs {
    /// Canonical services.json
    #[arg(long, requires = "taxonomy", requires = "task")]
    services: Option<PathBuf>,
    /// Canonical taxonomy.json
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Canonical task.json
    #[arg(long)]
    task: Option<PathBuf>,
    /// Directory with the three canonical JSON files
    #[arg(long, conflicts_with_all = ["services", "taxonomy", "task", "wsc_dir"])]
    dir: Option<PathBuf>,
    /// WSC-style XML dataset directory (best-effort import)
    #[arg(long, conflicts_with_all = ["services", "taxonomy", "task"])]
    wsc_dir: Option<PathBuf>,
}

impl DatasetArgs {
    fn load(&self) -> Result<(Repository, CompositionTask)> {
        if let Some(dir) = &self.wsc_dir {
            return Ok(import_wsc(dir)?);
        }
        if let Some(dir) = &self.dir {
            return Ok(wscomp::load_canonical_dir(dir)?);
        }
        match (&self.services, &self.taxonomy, &self.task) {
            (Some(s), Some(x), Some(t)) => Ok(load_canonical(s, x, t)?),
            _ => bail!("provide --dir, --wsc-dir, or all of --services/--taxonomy/--task"),
        }
    }
}

#[derive(Args)]
struct ScoringArgs {
    /// Plugin match score p in (0, 1)
    #[arg(long, short = 'p', default_value_t = 0.75)]
    plugin_score: f64,
    /// Comma-separated weights w1..w6 for (MT, SIM, A, R, T, CT)
    #[arg(long, default_value = "0.25,0.25,0.125,0.125,0.125,0.125", value_parser = parse_weights)]
    weights: FitnessWeights,
    /// Score the links touching Start/End in the matchmaking quality
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    score_boundary_links: bool,
}

fn parse_weights(s: &str) -> Result<FitnessWeights, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!(
            "expected 6 comma-separated weights, got {}",
            parts.len()
        ));
    }
    let mut w = [0.0f64; 6];
    for (i, p) in parts.iter().enumerate() {
        w[i] = p.parse().map_err(|e| format!("weight {}: {e}", i + 1))?;
    }
    FitnessWeights::new(w).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Find task-relevant services and their layers; prints JSON.
    Discover {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, short = 'p', default_value_t = 0.75)]
        plugin_score: f64,
    },
    /// Decode a permutation into its composition DAG; prints JSON.
    Decode {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
        /// Permutation of original service ids, e.g. "[4,1,2,3,0]"
        #[arg(long)]
        perm: String,
    },
    /// Optimize one task with a chosen algorithm variant.
    Run {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long, default_value = "meeda-lop")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 200)]
        pop_size: usize,
        #[arg(long, default_value_t = 100)]
        generations: usize,
        #[arg(long, default_value_t = 0.0002)]
        b_ratio: f64,
        #[arg(long, default_value_t = 6)]
        n_set: usize,
        #[arg(long, default_value_t = 20)]
        n_nb: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Independent repetitions (seeds seed, seed+1, ...)
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value = "if-better")]
        ls_replace: ReplacePolicy,
        /// Absolute histogram bias override
        #[arg(long)]
        epsilon_abs: Option<f64>,
        /// Output directory for per-run JSON and trace CSVs
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment from a JSON or TOML spec file.
    Bench {
        /// ExperimentSpec file (.json or .toml)
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (default: alongside the spec)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a deterministic synthetic instance as canonical JSON files.
    GenSynthetic {
        #[arg(long)]
        services: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum for small instances; prints JSON.
    Oracle {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Compare per-run result CSVs and print the comparison table.
    Stats {
        /// Result CSVs (task,method,run,seed,fitness[,elapsed_ms])
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Also write comparison.csv/tallies.csv into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn layers_json(layers: &LayerSet) -> serde_json::Value {
    json!({
        "relevant": layers.relevant(),
        "layers": layers
            .layers()
            .iter()
            .map(|l| l.iter().map(|&rel| layers.service_id(rel)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

fn node_json(node: &GraphNode) -> serde_json::Value {
    match node {
        GraphNode::Start => json!("start"),
        GraphNode::End => json!("end"),
        GraphNode::Service { id, .. } => json!(id),
    }
}

fn graph_json(
    graph: &CompositionGraph,
    repo: &Repository,
    layers: &LayerSet,
    scoring: &ScoringArgs,
) -> Result<serde_json::Value> {
    let bounds = wscomp::compute_bounds(layers, repo);
    let qos = wscomp::aggregate_dag(graph, &repo.services)?;
    let (mt, sim) = wscomp::qosm(graph, scoring.score_boundary_links);
    let fitness = wscomp::fitness(
        graph,
        repo,
        &bounds,
        &scoring.weights,
        scoring.score_boundary_links,
    )?;
    let tax = &repo.taxonomy;
    Ok(json!({
        "services": graph.services().map(|(_, id)| id).collect::<Vec<_>>(),
        "edges": graph.links().iter().map(|l| json!({
            "from": node_json(&l.from),
            "to": node_json(&l.to),
            "pairs": l.pairs.iter()
                .map(|&(o, i)| json!([tax.name(o), tax.name(i)]))
                .collect::<Vec<_>>(),
            "match_score": l.quality.match_score,
            "similarity": l.quality.similarity,
        })).collect::<Vec<_>>(),
        "qos": {"t": qos.time, "ct": qos.cost, "r": qos.reliability, "a": qos.availability},
        "qosm": {"mt": mt, "sim": sim},
        "fitness": fitness,
    }))
}

/// Maps a permutation of original service ids onto the relevant-index space.
fn perm_from_ids(ids: &[usize], layers: &LayerSet) -> Result<Permutation> {
    let mut rels = Vec::with_capacity(ids.len());
    for &id in ids {
        let rel = layers
            .rel_index(id)
            .with_context(|| format!("service {id} is not in the relevant set"))?;
        rels.push(rel);
    }
    if rels.len() != layers.len() {
        bail!(
            "permutation must list all {} relevant services, got {}",
            layers.len(),
            rels.len()
        );
    }
    Ok(Permutation::from_order(rels)?)
}

fn perm_to_ids(perm: &Permutation, layers: &LayerSet) -> Vec<usize> {
    perm.order()
        .iter()
        .map(|&rel| layers.service_id(rel))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Discover {
            dataset,
            plugin_score,
        } => {
            let (repo, task) = dataset.load()?;
            let layers = discover(&repo, &task, plugin_score)?;
            println!("{}", serde_json::to_string_pretty(&layers_json(&layers))?);
        }
        Command::Decode {
            dataset,
            scoring,
            perm,
        } => {
            let (repo, task) = dataset.load()?;
            let layers = discover(&repo, &task, scoring.plugin_score)?;
            let ids: Vec<usize> = serde_json::from_str(&perm)
                .context("permutation must be a JSON array of service ids")?;
            let permutation = perm_from_ids(&ids, &layers)?;
            let graph = wscomp::decode(&permutation, &layers, &task, &repo, scoring.plugin_score)?;
            let encoded = wscomp::encode(&graph, &permutation)?;
            let mut doc = graph_json(&graph, &repo, &layers, &scoring)?;
            doc["encoded"] = json!(perm_to_ids(&encoded, &layers));
            doc["boundary"] = json!(encoded.boundary());
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Command::Run {
            dataset,
            scoring,
            algorithm,
            pop_size,
            generations,
            b_ratio,
            n_set,
            n_nb,
            seed,
            runs,
            ls_replace,
            epsilon_abs,
            out,
        } => {
            let (repo, task) = dataset.load()?;
            for run in 0..runs.max(1) {
                let config = RunConfig {
                    algorithm,
                    population: pop_size,
                    generations,
                    b_ratio,
                    n_set,
                    n_nb,
                    plugin_score: scoring.plugin_score,
                    weights: scoring.weights,
                    seed: seed + run as u64,
                    ls_replace,
                    epsilon_abs,
                    score_boundary_links: scoring.score_boundary_links,
                };
                let begun = std::time::Instant::now();
                let result = evolve(&config, &repo, &task)?;
                let elapsed_ms = begun.elapsed().as_secs_f64() * 1e3;
                let layers = discover(&repo, &task, scoring.plugin_score)?;
                let mut doc = json!({
                    "algorithm": algorithm.to_string(),
                    "seed": config.seed,
                    "best_fitness": result.best_fitness,
                    "evaluations": result.evaluations,
                    "elapsed_ms": elapsed_ms,
                    "best_permutation": perm_to_ids(&result.best, &layers),
                    "boundary": result.best.boundary(),
                });
                doc["best_dag"] = graph_json(&result.best_graph, &repo, &layers, &scoring)?;
                let rendered = serde_json::to_string_pretty(&doc)?;
                if let Some(dir) = &out {
                    write_text(&dir.join(format!("run{run}.json")), &rendered)?;
                    write_text(
                        &dir.join(format!("trace_run{run}.csv")),
                        &trace_csv(&result.trace, run),
                    )?;
                } else {
                    println!("{rendered}");
                }
            }
            if let Some(dir) = &out {
                eprintln!("wrote {} run(s) to {}", runs.max(1), dir.display());
            }
        }
        Command::Bench { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let parsed: ExperimentSpec = if spec.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).context("parsing TOML experiment spec")?
            } else {
                serde_json::from_str(&text).context("parsing JSON experiment spec")?
            };
            let result = run_experiment(&parsed)?;
            let out =
                out.unwrap_or_else(|| spec.parent().unwrap_or(Path::new(".")).join("bench-out"));
            write_experiment(&result, &out)?;
            print!("{}", result.table.render());
            eprintln!("artifacts in {}", out.display());
        }
        Command::GenSynthetic {
            services,
            depth,
            seed,
            out,
        } => {
            let instance = harness::generate_synthetic(services, depth, seed)?;
            harness::write_synthetic(&instance, &out)?;
            eprintln!("{} written to {}", instance.name, out.display());
        }
        Command::Oracle { dataset, scoring } => {
            let (repo, task) = dataset.load()?;
            let layers = discover(&repo, &task, scoring.plugin_score)?;
            let (best, graph) = brute_force_optimum(
                &repo,
                &task,
                &scoring.weights,
                scoring.plugin_score,
                scoring.score_boundary_links,
            )?;
            let mut doc = graph_json(&graph, &repo, &layers, &scoring)?;
            doc["optimum"] = json!(best);
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Command::Stats { inputs, alpha, out } => {
            let mut records: Vec<RunRecord> = Vec::new();
            for path in &inputs {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                records.extend(parse_records_csv(&text, path)?);
            }
            let table = compare(&records, alpha)?;
            print!("{}", table.render());
            if let Some(dir) = &out {
                let (stats, tallies) = table.to_csv();
                write_text(&dir.join("comparison.csv"), &stats)?;
                write_text(&dir.join("tallies.csv"), &tallies)?;
                write_text(&dir.join("results.csv"), &results_csv(&records))?;
                write_text(&dir.join("timings.csv"), &timings_csv(&records))?;
            }
        }
    }
    Ok(())
}
