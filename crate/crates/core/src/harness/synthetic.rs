//! Deterministic generation of desk-scale synthetic composition instances.
//!
//! An instance is a solvable chain backbone of `depth` steps plus random
//! alternatives: redundant exact producers, specialized producers whose
//! outputs only plugin-match their consumers, relevant-but-useless services,
//! and (beyond ten satisfiable services) unsatisfiable distractors. QoS
//! values are drawn uniformly from fixed ranges. The same arguments always
//! produce byte-identical canonical files.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discovery::discover;
use crate::error::{Error, Result};
use crate::ingest::{dump_canonical, load_canonical_strs, Repository};
use crate::model::CompositionTask;
use crate::ontology::DEFAULT_PLUGIN_SCORE;

/// Satisfiable services are capped at this count so the exhaustive oracle
/// stays tractable; anything beyond becomes an unsatisfiable distractor.
const RELEVANT_CAP: usize = 10;

const GENERATION_ATTEMPTS: usize = 20;

/// A generated instance with its human-readable name.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub name: String,
    pub repo: Repository,
    pub task: CompositionTask,
}

#[derive(serde::Serialize)]
struct RawService {
    id: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    qos: crate::model::QosVector,
}

/// Generates a solvable layered instance of `n_services` services whose
/// backbone needs `depth` sequential steps.
pub fn generate_synthetic(n_services: usize, depth: usize, seed: u64) -> Result<SyntheticInstance> {
    if n_services < 2 {
        return Err(Error::InvalidConfig(
            "synthetic instances need at least two services".into(),
        ));
    }
    if n_services == 2 {
        // Minimal solvable instance: a two-step chain, fixed QoS.
        return build(
            format!("synthetic-2-{depth}-{seed}"),
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["b"], "qos": {"t": 1, "ct": 1, "r": 0.95, "a": 0.95}},
                {"id": 1, "inputs": ["b"], "outputs": ["c"], "qos": {"t": 1, "ct": 1, "r": 0.95, "a": 0.95}}]"#
                .to_string(),
            r#"{"root": "root", "edges": [["root", "a"], ["root", "b"], ["root", "c"]]}"#
                .to_string(),
            r#"{"inputs": ["a"], "outputs": ["c"]}"#.to_string(),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    for attempt in 0..GENERATION_ATTEMPTS {
        if let Some(instance) = try_generate(n_services, depth, seed, &mut rng)? {
            let _ = attempt;
            return Ok(instance);
        }
    }
    Err(Error::GenerationRetries(GENERATION_ATTEMPTS))
}

fn try_generate(
    n_services: usize,
    depth: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SyntheticInstance>> {
    let steps = depth.max(1).min(n_services - 1);
    let satisfiable = n_services.min(RELEVANT_CAP);
    let unsat = n_services - satisfiable;
    let extras = satisfiable - steps;

    // Concepts: the data chain d0..d<steps>, a specialized child per step
    // concept, junk outputs, and orphan inputs for unsatisfiable services.
    let mut edges: Vec<(String, String)> = Vec::new();
    for j in 0..=steps {
        edges.push(("root".into(), format!("d{j}")));
    }
    for j in 1..=steps {
        edges.push((format!("d{j}"), format!("d{j}s")));
    }
    let junk_count = extras.max(1);
    for k in 0..junk_count {
        edges.push(("root".into(), format!("x{k}")));
    }
    for k in 0..unsat.max(1) {
        edges.push(("root".into(), format!("orphan{k}")));
    }

    let qos = |rng: &mut ChaCha8Rng| crate::model::QosVector {
        time: rng.random_range(1.0..10.0),
        cost: rng.random_range(1.0..10.0),
        reliability: rng.random_range(0.9..0.999),
        availability: rng.random_range(0.9..0.999),
    };

    // (inputs, outputs) in creation order; ids assigned after a shuffle.
    let mut blueprints: Vec<(Vec<String>, Vec<String>, crate::model::QosVector)> = Vec::new();
    for j in 1..=steps {
        blueprints.push((vec![format!("d{}", j - 1)], vec![format!("d{j}")], qos(rng)));
    }
    for k in 0..extras {
        let j = rng.random_range(1..=steps);
        let kind = rng.random_range(0.0..1.0);
        if kind < 0.4 {
            // Specialized producer: output plugin-matches d<j> consumers.
            blueprints.push((
                vec![format!("d{}", j - 1)],
                vec![format!("d{j}s")],
                qos(rng),
            ));
        } else if kind < 0.7 {
            // Redundant exact producer with independent QoS.
            blueprints.push((vec![format!("d{}", j - 1)], vec![format!("d{j}")], qos(rng)));
        } else {
            // Relevant but useless: consumes reachable data, produces junk.
            blueprints.push((
                vec![format!("d{}", j - 1)],
                vec![format!("x{}", k % junk_count)],
                qos(rng),
            ));
        }
    }
    for k in 0..unsat {
        blueprints.push((
            vec![format!("orphan{k}")],
            vec![format!("x{}", k % junk_count)],
            qos(rng),
        ));
    }

    rand::seq::SliceRandom::shuffle(blueprints.as_mut_slice(), rng);
    let services: Vec<RawService> = blueprints
        .into_iter()
        .enumerate()
        .map(|(id, (inputs, outputs, qos))| RawService {
            id,
            inputs,
            outputs,
            qos,
        })
        .collect();

    let services_json = serde_json::to_string_pretty(&services).expect("serializable");
    let taxonomy_json = serde_json::to_string_pretty(&serde_json::json!({
        "root": "root",
        "edges": edges,
    }))
    .expect("serializable");
    let task_json = serde_json::to_string_pretty(&serde_json::json!({
        "inputs": ["d0"],
        "outputs": [format!("d{steps}")],
    }))
    .expect("serializable");

    let instance = build(
        format!("synthetic-{n_services}-{depth}-{seed}"),
        services_json,
        taxonomy_json,
        task_json,
    )?;

    // Postcondition: the instance must be solvable with the expected number
    // of satisfiable services.
    match discover(&instance.repo, &instance.task, DEFAULT_PLUGIN_SCORE) {
        Ok(layers) if layers.len() == satisfiable => Ok(Some(instance)),
        Ok(_) | Err(Error::TaskUnsolvable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn build(
    name: String,
    services_json: String,
    taxonomy_json: String,
    task_json: String,
) -> Result<SyntheticInstance> {
    let (repo, task) = load_canonical_strs(&services_json, &taxonomy_json, &task_json)?;
    Ok(SyntheticInstance { name, repo, task })
}

/// Writes the canonical JSON files for an instance into `dir`.
pub fn write_synthetic(instance: &SyntheticInstance, dir: &Path) -> Result<()> {
    dump_canonical(&instance.repo, &instance.task, dir)
}
