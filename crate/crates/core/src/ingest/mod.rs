//! Loading service repositories, taxonomies, and tasks.
//!
//! The canonical JSON format is the bit-exact contract:
//!
//! - `services.json`: `[{"id": int, "inputs": [str], "outputs": [str],
//!   "qos": {"t": num, "ct": num, "r": num, "a": num}}]`
//! - `taxonomy.json`: `{"root": str, "edges": [[parent, child]]}`
//! - `task.json`: `{"inputs": [str], "outputs": [str]}`
//!
//! A best-effort importer for WSC-style XML datasets lives in [`wsc`]. QoS
//! values are stored raw; normalization happens at evaluation time.

mod wsc;

pub use wsc::import_wsc;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompositionTask, QosVector, Service};
use crate::ontology::{ConceptId, Taxonomy};

/// An immutable service repository: indexed services, the shared taxonomy,
/// and an exact-concept index of producers and consumers.
#[derive(Debug, Clone)]
pub struct Repository {
    pub services: Vec<Service>,
    pub taxonomy: Taxonomy,
    producers: Vec<Vec<usize>>,
    consumers: Vec<Vec<usize>>,
}

impl Repository {
    /// Wraps validated services and a taxonomy, building the concept index.
    /// Service ids must already be dense `0..n`.
    pub fn new(services: Vec<Service>, taxonomy: Taxonomy) -> Result<Self> {
        if services.is_empty() {
            return Err(Error::EmptyRepository);
        }
        for (i, s) in services.iter().enumerate() {
            if s.id != i {
                return Err(Error::NonDenseServiceIds {
                    expected: services.len(),
                    found: s.id,
                });
            }
        }
        let mut producers = vec![Vec::new(); taxonomy.len()];
        let mut consumers = vec![Vec::new(); taxonomy.len()];
        for s in &services {
            for &c in &s.outputs {
                producers[c.index()].push(s.id);
            }
            for &c in &s.inputs {
                consumers[c.index()].push(s.id);
            }
        }
        Ok(Repository {
            services,
            taxonomy,
            producers,
            consumers,
        })
    }

    /// Services producing exactly this concept.
    pub fn producers_of(&self, c: ConceptId) -> &[usize] {
        &self.producers[c.index()]
    }

    /// Services consuming exactly this concept.
    pub fn consumers_of(&self, c: ConceptId) -> &[usize] {
        &self.consumers[c.index()]
    }
}

#[derive(Serialize, Deserialize)]
struct ServiceJson {
    id: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    qos: QosVector,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaxonomyJson {
    root: String,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct TaskJson {
    inputs: Vec<String>,
    outputs: Vec<String>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Loads a repository and task from the three canonical JSON files.
pub fn load_canonical(
    services_path: &Path,
    taxonomy_path: &Path,
    task_path: &Path,
) -> Result<(Repository, CompositionTask)> {
    let services: Vec<ServiceJson> = parse_json(&read_file(services_path)?, services_path)?;
    let taxonomy: TaxonomyJson = parse_json(&read_file(taxonomy_path)?, taxonomy_path)?;
    let task: TaskJson = parse_json(&read_file(task_path)?, task_path)?;
    assemble(services, taxonomy, task)
}

/// In-memory variant of [`load_canonical`] for embedded fixtures.
pub fn load_canonical_strs(
    services: &str,
    taxonomy: &str,
    task: &str,
) -> Result<(Repository, CompositionTask)> {
    let services: Vec<ServiceJson> = parse_json(services, Path::new("services.json"))?;
    let taxonomy: TaxonomyJson = parse_json(taxonomy, Path::new("taxonomy.json"))?;
    let task: TaskJson = parse_json(task, Path::new("task.json"))?;
    assemble(services, taxonomy, task)
}

fn assemble(
    raw_services: Vec<ServiceJson>,
    raw_taxonomy: TaxonomyJson,
    raw_task: TaskJson,
) -> Result<(Repository, CompositionTask)> {
    let taxonomy = Taxonomy::from_edges(&raw_taxonomy.root, &raw_taxonomy.edges)?;

    if raw_services.is_empty() {
        return Err(Error::EmptyRepository);
    }
    let n = raw_services.len();
    let mut slots: Vec<Option<Service>> = (0..n).map(|_| None).collect();
    for raw in raw_services {
        if raw.id >= n {
            return Err(Error::NonDenseServiceIds {
                expected: n,
                found: raw.id,
            });
        }
        if slots[raw.id].is_some() {
            return Err(Error::DuplicateServiceId(raw.id));
        }
        raw.qos.validate(raw.id)?;
        let resolve = |names: &[String]| -> Result<Vec<ConceptId>> {
            let mut ids = Vec::with_capacity(names.len());
            for name in names {
                ids.push(taxonomy.concept(name).map_err(|_| Error::DanglingConcept {
                    service: raw.id,
                    concept: name.clone(),
                })?);
            }
            ids.sort_unstable();
            ids.dedup();
            Ok(ids)
        };
        slots[raw.id] = Some(Service {
            id: raw.id,
            inputs: resolve(&raw.inputs)?,
            outputs: resolve(&raw.outputs)?,
            qos: raw.qos,
        });
    }
    let services: Vec<Service> = slots.into_iter().map(|s| s.expect("dense ids")).collect();

    let resolve_task = |names: &[String], side: &str| -> Result<Vec<ConceptId>> {
        if names.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "task {side} must be non-empty"
            )));
        }
        let mut ids = Vec::with_capacity(names.len());
        for name in names {
            ids.push(taxonomy.concept(name)?);
        }
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    };
    let task = CompositionTask {
        inputs: resolve_task(&raw_task.inputs, "inputs")?,
        outputs: resolve_task(&raw_task.outputs, "outputs")?,
    };

    Ok((Repository::new(services, taxonomy)?, task))
}

/// Renders the canonical JSON documents for a repository and task.
///
/// Taxonomy edges are emitted in concept-intern order, so dumping a loaded
/// repository and reloading it reproduces the same concept numbering.
pub fn canonical_documents(repo: &Repository, task: &CompositionTask) -> (String, String, String) {
    let tax = &repo.taxonomy;
    let names = |ids: &[ConceptId]| -> Vec<String> {
        ids.iter().map(|&c| tax.name(c).to_string()).collect()
    };
    let services: Vec<ServiceJson> = repo
        .services
        .iter()
        .map(|s| ServiceJson {
            id: s.id,
            inputs: names(&s.inputs),
            outputs: names(&s.outputs),
            qos: s.qos,
        })
        .collect();
    let mut edges = Vec::new();
    for c in tax.concepts() {
        if let Some(p) = tax.parent(c) {
            edges.push((tax.name(p).to_string(), tax.name(c).to_string()));
        }
    }
    let taxonomy = TaxonomyJson {
        root: tax.name(tax.root()).to_string(),
        edges,
    };
    let task_json = TaskJson {
        inputs: names(&task.inputs),
        outputs: names(&task.outputs),
    };
    (
        serde_json::to_string_pretty(&services).expect("serializable"),
        serde_json::to_string_pretty(&taxonomy).expect("serializable"),
        serde_json::to_string_pretty(&task_json).expect("serializable"),
    )
}

/// Writes `services.json`, `taxonomy.json`, and `task.json` into `dir`.
pub fn dump_canonical(repo: &Repository, task: &CompositionTask, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let (services, taxonomy, task_doc) = canonical_documents(repo, task);
    for (name, text) in [
        ("services.json", services),
        ("taxonomy.json", taxonomy),
        ("task.json", task_doc),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

/// Standard file names inside a canonical dataset directory.
pub fn canonical_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join("services.json"),
        dir.join("taxonomy.json"),
        dir.join("task.json"),
    )
}

/// Loads a dataset directory containing the three canonical files.
pub fn load_canonical_dir(dir: &Path) -> Result<(Repository, CompositionTask)> {
    let (s, x, t) = canonical_paths(dir);
    load_canonical(&s, &x, &t)
}
