//! Relevant-service discovery and layer partitioning.
//!
//! Forward chaining from the task inputs repeatedly admits every service
//! whose inputs are all matched (exact or plugin) by the accumulated output
//! set. A service first satisfiable at iteration `k` joins layer `L_k`, so a
//! layer groups services with the same longest distance from `Start`.
//! Services never satisfiable are excluded; the task is unsolvable when the
//! fixpoint output set does not cover the task outputs.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::Repository;
use crate::model::CompositionTask;
use crate::ontology::ConceptId;

/// The relevant subset of a repository, re-indexed densely and partitioned
/// into layers.
///
/// Relevant services are re-indexed `0..n` in ascending order of their
/// original ids, so relevant-index order and service-id order agree.
#[derive(Debug, Clone)]
pub struct LayerSet {
    relevant: Vec<usize>,    // original service ids, ascending
    layer_of: Vec<usize>,    // 1-based layer per relevant index
    layers: Vec<Vec<usize>>, // relevant indexes per layer
    rel_of_id: HashMap<usize, usize>,
}

impl LayerSet {
    /// Number of relevant services (the permutation dimension `n`).
    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }

    /// Original service ids in ascending order.
    pub fn relevant(&self) -> &[usize] {
        &self.relevant
    }

    /// Original service id of a relevant index.
    pub fn service_id(&self, rel: usize) -> usize {
        self.relevant[rel]
    }

    /// Relevant index of an original service id, if relevant.
    pub fn rel_index(&self, service_id: usize) -> Option<usize> {
        self.rel_of_id.get(&service_id).copied()
    }

    /// 1-based layer of a relevant index.
    pub fn layer_of(&self, rel: usize) -> usize {
        self.layer_of[rel]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Relevant indexes in each layer, `layers()[0]` being `L_1`.
    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }
}

/// Adds a concept and all its ancestors to the availability set: an input is
/// satisfiable exactly when it appears here.
fn extend_closure(avail: &mut HashSet<ConceptId>, repo: &Repository, c: ConceptId) {
    for anc in repo.taxonomy.ancestors_inclusive(c) {
        if !avail.insert(anc) {
            break; // ancestors of a present concept are already present
        }
    }
}

/// Finds task-relevant services and partitions them into layers by the
/// forward-chaining iteration at which they first become satisfiable.
///
/// Plugin matches count toward satisfiability, so the outcome does not
/// depend on the score `p` itself.
pub fn discover(repo: &Repository, task: &CompositionTask, p: f64) -> Result<LayerSet> {
    debug_assert!(p > 0.0 && p < 1.0, "plugin score must lie in (0, 1)");
    let mut avail: HashSet<ConceptId> = HashSet::new();
    for &c in &task.inputs {
        extend_closure(&mut avail, repo, c);
    }

    let mut remaining: Vec<usize> = (0..repo.services.len()).collect();
    let mut layers_ids: Vec<Vec<usize>> = Vec::new();
    loop {
        let ready: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&id| repo.services[id].inputs.iter().all(|i| avail.contains(i)))
            .collect();
        if ready.is_empty() {
            break;
        }
        for &id in &ready {
            for &o in &repo.services[id].outputs {
                extend_closure(&mut avail, repo, o);
            }
        }
        remaining.retain(|id| !ready.contains(id));
        layers_ids.push(ready);
    }

    let missing: Vec<String> = task
        .outputs
        .iter()
        .filter(|o| !avail.contains(o))
        .map(|&o| repo.taxonomy.name(o).to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::TaskUnsolvable { missing });
    }

    let mut relevant: Vec<usize> = layers_ids.iter().flatten().copied().collect();
    relevant.sort_unstable();
    let rel_of_id: HashMap<usize, usize> = relevant
        .iter()
        .enumerate()
        .map(|(rel, &id)| (id, rel))
        .collect();
    let mut layer_of = vec![0usize; relevant.len()];
    let mut layers = Vec::with_capacity(layers_ids.len());
    for (k, ids) in layers_ids.iter().enumerate() {
        let mut rels: Vec<usize> = ids.iter().map(|id| rel_of_id[id]).collect();
        rels.sort_unstable();
        for &rel in &rels {
            layer_of[rel] = k + 1;
        }
        layers.push(rels);
    }

    Ok(LayerSet {
        relevant,
        layer_of,
        layers,
        rel_of_id,
    })
}
