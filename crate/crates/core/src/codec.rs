//! Bidirectional mapping between permutations and DAG solutions.
//!
//! Decoding scans a permutation left to right (repeating the pass while it
//! makes progress), admits a service once all its inputs are matched by Start
//! plus the previously admitted services, binds each input to the earliest
//! admitted producer, stops as soon as End is satisfiable, and finally prunes
//! every admitted service from which End is unreachable.
//!
//! Encoding maps a DAG back to a permutation: the used prefix lists the
//! graph's services by longest distance from Start, ties broken by ascending
//! service index; the suffix keeps the unused indexes in the relative order
//! they held in the previous permutation. Only this suffix rule makes the
//! map bidirectional; arbitrary suffix orders are not canonical.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::discovery::LayerSet;
use crate::error::{Error, Result};
use crate::ingest::Repository;
use crate::model::CompositionTask;
use crate::ontology::{ConceptId, LinkQuality};

/// An ordering of all relevant-service indexes with an optional used-prefix
/// boundary and cached fitness.
///
/// The boundary `t` (index of the last used element) exists only after
/// encoding; raw permutations, e.g. freshly sampled ones, have none.
#[derive(Debug, Clone, PartialEq)]
pub struct Permutation {
    order: Vec<usize>,
    used: Option<usize>, // prefix length, i.e. t + 1
    fitness: Option<f64>,
}

impl Permutation {
    /// Wraps a raw ordering, validating it is a bijection on `0..n`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &x in &order {
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(format!(
                    "order is not a bijection on 0..{n}"
                )));
            }
            seen[x] = true;
        }
        Ok(Permutation {
            order,
            used: None,
            fitness: None,
        })
    }

    /// A permutation with a known used-prefix length (for tests and tools).
    pub fn encoded(order: Vec<usize>, used_len: usize) -> Result<Self> {
        if used_len > order.len() {
            return Err(Error::InvalidPermutation(format!(
                "used prefix {used_len} exceeds length {}",
                order.len()
            )));
        }
        let mut p = Self::from_order(order)?;
        p.used = Some(used_len);
        Ok(p)
    }

    /// Uniform random shuffle of `0..n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Permutation {
            order,
            used: None,
            fitness: None,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of used services (t + 1); `None` for raw permutations.
    pub fn used_len(&self) -> Option<usize> {
        self.used
    }

    /// Boundary index `t` of the last used service; `-1` when the decoded
    /// DAG uses no services, `None` for raw permutations.
    pub fn boundary(&self) -> Option<isize> {
        self.used.map(|u| u as isize - 1)
    }

    pub fn is_encoded(&self) -> bool {
        self.used.is_some()
    }

    /// Used prefix and unused suffix of an encoded permutation.
    pub fn split(&self) -> Option<(&[usize], &[usize])> {
        self.used.map(|u| self.order.split_at(u))
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    pub fn set_fitness(&mut self, fitness: f64) {
        self.fitness = Some(fitness);
    }

    pub fn with_fitness(mut self, fitness: f64) -> Self {
        self.fitness = Some(fitness);
        self
    }

    pub(crate) fn encoded_unchecked(order: Vec<usize>, used: usize) -> Self {
        Permutation {
            order,
            used: Some(used),
            fitness: None,
        }
    }
}

/// A node of a composition DAG. `Service` nodes carry both the relevant
/// index (the permutation alphabet) and the original repository id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphNode {
    Start,
    Service { rel: usize, id: usize },
    End,
}

/// Structural identity of a link: endpoints plus matched concept pairs.
pub type LinkKey = (GraphNode, GraphNode, Vec<(ConceptId, ConceptId)>);

/// A directed edge annotated with its matched (output, input) concept pairs
/// and the resulting link quality. Pairs are empty only for structural links
/// from Start to services without inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalLink {
    pub from: GraphNode,
    pub to: GraphNode,
    pub pairs: Vec<(ConceptId, ConceptId)>,
    pub quality: LinkQuality,
}

/// A DAG from Start to End whose edges are robust causal links.
///
/// Instances are produced by [`decode`]; every service node lies on some
/// Start -> End path and every input is bound to an exact or plugin match.
#[derive(Debug, Clone)]
pub struct CompositionGraph {
    services: Vec<(usize, usize)>, // (relevant index, original id), ascending rel
    links: Vec<CausalLink>,        // sorted by (to, from)
}

impl CompositionGraph {
    /// Service nodes as (relevant index, original id), ascending.
    pub fn services(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.services.iter().copied()
    }

    pub fn service_count(&self) -> usize {
        self.services.len()
    }

    /// Relevant indexes of the component services, ascending.
    pub fn service_rels(&self) -> Vec<usize> {
        self.services.iter().map(|&(rel, _)| rel).collect()
    }

    pub fn contains_rel(&self, rel: usize) -> bool {
        self.services
            .binary_search_by_key(&rel, |&(r, _)| r)
            .is_ok()
    }

    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    /// Structural signature (from, to, pairs) of every link, for equality
    /// checks that ignore floating-point quality recomputation.
    pub fn link_signature(&self) -> Vec<LinkKey> {
        self.links
            .iter()
            .map(|l| (l.from, l.to, l.pairs.clone()))
            .collect()
    }

    /// Kahn topological order over Start, services, and End; deterministic
    /// (smallest ready node first).
    pub fn topological_order(&self) -> Vec<GraphNode> {
        let mut nodes: Vec<GraphNode> = vec![GraphNode::Start];
        nodes.extend(
            self.services
                .iter()
                .map(|&(rel, id)| GraphNode::Service { rel, id }),
        );
        nodes.push(GraphNode::End);
        let mut indeg: HashMap<GraphNode, usize> = nodes.iter().map(|&n| (n, 0)).collect();
        for l in &self.links {
            *indeg.get_mut(&l.to).expect("link endpoints are nodes") += 1;
        }
        let mut ready: std::collections::BTreeSet<GraphNode> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&n, _)| n)
            .collect();
        let mut out = Vec::with_capacity(nodes.len());
        while let Some(&node) = ready.iter().next() {
            ready.remove(&node);
            out.push(node);
            for l in &self.links {
                if l.from == node {
                    let d = indeg.get_mut(&l.to).expect("node");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(l.to);
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), nodes.len(), "composition graphs are acyclic");
        out
    }

    #[cfg(test)]
    pub(crate) fn linear_for_tests(ids: &[usize]) -> Self {
        let unit = LinkQuality {
            match_score: 1.0,
            similarity: 1.0,
        };
        let node = |i: usize| GraphNode::Service {
            rel: ids[i],
            id: ids[i],
        };
        let mut links = Vec::new();
        for i in 0..ids.len() {
            let from = if i == 0 {
                GraphNode::Start
            } else {
                node(i - 1)
            };
            links.push(CausalLink {
                from,
                to: node(i),
                pairs: Vec::new(),
                quality: unit,
            });
        }
        links.push(CausalLink {
            from: node(ids.len() - 1),
            to: GraphNode::End,
            pairs: Vec::new(),
            quality: unit,
        });
        let mut services: Vec<(usize, usize)> = ids.iter().map(|&i| (i, i)).collect();
        services.sort_unstable();
        CompositionGraph { services, links }
    }

    #[cfg(test)]
    pub(crate) fn diamond_for_tests(a: usize, b: usize, join: usize) -> Self {
        let unit = LinkQuality {
            match_score: 1.0,
            similarity: 1.0,
        };
        let node = |i: usize| GraphNode::Service { rel: i, id: i };
        let links = vec![
            CausalLink {
                from: GraphNode::Start,
                to: node(a),
                pairs: Vec::new(),
                quality: unit,
            },
            CausalLink {
                from: GraphNode::Start,
                to: node(b),
                pairs: Vec::new(),
                quality: unit,
            },
            CausalLink {
                from: node(a),
                to: node(join),
                pairs: Vec::new(),
                quality: unit,
            },
            CausalLink {
                from: node(b),
                to: node(join),
                pairs: Vec::new(),
                quality: unit,
            },
            CausalLink {
                from: node(join),
                to: GraphNode::End,
                pairs: Vec::new(),
                quality: unit,
            },
        ];
        let mut services = vec![(a, a), (b, b), (join, join)];
        services.sort_unstable();
        CompositionGraph { services, links }
    }
}

/// One (input concept, provider, output concept) binding in fingerprint form.
type BindingKey = (u32, u32, u32);

/// Fingerprint type used by the exhaustive oracle for state deduplication.
pub(crate) type StateKey = (Vec<(u32, Vec<BindingKey>)>, Vec<BindingKey>);

/// Which node supplied a concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ProviderRef {
    Start,
    Service(usize), // relevant index
}

#[derive(Debug, Clone, Copy)]
struct ProviderEntry {
    provider: ProviderRef,
    output: ConceptId,
}

#[derive(Debug, Clone, Copy)]
struct Binding {
    input: ConceptId,
    provider: ProviderRef,
    output: ConceptId,
}

/// Incremental forward graph-building state shared by the decoder and the
/// exhaustive oracle. Admission order determines the input bindings.
#[derive(Clone)]
pub(crate) struct ScanState<'a> {
    repo: &'a Repository,
    task: &'a CompositionTask,
    layers: &'a LayerSet,
    plugin_score: f64,
    admitted: Vec<usize>, // relevant indexes in admission order
    admitted_mask: Vec<bool>,
    provider: HashMap<ConceptId, ProviderEntry>,
    bindings: Vec<Vec<Binding>>, // parallel to `admitted`
    end_missing: HashSet<ConceptId>,
}

impl<'a> ScanState<'a> {
    pub(crate) fn new(
        repo: &'a Repository,
        task: &'a CompositionTask,
        layers: &'a LayerSet,
        plugin_score: f64,
    ) -> Self {
        let mut state = ScanState {
            repo,
            task,
            layers,
            plugin_score,
            admitted: Vec::new(),
            admitted_mask: vec![false; layers.len()],
            provider: HashMap::new(),
            bindings: Vec::new(),
            end_missing: task.outputs.iter().copied().collect(),
        };
        state.insert_provider(ProviderRef::Start, &task.inputs);
        state
    }

    /// Registers a node's outputs. Every concept matched by an output (the
    /// output itself and its ancestors) maps to this provider unless an
    /// earlier provider already supplies it. When two outputs of the same
    /// node match one concept, the exact match wins, then the higher
    /// similarity, then the smaller concept id.
    fn insert_provider(&mut self, provider: ProviderRef, outputs: &[ConceptId]) {
        let tax = &self.repo.taxonomy;
        let mut local: HashMap<ConceptId, (bool, f64, ConceptId)> = HashMap::new();
        for &o in outputs {
            for c in tax.ancestors_inclusive(o) {
                let exact = c == o;
                let sim = tax.similarity_ids(o, c);
                let candidate = (exact, sim, o);
                match local.entry(c) {
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(candidate);
                    }
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        let (bexact, bsim, bout) = *e.get();
                        let better = (exact && !bexact)
                            || (exact == bexact && sim > bsim)
                            || (exact == bexact && sim == bsim && o < bout);
                        if better {
                            e.insert(candidate);
                        }
                    }
                }
            }
        }
        for (c, (_, _, output)) in local {
            self.provider
                .entry(c)
                .or_insert(ProviderEntry { provider, output });
            self.end_missing.remove(&c);
        }
    }

    pub(crate) fn is_admitted(&self, rel: usize) -> bool {
        self.admitted_mask[rel]
    }

    pub(crate) fn is_satisfiable(&self, rel: usize) -> bool {
        let id = self.layers.service_id(rel);
        self.repo.services[id]
            .inputs
            .iter()
            .all(|i| self.provider.contains_key(i))
    }

    pub(crate) fn end_satisfiable(&self) -> bool {
        self.end_missing.is_empty()
    }

    /// Order-insensitive fingerprint of everything that determines the final
    /// graph and the remaining search: the admitted services with their
    /// bindings, plus the provider map. Exhaustive search uses it to merge
    /// admission orders that lead to identical states.
    pub(crate) fn dedup_key(&self) -> StateKey {
        let tag = |p: ProviderRef| -> u32 {
            match p {
                ProviderRef::Start => u32::MAX,
                ProviderRef::Service(rel) => rel as u32,
            }
        };
        let mut admitted: Vec<(u32, Vec<BindingKey>)> = self
            .admitted
            .iter()
            .enumerate()
            .map(|(i, &rel)| {
                let mut binds: Vec<BindingKey> = self.bindings[i]
                    .iter()
                    .map(|b| {
                        (
                            b.input.index() as u32,
                            tag(b.provider),
                            b.output.index() as u32,
                        )
                    })
                    .collect();
                binds.sort_unstable();
                (rel as u32, binds)
            })
            .collect();
        admitted.sort_unstable();
        let mut providers: Vec<BindingKey> = self
            .provider
            .iter()
            .map(|(&c, e)| (c.index() as u32, tag(e.provider), e.output.index() as u32))
            .collect();
        providers.sort_unstable();
        (admitted, providers)
    }

    /// Admits a satisfiable service, binding each input to the earliest
    /// admitted producer.
    pub(crate) fn admit(&mut self, rel: usize) {
        debug_assert!(!self.is_admitted(rel) && self.is_satisfiable(rel));
        let id = self.layers.service_id(rel);
        let service = &self.repo.services[id];
        let bindings: Vec<Binding> = service
            .inputs
            .iter()
            .map(|&input| {
                let entry = self.provider[&input];
                Binding {
                    input,
                    provider: entry.provider,
                    output: entry.output,
                }
            })
            .collect();
        self.admitted.push(rel);
        self.admitted_mask[rel] = true;
        self.bindings.push(bindings);
        let outputs = self.repo.services[id].outputs.clone();
        self.insert_provider(ProviderRef::Service(rel), &outputs);
    }

    /// Builds the pruned composition graph. Requires End to be satisfiable.
    pub(crate) fn finish(&self) -> CompositionGraph {
        debug_assert!(self.end_satisfiable());
        let tax = &self.repo.taxonomy;

        let end_bindings: Vec<Binding> = self
            .task
            .outputs
            .iter()
            .map(|&output_needed| {
                let entry = self.provider[&output_needed];
                Binding {
                    input: output_needed,
                    provider: entry.provider,
                    output: entry.output,
                }
            })
            .collect();

        // Backward reachability from End over input bindings.
        let index_of: HashMap<usize, usize> = self
            .admitted
            .iter()
            .enumerate()
            .map(|(i, &rel)| (rel, i))
            .collect();
        let mut keep: HashSet<usize> = HashSet::new();
        let mut stack: Vec<usize> = end_bindings
            .iter()
            .filter_map(|b| match b.provider {
                ProviderRef::Service(rel) => Some(rel),
                ProviderRef::Start => None,
            })
            .collect();
        while let Some(rel) = stack.pop() {
            if !keep.insert(rel) {
                continue;
            }
            for b in &self.bindings[index_of[&rel]] {
                if let ProviderRef::Service(p) = b.provider {
                    stack.push(p);
                }
            }
        }

        let node_of = |p: ProviderRef| -> GraphNode {
            match p {
                ProviderRef::Start => GraphNode::Start,
                ProviderRef::Service(rel) => GraphNode::Service {
                    rel,
                    id: self.layers.service_id(rel),
                },
            }
        };

        let mut services: Vec<(usize, usize)> = keep
            .iter()
            .map(|&rel| (rel, self.layers.service_id(rel)))
            .collect();
        services.sort_unstable();

        let mut links: Vec<CausalLink> = Vec::new();
        let mut emit = |consumer: GraphNode, bindings: &[Binding]| {
            let mut grouped: HashMap<ProviderRef, Vec<(ConceptId, ConceptId)>> = HashMap::new();
            for b in bindings {
                grouped
                    .entry(b.provider)
                    .or_default()
                    .push((b.output, b.input));
            }
            let mut providers: Vec<ProviderRef> = grouped.keys().copied().collect();
            providers.sort_unstable_by_key(|p| node_of(*p));
            for p in providers {
                let mut pairs = grouped.remove(&p).expect("grouped");
                pairs.sort_unstable();
                pairs.dedup();
                let mut score_sum = 0.0;
                let mut sim_sum = 0.0;
                for &(out, inp) in &pairs {
                    let kind = tax.match_ids(out, inp, self.plugin_score);
                    debug_assert!(kind.is_match(), "bindings are matched by construction");
                    score_sum += kind.score();
                    sim_sum += tax.similarity_ids(out, inp);
                }
                let m = pairs.len() as f64;
                links.push(CausalLink {
                    from: node_of(p),
                    to: consumer,
                    pairs,
                    quality: LinkQuality {
                        match_score: score_sum / m,
                        similarity: sim_sum / m,
                    },
                });
            }
            if bindings.is_empty() {
                // A service without inputs hangs off Start structurally.
                links.push(CausalLink {
                    from: GraphNode::Start,
                    to: consumer,
                    pairs: Vec::new(),
                    quality: LinkQuality {
                        match_score: 1.0,
                        similarity: 1.0,
                    },
                });
            }
        };

        for &(rel, id) in &services {
            emit(
                GraphNode::Service { rel, id },
                &self.bindings[index_of[&rel]],
            );
        }
        emit(GraphNode::End, &end_bindings);

        links.sort_by_key(|l| (l.to, l.from));
        CompositionGraph { services, links }
    }
}

/// Decodes a permutation into its pruned composition DAG.
pub fn decode(
    perm: &Permutation,
    layers: &LayerSet,
    task: &CompositionTask,
    repo: &Repository,
    plugin_score: f64,
) -> Result<CompositionGraph> {
    let n = layers.len();
    if perm.len() != n {
        return Err(Error::UniverseMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut state = ScanState::new(repo, task, layers, plugin_score);
    if !state.end_satisfiable() {
        'scan: loop {
            let mut progressed = false;
            for &rel in perm.order() {
                if state.is_admitted(rel) || !state.is_satisfiable(rel) {
                    continue;
                }
                state.admit(rel);
                progressed = true;
                if state.end_satisfiable() {
                    break 'scan;
                }
            }
            if !progressed {
                return Err(Error::UndecodablePermutation);
            }
        }
    }
    Ok(state.finish())
}

/// Encodes a DAG back into the canonical permutation form.
///
/// The prefix lists the graph's services by (longest distance from Start,
/// ascending index); the suffix carries the unused indexes in the relative
/// order they held in `prev`; the boundary is the prefix length.
pub fn encode(graph: &CompositionGraph, prev: &Permutation) -> Result<Permutation> {
    let n = prev.len();
    for (rel, _) in graph.services() {
        if rel >= n {
            return Err(Error::UniverseMismatch {
                expected: n,
                got: rel + 1,
            });
        }
    }

    // Longest distance from Start, in edges, per service node.
    let order = graph.topological_order();
    let mut depth: HashMap<GraphNode, usize> = HashMap::new();
    depth.insert(GraphNode::Start, 0);
    for node in order {
        if node == GraphNode::Start {
            continue;
        }
        let mut best: Option<usize> = None;
        for l in graph.links() {
            if l.to == node {
                if let Some(&d) = depth.get(&l.from) {
                    best = Some(best.map_or(d + 1, |b: usize| b.max(d + 1)));
                }
            }
        }
        if let Some(d) = best {
            depth.insert(node, d);
        }
    }

    let mut prefix: Vec<(usize, usize)> = graph
        .services()
        .map(|(rel, id)| {
            let d = depth
                .get(&GraphNode::Service { rel, id })
                .copied()
                .expect("every service node is reachable from Start");
            (d, rel)
        })
        .collect();
    prefix.sort_unstable();
    let used: Vec<usize> = prefix.into_iter().map(|(_, rel)| rel).collect();
    let used_set: HashSet<usize> = used.iter().copied().collect();

    let mut full = used;
    full.extend(
        prev.order()
            .iter()
            .copied()
            .filter(|rel| !used_set.contains(rel)),
    );
    let used_len = used_set.len();
    debug_assert_eq!(full.len(), n);
    Ok(Permutation::encoded_unchecked(full, used_len))
}

/// Decode followed by canonical re-encode: the solution graph plus the
/// canonical-form permutation (fitness not yet attached).
pub fn canonicalize(
    perm: &Permutation,
    layers: &LayerSet,
    task: &CompositionTask,
    repo: &Repository,
    plugin_score: f64,
) -> Result<(Permutation, CompositionGraph)> {
    let graph = decode(perm, layers, task, repo, plugin_score)?;
    let encoded = encode(&graph, perm)?;
    Ok((encoded, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::discover;
    use crate::fixtures;

    fn setup(
        fixture: fn() -> Result<(Repository, CompositionTask)>,
    ) -> (Repository, CompositionTask, LayerSet) {
        let (repo, task) = fixture().unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        (repo, task, layers)
    }

    fn perm(order: &[usize]) -> Permutation {
        Permutation::from_order(order.to_vec()).unwrap()
    }

    #[test]
    fn bijection_validated() {
        assert!(Permutation::from_order(vec![0, 1, 1]).is_err());
        assert!(Permutation::from_order(vec![0, 3]).is_err());
        assert!(Permutation::from_order(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn example2_decode_prunes_to_s4_s3() {
        // Scanning [4,1,2,3,0]: S4, S1, S2 admitted, then S3 satisfies End.
        // S3's inputs bind to S4 (earliest), so S1 and S2 are pruned.
        let (repo, task, layers) = setup(fixtures::example2);
        let g = decode(&perm(&[4, 1, 2, 3, 0]), &layers, &task, &repo, 0.75).unwrap();
        assert_eq!(g.service_rels(), vec![3, 4]);
    }

    #[test]
    fn single_service_graph() {
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["i"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "i"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["i"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(&perm(&[0]), &layers, &task, &repo, 0.75).unwrap();
        assert_eq!(g.service_rels(), vec![0]);
        assert_eq!(g.links().len(), 2); // Start -> S0 -> End
    }

    #[test]
    fn scan_repeats_until_producers_appear() {
        // Chain X(a->b), Y(b->c): with order [Y, X] the first pass skips Y,
        // admits X, and the second pass admits Y.
        let (repo, task, layers) = setup(fixtures::chain);
        let g = decode(&perm(&[1, 0]), &layers, &task, &repo, 0.75).unwrap();
        assert_eq!(g.service_rels(), vec![0, 1]);
    }

    #[test]
    fn example2_encode_matches_canonical_form() {
        let (repo, task, layers) = setup(fixtures::example2);
        // [1,2,3,4,0] decodes to the DAG over {S1, S2, S3}.
        let g = decode(&perm(&[1, 2, 3, 4, 0]), &layers, &task, &repo, 0.75).unwrap();
        assert_eq!(g.service_rels(), vec![1, 2, 3]);
        let encoded = encode(&g, &perm(&[4, 1, 2, 3, 0])).unwrap();
        assert_eq!(encoded.order(), &[1, 2, 3, 4, 0]);
        assert_eq!(encoded.used_len(), Some(3));
        assert_eq!(encoded.boundary(), Some(2));
    }

    #[test]
    fn empty_composition_keeps_prev_suffix_order() {
        // Task outputs already provided by Start; three relevant services,
        // none used.
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["x"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 1, "inputs": ["a"], "outputs": ["y"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 2, "inputs": ["b"], "outputs": ["z"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "b"], ["r", "x"], ["r", "y"], ["r", "z"]]}"#,
            r#"{"inputs": ["a", "b"], "outputs": ["a"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        assert_eq!(layers.len(), 3);
        let g = decode(&perm(&[2, 0, 1]), &layers, &task, &repo, 0.75).unwrap();
        assert_eq!(g.service_count(), 0);
        let encoded = encode(&g, &perm(&[2, 0, 1])).unwrap();
        assert_eq!(encoded.order(), &[2, 0, 1]);
        assert_eq!(encoded.boundary(), Some(-1));
    }

    #[test]
    fn diamond_prefix_orders_within_depth() {
        // S0(a->f), S2(a->g) at depth 1; S1(f,g->i) at depth 2.
        let (repo, task) = crate::ingest::load_canonical_strs(
            r#"[{"id": 0, "inputs": ["a"], "outputs": ["f"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 1, "inputs": ["f", "g"], "outputs": ["i"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}},
                {"id": 2, "inputs": ["a"], "outputs": ["g"], "qos": {"t": 1, "ct": 1, "r": 0.9, "a": 0.9}}]"#,
            r#"{"root": "r", "edges": [["r", "a"], ["r", "f"], ["r", "g"], ["r", "i"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["i"]}"#,
        )
        .unwrap();
        let layers = discover(&repo, &task, 0.75).unwrap();
        let g = decode(&perm(&[2, 1, 0]), &layers, &task, &repo, 0.75).unwrap();
        let encoded = encode(&g, &perm(&[2, 1, 0])).unwrap();
        assert_eq!(encoded.order(), &[0, 2, 1]);
        assert_eq!(encoded.used_len(), Some(3));
    }

    #[test]
    fn encode_decode_fixpoint_on_examples() {
        let (repo, task, layers) = setup(fixtures::example2);
        for raw in [
            vec![4, 1, 2, 3, 0],
            vec![0, 1, 2, 3, 4],
            vec![3, 4, 0, 1, 2],
            vec![2, 1, 3, 0, 4],
        ] {
            let (enc, g) = canonicalize(&perm(&raw), &layers, &task, &repo, 0.75).unwrap();
            let (enc2, g2) = canonicalize(&enc, &layers, &task, &repo, 0.75).unwrap();
            assert_eq!(enc.order(), enc2.order(), "fixpoint for {raw:?}");
            assert_eq!(enc.used_len(), enc2.used_len());
            assert_eq!(g.service_rels(), g2.service_rels());
            assert_eq!(g.link_signature(), g2.link_signature());
        }
    }

    #[test]
    fn universe_mismatch_rejected() {
        let (repo, task, layers) = setup(fixtures::example2);
        let err = decode(&perm(&[0, 1, 2]), &layers, &task, &repo, 0.75).unwrap_err();
        assert!(matches!(
            err,
            Error::UniverseMismatch {
                expected: 5,
                got: 3
            }
        ));
    }
}
