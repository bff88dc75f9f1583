//! Concept taxonomy, matchmaking type classification, and edge-counting
//! semantic similarity.
//!
//! The taxonomy is a single-inheritance tree rooted at a unique top concept.
//! Matchmaking distinguishes `exact` (equivalent concepts) and `plugin`
//! (output is a strict sub-concept of the input); anything else fails, which
//! disqualifies the link. Similarity between two concepts is
//! `2*N_c / (N_a + N_b)` where `N_x` counts nodes on the path from `x` to the
//! root (depth + 1) and `c` is the closest common ancestor.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Recommended score for a plugin match.
pub const DEFAULT_PLUGIN_SCORE: f64 = 0.75;

/// Interned concept identifier; only valid for the `Taxonomy` that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(u32);

impl ConceptId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Outcome of matching a producer output against a consumer input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchKind {
    Exact,
    Plugin { score: f64 },
    Fail,
}

impl MatchKind {
    /// Numeric match score: 1 for exact, the configured `p` for plugin, 0 for fail.
    pub fn score(&self) -> f64 {
        match self {
            MatchKind::Exact => 1.0,
            MatchKind::Plugin { score } => *score,
            MatchKind::Fail => 0.0,
        }
    }

    pub fn is_match(&self) -> bool {
        !matches!(self, MatchKind::Fail)
    }
}

/// Per-edge quality of a robust causal link: mean match score and mean
/// similarity over the matched (output, input) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQuality {
    pub match_score: f64,
    pub similarity: f64,
}

/// Concept hierarchy with subsumption queries and depth lookups.
///
/// Read-only after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, ConceptId>,
    parent: Vec<Option<ConceptId>>,
    depth: Vec<u32>,
    root: ConceptId,
}

impl Taxonomy {
    /// Builds a taxonomy from a root name and (parent, child) edges.
    ///
    /// Multiple-inheritance inputs are normalized to a tree by keeping the
    /// first-listed parent of each child. Concepts that cannot reach the root
    /// (cycles, disconnected fragments) are rejected.
    pub fn from_edges(root: &str, edges: &[(String, String)]) -> Result<Self> {
        let mut tax = Taxonomy {
            names: Vec::new(),
            index: HashMap::new(),
            parent: Vec::new(),
            depth: Vec::new(),
            root: ConceptId(0),
        };
        let root_id = tax.intern(root);
        tax.root = root_id;

        for (parent, child) in edges {
            let p = tax.intern(parent);
            let c = tax.intern(child);
            if c == root_id {
                return Err(Error::InvalidTaxonomy(format!(
                    "root concept `{root}` may not have a parent"
                )));
            }
            if p == c {
                return Err(Error::InvalidTaxonomy(format!(
                    "self edge on concept `{child}`"
                )));
            }
            match tax.parent[c.index()] {
                None => tax.parent[c.index()] = Some(p),
                Some(existing) if existing == p => {}
                Some(_) => {
                    // Normalized to a tree: keep the first-listed parent.
                    log::debug!("concept `{child}` has multiple parents; keeping the first");
                }
            }
        }

        // Depths via BFS from the root over child lists.
        let n = tax.names.len();
        let mut children: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        for (i, p) in tax.parent.iter().enumerate() {
            if let Some(p) = p {
                children[p.index()].push(ConceptId(i as u32));
            }
        }
        let mut depth = vec![u32::MAX; n];
        let mut queue = std::collections::VecDeque::from([root_id]);
        depth[root_id.index()] = 0;
        while let Some(c) = queue.pop_front() {
            for &ch in &children[c.index()] {
                if depth[ch.index()] == u32::MAX {
                    depth[ch.index()] = depth[c.index()] + 1;
                    queue.push_back(ch);
                }
            }
        }
        if let Some(i) = depth.iter().position(|&d| d == u32::MAX) {
            return Err(Error::InvalidTaxonomy(format!(
                "concept `{}` does not reach the root",
                tax.names[i]
            )));
        }
        tax.depth = depth;
        Ok(tax)
    }

    fn intern(&mut self, name: &str) -> ConceptId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = ConceptId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.parent.push(None);
        self.depth.push(0);
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> ConceptId {
        self.root
    }

    /// All concepts in intern order.
    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> {
        (0..self.names.len() as u32).map(ConceptId)
    }

    /// Resolves a concept name, erroring with the missing name.
    pub fn concept(&self, name: &str) -> Result<ConceptId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownConcept(name.to_string()))
    }

    pub fn name(&self, c: ConceptId) -> &str {
        &self.names[c.index()]
    }

    pub fn depth(&self, c: ConceptId) -> u32 {
        self.depth[c.index()]
    }

    pub fn parent(&self, c: ConceptId) -> Option<ConceptId> {
        self.parent[c.index()]
    }

    /// Iterates `c`, parent(c), ..., root.
    pub fn ancestors_inclusive(&self, c: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        let mut cur = Some(c);
        std::iter::from_fn(move || {
            let out = cur?;
            cur = self.parent[out.index()];
            Some(out)
        })
    }

    /// True when `a` is a strict descendant of `b`.
    pub fn is_strict_descendant(&self, a: ConceptId, b: ConceptId) -> bool {
        if a == b {
            return false;
        }
        self.ancestors_inclusive(a).skip(1).any(|c| c == b)
    }

    /// Matchmaking classification of output `a` against input `b`.
    ///
    /// Exact when `a == b`, plugin (score `p`) when `a` is a strict
    /// sub-concept of `b`, fail otherwise. Subsume matches are not used.
    pub fn match_ids(&self, a: ConceptId, b: ConceptId, p: f64) -> MatchKind {
        debug_assert!(p > 0.0 && p < 1.0, "plugin score must lie in (0, 1)");
        if a == b {
            MatchKind::Exact
        } else if self.is_strict_descendant(a, b) {
            MatchKind::Plugin { score: p }
        } else {
            MatchKind::Fail
        }
    }

    /// Name-resolving form of [`match_ids`](Self::match_ids).
    pub fn match_type(&self, a: &str, b: &str, p: f64) -> Result<MatchKind> {
        Ok(self.match_ids(self.concept(a)?, self.concept(b)?, p))
    }

    /// Closest common ancestor of `a` and `b`. Always exists (single root).
    pub fn common_ancestor(&self, a: ConceptId, b: ConceptId) -> ConceptId {
        let (mut x, mut y) = (a, b);
        while self.depth(x) > self.depth(y) {
            x = self.parent(x).expect("non-root has a parent");
        }
        while self.depth(y) > self.depth(x) {
            y = self.parent(y).expect("non-root has a parent");
        }
        while x != y {
            x = self.parent(x).expect("non-root has a parent");
            y = self.parent(y).expect("non-root has a parent");
        }
        x
    }

    /// Edge-counting similarity `2*N_c / (N_a + N_b)` with `N_x = depth(x) + 1`,
    /// so the root has `N = 1` and `similarity(a, a) = 1`.
    pub fn similarity_ids(&self, a: ConceptId, b: ConceptId) -> f64 {
        let c = self.common_ancestor(a, b);
        let na = (self.depth(a) + 1) as f64;
        let nb = (self.depth(b) + 1) as f64;
        let nc = (self.depth(c) + 1) as f64;
        2.0 * nc / (na + nb)
    }

    /// Name-resolving form of [`similarity_ids`](Self::similarity_ids).
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.similarity_ids(self.concept(a)?, self.concept(b)?))
    }

    /// Scores one producer -> consumer edge over its matched (output, input)
    /// pairs: the mean match score and mean similarity. Any failing pair
    /// disqualifies the edge.
    pub fn link_quality(&self, pairs: &[(ConceptId, ConceptId)], p: f64) -> Result<LinkQuality> {
        if pairs.is_empty() {
            return Err(Error::InvalidConfig(
                "link_quality requires at least one matched pair".into(),
            ));
        }
        let mut score_sum = 0.0;
        let mut sim_sum = 0.0;
        for &(out, inp) in pairs {
            let kind = self.match_ids(out, inp, p);
            if !kind.is_match() {
                return Err(Error::FailedMatch {
                    output: self.name(out).to_string(),
                    input: self.name(inp).to_string(),
                });
            }
            score_sum += kind.score();
            sim_sum += self.similarity_ids(out, inp);
        }
        let m = pairs.len() as f64;
        Ok(LinkQuality {
            match_score: score_sum / m,
            similarity: sim_sum / m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect()
    }

    /// root -> b -> a, root -> u, root -> v
    fn fixture() -> Taxonomy {
        Taxonomy::from_edges(
            "root",
            &edges(&[("root", "b"), ("b", "a"), ("root", "u"), ("root", "v")]),
        )
        .unwrap()
    }

    #[test]
    fn match_identity_is_exact() {
        let t = fixture();
        let m = t.match_type("u", "u", 0.75).unwrap();
        assert_eq!(m, MatchKind::Exact);
        assert_eq!(m.score(), 1.0);
    }

    #[test]
    fn match_child_is_plugin() {
        let t = fixture();
        let m = t.match_type("a", "b", 0.75).unwrap();
        assert_eq!(m, MatchKind::Plugin { score: 0.75 });
        assert_eq!(m.score(), 0.75);
    }

    #[test]
    fn match_disjoint_fails() {
        let t = fixture();
        let m = t.match_type("u", "v", 0.75).unwrap();
        assert_eq!(m, MatchKind::Fail);
        assert_eq!(m.score(), 0.0);
        // Subsume direction (super-concept output) also fails.
        assert_eq!(t.match_type("b", "a", 0.75).unwrap(), MatchKind::Fail);
    }

    #[test]
    fn match_unknown_concept_errors() {
        let t = fixture();
        let err = t.match_type("a", "zzz", 0.75).unwrap_err();
        assert!(matches!(err, Error::UnknownConcept(ref name) if name == "zzz"));
    }

    #[test]
    fn similarity_identity() {
        let t = fixture();
        assert_eq!(t.similarity("a", "a").unwrap(), 1.0);
        assert_eq!(t.similarity("root", "root").unwrap(), 1.0);
    }

    #[test]
    fn similarity_chain() {
        // root -> b -> a: N_a = 3, N_b = 2, c = b.
        let t = fixture();
        let s = t.similarity("a", "b").unwrap();
        assert!((s - 0.8).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn similarity_siblings() {
        // u, v under root: N_u = N_v = 2, c = root.
        let t = fixture();
        let s = t.similarity("u", "v").unwrap();
        assert!((s - 0.5).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn similarity_symmetric() {
        let t = fixture();
        for x in ["root", "a", "b", "u", "v"] {
            for y in ["root", "a", "b", "u", "v"] {
                assert_eq!(t.similarity(x, y).unwrap(), t.similarity(y, x).unwrap());
            }
        }
    }

    #[test]
    fn plugin_similarity_uses_input_as_ancestor() {
        // Plugin match => the closest common ancestor is the input concept,
        // so sim = 2*N_b / (N_a + N_b).
        let t = fixture();
        let a = t.concept("a").unwrap();
        let b = t.concept("b").unwrap();
        assert!(t.match_ids(a, b, 0.75).is_match());
        let na = (t.depth(a) + 1) as f64;
        let nb = (t.depth(b) + 1) as f64;
        assert_eq!(t.similarity_ids(a, b), 2.0 * nb / (na + nb));
    }

    #[test]
    fn similarity_monotone_up_the_chain() {
        // root -> c1 -> c2 -> c3: moving b closer to a never decreases sim(a, b).
        let t = Taxonomy::from_edges(
            "root",
            &edges(&[("root", "c1"), ("c1", "c2"), ("c2", "c3")]),
        )
        .unwrap();
        let sims: Vec<f64> = ["root", "c1", "c2", "c3"]
            .iter()
            .map(|b| t.similarity("c3", b).unwrap())
            .collect();
        for w in sims.windows(2) {
            assert!(
                w[0] <= w[1],
                "similarity decreased along the chain: {sims:?}"
            );
        }
        assert_eq!(*sims.last().unwrap(), 1.0);
    }

    #[test]
    fn link_quality_single_exact_pair() {
        let t = fixture();
        let u = t.concept("u").unwrap();
        let q = t.link_quality(&[(u, u)], 0.75).unwrap();
        assert_eq!(q.match_score, 1.0);
        assert_eq!(q.similarity, 1.0);
    }

    #[test]
    fn link_quality_averages_pairs() {
        // One exact pair (sim 1.0) plus one plugin pair p = 0.75 (sim 0.8).
        let t = fixture();
        let u = t.concept("u").unwrap();
        let a = t.concept("a").unwrap();
        let b = t.concept("b").unwrap();
        let q = t.link_quality(&[(u, u), (a, b)], 0.75).unwrap();
        assert!((q.match_score - 0.875).abs() < 1e-12);
        assert!((q.similarity - 0.9).abs() < 1e-12);
    }

    #[test]
    fn link_quality_fail_pair_errors() {
        let t = fixture();
        let u = t.concept("u").unwrap();
        let v = t.concept("v").unwrap();
        let err = t.link_quality(&[(u, v)], 0.75).unwrap_err();
        assert!(matches!(err, Error::FailedMatch { .. }));
    }

    #[test]
    fn multi_parent_keeps_first() {
        let t = Taxonomy::from_edges(
            "root",
            &edges(&[("root", "x"), ("root", "y"), ("x", "z"), ("y", "z")]),
        )
        .unwrap();
        let z = t.concept("z").unwrap();
        let x = t.concept("x").unwrap();
        assert_eq!(t.parent(z), Some(x));
    }

    #[test]
    fn unreachable_concept_rejected() {
        // c1 <-> c2 cycle never reaches the root.
        let err = Taxonomy::from_edges("root", &edges(&[("c1", "c2"), ("c2", "c1")]));
        assert!(matches!(err, Err(Error::InvalidTaxonomy(_))));
    }
}
