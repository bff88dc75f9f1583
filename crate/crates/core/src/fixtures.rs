//! Worked example repositories and scratch-directory helpers shared by the
//! test suites and usable as quick demos.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::ingest::load_canonical_strs;
use crate::model::CompositionTask;
use crate::Repository;

/// Seven services over concepts a..i with request ({a, b}, {i}). Discovery
/// finds S0..S4 relevant in two layers; S5 and S6 are never satisfiable.
pub fn example1() -> Result<(Repository, CompositionTask)> {
    load_canonical_strs(
        r#"[
          {"id": 0, "inputs": ["b"], "outputs": ["i"], "qos": {"t": 6.0, "ct": 4.0, "r": 0.93, "a": 0.92}},
          {"id": 1, "inputs": ["a"], "outputs": ["f", "g"], "qos": {"t": 2.0, "ct": 3.0, "r": 0.96, "a": 0.95}},
          {"id": 2, "inputs": ["a", "b"], "outputs": ["h"], "qos": {"t": 3.0, "ct": 2.0, "r": 0.95, "a": 0.97}},
          {"id": 3, "inputs": ["f", "h"], "outputs": ["i"], "qos": {"t": 1.5, "ct": 2.5, "r": 0.97, "a": 0.94}},
          {"id": 4, "inputs": ["a"], "outputs": ["f", "g", "h"], "qos": {"t": 4.0, "ct": 5.0, "r": 0.92, "a": 0.96}},
          {"id": 5, "inputs": ["a", "c"], "outputs": ["f", "g", "h"], "qos": {"t": 2.0, "ct": 2.0, "r": 0.95, "a": 0.95}},
          {"id": 6, "inputs": ["c", "d", "e"], "outputs": ["f", "g", "h"], "qos": {"t": 2.0, "ct": 2.0, "r": 0.95, "a": 0.95}}
        ]"#,
        EXAMPLE_TAXONOMY,
        r#"{"inputs": ["a", "b"], "outputs": ["i"]}"#,
    )
}

/// The five-service variant used by the permutation worked example: the
/// first five services of [`example1`] with the same request.
pub fn example2() -> Result<(Repository, CompositionTask)> {
    load_canonical_strs(
        r#"[
          {"id": 0, "inputs": ["b"], "outputs": ["i"], "qos": {"t": 6.0, "ct": 4.0, "r": 0.93, "a": 0.92}},
          {"id": 1, "inputs": ["a"], "outputs": ["f", "g"], "qos": {"t": 2.0, "ct": 3.0, "r": 0.96, "a": 0.95}},
          {"id": 2, "inputs": ["a", "b"], "outputs": ["h"], "qos": {"t": 3.0, "ct": 2.0, "r": 0.95, "a": 0.97}},
          {"id": 3, "inputs": ["f", "h"], "outputs": ["i"], "qos": {"t": 1.5, "ct": 2.5, "r": 0.97, "a": 0.94}},
          {"id": 4, "inputs": ["a"], "outputs": ["f", "g", "h"], "qos": {"t": 4.0, "ct": 5.0, "r": 0.92, "a": 0.96}}
        ]"#,
        EXAMPLE_TAXONOMY,
        r#"{"inputs": ["a", "b"], "outputs": ["i"]}"#,
    )
}

const EXAMPLE_TAXONOMY: &str = r#"{
  "root": "thing",
  "edges": [
    ["thing", "a"], ["thing", "b"], ["thing", "c"], ["thing", "d"],
    ["thing", "e"], ["thing", "f"], ["thing", "g"], ["thing", "h"],
    ["thing", "i"]
  ]
}"#;

/// Two-step chain X(a -> b), Y(b -> c) with request ({a}, {c}).
pub fn chain() -> Result<(Repository, CompositionTask)> {
    load_canonical_strs(
        r#"[
          {"id": 0, "inputs": ["a"], "outputs": ["b"], "qos": {"t": 1.0, "ct": 1.0, "r": 0.95, "a": 0.95}},
          {"id": 1, "inputs": ["b"], "outputs": ["c"], "qos": {"t": 2.0, "ct": 1.0, "r": 0.9, "a": 0.9}}
        ]"#,
        r#"{"root": "root", "edges": [["root", "a"], ["root", "b"], ["root", "c"]]}"#,
        r#"{"inputs": ["a"], "outputs": ["c"]}"#,
    )
}

/// Chain with response times {2, 3} and availabilities {0.9, 0.8}, for
/// normalization-bound checks.
pub fn two_service_bounds() -> Result<(Repository, CompositionTask)> {
    load_canonical_strs(
        r#"[
          {"id": 0, "inputs": ["a"], "outputs": ["b"], "qos": {"t": 2.0, "ct": 1.0, "r": 0.95, "a": 0.9}},
          {"id": 1, "inputs": ["b"], "outputs": ["c"], "qos": {"t": 3.0, "ct": 2.0, "r": 0.8, "a": 0.8}}
        ]"#,
        r#"{"root": "root", "edges": [["root", "a"], ["root", "b"], ["root", "c"]]}"#,
        r#"{"inputs": ["a"], "outputs": ["c"]}"#,
    )
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// A fresh scratch directory under the system temp dir.
pub fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "wscomp-{tag}-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).expect("scratch directory");
    dir
}
