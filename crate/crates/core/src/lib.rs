//! Memetic estimation-of-distribution solver for fully automated,
//! quality-aware semantic web service composition.
//!
//! A composition request names provided inputs and wanted outputs over a
//! concept taxonomy; solutions are service DAGs scored on both matchmaking
//! quality (exact/plugin link types, edge-counting similarity) and QoS
//! (availability, reliability, response time, cost). Search runs over a
//! permutation encoding of the task-relevant services: a node histogram
//! matrix learned from an elite archive samples new permutations, which are
//! decoded into DAGs, optionally improved by constrained swap-based local
//! search, and re-encoded into canonical form.
//!
//! Crate layout follows the pipeline: [`ontology`] (taxonomy and
//! matchmaking), [`model`] (services, tasks, QoS aggregation), [`ingest`]
//! (canonical JSON and WSC-style XML loading), [`discovery`] (relevant
//! services and layers), [`codec`] (permutation/DAG mapping), [`evaluate`]
//! (fitness), [`eda`] (the evolution loop), [`localsearch`] (swap
//! operators), and [`harness`] (experiments, statistics, synthetic
//! instances, and the exhaustive oracle).

pub mod codec;
pub mod discovery;
pub mod eda;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod harness;
pub mod ingest;
pub mod localsearch;
pub mod model;
pub mod ontology;

pub use codec::{
    canonicalize, decode, encode, CausalLink, CompositionGraph, GraphNode, Permutation,
};
pub use discovery::{discover, LayerSet};
pub use eda::{
    evolve, Algorithm, Archive, Evaluator, NodeHistogramMatrix, RunConfig, RunResult, TraceRow,
};
pub use error::{Error, Result};
pub use evaluate::{compute_bounds, fitness, qosm, FitnessWeights, QualityBounds};
pub use harness::{
    brute_force_optimum, compare, generate_synthetic, run_experiment, t_test, write_experiment,
    ComparisonTable, DatasetSpec, ExperimentResult, ExperimentSpec, RunRecord, SyntheticInstance,
};
pub use ingest::{
    dump_canonical, import_wsc, load_canonical, load_canonical_dir, load_canonical_strs, Repository,
};
pub use localsearch::{
    apply_operator, improve, select_for_ls, Neighbor, ReplacePolicy, SwapOperator,
};
pub use model::{
    aggregate_dag, aggregate_expression, CompositeExpression, CompositionTask, QosVector, Service,
};
pub use ontology::{ConceptId, LinkQuality, MatchKind, Taxonomy, DEFAULT_PLUGIN_SCORE};
