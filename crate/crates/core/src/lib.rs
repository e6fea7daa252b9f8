//! Dual deduplication for privacy-aware cloud storage.
//!
//! Clients shorten each fixed-size chunk by a few random 1-deletions and
//! keep the inverse as a local deviation; the cloud deduplicates the
//! uploaded bases against each other, storing near matches as short
//! swap/change-value edit scripts against a shared base. Retrieval is
//! exact: the cloud undoes its deviation, the client undoes its
//! deletions.
//!
//! Modules:
//! - [`symstring`]: k-bit symbol strings, chunking, packing, parameters.
//! - [`metrics`]: edit scripts, swap distance, reference distances.
//! - [`client`]: deletions, local deviations, the client store.
//! - [`cloud`]: generalized deduplication and the cloud store.
//! - [`analysis`]: compression-ratio formulas and the uncertainty metric.
//! - [`harness`]: corpus synthesis, pipeline runs, parameter sweeps.

pub mod analysis;
pub mod client;
pub mod cloud;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod symstring;

pub use analysis::{
    ccr_formula, gcr_formula, measured_ratios, most_probable_string_score, n_preimages,
    policy_reports, supersequence_count_oracle, ucr_formula, uncertainty, RatioReport,
    SymbolDistribution, UncertaintyReport,
};
pub use client::{apply_deletions, reconstruct, ClientStore, DeletionStrategy, LocalDeviation};
pub use cloud::{CloudStore, DedupRecord, Policy};
pub use error::{Error, Result};
pub use harness::{
    run_pipeline, sweep, synthesize_corpus, write_csv, CorpusSource, ExperimentConfig,
    SizeUnits, SweepOutcome, SweepRow, SyntheticCorpusSpec,
};
pub use metrics::{
    apply_script, damerau_levenshtein, hamming, invert_script, swap_distance,
    swap_distance_exact, swap_script, EditOp, EditScript, ExactDistance,
};
pub use symstring::{chunk, dechunk, seeded_rng, ChunkedFile, Params, SymbolString};
