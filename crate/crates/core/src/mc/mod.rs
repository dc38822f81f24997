//! Configuration-driven Monte Carlo studies of estimation accuracy,
//! interval coverage and test size.
//!
//! Replication `r` draws all of its innovations from
//! `derive_seed(master_seed, r)`, shared by every memory setting, so cells
//! are reproducible individually and the `d = 0` rows of all settings agree.

mod config;
mod export;
mod studies;

pub use config::{EvalPoints, MemorySetting, StudyConfig, StudyKind};
pub use export::{
    export_study, load_manifest, manifest, write_criterion_csv, write_histogram_csv, StudyManifest, HISTOGRAM_FILE,
    MANIFEST_FILE,
};
pub use studies::{
    run_coverage_study, run_estimation_study, run_size_study, run_study, Cell, Histogram, StudyResult, CHUNK_SIZE,
    UNDEFINED_FLAG_FRACTION,
};
