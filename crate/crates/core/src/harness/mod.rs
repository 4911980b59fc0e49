//! Bug bundles and experiment orchestration.

mod bundle;
mod experiment;

pub use bundle::{
    discover_bundles, load_bundle, parse_manifest, BugBundle, BundleError, Correctness, Difficulty,
    Expected, Labels, Manifest, PatchLabel, Readability,
};
pub use experiment::{
    parse_records, run_experiment, run_job, write_experiment, ExperimentPlan, ExperimentRecord,
    WORKER_STACK_SIZE,
};
