//! Configuration-driven pipelines behind the `sqsim` binary. Every command
//! writes CSV/JSON files plus a `manifest.json` with SHA-256 digests.

mod commands;
pub mod config;
pub mod manifest;
pub mod model;

pub use commands::{frexel_covariance, gain_samples, run_command, squeezing_rows, verify_run, Command, SqueezingRow};
pub use config::ExperimentConfig;
pub use manifest::{read_manifest, verify_manifest, RunManifest, VerifyReport, MANIFEST_NAME};
pub use model::{detection_efficiency, SourceModel, SourceSummary};

/// Environment variable overriding the output directory of the config.
pub const OUT_DIR_ENV: &str = "SQSIM_OUT_DIR";

/// Output directory precedence: explicit flag, then [`OUT_DIR_ENV`], then
/// the config.
pub fn resolve_out_dir(flag: Option<&std::path::Path>, cfg: &ExperimentConfig) -> std::path::PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => v.into(),
        _ => cfg.outputs.dir.clone(),
    }
}
