//! Config-driven experiment runner behind the `husimi-dyn` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse_config, Experiment, Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use experiments::{run_experiment, Outcome};
pub use manifest::RunManifest;

/// Environment variable that takes precedence over every other output setting.
pub const OUT_ENV: &str = "HUSIMI_DYN_OUT";
pub const DEFAULT_OUT: &str = "out";

/// One command-line invocation.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Experiment,
    pub config_path: PathBuf,
    pub overrides: Overrides,
    pub workers: Option<usize>,
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Reads and resolves the config, with command-line overrides applied.
pub fn load_config(inv: &Invocation) -> CliResult<(String, RunConfig)> {
    let text = std::fs::read_to_string(&inv.config_path).map_err(|e| CliError::io(&inv.config_path, e))?;
    let mut cfg = parse_config(&text, inv.command)?;
    cfg.apply(&inv.overrides)?;
    if let Some(dir) = env_out() {
        cfg.output_dir = dir;
    }
    Ok((text, cfg))
}

fn finish(manifest: &mut RunManifest, dir: &Path, err: Option<&CliError>) -> i32 {
    match err {
        None => {
            manifest.status = "ok".into();
            manifest.exit_code = 0;
        }
        Some(e) => {
            manifest.status = "failed".into();
            manifest.exit_code = e.exit_code();
            manifest.error = Some(e.to_string());
        }
    }
    if let Err(e) = manifest.write(dir) {
        log::error!("{e}");
        return e.exit_code();
    }
    manifest.exit_code
}

/// Runs an invocation end to end and returns the process exit code.
/// The manifest is written whatever happens.
pub fn run(inv: &Invocation) -> i32 {
    let mut manifest = RunManifest::new(inv.command.command());
    manifest.config_path = Some(inv.config_path.display().to_string());
    let fallback_dir = env_out().or_else(|| inv.overrides.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let loaded = manifest.time("load_config", || load_config(inv));
    let (text, cfg) = match loaded {
        Ok(x) => x,
        Err(e) => {
            if let Ok(t) = std::fs::read_to_string(&inv.config_path) {
                manifest.config_text = Some(t);
            }
            log::error!("{e}");
            return finish(&mut manifest, &fallback_dir, Some(&e));
        }
    };
    manifest.config_text = Some(text);
    manifest.resolved_config = serde_json::to_value(&cfg).ok();
    let dir = cfg.output_dir.clone();

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(inv.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let e = CliError::Config(format!("--workers: {e}"));
            return finish(&mut manifest, &dir, Some(&e));
        }
    };
    let outcome = manifest.time(inv.command.command(), || pool.install(|| run_experiment(&cfg)));
    manifest.diagnostics = outcome.diagnostics;
    manifest.notes = outcome.notes;
    let mut err = outcome.error;

    let written = manifest.time("write_outputs", || -> CliResult<Vec<String>> {
        let mut names = Vec::new();
        for f in &outcome.files {
            output::write_file(&f.path_in(&dir), &f.contents)?;
            names.push(f.name.clone());
        }
        Ok(names)
    });
    match written {
        Ok(names) => manifest.outputs = names,
        Err(e) => {
            if err.is_none() {
                err = Some(e);
            }
        }
    }
    if let Some(e) = &err {
        log::error!("{e}");
    }
    finish(&mut manifest, &dir, err.as_ref())
}
