//! Result files: per-seed summary CSV, optional per-episode CSVs and a TOML
//! run manifest. Output depends only on the results, so identical runs give
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{ConfigResults, RunResult};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub const SUMMARY_HEADER: [&str; 8] = [
    "seed",
    "task",
    "method",
    "threshold_mode",
    "ablation_mode",
    "accuracy",
    "episodes",
    "growth_events",
];

pub const EPISODE_HEADER: [&str; 8] = [
    "seed", "episode", "context", "signal", "start", "steps", "optimal", "switched",
];

/// Upper bound on network evaluations for a run: every step may select
/// twice over the full candidate cross product (plus one exploratory draw)
/// and evaluate every ATR once.
pub fn evaluation_bound(config: &ExperimentConfig, final_atrs: usize) -> u64 {
    let states = 2u64;
    let wms = if config.signals.is_empty() { 1 } else { 3 };
    let per_step = 2 * (states * wms + 1) + final_atrs as u64;
    config.episodes as u64 * config.max_steps as u64 * per_step
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: Vec<ManifestEntry<'a>>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    mean_accuracy: f64,
    evaluations_total: u64,
    config: &'a ExperimentConfig,
    seed: Vec<SeedEntry>,
}

#[derive(Serialize)]
struct SeedEntry {
    seed: u64,
    accuracy: f64,
    total_steps: u64,
    evaluations: u64,
    evaluation_bound: u64,
    switch_events: u64,
    growth_events: u64,
    final_dimension: u64,
    final_atrs: u64,
}

/// Writes `summary.csv` and `manifest.toml` into `dir`, plus one
/// `<name>.episodes.csv` per config whose `episode_log` is set.
pub fn emit_results(groups: &[ConfigResults], dir: &Path) -> Result<Vec<PathBuf>> {
    if groups.iter().all(|g| g.results.is_empty()) {
        return Err(Error::InvalidArgument("no results to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let summary = dir.join(SUMMARY_FILE);
    fs::write(&summary, summary_csv(groups)?).map_err(|e| Error::io(&summary, e))?;
    written.push(summary);

    for g in groups.iter().filter(|g| g.config.episode_log) {
        let path = dir.join(format!("{}.episodes.csv", file_stem(&g.config.name)));
        fs::write(&path, episodes_csv(&g.config, &g.results)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let manifest = dir.join(MANIFEST_FILE);
    fs::write(&manifest, manifest_toml(groups)?).map_err(|e| Error::io(&manifest, e))?;
    written.push(manifest);
    Ok(written)
}

pub fn summary_csv(groups: &[ConfigResults]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: SUMMARY_FILE.into(),
        source: e,
    };
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for g in groups {
        let c = &g.config;
        for r in &g.results {
            w.write_record([
                r.seed.to_string(),
                c.task.to_string(),
                c.agent.growth_method.to_string(),
                c.agent.threshold_mode.to_string(),
                c.agent.ablation_mode.to_string(),
                format!("{:.6}", r.accuracy),
                r.episodes.len().to_string(),
                r.growth_events().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn episodes_csv(config: &ExperimentConfig, results: &[RunResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: format!("{}.episodes.csv", config.name).into(),
        source: e,
    };
    w.write_record(EPISODE_HEADER).map_err(csv_err)?;
    for r in results {
        for e in &r.episodes {
            let signal = e
                .signal
                .and_then(|s| config.signals.get(s).cloned())
                .unwrap_or_default();
            w.write_record([
                r.seed.to_string(),
                e.episode.to_string(),
                e.context.to_string(),
                signal,
                e.start.to_string(),
                e.steps.to_string(),
                e.optimal.to_string(),
                e.switches.len().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn manifest_toml(groups: &[ConfigResults]) -> Result<String> {
    let manifest = Manifest {
        experiment: groups
            .iter()
            .map(|g| ManifestEntry {
                mean_accuracy: round6(g.mean_accuracy()),
                evaluations_total: g.results.iter().map(|r| r.evaluations).sum(),
                config: &g.config,
                seed: g
                    .results
                    .iter()
                    .map(|r| SeedEntry {
                        seed: r.seed,
                        accuracy: round6(r.accuracy),
                        total_steps: r.total_steps(),
                        evaluations: r.evaluations,
                        evaluation_bound: evaluation_bound(&g.config, r.final_atrs),
                        switch_events: r.switch_events() as u64,
                        growth_events: r.growth_events() as u64,
                        final_dimension: r.final_dimension as u64,
                        final_atrs: r.final_atrs as u64,
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&manifest).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
