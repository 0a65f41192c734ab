//! Multi-seed execution, accuracy, ablations and grid sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agent::{Agent, EpisodeRecord, Phase};
use crate::atr::AblationMode;
use crate::config::{ExperimentConfig, KeyValueFile, Precision};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stream of a seed reserved for spawn positions and signals.
const ENV_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    pub accuracy: f64,
    /// Network evaluations performed over the whole run.
    pub evaluations: u64,
    pub final_dimension: usize,
    pub final_atrs: usize,
}

impl RunResult {
    pub fn growth_events(&self) -> usize {
        self.episodes.iter().map(|e| e.growths.len()).sum()
    }

    pub fn switch_events(&self) -> usize {
        self.episodes.iter().map(|e| e.switches.len()).sum()
    }

    pub fn total_steps(&self) -> u64 {
        self.episodes.iter().map(|e| e.steps as u64).sum()
    }
}

/// Fraction of the last `ceil(episodes / 10)` episodes that took exactly the
/// optimal number of steps.
pub fn compute_accuracy(episodes: &[EpisodeRecord], config: &ExperimentConfig) -> f64 {
    let window = config.test_episodes().min(episodes.len());
    if window == 0 {
        return 0.0;
    }
    let tail = &episodes[episodes.len() - window..];
    tail.iter().filter(|e| e.is_optimal()).count() as f64 / window as f64
}

/// Runs one seed: training episodes, then the test window with the test
/// learning rate and exploration.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    match config.precision {
        Precision::F64 => run_seed_as::<f64>(config, seed),
        Precision::F32 => run_seed_as::<f32>(config, seed),
    }
}

pub fn run_seed_as<T: Scalar>(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    let task = config.maze()?;
    let mut agent = Agent::<T>::new(&config.agent, &task, seed)?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    env_rng.set_stream(ENV_STREAM);
    let test_from = config.episodes - config.test_episodes();
    let episodes = (0..config.episodes)
        .map(|ep| {
            let phase = if ep >= test_from { Phase::Test } else { Phase::Train };
            agent.run_episode(&task, &mut env_rng, ep, phase)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        seed,
        accuracy: compute_accuracy(&episodes, config),
        episodes,
        evaluations: agent.evaluations(),
        final_dimension: agent.dimension(),
        final_atrs: agent.bank().count(),
    })
}

/// Runs every seed of `config`. Results follow the seed list order and do
/// not depend on `parallel`.
pub fn run_experiment(config: &ExperimentConfig, parallel: usize) -> Result<Vec<RunResult>> {
    let mut all = run_many(std::slice::from_ref(config), parallel)?;
    Ok(all.remove(0))
}

/// Runs several configs, sharing one worker pool across all (config, seed)
/// jobs. Every config is validated before any job starts.
pub fn run_many(configs: &[ExperimentConfig], parallel: usize) -> Result<Vec<Vec<RunResult>>> {
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let flat = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| run_seed(&configs[i], seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut flat = flat.into_iter();
    Ok(configs
        .iter()
        .map(|c| flat.by_ref().take(c.seeds.len()).collect())
        .collect())
}

pub fn mean_accuracy(results: &[RunResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().map(|r| r.accuracy).sum::<f64>() / results.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean_ci(values: &[f64], level: f64, resamples: usize, seed: u64) -> (f64, f64) {
    if values.is_empty() || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

#[derive(Clone, Debug)]
pub struct ConfigResults {
    pub config: ExperimentConfig,
    pub results: Vec<RunResult>,
}

impl ConfigResults {
    pub fn mean_accuracy(&self) -> f64 {
        mean_accuracy(&self.results)
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.accuracy).collect()
    }
}

/// The four switching modes on otherwise identical settings, in
/// [`AblationMode::ALL`] order.
pub fn run_ablation_suite(base: &ExperimentConfig, parallel: usize) -> Result<Vec<ConfigResults>> {
    let configs: Vec<ExperimentConfig> = AblationMode::ALL
        .iter()
        .map(|&mode| {
            let mut c = base.clone();
            c.agent.ablation_mode = mode;
            c.name = format!("{}/{mode}", base.name);
            c
        })
        .collect();
    let results = run_many(&configs, parallel)?;
    Ok(configs
        .into_iter()
        .zip(results)
        .map(|(config, results)| ConfigResults { config, results })
        .collect())
}

/// Axes of a sweep; each line of a grid file is `key = v1 | v2 | ...`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamGrid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl ParamGrid {
    pub fn parse(text: &str) -> Result<Self> {
        let file = KeyValueFile::parse(text)?;
        if !file.sections.is_empty() {
            return Err(Error::Config("grid files take no sections".into()));
        }
        let axes: Vec<(String, Vec<String>)> = file
            .shared
            .into_iter()
            .map(|(k, v)| {
                let values: Vec<String> = v
                    .split('|')
                    .map(|x| x.trim().to_string())
                    .filter(|x| !x.is_empty())
                    .collect();
                (k, values)
            })
            .collect();
        let grid = Self { axes };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("parameter grid is empty".into()));
        }
        for (k, vs) in &self.axes {
            if vs.is_empty() {
                return Err(Error::Config(format!("grid axis `{k}` has no values")));
            }
        }
        Ok(())
    }

    /// Cartesian product, first axis slowest.
    pub fn points(&self) -> Vec<Vec<(String, String)>> {
        let mut points = vec![Vec::new()];
        for (key, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub point: Vec<(String, String)>,
    pub outcome: ConfigResults,
}

/// Evaluates every grid point and ranks by mean accuracy, best first. Ties
/// keep grid order.
pub fn sweep(base: &ExperimentConfig, grid: &ParamGrid, parallel: usize) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let points = grid.points();
    let configs = points
        .iter()
        .map(|point| {
            let mut c = base.clone();
            for (k, v) in point {
                c.set(k, v)?;
            }
            let label: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v}")).collect();
            c.name = format!("{}[{}]", base.name, label.join(","));
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let results = run_many(&configs, parallel)?;
    let mut rows: Vec<SweepRow> = points
        .into_iter()
        .zip(configs.into_iter().zip(results))
        .map(|(point, (config, results))| SweepRow {
            point,
            outcome: ConfigResults { config, results },
        })
        .collect();
    rows.sort_by(|a, b| b.outcome.mean_accuracy().total_cmp(&a.outcome.mean_accuracy()));
    Ok(rows)
}
