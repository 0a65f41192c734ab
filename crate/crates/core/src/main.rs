use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ponowm::config::{load_experiments_from, parse_seeds, ExperimentConfig, DESK_SUFFIX, PRESETS};
use ponowm::harness::{median, run_ablation_suite, run_many, sweep, ConfigResults, ParamGrid};
use ponowm::output::emit_results;
use ponowm::{Error, Result};

#[derive(Parser)]
#[command(name = "ponowm", version, about = "Run maze experiments with the holographic working-memory TD learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run(RunArgs),
    /// Run the four ATR switching modes for each experiment.
    Ablate(RunArgs),
    /// Evaluate a parameter grid around a single experiment.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid file: one `key = v1 | v2 | ...` line per axis.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Inspect the built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset's resolved settings.
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines, optional `[section]` per experiment).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a config file.
    #[arg(long)]
    preset: Option<String>,
    /// Seed list overriding the config, e.g. `1,2,3` or `0..20`.
    #[arg(long)]
    seeds: Option<String>,
    /// Extra `key=value` overrides applied to every experiment.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Output directory.
    #[arg(long, env = "PONOWM_OUT_DIR")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn experiments(&self) -> Result<Vec<ExperimentConfig>> {
        let mut configs = match (&self.config, &self.preset) {
            (Some(path), _) => load_experiments_from(path)?,
            (None, Some(name)) => vec![ExperimentConfig::preset(name)?],
            (None, None) => unreachable!("clap requires one of --config/--preset"),
        };
        if self.parallel == 0 {
            return Err(Error::Config("--parallel must be at least 1".into()));
        }
        for c in &mut configs {
            for kv in &self.overrides {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
                c.set(k.trim(), v)?;
            }
            if let Some(seeds) = &self.seeds {
                c.seeds = parse_seeds(seeds)?;
            }
            c.validate()?;
        }
        Ok(configs)
    }

    fn out_dir(&self, configs: &[ExperimentConfig]) -> PathBuf {
        self.out
            .clone()
            .or_else(|| configs.iter().find_map(|c| c.output.clone()))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

fn report(groups: &[ConfigResults]) {
    for g in groups {
        let acc = g.accuracies();
        println!(
            "{:<40} seeds={:<3} mean={:.4} median={:.4} min={:.4}",
            g.config.name,
            acc.len(),
            g.mean_accuracy(),
            median(&acc),
            acc.iter().copied().fold(f64::INFINITY, f64::min)
        );
    }
}

fn finish(groups: &[ConfigResults], dir: &Path) -> Result<()> {
    report(groups);
    for path in emit_results(groups, dir)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let configs = args.experiments()?;
            let results = run_many(&configs, args.parallel)?;
            let groups: Vec<ConfigResults> = configs
                .iter()
                .cloned()
                .zip(results)
                .map(|(config, results)| ConfigResults { config, results })
                .collect();
            finish(&groups, &args.out_dir(&configs))
        }
        Command::Ablate(args) => {
            let configs = args.experiments()?;
            let mut groups = Vec::new();
            for c in &configs {
                groups.extend(run_ablation_suite(c, args.parallel)?);
            }
            finish(&groups, &args.out_dir(&configs))
        }
        Command::Sweep { run, grid } => {
            let configs = run.experiments()?;
            let [base] = configs.as_slice() else {
                return Err(Error::Config(format!(
                    "sweep needs exactly one experiment, the config describes {}",
                    configs.len()
                )));
            };
            let text = std::fs::read_to_string(&grid).map_err(|e| Error::Io { path: grid.clone(), source: e })?;
            let grid = ParamGrid::parse(&text)?;
            let rows = sweep(base, &grid, run.parallel)?;
            for (rank, row) in rows.iter().enumerate() {
                let point: Vec<String> = row.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("#{:<3} {:<40} mean={:.4}", rank + 1, point.join(" "), row.outcome.mean_accuracy());
            }
            let groups: Vec<ConfigResults> = rows.into_iter().map(|r| r.outcome).collect();
            let dir = run.out_dir(&configs);
            for path in emit_results(&groups, &dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for (name, about) in PRESETS {
                        println!("{name:<22} {about}");
                    }
                    println!("(append `{DESK_SUFFIX}` to any name for HRR length / 4, episodes / 10, 20 seeds)");
                }
                PresetAction::Show { name } => print!("{}", ExperimentConfig::preset(&name)?.to_toml()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
