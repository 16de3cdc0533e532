use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;

use radar_pd::montecarlo::LevelLabel;
use radar_pd::scenario::{self, AnalysisRecord, ScenarioConfig};
use radar_pd::Error;

/// Radar detection probability under aircraft pose uncertainty.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one sweep point and print the analysis as JSON.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Radar azimuth in degrees; defaults to the sweep start.
        #[arg(long)]
        theta_r: Option<f64>,
        /// RCS model name; defaults to the first configured model.
        #[arg(long)]
        model: Option<String>,
        /// Uncertainty level; defaults to the first configured level.
        #[arg(long)]
        level: Option<String>,
    },
    /// Write linearised sweep tables, one per model and level.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write JSON mirrors of every CSV.
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo validation and write ensembles, coverage and histograms.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `montecarlo.runs`.
        #[arg(long)]
        runs: Option<usize>,
        /// Overrides `montecarlo.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to these levels (comma separated).
        #[arg(long, value_delimiter = ',')]
        level: Vec<String>,
        /// Also write JSON mirrors of the summaries and bands.
        #[arg(long)]
        json: bool,
    },
    /// Compare analytic gradients with finite differences at random poses.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Check(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    scenario::load_config(path)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(Failure::Config)
}

fn config_error(message: String) -> Failure {
    Failure::Config(anyhow::Error::new(Error::Validation(message)))
}

fn parse_level(name: &str) -> Result<LevelLabel, Failure> {
    LevelLabel::parse(name).ok_or_else(|| config_error(format!("unknown uncertainty level `{name}`")))
}

#[derive(Serialize)]
struct EvalOutput {
    analysis: AnalysisRecord,
    radar: radar_pd::geometry::RadarSite,
    state: radar_pd::geometry::AircraftState,
    rcs: radar_pd::rcs::RcsModel,
    level: radar_pd::montecarlo::UncertaintyLevel,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Eval {
            config,
            theta_r,
            model,
            level,
        } => {
            let cfg = load(&config)?;
            let model = match model {
                Some(name) => *cfg
                    .model(&name)
                    .ok_or_else(|| config_error(format!("model `{name}` is not configured")))?,
                None => cfg.models[0],
            };
            let level = match level {
                Some(name) => *cfg
                    .level(parse_level(&name)?)
                    .ok_or_else(|| config_error(format!("level `{name}` is not configured")))?,
                None => cfg.levels[0],
            };
            let theta = theta_r.unwrap_or(cfg.sweep.theta_start_deg());
            let state = cfg.sweep.nominal_state_at_theta(theta).context("nominal state")?;
            let analysis = scenario::analyze(&state, &cfg.radar, &model, &level.covariance()).context("evaluation")?;
            let out = EvalOutput {
                analysis: AnalysisRecord::new(&model, &level, theta, &analysis),
                radar: cfg.radar,
                state,
                rcs: model,
                level,
            };
            println!("{}", serde_json::to_string_pretty(&out).context("serialising")?);
        }
        Command::Sweep { config, out, json } => {
            let cfg = load(&config)?;
            let tables = scenario::linear_sweep(&cfg).context("linear sweep")?;
            let files = scenario::write_sweep_outputs(&out, &tables, json).context("writing outputs")?;
            for t in &tables {
                let (m, k) = t.max_three_sigma();
                log::info!("{}: max 3σ_pd {m:.4} at θ_r = {}°", t.file_stem(), t.theta_r_deg[k]);
            }
            log::info!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Montecarlo {
            config,
            runs,
            seed,
            out,
            level,
            json,
        } => {
            let mut cfg = load(&config)?;
            if let Some(r) = runs {
                if r == 0 {
                    return Err(config_error("--runs must be at least 1".into()));
                }
                cfg.mc_runs = r;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if !level.is_empty() {
                let wanted = level.iter().map(|l| parse_level(l)).collect::<Result<Vec<_>, _>>()?;
                cfg.levels.retain(|l| wanted.contains(&l.label));
                if cfg.levels.is_empty() {
                    return Err(config_error("no configured level matches --level".into()));
                }
            }
            let report = scenario::validate_sweep(&cfg).context("Monte Carlo validation")?;
            scenario::write_validation_outputs(&out, &report, json).context("writing outputs")?;
            for e in &report.entries {
                let s = e.summary();
                println!(
                    "{} {}: coverage {:.4} (worst {:.3} at {}°), max |ΔP_D| {:.4} at {}°, resamples {}",
                    s.model,
                    s.level,
                    s.aggregate_coverage,
                    s.worst_coverage,
                    s.worst_theta_r_deg,
                    s.max_abs_deviation,
                    s.max_deviation_theta_r_deg,
                    s.resamples
                );
            }
        }
        Command::Gradcheck { config, samples, seed } => {
            let cfg = load(&config)?;
            let report = scenario::gradcheck(&cfg, samples, seed).context("gradient check")?;
            println!("{}", serde_json::to_string_pretty(&report).context("serialising")?);
            if !report.pass {
                return Err(Failure::Check("gradient check failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
