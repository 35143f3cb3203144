//! `floodlab` — simulate cellular DDoS scenarios, build labeled telemetry
//! corpora, and train/evaluate the two reference classifiers.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 when a stage fails.

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::str::FromStr;

use floodlab::models::ArchName;
use floodlab::nn::TrainConfig;
use floodlab::sim::{Scenario, ScenarioConfig};
use floodlab_cli::{
    cmd_dataset, cmd_eval, cmd_pipeline, cmd_preprocess, cmd_simulate, cmd_train,
    format_run_summary, train_seed, write_metrics, PipelineConfig, SEED_SPLIT,
};

#[derive(Parser)]
#[command(
    name = "floodlab",
    version,
    about = "DDoS detection pipeline: simulate, preprocess, train, evaluate"
)]
struct Cli {
    /// JSON file overriding pipeline defaults (any subset of fields).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed; stage seeds derive from it by fixed offsets.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving all artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::from_str(s).map_err(|e| e.to_string())
}

fn parse_arch(s: &str) -> Result<ArchName, String> {
    ArchName::from_str(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its labeled telemetry CSV.
    Simulate {
        /// Scenario to run: normal or ddos.
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Traffic generation window in seconds.
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        /// Number of user devices.
        #[arg(long, value_name = "N")]
        ue: Option<usize>,
        /// Number of attacking hosts (used by the ddos scenario).
        #[arg(long, value_name = "N")]
        hosts: Option<usize>,
    },

    /// Merge per-run telemetry CSVs into one shuffled corpus.
    Dataset {
        /// Telemetry CSVs produced by `simulate` (at least one).
        #[arg(required = true, value_name = "CSV")]
        inputs: Vec<PathBuf>,
    },

    /// Drop, fill, encode, split, and scale a merged corpus.
    Preprocess {
        /// Merged corpus; defaults to `<out>/dataset.csv`.
        #[arg(long, value_name = "CSV")]
        dataset: Option<PathBuf>,
    },

    /// Train one architecture on the processed training split.
    Train {
        /// Architecture: cnn or fnn.
        #[arg(long, value_parser = parse_arch, default_value = "cnn")]
        model: ArchName,
        /// Training epochs.
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
        /// Minibatch size.
        #[arg(long, value_name = "N")]
        batch_size: Option<usize>,
        /// Adam learning rate.
        #[arg(long, value_name = "RATE")]
        learning_rate: Option<f64>,
        /// Training split; defaults to `<out>/train.csv`.
        #[arg(long, value_name = "CSV")]
        train_csv: Option<PathBuf>,
        /// Validation split; defaults to `<out>/val.csv`.
        #[arg(long, value_name = "CSV")]
        val_csv: Option<PathBuf>,
    },

    /// Evaluate a trained model on the processed test split.
    Eval {
        /// Architecture: cnn or fnn.
        #[arg(long, value_parser = parse_arch, default_value = "cnn")]
        model: ArchName,
        /// Saved model; defaults to `<out>/model_<arch>.json`.
        #[arg(long, value_name = "JSON")]
        model_file: Option<PathBuf>,
        /// Test split; defaults to `<out>/test.csv`.
        #[arg(long, value_name = "CSV")]
        test_csv: Option<PathBuf>,
    },

    /// Run everything: simulate both scenarios, merge, preprocess, train
    /// and evaluate every selected model.
    Pipeline {
        /// Architectures to train, comma-separated.
        #[arg(long, value_parser = parse_arch, value_delimiter = ',')]
        models: Option<Vec<ArchName>>,
        /// Number of user devices per run.
        #[arg(long, value_name = "N")]
        ue: Option<usize>,
        /// Number of attacking hosts per attack run.
        #[arg(long, value_name = "N")]
        hosts: Option<usize>,
        /// Traffic generation window per run, in seconds.
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        /// Number of benign runs.
        #[arg(long, value_name = "N")]
        normal_runs: Option<usize>,
        /// Number of attack runs.
        #[arg(long, value_name = "N")]
        ddos_runs: Option<usize>,
        /// Training epochs.
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = execute(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

/// Resolve the effective configuration: file values override defaults,
/// command-line flags override both.
fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli)?;
    match cli.command {
        Command::Simulate {
            scenario,
            duration,
            ue,
            hosts,
        } => {
            let sim_cfg = ScenarioConfig {
                scenario,
                seed: cfg.seed,
                duration_s: duration.unwrap_or(cfg.sim.duration_s),
                n_ue: ue.unwrap_or(cfg.sim.n_ue),
                n_hosts: hosts.unwrap_or(cfg.sim.n_hosts),
                ..cfg.sim
            };
            let done = cmd_simulate(&sim_cfg, &cfg.out)?;
            println!("{}", format_run_summary(&done.summary));
            println!("wrote {} ({} records)", done.csv_path.display(), done.rows);
        }

        Command::Dataset { inputs } => {
            let out_path = cfg.out.join("dataset.csv");
            let done = cmd_dataset(&inputs, &out_path, cfg.seed + floodlab_cli::SEED_DATASET)?;
            if done.single_class {
                eprintln!(
                    "warning: corpus contains a single class ({} benign, {} attack)",
                    done.benign_rows, done.attack_rows
                );
            }
            println!(
                "wrote {} ({} records: {} benign, {} attack)",
                done.path.display(),
                done.rows,
                done.benign_rows,
                done.attack_rows
            );
        }

        Command::Preprocess { dataset } => {
            let dataset = dataset.unwrap_or_else(|| cfg.out.join("dataset.csv"));
            let done = cmd_preprocess(&dataset, &cfg.out, cfg.seed + SEED_SPLIT)?;
            println!(
                "wrote {} ({} rows), {} ({} rows), {} ({} rows)",
                done.train_path.display(),
                done.train_rows,
                done.val_path.display(),
                done.val_rows,
                done.test_path.display(),
                done.test_rows,
            );
            println!(
                "wrote {} and {}",
                done.scaler_path.display(),
                done.codebooks_path.display()
            );
        }

        Command::Train {
            model,
            epochs,
            batch_size,
            learning_rate,
            train_csv,
            val_csv,
        } => {
            let train_cfg = TrainConfig {
                epochs: epochs.unwrap_or(cfg.train.epochs),
                batch_size: batch_size.unwrap_or(cfg.train.batch_size),
                learning_rate: learning_rate.unwrap_or(cfg.train.learning_rate),
                seed: train_seed(cfg.seed, model),
                ..cfg.train
            };
            let train_path = train_csv.unwrap_or_else(|| cfg.out.join("train.csv"));
            let val_path = val_csv.unwrap_or_else(|| cfg.out.join("val.csv"));
            let done = cmd_train(
                model,
                &train_path,
                Some(val_path.as_path()),
                &cfg.out,
                &train_cfg,
            )?;
            println!(
                "trained {} ({} parameters): final train loss {:.6}, val accuracy {}",
                done.arch,
                done.parameters,
                done.final_train_loss,
                done.final_val_accuracy
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "n/a".into()),
            );
            println!(
                "wrote {} and {}",
                done.model_path.display(),
                done.history_path.display()
            );
        }

        Command::Eval {
            model,
            model_file,
            test_csv,
        } => {
            let model_path =
                model_file.unwrap_or_else(|| cfg.out.join(format!("model_{model}.json")));
            let test_path = test_csv.unwrap_or_else(|| cfg.out.join("test.csv"));
            let report = cmd_eval(
                model,
                &model_path,
                &test_path,
                cfg.train.classification_threshold,
            )?;
            print!(
                "{}",
                floodlab::eval::format_table(std::slice::from_ref(&report))
            );
            let metrics_path = cfg.out.join("metrics.json");
            std::fs::create_dir_all(&cfg.out)
                .with_context(|| format!("cannot create {}", cfg.out.display()))?;
            write_metrics(&metrics_path, std::slice::from_ref(&report))?;
            println!("wrote {}", metrics_path.display());
        }

        Command::Pipeline {
            models,
            ue,
            hosts,
            duration,
            normal_runs,
            ddos_runs,
            epochs,
        } => {
            let mut pipe_cfg = cfg;
            if let Some(models) = models {
                pipe_cfg.models = models;
            }
            if let Some(ue) = ue {
                pipe_cfg.sim.n_ue = ue;
            }
            if let Some(hosts) = hosts {
                pipe_cfg.sim.n_hosts = hosts;
            }
            if let Some(duration) = duration {
                pipe_cfg.sim.duration_s = duration;
            }
            if let Some(n) = normal_runs {
                pipe_cfg.normal_runs = n;
            }
            if let Some(n) = ddos_runs {
                pipe_cfg.ddos_runs = n;
            }
            if let Some(epochs) = epochs {
                pipe_cfg.train.epochs = epochs;
            }
            let done = cmd_pipeline(&pipe_cfg)?;
            print!("{}", done.log);
            print!("{}", floodlab::eval::format_table(&done.reports));
            println!("wrote {}", done.metrics_path.display());
        }
    }
    Ok(())
}
