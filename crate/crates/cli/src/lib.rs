//! Pipeline stages behind the `floodlab` command-line tool.
//!
//! Every stage is an ordinary function returning a summary, so the whole
//! pipeline can be driven programmatically (the integration tests do) as
//! well as from the binary. All randomness flows from one master seed:
//! each stage uses `master + stage offset`, so any stage can be reproduced
//! standalone with the documented derived seed.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use floodlab::eval::{confusion, ModelReport};
use floodlab::models::ArchName;
use floodlab::nn::{classify, train, LabeledData, Model, TrainConfig};
use floodlab::preprocess::{self, Table};
use floodlab::sim::{run, Scenario, ScenarioConfig};
use floodlab::telemetry;

/// Seed offset of the i-th benign simulation run (`master + offset + i`).
pub const SEED_SIM_NORMAL: u64 = 1000;
/// Seed offset of the i-th attack simulation run (`master + offset + i`).
pub const SEED_SIM_DDOS: u64 = 2000;
/// Seed offset of the dataset merge shuffle.
pub const SEED_DATASET: u64 = 3000;
/// Seed offset of the train/validation/test split.
pub const SEED_SPLIT: u64 = 4000;
/// Seed offset of CNN weight initialization and batch shuffling.
pub const SEED_TRAIN_CNN: u64 = 5000;
/// Seed offset of FNN weight initialization and batch shuffling.
pub const SEED_TRAIN_FNN: u64 = 6000;

/// Derived seed for training a given architecture.
pub fn train_seed(master: u64, arch: ArchName) -> u64 {
    match arch {
        ArchName::Cnn => master + SEED_TRAIN_CNN,
        ArchName::Fnn => master + SEED_TRAIN_FNN,
    }
}

/// Everything the end-to-end pipeline needs, JSON-loadable with per-field
/// defaults so a config file may override any subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Master seed; all stage seeds derive from it.
    pub seed: u64,
    /// Directory that receives every artifact.
    pub out: PathBuf,
    /// Template for each simulation run; `scenario` and `seed` are
    /// overwritten per run.
    pub sim: ScenarioConfig,
    /// Number of benign runs contributing to the corpus.
    pub normal_runs: usize,
    /// Number of attack runs contributing to the corpus.
    pub ddos_runs: usize,
    /// Training hyperparameters; `seed` is overwritten per architecture.
    pub train: TrainConfig,
    /// Architectures to train and evaluate, in report order.
    pub models: Vec<ArchName>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: PathBuf::from("out"),
            // Desk-scale scenario: small enough to simulate in seconds,
            // loaded enough that flooding saturates the radio queues.
            sim: ScenarioConfig {
                n_ue: 20,
                n_hosts: 3,
                duration_s: 60.0,
                ..ScenarioConfig::default()
            },
            // Benign runs produce fewer records each, so more of them are
            // needed to keep the corpus balanced above 5,000 per class.
            normal_runs: 64,
            ddos_runs: 44,
            train: TrainConfig::default(),
            models: ArchName::ALL.to_vec(),
        }
    }
}

impl PipelineConfig {
    /// Load a config from a JSON file, falling back to defaults per field.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))
    }
}

/// Result of one `simulate` invocation.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub csv_path: PathBuf,
    pub rows: usize,
    pub summary: floodlab::sim::RunSummary,
}

/// Run one scenario and write its labeled telemetry as
/// `<scenario>_<seed>.csv` inside `out_dir`.
pub fn cmd_simulate(config: &ScenarioConfig, out_dir: &Path) -> Result<SimulateOutput> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let trace = run(config).context("simulation failed")?;
    let records = telemetry::collect(&trace, config).context("telemetry collection failed")?;
    let name = format!(
        "{}_{}.csv",
        config.scenario.to_string().to_lowercase(),
        config.seed
    );
    let csv_path = out_dir.join(name);
    telemetry::write_csv(&csv_path, &records)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    Ok(SimulateOutput {
        csv_path,
        rows: records.len(),
        summary: trace.summary(),
    })
}

/// Result of merging per-run telemetry into one corpus.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub benign_rows: usize,
    pub attack_rows: usize,
    /// True when every record carries the same label, which makes the
    /// corpus useless for training. Reported as a warning, not an error.
    pub single_class: bool,
}

/// Merge per-run CSVs into `out_path`, shuffling whole runs by seed.
///
/// Runs are kept contiguous rather than interleaving individual records:
/// preprocessing forward-fills each column from earlier rows, so a record
/// must stay adjacent to the rest of its own run for the filled values to
/// describe that run and not a random other one.
pub fn cmd_dataset(inputs: &[PathBuf], out_path: &Path, seed: u64) -> Result<DatasetSummary> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if inputs.is_empty() {
        bail!("no input files given");
    }
    let mut header: Option<String> = None;
    let mut blocks: Vec<Vec<String>> = Vec::with_capacity(inputs.len());
    for path in inputs {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let mut lines = text.lines();
        let this_header = lines
            .next()
            .with_context(|| format!("{} is empty", path.display()))?
            .to_owned();
        match &header {
            None => header = Some(this_header),
            Some(expected) if *expected != this_header => {
                bail!(
                    "schema mismatch: {} has a different column header than {}",
                    path.display(),
                    inputs[0].display()
                );
            }
            Some(_) => {}
        }
        blocks.push(lines.map(str::to_owned).collect());
    }
    let header = header.expect("at least one input");
    let label_col = header
        .split(',')
        .position(|c| c == preprocess::LABEL_COLUMN)
        .context("inputs have no label column")?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    blocks.shuffle(&mut rng);

    let mut benign_rows = 0;
    let mut attack_rows = 0;
    let mut out = String::with_capacity(blocks.iter().map(|b| b.len() * 64).sum());
    out.push_str(&header);
    out.push('\n');
    for block in &blocks {
        for line in block {
            match line.split(',').nth(label_col) {
                Some("0") => benign_rows += 1,
                Some("1") => attack_rows += 1,
                other => bail!("bad label field {other:?} in a record"),
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    }
    std::fs::write(out_path, out)
        .with_context(|| format!("cannot write {}", out_path.display()))?;
    Ok(DatasetSummary {
        path: out_path.to_owned(),
        rows: benign_rows + attack_rows,
        benign_rows,
        attack_rows,
        single_class: benign_rows == 0 || attack_rows == 0,
    })
}

/// Result of the preprocessing stage, with the artifact locations.
#[derive(Debug, Clone, Serialize)]
pub struct PreprocessSummary {
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
    pub feature_columns: usize,
    pub train_path: PathBuf,
    pub val_path: PathBuf,
    pub test_path: PathBuf,
    pub scaler_path: PathBuf,
    pub codebooks_path: PathBuf,
}

/// Prepare a merged corpus for training: drop, fill, encode, split, scale.
/// Writes the three split CSVs plus the scaler and codebook sidecars.
pub fn cmd_preprocess(dataset: &Path, out_dir: &Path, seed: u64) -> Result<PreprocessSummary> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let table = Table::read_csv(dataset)
        .with_context(|| format!("cannot read dataset {}", dataset.display()))?;
    let done = preprocess::process(table, seed).context("preprocessing failed")?;
    let summary = PreprocessSummary {
        train_rows: done.train.n_rows(),
        val_rows: done.val.n_rows(),
        test_rows: done.test.n_rows(),
        feature_columns: done.train.columns.len() - 1,
        train_path: out_dir.join("train.csv"),
        val_path: out_dir.join("val.csv"),
        test_path: out_dir.join("test.csv"),
        scaler_path: out_dir.join("scaler.json"),
        codebooks_path: out_dir.join("codebooks.json"),
    };
    done.train.write_csv(&summary.train_path)?;
    done.val.write_csv(&summary.val_path)?;
    done.test.write_csv(&summary.test_path)?;
    done.scaler.save(&summary.scaler_path)?;
    done.codebooks.save(&summary.codebooks_path)?;
    Ok(summary)
}

/// Result of training one architecture.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub arch: ArchName,
    pub parameters: usize,
    pub final_train_loss: f64,
    pub final_val_accuracy: Option<f64>,
    pub model_path: PathBuf,
    pub history_path: PathBuf,
}

/// Read a processed split CSV into a feature matrix and labels.
fn load_matrix(path: &Path) -> Result<(floodlab::nn::Tensor, Vec<u8>)> {
    let table = Table::read_csv(path).with_context(|| format!("cannot read {}", path.display()))?;
    preprocess::to_matrix(&table)
        .with_context(|| format!("{} is not a processed feature table", path.display()))
}

/// Train one model on a processed split and persist it with its history.
pub fn cmd_train(
    arch: ArchName,
    train_csv: &Path,
    val_csv: Option<&Path>,
    out_dir: &Path,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let (x, y) = load_matrix(train_csv)?;
    let val_data = val_csv.map(load_matrix).transpose()?;
    let n_features = x.shape()[1];
    let mut model = arch
        .build(n_features, config.seed)
        .context("model construction failed")?;
    let train_set = LabeledData { x: &x, labels: &y };
    let val_set = val_data
        .as_ref()
        .map(|(vx, vy)| LabeledData { x: vx, labels: vy });
    let history = train(&mut model, train_set, val_set, config).context("training failed")?;

    let model_path = out_dir.join(format!("model_{arch}.json"));
    model
        .save(&model_path)
        .with_context(|| format!("cannot write {}", model_path.display()))?;
    let history_path = out_dir.join(format!("history_{arch}.csv"));
    std::fs::write(&history_path, history.to_csv())
        .with_context(|| format!("cannot write {}", history_path.display()))?;
    let last = history.epochs.last();
    Ok(TrainOutput {
        arch,
        parameters: model.param_count(),
        final_train_loss: last.map(|e| e.train_loss).unwrap_or(f64::NAN),
        final_val_accuracy: last.and_then(|e| e.val_accuracy),
        model_path,
        history_path,
    })
}

/// Evaluate a saved model on a processed test split.
pub fn cmd_eval(
    arch: ArchName,
    model_path: &Path,
    test_csv: &Path,
    threshold: f64,
) -> Result<ModelReport> {
    let model =
        Model::load(model_path).with_context(|| format!("cannot load {}", model_path.display()))?;
    let (x, y) = load_matrix(test_csv)?;
    let preds = classify(&model, &x, threshold).context("inference failed")?;
    let cm = confusion(&y, &preds).context("confusion matrix construction failed")?;
    Ok(ModelReport::new(&arch.to_string().to_uppercase(), cm))
}

/// Write evaluation reports as a JSON array.
pub fn write_metrics(path: &Path, reports: &[ModelReport]) -> Result<()> {
    let text = serde_json::to_string_pretty(reports).context("cannot serialize metrics")?;
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Everything the full pipeline produced.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dataset: DatasetSummary,
    pub preprocess: PreprocessSummary,
    pub trained: Vec<TrainOutput>,
    pub reports: Vec<ModelReport>,
    pub metrics_path: PathBuf,
    /// Per-stage progress lines, for printing.
    pub log: String,
}

/// Run the whole chain: simulate both scenarios, merge, preprocess, train
/// every configured architecture, evaluate on the held-out test split, and
/// persist `metrics.json`.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    if cfg.models.is_empty() {
        bail!("no models selected");
    }
    let mut log = String::new();
    let out = &cfg.out;
    let mut run_files = Vec::with_capacity(cfg.normal_runs + cfg.ddos_runs);
    let mut sim_totals = [0usize; 2];
    for (scenario, count, offset) in [
        (Scenario::Normal, cfg.normal_runs, SEED_SIM_NORMAL),
        (Scenario::Ddos, cfg.ddos_runs, SEED_SIM_DDOS),
    ] {
        for i in 0..count {
            let sim_cfg = ScenarioConfig {
                scenario,
                seed: cfg.seed + offset + i as u64,
                ..cfg.sim.clone()
            };
            let done = cmd_simulate(&sim_cfg, out)
                .with_context(|| format!("simulate stage failed ({scenario} run {i})"))?;
            sim_totals[(scenario == Scenario::Ddos) as usize] += done.rows;
            run_files.push(done.csv_path);
        }
    }
    let _ = writeln!(
        log,
        "simulate: {} benign runs ({} records), {} attack runs ({} records)",
        cfg.normal_runs, sim_totals[0], cfg.ddos_runs, sim_totals[1]
    );

    let dataset = cmd_dataset(
        &run_files,
        &out.join("dataset.csv"),
        cfg.seed + SEED_DATASET,
    )
    .context("dataset stage failed")?;
    let _ = writeln!(
        log,
        "dataset: {} records ({} benign, {} attack)",
        dataset.rows, dataset.benign_rows, dataset.attack_rows
    );

    let prep = cmd_preprocess(&dataset.path, out, cfg.seed + SEED_SPLIT)
        .context("preprocess stage failed")?;
    let _ = writeln!(
        log,
        "preprocess: {} train / {} val / {} test rows, {} features",
        prep.train_rows, prep.val_rows, prep.test_rows, prep.feature_columns
    );

    let mut trained = Vec::new();
    let mut reports = Vec::new();
    for &arch in &cfg.models {
        let train_cfg = TrainConfig {
            seed: train_seed(cfg.seed, arch),
            ..cfg.train.clone()
        };
        let done = cmd_train(
            arch,
            &prep.train_path,
            Some(&prep.val_path),
            out,
            &train_cfg,
        )
        .with_context(|| format!("train stage failed ({arch})"))?;
        let _ = writeln!(
            log,
            "train {arch}: {} parameters, final train loss {:.6}, val accuracy {}",
            done.parameters,
            done.final_train_loss,
            done.final_val_accuracy
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "n/a".into()),
        );
        let report = cmd_eval(
            arch,
            &done.model_path,
            &prep.test_path,
            cfg.train.classification_threshold,
        )
        .with_context(|| format!("eval stage failed ({arch})"))?;
        trained.push(done);
        reports.push(report);
    }

    let metrics_path = out.join("metrics.json");
    write_metrics(&metrics_path, &reports).context("eval stage failed (writing metrics)")?;
    Ok(PipelineOutput {
        dataset,
        preprocess: prep,
        trained,
        reports,
        metrics_path,
        log,
    })
}

/// Render a run summary as the one-line report the CLI prints.
pub fn format_run_summary(s: &floodlab::sim::RunSummary) -> String {
    format!(
        "{} seed {}: sent {} delivered {} dropped {} | ping delivery {} mean rtt {}",
        s.scenario,
        s.seed,
        s.packets_sent,
        s.packets_delivered,
        s.packets_dropped,
        s.ping_delivery_ratio
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        s.mean_ping_rtt_s
            .map(|r| format!("{:.1} ms", r * 1000.0))
            .unwrap_or_else(|| "n/a".into()),
    )
}
