use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simpeval_core::dataset::{load_dataset, to_training_examples, Dataset};
use simpeval_core::lens::{load_model, save_model, train_with_history, EncoderConfig, LossConfig, TrainConfig};
use simpeval_core::meta_eval::{
    aggregate, bootstrap_ci, ingest_metric_scores, kendall_tau_like, kendall_with_ci, krippendorff_alpha, pearson,
    sentence_groups, write_metric_scores, zscore_normalize, BootstrapConfig, ScoreLine,
};
use simpeval_core::metrics::{score_strings, Metric};
use simpeval_core::probe::{probe_dataset, ProbeKind};
use simpeval_service::{ServiceError, Store};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "simpeval", version, about = "Text simplification evaluation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every instance; prints {"id","score"} lines
    Score(ScoreArgs),
    /// Train a LENS model
    Train(TrainArgs),
    /// Correlate metric scores with human ratings
    MetaEval(MetaEvalArgs),
    /// Generate probe-system outputs
    Probe(ProbeArgs),
    /// Run the annotation service
    Serve(ServeArgs),
    /// Export a project's annotations as a dataset
    Export(ProjectArgs),
    /// Interval Krippendorff's alpha on z-scored ratings
    Agreement(AgreementArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Sari,
    Bleu,
    Fkgl,
    Lens,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Copy,
    Drop,
    Scramble,
    Split,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// Trained model, required for --metric lens
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON lines {"id","references":[..]} replacing dataset references
    #[arg(long)]
    refs: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of top-scoring references in the loss, or "all"
    #[arg(long, default_value = "3")]
    k: LossConfig,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Scorer learning rate
    #[arg(long, default_value_t = 1e-5)]
    lr: f64,
    #[arg(long, default_value_t = 3e-5)]
    encoder_lr: f64,
    #[arg(long, default_value_t = 16)]
    dim: usize,
}

#[derive(Args)]
struct MetaEvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Metric score file, JSON lines {"id","score"}
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    /// Bootstrap resamples; 0 disables the interval
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Pearson r between z-scored mean ratings and metric scores instead of tau
    #[arg(long)]
    pearson: bool,
    /// Print an aligned table instead of JSON
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "SIMPEVAL_STORE")]
    store: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, env = "SIMPEVAL_STORE")]
    store: PathBuf,
    #[arg(long)]
    project: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AgreementArgs {
    /// Dataset with ratings; alternative to --store/--project
    #[arg(long, conflicts_with_all = ["store", "project"])]
    data: Option<PathBuf>,
    #[arg(long, env = "SIMPEVAL_STORE")]
    store: Option<PathBuf>,
    #[arg(long)]
    project: Option<String>,
}

enum Failure {
    Invalid(String),
    Io(String),
}

impl From<simpeval_core::Error> for Failure {
    fn from(e: simpeval_core::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Core(e) => e.into(),
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Score(a) => score(a),
        Command::Train(a) => train(a),
        Command::MetaEval(a) => meta_eval(a),
        Command::Probe(a) => probe(a),
        Command::Serve(a) => serve(a),
        Command::Export(a) => export(a),
        Command::Agreement(a) => agreement(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_refs(path: &Path) -> Result<BTreeMap<String, Vec<String>>, Failure> {
    let mut refs = BTreeMap::new();
    for (i, line) in std::fs::read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Failure::Invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let (Some(id), Some(list)) = (v["id"].as_str(), v["references"].as_array()) else {
            return Err(Failure::Invalid(format!("{}:{}: expected {{\"id\",\"references\"}}", path.display(), i + 1)));
        };
        let list = list.iter().filter_map(|r| r.as_str().map(str::to_string)).collect();
        refs.insert(id.to_string(), list);
    }
    Ok(refs)
}

fn score(a: ScoreArgs) -> Result<(), Failure> {
    let mut data = load_dataset(&a.data)?;
    if let Some(path) = &a.refs {
        let mut refs = read_refs(path)?;
        for inst in &mut data.instances {
            if let Some(r) = refs.remove(&inst.id) {
                inst.references = r;
            }
        }
        if !refs.is_empty() {
            return Err(simpeval_core::Error::UnknownIds(refs.into_keys().collect()).into());
        }
    }
    let lens = match (a.metric, &a.model) {
        (MetricArg::Lens, Some(path)) => Some(load_model(path)?),
        (MetricArg::Lens, None) => return Err(Failure::Invalid("--metric lens needs --model".into())),
        _ => None,
    };
    let mut lines = Vec::with_capacity(data.len());
    for inst in &data.instances {
        let value = match (a.metric, &lens) {
            (MetricArg::Lens, Some(model)) => model.score(inst)?.z_max,
            (MetricArg::Sari, _) => score_strings(Metric::Sari, &inst.original, &inst.output, &inst.references)?,
            (MetricArg::Bleu, _) => score_strings(Metric::Bleu, &inst.original, &inst.output, &inst.references)?,
            (MetricArg::Fkgl, _) => score_strings(Metric::Fkgl, &inst.original, &inst.output, &inst.references)?,
            (MetricArg::Lens, None) => unreachable!("checked above"),
        };
        lines.push(ScoreLine { id: inst.id.clone(), score: value });
    }
    emit(a.out.as_deref(), &write_metric_scores(&lines))
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let train_set = to_training_examples(&load_dataset(&a.data)?)?;
    let val_set = to_training_examples(&load_dataset(&a.val)?)?;
    let config = TrainConfig {
        encoder: EncoderConfig::feature_hash(a.dim),
        k: a.k,
        epochs: a.epochs,
        batch_size: a.batch,
        scorer_lr: a.lr,
        encoder_lr: a.encoder_lr,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let outcome = train_with_history(&train_set, &val_set, &config)?;
    save_model(&outcome.model, &a.out)?;
    for rec in &outcome.history {
        eprintln!("epoch {:>3}  train {:.6}  val {:.6}", rec.epoch, rec.train_loss, rec.val_loss);
    }
    Ok(())
}

fn meta_eval(a: MetaEvalArgs) -> Result<(), Failure> {
    let data = load_dataset(&a.data)?;
    let known: HashSet<&str> = data.instances.iter().map(|i| i.id.as_str()).collect();
    let scores = ingest_metric_scores(&a.scores, Some(&known))?;
    let config = BootstrapConfig { resamples: a.bootstrap, level: 0.95, seed: a.seed };

    if a.pearson {
        let human = aggregate(&zscore_normalize(&data.rating_table())?)?;
        let points: Vec<(f64, f64)> =
            human.iter().filter_map(|(id, &h)| scores.get(id).map(|&m| (h, m))).collect();
        let r = pearson_of(&points.iter().collect::<Vec<_>>())?;
        let ci = if a.bootstrap > 0 { Some(bootstrap_ci(&points, &config, pearson_of)?) } else { None };
        let report = serde_json::json!({ "pearson": r, "n": points.len(), "ci": ci });
        return emit(None, &format!("{report}\n"));
    }

    let groups = sentence_groups(&data, &scores)?;
    let report =
        if a.bootstrap > 0 { kendall_with_ci(&groups, a.threshold, &config)? } else { kendall_tau_like(&groups, a.threshold)? };
    if a.table {
        emit(None, &report.to_table())
    } else {
        emit(None, &format!("{}\n", serde_json::to_string(&report).expect("report serializes")))
    }
}

fn pearson_of(points: &[&(f64, f64)]) -> simpeval_core::Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.0, p.1)).unzip();
    pearson(&x, &y)
}

fn probe(a: ProbeArgs) -> Result<(), Failure> {
    let kind = match a.kind {
        KindArg::Copy => ProbeKind::Copy,
        KindArg::Drop => ProbeKind::Drop,
        KindArg::Scramble => ProbeKind::Scramble,
        KindArg::Split => ProbeKind::Split,
    };
    let probes = probe_dataset(&load_dataset(&a.data)?, kind, a.seed)?;
    emit(a.out.as_deref(), &probes.to_jsonl())
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let store = Arc::new(Store::open(&a.store)?);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on 0.0.0.0:{} (store {})", a.port, a.store.display());
    runtime.block_on(simpeval_service::serve(store, a.port))?;
    Ok(())
}

fn export(a: ProjectArgs) -> Result<(), Failure> {
    let store = Store::open(&a.store)?;
    let dataset: Dataset = store.export(&a.project)?;
    emit(a.out.as_deref(), &dataset.to_jsonl())
}

fn agreement(a: AgreementArgs) -> Result<(), Failure> {
    let report = match (a.data, a.store, a.project) {
        (Some(path), _, _) => krippendorff_alpha(&zscore_normalize(&load_dataset(path)?.rating_table())?)?,
        (None, Some(store), Some(project)) => Store::open(store)?.agreement(&project)?,
        _ => return Err(Failure::Invalid("agreement needs --data, or --store and --project".into())),
    };
    emit(None, &format!("{}\n", serde_json::to_string(&report).expect("report serializes")))
}
