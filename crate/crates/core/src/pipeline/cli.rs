//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;

use super::config::ConfigFile;
use super::dataset::{export_augmented, load_dataset, preprocess, Dataset, Format};
use super::metrics::evaluate_macro_f1;
use super::remote::{RemoteConfig, RemoteScorer};
use super::run::{augment_dataset, run_training, Augmentation, RunConfig, ScorerKind};
use super::synthetic::{SyntheticConfig, SyntheticTask};
use crate::augment::{EdaAugmenter, EdaConfig, Stopwords, SynonymLexicon};
use crate::classifier::{pretrain, FeaturizerConfig, Model, Scorer, TrainConfig};
use crate::error::{Error, Result};
use crate::infotheory::Scheme;
use crate::seas::{score_candidates, SeasConfig};
use crate::text::{Sample, TokenizedText};

pub const SEED_ENV: &str = "EPIDA_SEED";

#[derive(Parser, Debug)]
#[command(name = "epida", version, about = "Classifier-guided text augmentation")]
struct Cli {
    /// Flat key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate, score and select augmentations for a labelled dataset.
    Augment(AugmentArgs),
    /// Pre-train, augment online and evaluate, once per seed.
    Train(TrainArgs),
    /// Macro-F1 of predicted labels against gold labels (one label per line).
    Eval(EvalArgs),
    /// Score one candidate against its original.
    Score(ScoreArgs),
    /// Write the synthetic keyword task to a directory.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct SelectionArgs {
    /// Outputs per input sample.
    #[arg(long)]
    m: Option<usize>,
    /// Amplification factor; the candidate pool holds k·m texts.
    #[arg(long)]
    k: Option<usize>,
    /// add, mul, weighted, weighted(α), rem-only or cem-only.
    #[arg(long)]
    scheme: Option<String>,
    /// Weight of the diversity score under the weighted scheme.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fraction of tokens changed by each edit operation.
    #[arg(long)]
    alpha_eda: Option<f64>,
    /// Per-token deletion probability.
    #[arg(long)]
    p_delete: Option<f64>,
    /// Synonym lexicon, one group per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Hashed feature space size (power of two).
    #[arg(long)]
    dim: Option<usize>,
    /// Skip text cleaning; split on whitespace only.
    #[arg(long)]
    raw: bool,
}

const SELECTION_KEYS: &[&str] =
    &["m", "k", "scheme", "alpha", "alpha_eda", "p_delete", "lexicon", "stopwords", "dim", "raw"];

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// tsv or jsonl; inferred from the input extension by default.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// builtin or remote.
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    scorer_url: Option<String>,
    /// Classifier checkpoint for the builtin scorer; trained on the input otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Where to write the classifier trained on the input.
    #[arg(long)]
    save_model: Option<PathBuf>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[command(flatten)]
    selection: SelectionArgs,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    oa_epochs: Option<usize>,
    #[arg(long)]
    data_fraction: Option<f64>,
    /// Comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    /// seas, random or off.
    #[arg(long)]
    augmentation: Option<String>,
    /// Augment once after pre-training instead of every epoch.
    #[arg(long)]
    one_time: bool,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    selection: SelectionArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    original: Option<String>,
    #[arg(long)]
    candidate: Option<String>,
    /// Source label; defaults to the classifier's prediction for the original.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Labelled data to train the scorer on when no checkpoint is given.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    raw: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{e}");
            eprintln!("{}", Cli::command().render_help());
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_help());
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Augment(a) => augment(a, &file),
        Command::Train(a) => train(a, &file),
        Command::Eval(a) => eval(a, &file),
        Command::Score(a) => score(a, &file),
        Command::Synth(a) => synth(a, &file),
    }
}

/// Flag value, else config value, else `None`.
fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parsed(key),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| Failure::Usage(format!("missing required --{flag}")))
}

fn flag_or_file(flag: bool, file: &ConfigFile, key: &str) -> Result<bool> {
    Ok(flag || file.parsed::<bool>(key)?.unwrap_or(false))
}

/// Flag, then config file, then the environment, then 0.
fn resolve_seed(flag: Option<u64>, file: &ConfigFile) -> Result<u64> {
    if let Some(s) = pick(flag, file, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn resolve_scheme(scheme: Option<String>, alpha: Option<f64>, file: &ConfigFile) -> Result<Scheme> {
    let scheme: Scheme = match pick(scheme, file, "scheme")? {
        Some(s) => s.parse::<Scheme>()?,
        None => Scheme::default(),
    };
    let scheme = match (scheme, pick(alpha, file, "alpha")?) {
        (Scheme::Weighted(_), Some(a)) => Scheme::Weighted(a),
        (_, None) => scheme,
        (other, Some(_)) => {
            return Err(Error::Config(format!("--alpha applies to the weighted scheme, not '{other}'")));
        }
    };
    scheme.validate()?;
    Ok(scheme)
}

fn resolve_format(flag: Option<String>, file: &ConfigFile, path: &Path) -> Result<Format> {
    match pick(flag, file, "format")? {
        Some(f) => f.parse(),
        None => Format::from_path(path),
    }
}

struct Selection {
    seas: SeasConfig,
    eda: EdaConfig,
    lexicon: SynonymLexicon,
    stopwords: Stopwords,
    featurizer: FeaturizerConfig,
    raw: bool,
}

fn resolve_selection(a: SelectionArgs, file: &ConfigFile) -> Result<Selection> {
    let defaults = SeasConfig::default();
    let seas = SeasConfig {
        m: pick(a.m, file, "m")?.unwrap_or(defaults.m),
        k: pick(a.k, file, "k")?.unwrap_or(defaults.k),
        scheme: resolve_scheme(a.scheme, a.alpha, file)?,
        ..defaults
    };
    seas.validate()?;
    let eda_defaults = EdaConfig::default();
    let eda = EdaConfig {
        alpha_eda: pick(a.alpha_eda, file, "alpha_eda")?.unwrap_or(eda_defaults.alpha_eda),
        p_delete: pick(a.p_delete, file, "p_delete")?.unwrap_or(eda_defaults.p_delete),
        ..eda_defaults
    };
    eda.validate()?;
    let lexicon = match pick(a.lexicon, file, "lexicon")? {
        Some(p) => SynonymLexicon::load(p)?,
        None => SynonymLexicon::builtin(),
    };
    let stopwords = match pick(a.stopwords, file, "stopwords")? {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::builtin(),
    };
    let featurizer = FeaturizerConfig {
        dim: pick(a.dim, file, "dim")?.unwrap_or(FeaturizerConfig::default().dim),
        ..FeaturizerConfig::default()
    };
    featurizer.validate()?;
    Ok(Selection {
        seas,
        eda,
        lexicon,
        stopwords,
        featurizer,
        raw: flag_or_file(a.raw, file, "raw")?,
    })
}

fn read_dataset(path: &Path, format: Format, raw: bool, stopwords: &Stopwords) -> Result<Dataset> {
    let ds = load_dataset(path, format)?;
    Ok(if raw { ds } else { ds.preprocessed(stopwords) })
}

fn augment(a: AugmentArgs, file: &ConfigFile) -> CliResult<()> {
    file.check_keys(
        &[
            &["input", "output", "format", "seed", "scorer", "scorer_url", "model", "save_model", "pretrain_epochs"],
            SELECTION_KEYS,
        ]
        .concat(),
    )?;
    let input: PathBuf = required(pick(a.input, file, "input")?, "input")?;
    let output: PathBuf = required(pick(a.output, file, "output")?, "output")?;
    let format = resolve_format(a.format, file, &input)?;
    let seed = resolve_seed(a.seed, file)?;
    let sel = resolve_selection(a.selection, file)?;
    let data = read_dataset(&input, format, sel.raw, &sel.stopwords)?;

    let scorer_kind = match pick(a.scorer, file, "scorer")?.as_deref() {
        None | Some("builtin") => ScorerKind::Builtin,
        Some("remote") => ScorerKind::Remote(required(pick(a.scorer_url, file, "scorer_url")?, "scorer-url")?),
        Some(other) => return Err(Failure::Usage(format!("unknown scorer '{other}' (builtin or remote)"))),
    };
    let scorer: Box<dyn Scorer> = match scorer_kind {
        ScorerKind::Remote(url) => Box::new(RemoteScorer::new(RemoteConfig::new(url), data.num_classes())?),
        ScorerKind::Builtin => {
            let model = match pick(a.model, file, "model")? {
                Some(path) => {
                    let m = Model::load(&path)?;
                    if m.labels() != data.labels.as_slice() {
                        return Err(Error::Config(format!(
                            "checkpoint labels {:?} do not match dataset labels {:?}",
                            m.labels(),
                            data.labels
                        ))
                        .into());
                    }
                    m
                }
                None => {
                    let cfg = TrainConfig {
                        epochs: pick(a.pretrain_epochs, file, "pretrain_epochs")?.unwrap_or(10),
                        seed,
                        ..TrainConfig::default()
                    };
                    pretrain(Model::new(sel.featurizer.clone(), data.labels.clone())?, &data.samples, &cfg)?
                }
            };
            if let Some(path) = pick(a.save_model, file, "save_model")? {
                model.save(path)?;
            }
            Box::new(model)
        }
    };

    let augmenter = EdaAugmenter::new(sel.eda, sel.lexicon, sel.stopwords)?;
    let start = Instant::now();
    let groups = augment_dataset(scorer.as_ref(), &data.samples, &augmenter, &sel.seas, Augmentation::Seas, seed, 0)?;
    let seconds = start.elapsed().as_secs_f64();
    let selected: Vec<_> = groups.into_iter().flatten().collect();
    export_augmented(&selected, &data.labels, &output)?;
    let report = json!({
        "inputs": data.len(),
        "selected": selected.len(),
        "seconds": seconds,
        "samples_per_second": selected.len() as f64 / seconds.max(1e-9),
        "output": output.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("plain JSON"));
    Ok(())
}

fn parse_seeds(list: &str) -> Result<Vec<u64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid seed '{s}' in seed list")))
        })
        .collect()
}

fn train(a: TrainArgs, file: &ConfigFile) -> CliResult<()> {
    file.check_keys(
        &[
            &[
                "train",
                "test",
                "format",
                "pretrain_epochs",
                "oa_epochs",
                "data_fraction",
                "seeds",
                "seed",
                "augmentation",
                "one_time",
                "learning_rate",
                "weight_decay",
                "batch_size",
                "report",
            ],
            SELECTION_KEYS,
        ]
        .concat(),
    )?;
    let train_path: PathBuf = required(pick(a.train, file, "train")?, "train")?;
    let test_path: PathBuf = required(pick(a.test, file, "test")?, "test")?;
    let sel = resolve_selection(a.selection, file)?;
    let format = resolve_format(a.format.clone(), file, &train_path)?;
    let train_set = read_dataset(&train_path, format, sel.raw, &sel.stopwords)?;
    let test_format = resolve_format(a.format, file, &test_path)?;
    let test_set = read_dataset(&test_path, test_format, sel.raw, &sel.stopwords)?.align_to(&train_set.labels)?;

    let seeds = match pick(a.seeds, file, "seeds")? {
        Some(list) => parse_seeds(&list)?,
        None => match (file.parsed::<u64>("seed")?, std::env::var(SEED_ENV)) {
            (Some(s), _) => vec![s],
            (None, Ok(_)) => vec![resolve_seed(None, file)?],
            (None, Err(_)) => RunConfig::default().seeds,
        },
    };
    let augmentation = match pick(a.augmentation, file, "augmentation")?.as_deref() {
        None | Some("seas") => Augmentation::Seas,
        Some("random") => Augmentation::Random,
        Some("off") => Augmentation::Off,
        Some(other) => return Err(Failure::Usage(format!("unknown augmentation '{other}' (seas, random or off)"))),
    };
    let defaults = RunConfig::default();
    let cfg = RunConfig {
        seas: sel.seas,
        train: TrainConfig {
            learning_rate: pick(a.learning_rate, file, "learning_rate")?.unwrap_or(defaults.train.learning_rate),
            weight_decay: pick(a.weight_decay, file, "weight_decay")?.unwrap_or(defaults.train.weight_decay),
            batch_size: pick(a.batch_size, file, "batch_size")?.unwrap_or(defaults.train.batch_size),
            ..defaults.train
        },
        featurizer: sel.featurizer,
        pretrain_epochs: pick(a.pretrain_epochs, file, "pretrain_epochs")?.unwrap_or(defaults.pretrain_epochs),
        oa_epochs: pick(a.oa_epochs, file, "oa_epochs")?.unwrap_or(defaults.oa_epochs),
        online: !flag_or_file(a.one_time, file, "one_time")?,
        augmentation,
        seeds,
        data_fraction: pick(a.data_fraction, file, "data_fraction")?.unwrap_or(1.0),
        scorer: ScorerKind::Builtin,
    };
    let augmenter = EdaAugmenter::new(sel.eda, sel.lexicon, sel.stopwords)?;
    let report = run_training(&train_set, &test_set, &cfg, &augmenter, None)?;
    let text = serde_json::to_string_pretty(&report).expect("plain JSON") + "\n";
    match pick(a.report, file, "report")? {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn eval(a: EvalArgs, file: &ConfigFile) -> CliResult<()> {
    file.check_keys(&["pred", "gold"])?;
    let pred_path: PathBuf = required(pick(a.pred, file, "pred")?, "pred")?;
    let gold_path: PathBuf = required(pick(a.gold, file, "gold")?, "gold")?;
    let (pred, gold) = (read_labels(&pred_path)?, read_labels(&gold_path)?);
    let mut vocab: Vec<String> = Vec::new();
    for l in gold.iter().chain(&pred) {
        if !vocab.contains(l) {
            vocab.push(l.clone());
        }
    }
    let index = |l: &String| vocab.iter().position(|v| v == l).expect("interned");
    let p: Vec<usize> = pred.iter().map(index).collect();
    let g: Vec<usize> = gold.iter().map(index).collect();
    let report = evaluate_macro_f1(&p, &g, vocab.len().max(2))?;
    let out = json!({
        "labels": vocab,
        "macro_f1": report.macro_f1,
        "per_class_f1": report.per_class_f1,
        "positive_f1": report.positive_f1,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON"));
    Ok(())
}

fn score(a: ScoreArgs, file: &ConfigFile) -> CliResult<()> {
    file.check_keys(&[
        "original",
        "candidate",
        "label",
        "model",
        "train",
        "format",
        "pretrain_epochs",
        "seed",
        "scheme",
        "alpha",
        "dim",
        "raw",
    ])?;
    let original: String = required(pick(a.original, file, "original")?, "original")?;
    let candidate: String = required(pick(a.candidate, file, "candidate")?, "candidate")?;
    let raw = flag_or_file(a.raw, file, "raw")?;
    let stopwords = Stopwords::builtin();
    let prep = |s: &str| -> Result<TokenizedText> {
        if raw {
            TokenizedText::parse(s)
        } else {
            Ok(preprocess(s, &stopwords))
        }
    };
    let (original, candidate) = (prep(&original)?, prep(&candidate)?);
    let model = match (pick(a.model, file, "model")?, pick(a.train, file, "train")?) {
        (Some(path), _) => Model::load(path)?,
        (None, Some(path)) => {
            let format = resolve_format(a.format, file, &path)?;
            let data = read_dataset(&path, format, raw, &stopwords)?;
            let featurizer = FeaturizerConfig {
                dim: pick(a.dim, file, "dim")?.unwrap_or(FeaturizerConfig::default().dim),
                ..FeaturizerConfig::default()
            };
            let cfg = TrainConfig {
                epochs: pick(a.pretrain_epochs, file, "pretrain_epochs")?.unwrap_or(10),
                seed: resolve_seed(a.seed, file)?,
                ..TrainConfig::default()
            };
            pretrain(Model::new(featurizer, data.labels.clone())?, &data.samples, &cfg)?
        }
        (None, None) => return Err(Failure::Usage("score needs --model or --train".into())),
    };
    let label = match pick(a.label, file, "label")? {
        Some(name) => model
            .labels()
            .iter()
            .position(|l| *l == name)
            .ok_or_else(|| Error::Config(format!("label '{name}' is not one of {:?}", model.labels())))?,
        None => model.predict(&original)?,
    };
    let seas = SeasConfig {
        scheme: resolve_scheme(a.scheme, a.alpha, file)?,
        ..SeasConfig::default()
    };
    let source = Sample::new(original.clone(), label);
    let scored = score_candidates(&model, &source, 0, vec![original, candidate], &seas)?;
    let rows: Vec<_> = scored
        .iter()
        .zip(["original", "candidate"])
        .map(|(c, role)| {
            json!({
                "role": role,
                "text": c.text.canonical(),
                "s_div_raw": c.s_div_raw,
                "s_qua_raw": c.s_qua_raw,
                "s_div": c.s_div,
                "s_qua": c.s_qua,
                "s_tot": c.s_tot,
            })
        })
        .collect();
    let out = json!({ "label": model.labels()[label], "scheme": seas.scheme.to_string(), "pool": rows });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON"));
    Ok(())
}

fn write_tsv(path: &Path, data: &Dataset) -> Result<()> {
    let text: String = data
        .samples
        .iter()
        .map(|s| format!("{}\t{}\n", data.labels[s.label], s.text.canonical()))
        .collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn synth(a: SynthArgs, file: &ConfigFile) -> CliResult<()> {
    file.check_keys(&["out_dir", "train_size", "test_size", "seed"])?;
    let dir: PathBuf = required(pick(a.out_dir, file, "out_dir")?, "out-dir")?;
    let seed = resolve_seed(a.seed, file)?;
    let task = SyntheticTask::new(SyntheticConfig::default())?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let train = task.train_set(pick(a.train_size, file, "train_size")?.unwrap_or(100), seed);
    let test = task.test_set(pick(a.test_size, file, "test_size")?.unwrap_or(1000), seed.wrapping_add(1));
    write_tsv(&dir.join("train.tsv"), &train)?;
    write_tsv(&dir.join("test.tsv"), &test)?;
    let lex = dir.join("lexicon.txt");
    std::fs::write(&lex, task.lexicon_text()).map_err(|e| Error::io(&lex, e))?;
    println!("{}", dir.display());
    Ok(())
}
