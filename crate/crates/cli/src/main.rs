//! `mner` — train, run, and evaluate a Bi-LSTM-CRF named-entity tagger with
//! word, character, and morphological-analysis embeddings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use mner_cli::files::{self, Tee};
use mner_cli::training::{self, TrainConfig};
use mner_core::corpus::{build_vocabs, CorpusOptions, IobPolicy, Sentence};
use mner_core::eval::{f1_score, mcnemar, McNemarUnit};
use mner_core::gradcheck;
use mner_core::morpho::{MorphAnalysis, Scheme};
use mner_core::tagger::{TaggerConfig, TaggerModel};

#[derive(Parser)]
#[command(
    name = "mner",
    version,
    about = "Neural named-entity tagger with morphological embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a labeled corpus
    Train(Box<TrainArgs>),
    /// Tag a corpus with a trained model (appends a label column)
    Tag(TagArgs),
    /// Entity-level precision/recall/F1 of predictions against gold
    Eval(EvalArgs),
    /// McNemar's significance test between two prediction files
    Compare(CompareArgs),
    /// Verify backpropagation against finite differences
    Gradcheck(GradcheckArgs),
    /// Show how an analysis string projects under each scheme
    InspectMorpho(InspectMorphoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn as_bool(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Clone, Copy, Debug)]
struct SchemeArg(Option<Scheme>);

fn parse_scheme_arg(s: &str) -> Result<SchemeArg, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(SchemeArg(None));
    }
    s.parse::<Scheme>()
        .map(|v| SchemeArg(Some(v)))
        .map_err(|_| format!("`{s}` is not one of: wr, wor, wr_adb, char, none"))
}

#[derive(Args)]
struct TrainArgs {
    /// Training corpus: 3 columns `surface analysis label` [required]
    #[arg(long)]
    train: Option<PathBuf>,
    /// Development corpus for model selection
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Pretrained word vectors (text format, `<count> <dim>` header)
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output model file [default: model.mner]
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Training log file [default: <model-out>.log]
    #[arg(long)]
    log: Option<PathBuf>,
    /// Directory for per-epoch checkpoints (latest.ckpt, best.ckpt)
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Morphological scheme: wr, wor, wr_adb, char, none [default: none]
    #[arg(long, value_parser = parse_scheme_arg)]
    scheme: Option<SchemeArg>,
    /// Character embeddings: on, off [default: off]
    #[arg(long)]
    char_embeddings: Option<OnOff>,
    /// Learning rate [default: 0.01]
    #[arg(long)]
    lr: Option<f64>,
    /// Input dropout probability [default: 0.5]
    #[arg(long)]
    dropout: Option<f64>,
    /// Gradient clipping threshold, global L2 norm [default: 5]
    #[arg(long)]
    clip_norm: Option<f64>,
    /// Number of epochs [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// Stop after this many epochs without dev improvement (needs --dev)
    #[arg(long)]
    patience: Option<usize>,
    /// Random seed for initialization, shuffling, dropout [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Word embedding size d_w [default: 100]
    #[arg(long)]
    word_dim: Option<usize>,
    /// Character Bi-LSTM size d_c per direction [default: 100]
    #[arg(long)]
    char_dim: Option<usize>,
    /// Morphological Bi-LSTM size d_m per direction [default: 100]
    #[arg(long)]
    morph_dim: Option<usize>,
    /// Sentence Bi-LSTM size p per direction [default: 100]
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Fine-tune pretrained word vectors: on, off [default: on]
    #[arg(long)]
    fine_tune_words: Option<OnOff>,
    /// Forbid impossible IOB transitions when decoding: on, off [default: off]
    #[arg(long)]
    constrain_decode: Option<OnOff>,
    /// Treat IOB violations as errors instead of normalizing to B-
    #[arg(long)]
    strict_iob: bool,
    /// TOML file supplying any of the above (explicit flags win)
    #[arg(long)]
    config: Option<PathBuf>,
}

/// TOML mirror of the train flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    train: Option<PathBuf>,
    dev: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    model_out: Option<PathBuf>,
    log: Option<PathBuf>,
    checkpoint_dir: Option<PathBuf>,
    scheme: Option<String>,
    char_embeddings: Option<String>,
    lr: Option<f64>,
    dropout: Option<f64>,
    clip_norm: Option<f64>,
    epochs: Option<usize>,
    patience: Option<usize>,
    seed: Option<u64>,
    word_dim: Option<usize>,
    char_dim: Option<usize>,
    morph_dim: Option<usize>,
    hidden_dim: Option<usize>,
    fine_tune_words: Option<String>,
    constrain_decode: Option<String>,
    strict_iob: Option<bool>,
}

fn parse_on_off(field: &str, value: &str) -> anyhow::Result<OnOff> {
    match value.to_ascii_lowercase().as_str() {
        "on" => Ok(OnOff::On),
        "off" => Ok(OnOff::Off),
        other => bail!("config field `{field}` must be `on` or `off`, got `{other}`"),
    }
}

#[derive(Args)]
struct TagArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Corpus to tag (2 or 3 columns; labels, when present, are echoed)
    #[arg(long)]
    input: PathBuf,
    /// Output file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Gold corpus (3 columns)
    #[arg(long)]
    gold: PathBuf,
    /// Predictions (3 or 4 columns; the last column is the label)
    #[arg(long)]
    pred: PathBuf,
    /// Emit line-delimited records instead of the table
    #[arg(long)]
    records: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Gold corpus (3 columns)
    #[arg(long)]
    gold: PathBuf,
    /// First system's predictions
    #[arg(long)]
    pred_a: PathBuf,
    /// Second system's predictions
    #[arg(long)]
    pred_b: PathBuf,
    /// Correctness unit [default: token]
    #[arg(long, value_enum, default_value_t = UnitArg::Token)]
    unit: UnitArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Token,
    Entity,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Seed for the internally built random model [default: 1]
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Finite-difference step [default: 1e-5]
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
}

#[derive(Args)]
struct InspectMorphoArgs {
    /// Morphological analysis string, e.g. `ev+Noun+A3pl+P3sg+Loc`
    #[arg(long)]
    analysis: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(*args),
        Command::Tag(args) => cmd_tag(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::InspectMorpho(args) => cmd_inspect_morpho(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<ExitCode> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config `{}`", path.display()))?;
            toml::from_str(&text).with_context(|| format!("in config `{}`", path.display()))?
        }
        None => FileConfig::default(),
    };

    let scheme = match args.scheme {
        Some(s) => s.0,
        None => match &file.scheme {
            Some(s) => parse_scheme_arg(s).map_err(|e| anyhow::anyhow!(e))?.0,
            None => None,
        },
    };
    let resolve_on_off = |flag: Option<OnOff>, file_val: &Option<String>, name: &str, default: OnOff| {
        match flag {
            Some(v) => Ok(v),
            None => match file_val {
                Some(s) => parse_on_off(name, s),
                None => Ok(default),
            },
        }
    };
    let use_char = resolve_on_off(args.char_embeddings, &file.char_embeddings, "char_embeddings", OnOff::Off)?.as_bool();
    let fine_tune = resolve_on_off(args.fine_tune_words, &file.fine_tune_words, "fine_tune_words", OnOff::On)?.as_bool();
    let constrain = resolve_on_off(args.constrain_decode, &file.constrain_decode, "constrain_decode", OnOff::Off)?.as_bool();

    let train_path = args
        .train
        .or(file.train)
        .context("missing --train <corpus>")?;
    let dev_path = args.dev.or(file.dev);
    let embeddings_path = args.embeddings.or(file.embeddings);
    let model_out = args
        .model_out
        .or(file.model_out)
        .unwrap_or_else(|| PathBuf::from("model.mner"));
    let log_path = args.log.or(file.log).unwrap_or_else(|| {
        let mut name = model_out.file_name().unwrap_or_default().to_os_string();
        name.push(".log");
        model_out.with_file_name(name)
    });
    let strict_iob = args.strict_iob || file.strict_iob.unwrap_or(false);

    let tagger_config = TaggerConfig {
        word_dim: args.word_dim.or(file.word_dim).unwrap_or(100),
        char_dim: args.char_dim.or(file.char_dim).unwrap_or(100),
        morph_dim: args.morph_dim.or(file.morph_dim).unwrap_or(100),
        hidden_dim: args.hidden_dim.or(file.hidden_dim).unwrap_or(100),
        use_char,
        morph_scheme: scheme,
        dropout_rate: args.dropout.or(file.dropout).unwrap_or(0.5),
        seed: args.seed.or(file.seed).unwrap_or(1),
        fine_tune_words: fine_tune,
        constrain_decode: constrain,
    };
    let train_config = TrainConfig {
        lr: args.lr.or(file.lr).unwrap_or(0.01),
        clip_norm: args.clip_norm.or(file.clip_norm).unwrap_or(5.0),
        epochs: args.epochs.or(file.epochs).unwrap_or(100),
        seed: tagger_config.seed,
        patience: args.patience.or(file.patience),
        checkpoint_dir: args.checkpoint_dir.or(file.checkpoint_dir),
    };
    anyhow::ensure!(train_config.lr > 0.0, "--lr must be positive");
    anyhow::ensure!(train_config.epochs >= 1, "--epochs must be at least 1");
    anyhow::ensure!(
        (0.0..1.0).contains(&tagger_config.dropout_rate),
        "--dropout must be in [0, 1)"
    );

    let iob = if strict_iob { IobPolicy::Strict } else { IobPolicy::Normalize };
    let opts = CorpusOptions { iob, ..CorpusOptions::default() };
    let train_corpus = files::load_corpus(&train_path, opts)?;
    anyhow::ensure!(
        !train_corpus.sentences.is_empty(),
        "training corpus `{}` has no sentences",
        train_path.display()
    );
    if train_corpus.normalized_labels > 0 {
        eprintln!(
            "note: normalized {} IOB label(s) in `{}`",
            train_corpus.normalized_labels,
            train_path.display()
        );
    }
    let dev_corpus = match &dev_path {
        Some(path) => {
            let parsed = files::load_corpus(path, opts)?;
            anyhow::ensure!(
                !parsed.sentences.is_empty(),
                "dev corpus `{}` has no sentences",
                path.display()
            );
            Some(parsed)
        }
        None => None,
    };

    let pretrained = match &embeddings_path {
        Some(path) => {
            let table = files::load_embeddings(path, tagger_config.word_dim)?;
            if table.duplicates > 0 {
                eprintln!(
                    "note: {} duplicate word(s) in `{}` (last occurrence wins)",
                    table.duplicates,
                    path.display()
                );
            }
            Some(table)
        }
        None => None,
    };

    let vocabs = build_vocabs(&train_corpus.sentences, scheme);
    let mut model = TaggerModel::new(tagger_config, vocabs, pretrained.as_ref());
    println!(
        "training: {} sentences, {} labels, representation size {}",
        train_corpus.sentences.len(),
        model.num_labels(),
        model.config.input_dim()
    );

    let log_file = File::create(&log_path)
        .with_context(|| format!("cannot create log `{}`", log_path.display()))?;
    let mut log = Tee(BufWriter::new(log_file), std::io::stdout());
    let report = training::train(
        &mut model,
        &train_corpus.sentences,
        dev_corpus.as_ref().map(|c| c.sentences.as_slice()),
        &train_config,
        Some(&mut log),
    )?;
    log.flush()?;

    files::save_model(&model_out, &model)?;
    println!("model written to {}", model_out.display());
    if let Some(best) = report.best_epoch {
        println!(
            "best dev F1 {:.2} at epoch {}",
            report.dev_f1[best] * 100.0,
            best + 1
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_tag(args: TagArgs) -> anyhow::Result<ExitCode> {
    let (model, _) = files::load_model(&args.model)?;
    let corpus = files::load_corpus(&args.input, CorpusOptions::tagging_input())?;
    let predictions: Vec<Vec<String>> =
        corpus.sentences.iter().map(|s| model.tag(s)).collect();
    let rendered =
        mner_core::corpus::render_corpus(&corpus.sentences, corpus.has_labels, Some(&predictions));
    match &args.output {
        Some(path) => files::write_atomic(path, rendered.as_bytes())
            .with_context(|| format!("cannot write `{}`", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Gold and prediction files must describe the same token stream.
fn check_alignment(gold: &[Sentence], pred: &[Sentence]) -> anyhow::Result<()> {
    let upto = gold.len().min(pred.len());
    for i in 0..upto {
        let (g, p) = (&gold[i], &pred[i]);
        let same = g.len() == p.len()
            && g.tokens()
                .iter()
                .zip(p.tokens())
                .all(|(a, b)| a.surface == b.surface);
        if !same {
            bail!("files diverge at sentence {i}");
        }
    }
    if gold.len() != pred.len() {
        bail!("files diverge at sentence {upto}");
    }
    Ok(())
}

fn load_labels(path: &Path) -> anyhow::Result<(Vec<Sentence>, Vec<Vec<String>>)> {
    let opts = CorpusOptions { iob: IobPolicy::Keep, ..CorpusOptions::default() };
    let corpus = files::load_corpus(path, opts)?;
    let labels = corpus.sentences.iter().map(|s| s.labels()).collect();
    Ok((corpus.sentences, labels))
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<ExitCode> {
    let (gold_sents, gold) = load_labels(&args.gold)?;
    let (pred_sents, pred) = load_labels(&args.pred)?;
    check_alignment(&gold_sents, &pred_sents)?;
    let result = f1_score(&gold, &pred)?;
    if args.records {
        print!("{}", result.render_records());
    } else {
        print!("{}", result.render_table());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<ExitCode> {
    let (gold_sents, gold) = load_labels(&args.gold)?;
    let (a_sents, pred_a) = load_labels(&args.pred_a)?;
    let (b_sents, pred_b) = load_labels(&args.pred_b)?;
    check_alignment(&gold_sents, &a_sents).context("gold vs --pred-a")?;
    check_alignment(&gold_sents, &b_sents).context("gold vs --pred-b")?;
    let unit = match args.unit {
        UnitArg::Token => McNemarUnit::Token,
        UnitArg::Entity => McNemarUnit::Entity,
    };
    let result = mcnemar(&gold, &pred_a, &pred_b, unit)?;
    println!("{result}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(args: GradcheckArgs) -> anyhow::Result<ExitCode> {
    anyhow::ensure!(args.epsilon > 0.0, "--epsilon must be positive");
    let (mut model, sentences) = gradcheck::fixture(args.seed);
    let reports = gradcheck::check_model_gradients(&mut model, &sentences, args.epsilon);
    let mut ok = true;
    for r in &reports {
        println!(
            "group={} entries={} max_rel_err={:.3e} {}",
            r.name,
            r.entries,
            r.max_rel_error,
            if r.passed() { "ok" } else { "FAIL" }
        );
        ok &= r.passed();
    }
    if ok {
        println!("gradcheck passed: {} parameter groups within {:.0e}", reports.len(), gradcheck::TOLERANCE);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: gradient check failed");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_inspect_morpho(args: InspectMorphoArgs) -> anyhow::Result<ExitCode> {
    let analysis = MorphAnalysis::parse(&args.analysis)
        .map_err(|e| anyhow::anyhow!("cannot parse `{}`: {e}", args.analysis))?;
    println!("raw: {}", analysis.raw());
    println!("root: {}", analysis.root());
    let groups: Vec<String> = analysis
        .groups()
        .iter()
        .map(|g| format!("[{}]", g.join(" ")))
        .collect();
    println!("groups: {}", groups.join(" "));
    for scheme in Scheme::ALL {
        let symbols = analysis.project(scheme);
        println!(
            "{}: {}",
            scheme.name().to_uppercase(),
            symbols.join(" ")
        );
    }
    Ok(ExitCode::SUCCESS)
}
