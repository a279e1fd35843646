//! Per-sentence SGD training with shuffling, clipping, checkpointing, and
//! optional dev-set model selection.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use mner_core::corpus::Sentence;
use mner_core::eval::{f1_score, EvalError};
use mner_core::rng::Rng;
use mner_core::serialize::{checkpoint_to_bytes, model_from_bytes, model_to_bytes};
use mner_core::tagger::TaggerModel;
use mner_core::tape::Tape;
use mner_core::tensor::NonFiniteGrad;

/// Latest-epoch checkpoint file name inside the checkpoint directory.
pub const LATEST_CHECKPOINT: &str = "latest.ckpt";
/// Best-dev checkpoint file name.
pub const BEST_CHECKPOINT: &str = "best.ckpt";

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    /// Global gradient L2 norm threshold; `f64::INFINITY` disables clipping.
    pub clip_norm: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a dev F1 improvement.
    pub patience: Option<usize>,
    /// When set, `latest.ckpt` (with RNG state) is written after every epoch
    /// and `best.ckpt` on every dev improvement.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            clip_norm: 5.0,
            epochs: 100,
            seed: 1,
            patience: None,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean per-sentence NLL of each completed epoch.
    pub epoch_nll: Vec<f64>,
    /// Dev F1 after each completed epoch; empty without a dev set.
    pub dev_f1: Vec<f64>,
    /// Epoch index (0-based) of the restored best-dev model.
    pub best_epoch: Option<usize>,
    pub epoch_seconds: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss at epoch {epoch}, sentence {sentence}")]
    NonFiniteLoss { epoch: usize, sentence: usize },
    #[error(transparent)]
    Grad(#[from] NonFiniteGrad),
    #[error("checkpoint/log IO: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One pass over the training set in freshly shuffled order, one SGD update
/// per sentence. Returns the mean sentence NLL.
pub fn run_epoch(
    model: &mut TaggerModel,
    sentences: &[Sentence],
    rng: &mut Rng,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<f64, TrainError> {
    if sentences.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    rng.shuffle(&mut order);
    let mut total = 0.0;
    for &i in &order {
        let mut tape = Tape::new();
        let loss = model.nll(&mut tape, &sentences[i], Some(rng));
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, sentence: i });
        }
        tape.backward(loss, &mut model.params);
        model.params.sgd_step(cfg.lr, cfg.clip_norm)?;
        total += value;
    }
    Ok(total / sentences.len() as f64)
}

/// Entity F1 of the model's own tagging against the sentences' labels.
pub fn evaluate_f1(model: &TaggerModel, sentences: &[Sentence]) -> Result<f64, EvalError> {
    let gold: Vec<Vec<String>> = sentences.iter().map(|s| s.labels()).collect();
    let pred: Vec<Vec<String>> = sentences.iter().map(|s| model.tag(s)).collect();
    Ok(f1_score(&gold, &pred)?.overall.f1)
}

/// Train with a caller-supplied generator (checkpoint resume restores the
/// exact stream). Emits one `epoch=<e> nll=<v> [devF1=<v>]` record per epoch
/// into `log`, and leaves the model at the best-dev parameters when a dev
/// set is given.
pub fn train_with_rng(
    model: &mut TaggerModel,
    train_set: &[Sentence],
    dev_set: Option<&[Sentence]>,
    cfg: &TrainConfig,
    rng: &mut Rng,
    mut log: Option<&mut dyn Write>,
) -> Result<TrainReport, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut report = TrainReport::default();
    let mut best: Option<(f64, usize, Vec<u8>)> = None;

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mean_nll = run_epoch(model, train_set, rng, cfg, epoch)?;
        report.epoch_nll.push(mean_nll);

        let mut line = format!("epoch={} nll={:.6}", epoch + 1, mean_nll);
        if let Some(dev) = dev_set {
            let f1 = evaluate_f1(model, dev)?;
            report.dev_f1.push(f1);
            line.push_str(&format!(" devF1={:.2}", f1 * 100.0));
            let improved = best.as_ref().is_none_or(|(b, _, _)| f1 > *b);
            if improved {
                best = Some((f1, epoch, model_to_bytes(model)));
                if let Some(dir) = &cfg.checkpoint_dir {
                    crate::files::write_atomic(&dir.join(BEST_CHECKPOINT), &checkpoint_to_bytes(model, rng))?;
                }
            }
        }
        report.epoch_seconds.push(started.elapsed().as_secs_f64());
        if let Some(dir) = &cfg.checkpoint_dir {
            crate::files::write_atomic(&dir.join(LATEST_CHECKPOINT), &checkpoint_to_bytes(model, rng))?;
        }
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{line}")?;
        }
        if let (Some(patience), Some((_, best_epoch, _))) = (cfg.patience, best.as_ref()) {
            if epoch - best_epoch >= patience {
                break;
            }
        }
    }

    if let Some((_, best_epoch, bytes)) = best {
        report.best_epoch = Some(best_epoch);
        let (restored, _) = model_from_bytes(&bytes).expect("in-memory snapshot reloads");
        *model = restored;
    }
    Ok(report)
}

/// Train from a fresh generator seeded with `cfg.seed`.
pub fn train(
    model: &mut TaggerModel,
    train_set: &[Sentence],
    dev_set: Option<&[Sentence]>,
    cfg: &TrainConfig,
    log: Option<&mut dyn Write>,
) -> Result<TrainReport, TrainError> {
    let mut rng = Rng::seed_from_u64(cfg.seed);
    train_with_rng(model, train_set, dev_set, cfg, &mut rng, log)
}
