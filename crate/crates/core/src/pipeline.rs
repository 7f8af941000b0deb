//! Split → vocabulary → per-epoch training → best-by-F1 selection → scoring.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{split_corpus, Corpus, SplitSpec, StakeholderTag, Task};
use crate::error::{Error, Result};
use crate::metrics::{confusion_from, metrics_from, MetricsReport};
use crate::neural::{
    adam_step, backward_into, bce_loss, forward, init_model, load_checkpoint, predict,
    save_checkpoint, AdamConfig, ClassifierModel, Gradients, OptimizerState,
};
use crate::rng::SeededRng;
use crate::textprep::{
    build_vocab, encode, EncodedSequence, Vocab, DEFAULT_MAX_LEN, DEFAULT_MAX_SIZE,
    DEFAULT_MIN_FREQ,
};

/// Share of the non-test data kept for training when a separate holdout is requested.
const HOLDOUT_TRAIN_SHARE: f64 = 0.875;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub ratio: f64,
    pub seed: u64,
    pub task: Task,
    pub num_layers: usize,
    pub threshold: f64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub max_len: usize,
    pub min_freq: usize,
    pub max_vocab: usize,
    /// Select on a validation slice carved from the training share and report
    /// on an untouched test slice. Off by default: selection and reporting
    /// then share the single test slice.
    pub holdout: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 1e-3,
            batch_size: 32,
            ratio: 0.8,
            seed: 42,
            task: Task::Overall,
            num_layers: 1,
            threshold: 0.5,
            embed_dim: 64,
            hidden_dim: 64,
            max_len: DEFAULT_MAX_LEN,
            min_freq: DEFAULT_MIN_FREQ,
            max_vocab: DEFAULT_MAX_SIZE,
            holdout: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 || self.max_len == 0 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return fail("batch, max-len, embed and hidden sizes must be positive".into());
        }
        if !(1..=2).contains(&self.num_layers) {
            return fail(format!("layers must be 1 or 2, got {}", self.num_layers));
        }
        SplitSpec::new(self.ratio, self.seed).map(|_| ())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// Trained weights with the vocabulary and sequence length used to encode inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ClassifierModel,
    pub vocab: Vocab,
    pub max_len: usize,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(&self.model, &self.vocab, path)
    }

    /// The file format does not record `max_len`; callers supply it.
    pub fn load(path: &Path, max_len: usize) -> Result<Self> {
        let (model, vocab) = load_checkpoint(path)?;
        Ok(Self {
            model,
            vocab,
            max_len,
        })
    }

    pub fn encode(&self, text: &str) -> EncodedSequence {
        encode(&self.vocab, text, self.max_len)
    }

    /// Probabilities in input order; evaluation runs in parallel.
    pub fn probabilities<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Result<Vec<f64>> {
        texts
            .par_iter()
            .map(|t| predict(&self.model, &self.encode(t.as_ref())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: MetricsReport,
    pub validation: MetricsReport,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub warnings: Vec<String>,
}

/// First epoch (1-based) with the greatest validation F1.
pub fn best_epoch(history: &[EpochRecord]) -> Option<usize> {
    let mut best: Option<&EpochRecord> = None;
    for record in history {
        if best.is_none_or(|b| record.validation.f1 > b.validation.f1) {
            best = Some(record);
        }
    }
    best.map(|r| r.epoch)
}

/// Scores probabilities with `p >= threshold` counted as positive.
pub fn score_probabilities(probs: &[f64], labels: &[bool], threshold: f64) -> Result<MetricsReport> {
    let predictions: Vec<bool> = probs.iter().map(|&p| p >= threshold).collect();
    metrics_from(confusion_from(&predictions, labels)?)
}

fn mean_loss(probs: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = probs.iter().zip(labels).map(|(&p, &y)| bce_loss(p, y)).sum();
    total / probs.len() as f64
}

fn model_probabilities(model: &ClassifierModel, seqs: &[EncodedSequence]) -> Result<Vec<f64>> {
    seqs.par_iter().map(|s| predict(model, s)).collect()
}

fn task_warnings(task: Task, train: &[bool], val: &[bool]) -> Vec<String> {
    let mut out = Vec::new();
    for (name, labels) in [("training", train), ("validation", val)] {
        if !labels.iter().any(|&y| y) {
            out.push(format!("task `{task}` has no positive {name} labels"));
        }
    }
    out
}

/// Mini-batch Adam training with per-epoch evaluation and best-by-validation-F1
/// selection (ties go to the earliest epoch).
pub fn train(
    config: &TrainConfig,
    train_set: &Corpus,
    val_set: &Corpus,
    vocab: &Vocab,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Empty("training and validation sets must be nonempty"));
    }
    let encode_all = |c: &Corpus| -> Vec<EncodedSequence> {
        c.iter().map(|s| encode(vocab, &s.text, config.max_len)).collect()
    };
    let train_x = encode_all(train_set);
    let val_x = encode_all(val_set);
    let train_y = train_set.labels(config.task);
    let val_y = val_set.labels(config.task);

    let warnings = task_warnings(config.task, &train_y, &val_y);
    for w in &warnings {
        warn!("{w}");
    }

    let mut model = init_model(
        vocab.len(),
        config.embed_dim,
        config.hidden_dim,
        config.num_layers,
        config.seed,
    )?;
    let mut optimizer = OptimizerState::new(&model, config.adam());
    let mut grads = Gradients::zeros_like(model.params());
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ClassifierModel)> = None;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_x.len()).collect();
        SeededRng::for_epoch(config.seed, epoch).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            for &i in batch {
                let (p, tape) = forward(&model, &train_x[i])?;
                loss_sum += bce_loss(p, train_y[i]);
                backward_into(&model, &tape, train_y[i], &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut model, &grads, &mut optimizer)?;
        }

        let train_probs = model_probabilities(&model, &train_x)?;
        let val_probs = model_probabilities(&model, &val_x)?;
        let record = EpochRecord {
            epoch,
            train: score_probabilities(&train_probs, &train_y, config.threshold)?,
            validation: score_probabilities(&val_probs, &val_y, config.threshold)?,
            train_loss: loss_sum / train_x.len() as f64,
            validation_loss: mean_loss(&val_probs, &val_y),
        };
        log::info!(
            "epoch {epoch}: loss {:.4} train F1 {:.3} validation F1 {:.3}",
            record.train_loss,
            record.train.f1,
            record.validation.f1
        );
        if best.as_ref().is_none_or(|(_, f1, _)| record.validation.f1 > *f1) {
            // Keep the weights exactly as a checkpoint file will hold them.
            best = Some((epoch, record.validation.f1, model.rounded_to_f32()));
        }
        history.push(record);
    }

    let (best_epoch, _, best_model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best: Checkpoint {
            model: best_model,
            vocab: vocab.clone(),
            max_len: config.max_len,
        },
        best_epoch,
        history,
        warnings,
    })
}

pub fn evaluate_model(
    checkpoint: &Checkpoint,
    corpus: &Corpus,
    task: Task,
    threshold: f64,
) -> Result<MetricsReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty corpus"));
    }
    let texts: Vec<&str> = corpus.iter().map(|s| s.text.as_str()).collect();
    let probs = checkpoint.probabilities(&texts)?;
    score_probabilities(&probs, &corpus.labels(task), threshold)
}

/// Reads a predictions CSV with header `id,probability`.
pub fn read_predictions(path: &Path) -> Result<Vec<(String, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let (id_col, prob_col) = (col("id")?, col("probability")?);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(id_col).unwrap_or("").to_string();
        let raw = record.get(prob_col).unwrap_or("").trim();
        let prob: f64 = raw.parse().map_err(|_| Error::Parse {
            row,
            message: format!("probability {raw:?} is not a number"),
        })?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Parse {
                row,
                message: format!("probability {prob} outside [0, 1]"),
            });
        }
        out.push((id, prob));
    }
    Ok(out)
}

/// Joins predictions to the corpus by id. Every corpus id needs exactly one
/// probability; rows for ids outside the corpus are ignored, so a file covering
/// a whole dataset can be scored on one split of it.
pub fn align_predictions(predictions: &[(String, f64)], corpus: &Corpus) -> Result<Vec<f64>> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(predictions.len());
    for (id, p) in predictions {
        if by_id.insert(id.as_str(), *p).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let missing: Vec<String> = corpus
        .ids()
        .filter(|id| !by_id.contains_key(id))
        .map(str::to_owned)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    Ok(corpus.ids().map(|id| by_id[id]).collect())
}

/// Rejects prediction rows whose ids do not occur in `dataset`.
pub fn check_prediction_ids(predictions: &[(String, f64)], dataset: &Corpus) -> Result<()> {
    let known: HashSet<&str> = dataset.ids().collect();
    let unknown: Vec<String> = predictions
        .iter()
        .filter(|(id, _)| !known.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownPredictionIds(unknown))
    }
}

pub fn score_external_predictions(
    path: &Path,
    corpus: &Corpus,
    task: Task,
    threshold: f64,
) -> Result<MetricsReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty corpus"));
    }
    let probs = align_predictions(&read_predictions(path)?, corpus)?;
    score_probabilities(&probs, &corpus.labels(task), threshold)
}

pub fn write_predictions<W: Write>(writer: W, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "probability"])?;
    for (id, p) in rows {
        w.write_record([id.as_str(), &p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<predictions output>", e))
}

/// Epoch history as CSV: `epoch,split,accuracy,recall,precision,f1,loss`, one
/// `train` and one `validation` row per epoch.
pub fn write_history<W: Write>(writer: W, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "split", "accuracy", "recall", "precision", "f1", "loss"])?;
    for r in history {
        for (split, m, loss) in [
            ("train", &r.train, r.train_loss),
            ("validation", &r.validation, r.validation_loss),
        ] {
            w.write_record([
                r.epoch.to_string(),
                split.to_string(),
                m.accuracy.to_string(),
                m.recall.to_string(),
                m.precision.to_string(),
                m.f1.to_string(),
                loss.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<history output>", e))
}

pub fn save_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_history(BufWriter::new(file), history)
}

/// Rounds half-up to 3 decimals. Values within 1e-9 of a half step round up so
/// decimal inputs like 0.7485 behave as written.
pub fn round3(x: f64) -> f64 {
    ((x * 1000.0) + 0.5 + 1e-9).floor() / 1000.0
}

pub fn fmt3(x: f64) -> String {
    format!("{:.3}", round3(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    #[serde(flatten)]
    pub report: MetricsReport,
}

/// Rows in caller order with columns Accuracy, Recall, Precision, F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub task: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn comparison_table(task: Task, reports: Vec<(String, MetricsReport)>) -> ComparisonTable {
    ComparisonTable {
        task: task.to_string(),
        rows: reports
            .into_iter()
            .map(|(model, report)| ComparisonRow { model, report })
            .collect(),
    }
}

const COLUMNS: [&str; 4] = ["Accuracy", "Recall", "Precision", "F1"];

impl ComparisonTable {
    fn values(row: &ComparisonRow) -> [String; 4] {
        let r = &row.report;
        [r.accuracy, r.recall, r.precision, r.f1].map(fmt3)
    }

    pub fn to_text(&self) -> String {
        let name_width = self
            .rows
            .iter()
            .map(|r| r.model.chars().count())
            .chain(std::iter::once("Model".len()))
            .max()
            .unwrap_or(5);
        let mut out = format!("{:<name_width$}", "Model");
        for c in COLUMNS {
            out.push_str(&format!("  {c:>9}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<name_width$}", row.model));
            for v in Self::values(row) {
                out.push_str(&format!("  {v:>9}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "accuracy", "recall", "precision", "f1"])?;
        for row in &self.rows {
            let v = Self::values(row);
            w.write_record([row.model.as_str(), &v[0], &v[1], &v[2], &v[3]])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<csv output>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Data slices for one training run.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Corpus,
    /// Slice used for best-epoch selection.
    pub validation: Corpus,
    /// Slice used for the final report; the validation slice unless `holdout` is set.
    pub test: Corpus,
}

pub fn prepare_splits(config: &TrainConfig, corpus: &Corpus) -> Result<Splits> {
    let (train, test) = split_corpus(corpus, SplitSpec::new(config.ratio, config.seed)?)?;
    if !config.holdout {
        return Ok(Splits {
            train,
            validation: test.clone(),
            test,
        });
    }
    let inner = SplitSpec::new(HOLDOUT_TRAIN_SHARE, config.seed.wrapping_add(1))?;
    let (train, validation) = split_corpus(&train, inner)?;
    Ok(Splits {
        train,
        validation,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub splits: Splits,
    pub outcome: TrainOutcome,
    pub test_report: MetricsReport,
}

/// Split, build the vocabulary from the training slice only, train, and score
/// the selected checkpoint on the test slice.
pub fn run_training(config: &TrainConfig, corpus: &Corpus) -> Result<TrainRun> {
    config.validate()?;
    let splits = prepare_splits(config, corpus)?;
    let vocab = build_vocab(&splits.train, config.min_freq, config.max_vocab)?;
    let outcome = train(config, &splits.train, &splits.validation, &vocab)?;
    let test_report = evaluate_model(&outcome.best, &splits.test, config.task, config.threshold)?;
    Ok(TrainRun {
        splits,
        outcome,
        test_report,
    })
}

/// Four independent binary tasks sharing one split seed.
pub fn replicate_per_stakeholder(
    config: &TrainConfig,
    corpus: &Corpus,
) -> Result<BTreeMap<StakeholderTag, TrainRun>> {
    StakeholderTag::ALL
        .into_iter()
        .map(|tag| {
            let cfg = TrainConfig {
                task: Task::Tag(tag),
                ..config.clone()
            };
            run_training(&cfg, corpus).map(|run| (tag, run))
        })
        .collect()
}
