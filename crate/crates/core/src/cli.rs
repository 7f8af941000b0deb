//! `smir` command-line interface.
//!
//! Exit codes: 0 on success, 1 when `--strict` is set and a run produced
//! warnings (for example a task with no positive labels), 2 on I/O, schema or
//! validation errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    label_stats, load_corpus, read_csv, split_corpus, Corpus, DataFormat, SplitSpec,
    StakeholderTag, Task,
};
use crate::error::{Error, Result};
use crate::lexicon::{default_lexicon, evaluate_lexicon, evaluate_lexicon_all, Lexicon};
use crate::metrics::MetricsReport;
use crate::pipeline::{
    comparison_table, evaluate_model, fmt3, read_predictions, align_predictions, check_prediction_ids,
    replicate_per_stakeholder, run_training, save_history, score_probabilities,
    write_predictions, Checkpoint, ComparisonTable, TrainConfig, TrainRun,
};
use crate::textprep::segment_sentences;

pub const BASELINE_NAME: &str = "rule-based (baseline)";

#[derive(Debug, Parser)]
#[command(name = "smir", version, about = "Find stakeholder-material sentences in 10-K filings")]
pub struct Cli {
    /// Exit with status 1 when a command finishes with warnings.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label counts and shares per stakeholder group.
    Stats(StatsArgs),
    /// Seeded train/test partition written as two data files.
    Split(SplitArgs),
    /// Score the keyword-search baseline.
    Baseline(BaselineArgs),
    /// Train an LSTM classifier and keep the epoch with the best validation F1.
    Train(TrainArgs),
    /// Write per-sentence probabilities from a checkpoint.
    Predict(PredictArgs),
    /// Comparison table across the baseline, checkpoints and prediction files.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSplit {
    /// Every sentence in the data file.
    Full,
    /// The held-out share of the seeded split.
    Test,
}

#[derive(Debug, Clone, Args)]
pub struct SplitFlags {
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub split: SplitFlags,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `all` (overall plus every stakeholder), `overall`, or one of cus/inv/emp/soc.
    #[arg(long, default_value = "all")]
    pub tag: String,
    #[arg(long, value_enum, default_value_t = EvalSplit::Full)]
    pub split: EvalSplit,
    #[command(flatten)]
    pub split_flags: SplitFlags,
    /// Keyword file replacing the built-in lists.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `overall`, one of cus/inv/emp/soc, or `all` for one run per stakeholder.
    #[arg(long, default_value = "overall")]
    pub task: String,
    #[command(flatten)]
    pub split: SplitFlags,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 64)]
    pub embed: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub min_freq: usize,
    #[arg(long, default_value_t = 20000)]
    pub max_vocab: usize,
    /// Select the epoch on a validation slice of the training share and report
    /// on an untouched test slice.
    #[arg(long)]
    pub holdout: bool,
    /// Checkpoint path. With `--task all` the stakeholder code is appended to the file stem.
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch history CSV; defaults to the checkpoint path with `.history.csv`.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// JSON report of the selected checkpoint on the test slice; defaults to
    /// the checkpoint path with `.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Name used for this model in reports.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["data", "text"])))]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labeled or unlabeled data file (CSV/JSONL); rows keep their ids.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Raw filing text, split into sentences first.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "overall")]
    pub task: String,
    #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
    pub split: EvalSplit,
    #[command(flatten)]
    pub split_flags: SplitFlags,
    /// Include the keyword baseline as the first row.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Trained checkpoint, as `NAME=PATH` or `PATH`.
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<String>,
    /// External `id,probability` file, as `NAME=PATH` or `PATH`.
    #[arg(long = "predictions")]
    pub predictions: Vec<String>,
    /// Saved JSON model report (as written by `train`).
    #[arg(long = "report")]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a finished command wants reported besides its output files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

/// One scored model, as stored by `train --report` and read by `compare --report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub task: String,
    #[serde(flatten)]
    pub report: MetricsReport,
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Stats(a) => cmd_stats(&a),
        Command::Split(a) => cmd_split(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if cli.strict && !outcome.warnings.is_empty() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_data(path: &Path) -> Result<Corpus> {
    load_corpus(path, DataFormat::from_path(path))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn render(table: &ComparisonTable, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(table.to_text()),
        ReportFormat::Csv => table.to_csv(),
        ReportFormat::Json => table.to_json(),
    }
}

fn select_split(corpus: Corpus, split: EvalSplit, flags: &SplitFlags) -> Result<Corpus> {
    match split {
        EvalSplit::Full => Ok(corpus),
        EvalSplit::Test => {
            let spec = SplitSpec::new(flags.ratio, flags.seed)?;
            Ok(split_corpus(&corpus, spec)?.1)
        }
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    path.map_or_else(|| Ok(default_lexicon()), Lexicon::load)
}

pub fn cmd_stats(args: &StatsArgs) -> Result<Outcome> {
    let corpus = load_data(&args.data)?;
    let stats = label_stats(&corpus)?;
    let content = match args.format {
        ReportFormat::Json => serde_json::to_string_pretty(&stats)? + "\n",
        ReportFormat::Csv => {
            let mut s = String::from("label,positives,percent\n");
            for t in &stats.per_tag {
                s.push_str(&format!("{},{},{}\n", t.tag, t.positives, fmt3(100.0 * t.share)));
            }
            s.push_str(&format!("material,{},{}\n", stats.material, fmt3(100.0 * stats.material as f64 / stats.total as f64)));
            s.push_str(&format!("nonmaterial,{},{}\n", stats.nonmaterial, fmt3(100.0 * stats.nonmaterial as f64 / stats.total as f64)));
            s
        }
        ReportFormat::Text => {
            let mut s = format!("sentences: {}\n", stats.total);
            s.push_str(&format!("{:<12}  {:>9}  {:>9}\n", "Label", "Positives", "Percent"));
            for t in &stats.per_tag {
                s.push_str(&format!("{:<12}  {:>9}  {:>9}\n", t.tag.code(), t.positives, fmt3(100.0 * t.share)));
            }
            for (name, n) in [("material", stats.material), ("nonmaterial", stats.nonmaterial)] {
                s.push_str(&format!(
                    "{name:<12}  {n:>9}  {:>9}\n",
                    fmt3(100.0 * n as f64 / stats.total as f64)
                ));
            }
            s
        }
    };
    emit(args.out.as_deref(), &content)?;
    Ok(Outcome::default())
}

pub fn cmd_split(args: &SplitArgs) -> Result<Outcome> {
    let corpus = load_data(&args.data)?;
    let spec = SplitSpec::new(args.split.ratio, args.split.seed)?;
    let (train, test) = split_corpus(&corpus, spec)?;
    for (part, path) in [(&train, &args.train_out), (&test, &args.test_out)] {
        match DataFormat::from_path(path) {
            DataFormat::Csv => part.write_csv(path)?,
            DataFormat::Jsonl => part.write_jsonl(path)?,
        }
    }
    Ok(Outcome::default())
}

enum TagChoice {
    All,
    One(Task),
}

fn parse_tag_choice(s: &str) -> Result<TagChoice> {
    if s.trim().eq_ignore_ascii_case("all") {
        Ok(TagChoice::All)
    } else {
        s.parse().map(TagChoice::One)
    }
}

pub fn baseline_table(
    lexicon: &Lexicon,
    corpus: &Corpus,
    choice: &str,
) -> Result<ComparisonTable> {
    match parse_tag_choice(choice)? {
        TagChoice::All => {
            let eval = evaluate_lexicon_all(lexicon, corpus)?;
            let mut rows = vec![("overall".to_string(), eval.overall)];
            rows.extend(eval.per_tag.iter().map(|(tag, r)| (tag.code().to_string(), *r)));
            let mut table = comparison_table(Task::Overall, rows);
            table.task = "all".into();
            Ok(table)
        }
        TagChoice::One(task) => {
            let report = evaluate_lexicon(lexicon, corpus, task)?;
            Ok(comparison_table(task, vec![(BASELINE_NAME.to_string(), report)]))
        }
    }
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<Outcome> {
    let lexicon = load_lexicon(args.lexicon.as_deref())?;
    let corpus = select_split(load_data(&args.data)?, args.split, &args.split_flags)?;
    let table = baseline_table(&lexicon, &corpus, &args.tag)?;
    emit(args.out.as_deref(), &render(&table, args.format)?)?;
    Ok(Outcome::default())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn tagged_path(path: &Path, tag: StakeholderTag) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{}.{}", tag.column(), ext.to_string_lossy()),
        None => format!("{stem}_{}", tag.column()),
    };
    path.with_file_name(name)
}

pub fn train_config(args: &TrainArgs, task: Task) -> TrainConfig {
    TrainConfig {
        epochs: args.epochs,
        lr: args.lr,
        batch_size: args.batch,
        ratio: args.split.ratio,
        seed: args.split.seed,
        task,
        num_layers: args.layers,
        threshold: args.threshold,
        embed_dim: args.embed,
        hidden_dim: args.hidden,
        max_len: args.max_len,
        min_freq: args.min_freq,
        max_vocab: args.max_vocab,
        holdout: args.holdout,
    }
}

fn write_run(run: &TrainRun, args: &TrainArgs, out: &Path, task: Task) -> Result<()> {
    run.outcome.best.save(out)?;
    let history = match (&args.history, task) {
        (Some(p), Task::Tag(tag)) if args.task.eq_ignore_ascii_case("all") => tagged_path(p, tag),
        (Some(p), _) => p.clone(),
        (None, _) => with_suffix(out, ".history.csv"),
    };
    save_history(&history, &run.outcome.history)?;
    let report_path = match (&args.report, task) {
        (Some(p), Task::Tag(tag)) if args.task.eq_ignore_ascii_case("all") => tagged_path(p, tag),
        (Some(p), _) => p.clone(),
        (None, _) => with_suffix(out, ".report.json"),
    };
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| format!("RNN ({} LSTM layer{})", args.layers, if args.layers == 1 { "" } else { "s" }));
    let report = ModelReport {
        model: name,
        task: task.to_string(),
        report: run.test_report,
    };
    fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")
        .map_err(|e| Error::io(&report_path, e))?;
    eprintln!(
        "{task}: best epoch {} (validation F1 {}), test F1 {} -> {}",
        run.outcome.best_epoch,
        fmt3(run.outcome.history[run.outcome.best_epoch - 1].validation.f1),
        fmt3(run.test_report.f1),
        out.display()
    );
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<Outcome> {
    let corpus = load_data(&args.data)?;
    let mut warnings = Vec::new();
    match parse_tag_choice(&args.task)? {
        TagChoice::One(task) => {
            let run = run_training(&train_config(args, task), &corpus)?;
            write_run(&run, args, &args.out, task)?;
            warnings.extend(run.outcome.warnings);
        }
        TagChoice::All => {
            let runs = replicate_per_stakeholder(&train_config(args, Task::Overall), &corpus)?;
            for (tag, run) in runs {
                write_run(&run, args, &tagged_path(&args.out, tag), Task::Tag(tag))?;
                warnings.extend(run.outcome.warnings);
            }
        }
    }
    Ok(Outcome { warnings })
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Outcome> {
    let checkpoint = Checkpoint::load(&args.checkpoint, args.max_len)?;
    let mut buf = Vec::new();
    if let Some(path) = &args.text {
        let document = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sentences = segment_sentences(&document);
        let probs = checkpoint.probabilities(&sentences)?;
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["id", "sentence", "probability", "material"])?;
        for (i, (s, p)) in sentences.iter().zip(&probs).enumerate() {
            let flag = if *p >= args.threshold { "1" } else { "0" };
            w.write_record([(i + 1).to_string().as_str(), s, &p.to_string(), flag])?;
        }
        w.flush().map_err(|e| Error::io("<predictions output>", e))?;
    } else if let Some(path) = &args.data {
        let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
        let corpus = if raw.iter().all(u8::is_ascii_whitespace) {
            Corpus::default()
        } else {
            match DataFormat::from_path(path) {
                DataFormat::Csv => read_csv(raw.as_slice())?,
                DataFormat::Jsonl => load_corpus(path, DataFormat::Jsonl)?,
            }
        };
        let texts: Vec<&str> = corpus.iter().map(|s| s.text.as_str()).collect();
        let probs = checkpoint.probabilities(&texts)?;
        let rows: Vec<(String, f64)> = corpus.ids().map(str::to_owned).zip(probs).collect();
        write_predictions(&mut buf, &rows)?;
    }
    emit(args.out.as_deref(), std::str::from_utf8(&buf).expect("csv output is UTF-8"))?;
    Ok(Outcome::default())
}

fn named_path(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome> {
    let task: Task = args.task.parse()?;
    if args.checkpoints.is_empty() && args.predictions.is_empty() && args.reports.is_empty() && !args.baseline {
        return Err(Error::Config("nothing to compare: pass --baseline, --checkpoint, --predictions or --report".into()));
    }
    let dataset = load_data(&args.data)?;
    let corpus = select_split(dataset.clone(), args.split, &args.split_flags)?;
    let labels = corpus.labels(task);
    let mut rows: Vec<(String, MetricsReport)> = Vec::new();

    if args.baseline {
        let lexicon = load_lexicon(args.lexicon.as_deref())?;
        rows.push((BASELINE_NAME.to_string(), evaluate_lexicon(&lexicon, &corpus, task)?));
    }
    for spec in &args.checkpoints {
        let (name, path) = named_path(spec);
        let checkpoint = Checkpoint::load(&path, args.max_len)?;
        rows.push((name, evaluate_model(&checkpoint, &corpus, task, args.threshold)?));
    }
    for spec in &args.predictions {
        let (name, path) = named_path(spec);
        let predictions = read_predictions(&path)?;
        let probs = check_prediction_ids(&predictions, &dataset)
            .and_then(|()| align_predictions(&predictions, &corpus))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        rows.push((name, score_probabilities(&probs, &labels, args.threshold)?));
    }
    for path in &args.reports {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let saved: ModelReport = serde_json::from_str(&text)?;
        let saved_task: Task = saved.task.parse()?;
        if saved_task != task {
            return Err(Error::Config(format!(
                "{} was scored on task `{saved_task}` but the comparison is for `{task}`",
                path.display()
            )));
        }
        rows.push((saved.model, saved.report));
    }
    let table = comparison_table(task, rows);
    emit(args.out.as_deref(), &render(&table, args.format)?)?;
    Ok(Outcome::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_defaults() {
        let cli = Cli::try_parse_from(["smir", "train", "--data", "d.csv", "--out", "m.smir"]).unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        let cfg = train_config(&a, Task::Overall);
        assert_eq!(cfg, TrainConfig::default());
        assert_eq!(a.split.seed, 42);
    }

    #[test]
    fn predict_inputs_are_exclusive() {
        let both = Cli::try_parse_from([
            "smir", "predict", "--checkpoint", "m", "--data", "d.csv", "--text", "t.txt",
        ]);
        assert!(both.is_err());
        let neither = Cli::try_parse_from(["smir", "predict", "--checkpoint", "m"]);
        assert!(neither.is_err());
    }

    #[test]
    fn paths() {
        assert_eq!(
            tagged_path(Path::new("out/model.smir"), StakeholderTag::Soc),
            PathBuf::from("out/model_soc.smir")
        );
        assert_eq!(
            with_suffix(Path::new("m.smir"), ".history.csv"),
            PathBuf::from("m.smir.history.csv")
        );
        assert_eq!(named_path("bert=p.csv"), ("bert".into(), PathBuf::from("p.csv")));
        assert_eq!(named_path("dir/albert.csv"), ("albert".into(), PathBuf::from("dir/albert.csv")));
    }
}
