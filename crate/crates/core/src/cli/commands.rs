use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{corpus_to_string, read_corpus, CaptionRecord, StopwordList, STOPWORDS_ENV};
use crate::error::{Error, Result};
use crate::fusion::{
    checkpoint_to_string, generate_synthetic_corpus, train_world_model, BeamConfig, Corruption, SynthConfig,
    SyntheticWorld, WorldTraining,
};
use crate::metrics::{score_corpus, MetricReport};
use crate::triage::{triage, TriageReport};
use crate::xray::{evaluate_accuracy, explain_all, scored_estimates, AccuracyMode, AccuracyReport, Explanation};

use super::output::{OutputDir, RunManifest};

/// Output file names, shared by the commands that write them.
pub mod files {
    pub const NORMALIZED_CORPUS: &str = "corpus.jsonl";
    pub const INGEST: &str = "ingest.json";
    pub const METRICS_JSON: &str = "metrics.json";
    pub const METRICS_CSV: &str = "metrics.csv";
    pub const TRIAGE: &str = "triage.json";
    pub const EXPLANATIONS: &str = "explanations.jsonl";
    pub const NARRATIVES: &str = "explanations.txt";
    pub const EXPLAIN_SUMMARY: &str = "explain_summary.json";
    pub const ACCURACY: &str = "accuracy.json";
    pub const CONFUSION: &str = "confusion.csv";
    pub const REPORT: &str = "report.md";
    pub const FEATURES: &str = "features.jsonl";
    pub const CHECKPOINT: &str = "model.json";
    pub const TRAINING: &str = "training.json";
}

/// Settings shared by every corpus command.
#[derive(Debug, Clone)]
pub struct CorpusCommand<'a> {
    pub corpus: &'a Path,
    pub out: &'a Path,
    pub force: bool,
    pub seed: u64,
    /// Recorded in the manifest; the thread pool is set up by the caller.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct ExplainOptions {
    pub best_styles: usize,
    /// Count only the first suspect as a hit.
    pub strict: bool,
}

impl ExplainOptions {
    fn mode(self) -> AccuracyMode {
        if self.strict {
            AccuracyMode::FirstOnly
        } else {
            AccuracyMode::Either
        }
    }
}

fn load_stopwords(manifest: &mut RunManifest) -> Result<StopwordList> {
    let source = std::env::var_os(STOPWORDS_ENV)
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bundled".to_owned());
    manifest.flag("stopwords", source);
    StopwordList::from_env_or_default()
}

/// Reads and validates the corpus, registering it as a manifest input.
fn load_input(path: &Path, manifest: &mut RunManifest) -> Result<Vec<CaptionRecord>> {
    let bytes = manifest.input(path)?;
    let records = read_corpus(bytes.as_slice(), path)?;
    if records.is_empty() {
        return Err(Error::Argument(format!("{} contains no records", path.display())));
    }
    Ok(records)
}

fn open(cmd: &CorpusCommand<'_>, name: &str, planned: &[&str]) -> Result<(OutputDir, Vec<CaptionRecord>)> {
    let mut manifest = RunManifest::new(name, cmd.seed);
    manifest.flag("corpus", cmd.corpus.display().to_string());
    manifest.flag("out", cmd.out.display().to_string());
    manifest.flag("force", cmd.force);
    manifest.flag("jobs", cmd.jobs);
    let records = load_input(cmd.corpus, &mut manifest)?;
    let out = OutputDir::prepare(cmd.out, cmd.force, planned, manifest)?;
    Ok((out, records))
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    records: usize,
    labeled: usize,
    unrecognized_labels: usize,
    styles: std::collections::BTreeMap<String, usize>,
}

pub fn cmd_ingest(cmd: &CorpusCommand<'_>) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "ingest", &[files::NORMALIZED_CORPUS, files::INGEST])?;
    let mut styles = std::collections::BTreeMap::new();
    for r in &records {
        *styles.entry(r.style.clone()).or_insert(0) += 1;
    }
    let summary = IngestSummary {
        records: records.len(),
        labeled: records.iter().filter(|r| r.error_label.is_some()).count(),
        unrecognized_labels: records.iter().filter(|r| r.unrecognized_label().is_some()).count(),
        styles,
    };
    out.write(files::NORMALIZED_CORPUS, corpus_to_string(&records).as_bytes())?;
    out.write_json(files::INGEST, &summary)?;
    out.finish()
}

fn write_metrics(out: &mut OutputDir, report: &MetricReport) -> Result<()> {
    out.write_json(files::METRICS_JSON, report)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write(files::METRICS_CSV, &csv)
}

pub fn cmd_score(cmd: &CorpusCommand<'_>) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "score", &[files::METRICS_JSON, files::METRICS_CSV])?;
    let report = score_corpus(&records)?;
    write_metrics(&mut out, &report)?;
    out.finish()
}

pub fn cmd_triage(cmd: &CorpusCommand<'_>, best_styles: usize) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "triage", &[files::TRIAGE])?;
    out.manifest_mut().flag("best_styles", best_styles);
    let report = triage(&records, best_styles)?;
    out.write_json(files::TRIAGE, &report)?;
    out.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplainFailure {
    pub image_id: String,
    pub style: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplainSummary {
    pub threshold: f64,
    pub best_styles: Vec<String>,
    pub triaged: usize,
    pub explained: usize,
    pub failures: Vec<ExplainFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracyReport>,
}

/// Triage plus explanations for every low performer, and accuracy when any
/// triaged record carries a recognized label.
#[derive(Debug, Clone)]
pub struct ExplainRun {
    pub triage: TriageReport,
    pub explanations: Vec<Explanation>,
    pub summary: ExplainSummary,
}

pub fn run_explain(records: &[CaptionRecord], stopwords: &StopwordList, opts: ExplainOptions) -> Result<ExplainRun> {
    let tri = triage(records, opts.best_styles)?;
    let idx = &tri.low_performer_indices;
    let outcomes = explain_all(records, idx, &tri.best_styles, stopwords);
    let scored = scored_estimates(records, idx, &outcomes);
    let accuracy = if scored.iter().any(|s| s.label.is_some()) {
        Some(evaluate_accuracy(&scored, opts.mode())?)
    } else {
        None
    };
    let mut explanations = Vec::new();
    let mut failures = Vec::new();
    for (&i, outcome) in idx.iter().zip(outcomes) {
        match outcome {
            Ok(e) => explanations.push(e),
            Err(e) => failures.push(ExplainFailure {
                image_id: records[i].image_id.clone(),
                style: records[i].style.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let summary = ExplainSummary {
        threshold: tri.threshold,
        best_styles: tri.best_styles.clone(),
        triaged: idx.len(),
        explained: explanations.len(),
        failures,
        accuracy,
    };
    Ok(ExplainRun {
        triage: tri,
        explanations,
        summary,
    })
}

pub fn narratives_text(explanations: &[Explanation]) -> String {
    let mut s = String::new();
    for e in explanations {
        let _ = writeln!(
            s,
            "{} [{}] {}-{}: first {}, second {}",
            e.image_id, e.style, e.leaf_v1, e.leaf_v2, e.first, e.second
        );
        for line in e.trace_v1.iter().chain(&e.trace_v2) {
            let _ = writeln!(s, "  {line}");
        }
        let _ = writeln!(s, "  {}\n", e.narrative);
    }
    s
}

fn explanations_jsonl(explanations: &[Explanation]) -> Result<String> {
    let mut s = String::new();
    for e in explanations {
        s.push_str(&serde_json::to_string(e)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_explain(out: &mut OutputDir, run: &ExplainRun) -> Result<()> {
    out.write(files::EXPLANATIONS, explanations_jsonl(&run.explanations)?.as_bytes())?;
    out.write(files::NARRATIVES, narratives_text(&run.explanations).as_bytes())?;
    out.write_json(files::EXPLAIN_SUMMARY, &run.summary)?;
    if let Some(acc) = &run.summary.accuracy {
        write_accuracy(out, acc)?;
    }
    Ok(())
}

fn write_accuracy(out: &mut OutputDir, acc: &AccuracyReport) -> Result<()> {
    out.write_json(files::ACCURACY, acc)?;
    let mut csv = Vec::new();
    acc.write_confusion_csv(&mut csv)?;
    out.write(files::CONFUSION, &csv)
}

const EXPLAIN_FILES: [&str; 5] = [
    files::EXPLANATIONS,
    files::NARRATIVES,
    files::EXPLAIN_SUMMARY,
    files::ACCURACY,
    files::CONFUSION,
];

fn explain_flags(out: &mut OutputDir, opts: ExplainOptions) {
    out.manifest_mut().flag("best_styles", opts.best_styles);
    out.manifest_mut().flag("strict", opts.strict);
}

pub fn cmd_explain(cmd: &CorpusCommand<'_>, opts: ExplainOptions) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "explain", &EXPLAIN_FILES)?;
    explain_flags(&mut out, opts);
    let stopwords = load_stopwords(out.manifest_mut())?;
    let run = run_explain(&records, &stopwords, opts)?;
    write_explain(&mut out, &run)?;
    out.finish()
}

/// Like `explain`, but only the accuracy report and confusion table are
/// written, and a corpus without labeled low performers is an error.
pub fn cmd_eval_explain(cmd: &CorpusCommand<'_>, opts: ExplainOptions) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "eval-explain", &[files::ACCURACY, files::CONFUSION])?;
    explain_flags(&mut out, opts);
    let stopwords = load_stopwords(out.manifest_mut())?;
    let run = run_explain(&records, &stopwords, opts)?;
    let acc = run.summary.accuracy.ok_or_else(|| {
        Error::Argument(format!(
            "no triaged record in {} carries an error_label; nothing to evaluate",
            cmd.corpus.display()
        ))
    })?;
    write_accuracy(&mut out, &acc)?;
    out.finish()
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn report_markdown(metrics: &MetricReport, run: &ExplainRun) -> String {
    let c = &metrics.corpus;
    let mut s = String::new();
    let _ = writeln!(s, "# Caption diagnostics report\n");
    let _ = writeln!(s, "{} records.\n", c.record_count);
    let _ = writeln!(s, "## Metrics\n");
    let _ = writeln!(s, "| metric | corpus BLEU | mean sentence |");
    let _ = writeln!(s, "|---|---|---|");
    for (name, corpus, sentence) in [
        ("BLEU-1", c.bleu1, c.sentence_bleu1),
        ("BLEU-2", c.bleu2, c.sentence_bleu2),
        ("BLEU-3", c.bleu3, c.sentence_bleu3),
        ("BLEU-4", c.bleu4, c.sentence_bleu4),
    ] {
        let _ = writeln!(s, "| {name} | {} | {} |", fmt4(corpus), fmt4(sentence));
    }
    let _ = writeln!(s, "\nROUGE-L {}, CIDEr {}, unique words {}.\n", fmt4(c.rouge_l), fmt4(c.cider), c.unique_words);
    let t = &run.triage;
    let _ = writeln!(s, "## Triage\n");
    let _ = writeln!(
        s,
        "Median sentence BLEU-1 {}; {} of {} records fall strictly below it.\n",
        fmt4(t.threshold),
        t.low_performer_ids.len(),
        c.record_count
    );
    let _ = writeln!(s, "| style | mean BLEU-1 | records |");
    let _ = writeln!(s, "|---|---|---|");
    for e in &t.style_ranking.entries {
        let _ = writeln!(s, "| {} | {} | {} |", e.style, fmt4(e.mean_bleu1), e.count);
    }
    let best = if t.best_styles.is_empty() {
        "none".to_owned()
    } else {
        t.best_styles.join(", ")
    };
    let _ = writeln!(s, "\nBest styles: {best}.\n");
    let sm = &run.summary;
    let _ = writeln!(s, "## Explanations\n");
    let _ = writeln!(s, "{} of {} low performers explained.\n", sm.explained, sm.triaged);
    let mut counts = std::collections::BTreeMap::new();
    for e in &run.explanations {
        *counts.entry((e.first, e.second)).or_insert(0usize) += 1;
    }
    if !counts.is_empty() {
        let _ = writeln!(s, "| first | second | records |");
        let _ = writeln!(s, "|---|---|---|");
        for ((f, sec), n) in counts {
            let _ = writeln!(s, "| {f} | {sec} | {n} |");
        }
        let _ = writeln!(s);
    }
    for f in &sm.failures {
        let _ = writeln!(s, "- not explained: {} [{}]: {}", f.image_id, f.style, f.reason);
    }
    if let Some(acc) = &sm.accuracy {
        let _ = writeln!(s, "## Accuracy\n");
        let _ = writeln!(
            s,
            "{} of {} labeled low performers correct ({}), mode {:?}; {} unexplained, {} with unrecognized labels.",
            acc.correct,
            acc.evaluated_count,
            fmt4(acc.accuracy),
            acc.mode,
            acc.unexplained,
            acc.unevaluated
        );
    }
    s
}

const REPORT_FILES: [&str; 9] = [
    files::METRICS_JSON,
    files::METRICS_CSV,
    files::TRIAGE,
    files::EXPLANATIONS,
    files::NARRATIVES,
    files::EXPLAIN_SUMMARY,
    files::ACCURACY,
    files::CONFUSION,
    files::REPORT,
];

fn write_report(out: &mut OutputDir, records: &[CaptionRecord], opts: ExplainOptions) -> Result<()> {
    let stopwords = load_stopwords(out.manifest_mut())?;
    let metrics = score_corpus(records)?;
    let run = run_explain(records, &stopwords, opts)?;
    write_metrics(out, &metrics)?;
    out.write_json(files::TRIAGE, &run.triage)?;
    write_explain(out, &run)?;
    out.write(files::REPORT, report_markdown(&metrics, &run).as_bytes())
}

/// Score, triage and explain in one pass, plus a Markdown summary.
pub fn cmd_report(cmd: &CorpusCommand<'_>, opts: ExplainOptions) -> Result<RunManifest> {
    let (mut out, records) = open(cmd, "report", &REPORT_FILES)?;
    explain_flags(&mut out, opts);
    write_report(&mut out, &records, opts)?;
    out.finish()
}

#[derive(Debug, Clone)]
pub struct DemoCommand<'a> {
    pub out: &'a Path,
    pub force: bool,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub size: usize,
    pub corruption: Corruption,
    pub explain: ExplainOptions,
}

/// Builds the synthetic world, trains the toy decoder, generates a corpus
/// with injected errors, and runs the full report on it.
pub fn cmd_demo(cmd: &DemoCommand<'_>) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("demo", cmd.seed);
    manifest.flag("out", cmd.out.display().to_string());
    manifest.flag("force", cmd.force);
    manifest.flag("jobs", cmd.jobs);
    manifest.flag("size", cmd.size);
    manifest.flag("corruption", cmd.corruption.as_str());
    let mut planned = vec![
        files::NORMALIZED_CORPUS,
        files::FEATURES,
        files::CHECKPOINT,
        files::TRAINING,
    ];
    planned.extend(REPORT_FILES);
    if cmd.size == 0 {
        return Err(Error::Argument("--size must be at least 1".into()));
    }
    let mut out = OutputDir::prepare(cmd.out, cmd.force, &planned, manifest)?;
    explain_flags(&mut out, cmd.explain);

    let world = SyntheticWorld::new(cmd.seed);
    let settings = WorldTraining::default();
    let (model, report) = train_world_model(&world, cmd.seed, &settings)?;
    let corpus = generate_synthetic_corpus(
        &world,
        &model,
        &SynthConfig {
            size: cmd.size,
            corruption: cmd.corruption,
            seed: cmd.seed.wrapping_add(3),
            beam: BeamConfig::default(),
        },
    )?;

    #[derive(Serialize)]
    struct Training<'a> {
        settings: &'a WorldTraining,
        epoch_losses: &'a [f64],
    }
    out.write(files::CHECKPOINT, checkpoint_to_string(&model)?.as_bytes())?;
    out.write_json(
        files::TRAINING,
        &Training {
            settings: &settings,
            epoch_losses: &report.epoch_losses,
        },
    )?;
    out.write(files::NORMALIZED_CORPUS, corpus_to_string(&corpus.records).as_bytes())?;
    out.write(files::FEATURES, corpus.features_to_string()?.as_bytes())?;
    write_report(&mut out, &corpus.records, cmd.explain)?;
    out.finish()
}
