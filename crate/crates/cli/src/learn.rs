use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use pixtile_core::affordance::{
    evaluate, labels_above, load_dataset, train, AffordanceModel, Example,
};
use pixtile_core::config::PipelineConfig;
use pixtile_core::semantics::{
    aggregate_matches, load_records, Affordance, CaptionMatch, CaptionMatcher, EmbeddingProvider,
    EmbeddingVector, MatchTable, SemanticIndex, SynonymLexicon,
};

use crate::io::{embedder, emit_json, read_jsonl, write_json, write_text};
use crate::{AffordanceCommand, EmbedArgs, IndexCommand};

struct NoEmbeddings;

impl EmbeddingProvider for NoEmbeddings {
    fn embed(&self, _: &str) -> Option<EmbeddingVector> {
        None
    }
}

#[derive(Serialize)]
struct QueryHit<'a> {
    tile_ref: &'a str,
    group_label: &'a str,
    score: f64,
}

pub(crate) fn index(out: Option<PathBuf>, cmd: IndexCommand) -> Result<()> {
    match cmd {
        IndexCommand::Build { records, embed } => {
            let provider = embedder(&embed)?;
            let index = SemanticIndex::build(load_records(&records)?, provider.as_ref())?;
            let dir = out.unwrap_or_else(|| PathBuf::from("index"));
            index.save(&dir)?;
            eprintln!("indexed {} records into {}", index.len(), dir.display());
            Ok(())
        }
        IndexCommand::Query { index, text, k, affordance, embed } => {
            let provider = embedder(&embed)?;
            let idx = SemanticIndex::load(&index)?;
            let q = provider
                .embed(&text)
                .ok_or_else(|| anyhow!("no embedding available for query `{text}`"))?;
            let filter: Option<BTreeSet<Affordance>> = if affordance.is_empty() {
                None
            } else {
                Some(affordance.iter().map(|a| a.parse()).collect::<Result<_, _>>()?)
            };
            let hits: Vec<QueryHit> = idx
                .query(&q, k, filter.as_ref())?
                .into_iter()
                .map(|(r, score)| QueryHit {
                    tile_ref: &r.tile_ref,
                    group_label: &r.group_label,
                    score,
                })
                .collect();
            emit_json(out.as_deref(), &hits)
        }
    }
}

#[derive(Deserialize)]
struct CaptionLine {
    tile_ref: String,
    caption: String,
}

#[derive(Serialize)]
struct CaptionReport {
    table: MatchTable,
    matches: Vec<CaptionMatch>,
}

pub(crate) fn match_captions(
    cfg: &PipelineConfig,
    out: Option<PathBuf>,
    captions: PathBuf,
    records: PathBuf,
    synonyms: Option<PathBuf>,
    threshold: Option<f64>,
    embed: EmbedArgs,
) -> Result<()> {
    let records: HashMap<String, _> = load_records(&records)?
        .into_iter()
        .map(|r| (r.tile_ref.clone(), r))
        .collect();
    let synonyms = match synonyms {
        Some(p) => SynonymLexicon::load(p)?,
        None => SynonymLexicon::default(),
    };
    let provider: Box<dyn EmbeddingProvider> =
        if embed.embeddings.is_none() && embed.hashing_dim.is_none() {
            Box::new(NoEmbeddings)
        } else {
            embedder(&embed)?
        };
    let matcher = CaptionMatcher {
        synonyms: &synonyms,
        embedder: provider.as_ref(),
        threshold: threshold.unwrap_or(cfg.semantic_sim_threshold),
    };
    let lines: Vec<CaptionLine> = read_jsonl(&captions)?;
    let matches = lines
        .iter()
        .map(|l| {
            let rec = records
                .get(&l.tile_ref)
                .ok_or_else(|| anyhow!("caption refers to unknown tile_ref `{}`", l.tile_ref))?;
            Ok(matcher.match_caption(&l.caption, rec))
        })
        .collect::<Result<Vec<_>>>()?;
    emit_json(out.as_deref(), &CaptionReport { table: aggregate_matches(&matches), matches })
}

fn examples(path: &PathBuf) -> Result<(Vec<Option<String>>, Vec<Example>)> {
    let lines = load_dataset(path)?;
    Ok((
        lines.iter().map(|l| l.key.clone()).collect(),
        lines.iter().map(Example::from).collect(),
    ))
}

#[derive(Serialize)]
struct TrainSummary {
    train_size: usize,
    val_size: usize,
    epochs: usize,
    final_train_loss: f64,
    final_val_loss: Option<f64>,
}

#[derive(Serialize)]
struct Prediction {
    key: Option<String>,
    probabilities: BTreeMap<Affordance, f64>,
    labels: BTreeSet<Affordance>,
}

pub(crate) fn affordance(cfg: PipelineConfig, out: Option<PathBuf>, cmd: AffordanceCommand) -> Result<()> {
    match cmd {
        AffordanceCommand::Train { data, epochs, lr, batch_size, hidden, momentum } => {
            let mut tc = cfg.train_config();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.lr = lr.unwrap_or(tc.lr);
            tc.batch_size = batch_size.unwrap_or(tc.batch_size);
            tc.hidden_size = hidden.unwrap_or(tc.hidden_size);
            tc.momentum = momentum.unwrap_or(tc.momentum);
            let (_, data) = examples(&data)?;
            let outcome = train(&data, &tc)?;
            let path = out.unwrap_or_else(|| PathBuf::from("model.json"));
            outcome.model.save(&path)?;
            let last = outcome.history.last().copied();
            emit_json(
                None,
                &TrainSummary {
                    train_size: outcome.train_indices.len(),
                    val_size: outcome.val_indices.len(),
                    epochs: outcome.history.len(),
                    final_train_loss: last.map_or(f64::NAN, |l| l.train),
                    final_val_loss: last.and_then(|l| l.val),
                },
            )
        }
        AffordanceCommand::Predict { model, data, threshold } => {
            let th = threshold.unwrap_or(cfg.affordance_threshold);
            let model = AffordanceModel::load(&model)?;
            let (keys, data) = examples(&data)?;
            let preds = keys
                .into_iter()
                .zip(&data)
                .map(|(key, ex)| {
                    let probs = model.forward(&ex.x)?;
                    Ok(Prediction {
                        key,
                        probabilities: Affordance::ALL.iter().map(|&a| (a, probs[a.index()])).collect(),
                        labels: labels_above(&probs, th),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit_json(out.as_deref(), &preds)
        }
        AffordanceCommand::Eval { model, data, threshold } => {
            let th = threshold.unwrap_or(cfg.affordance_threshold);
            let model = AffordanceModel::load(&model)?;
            let (_, data) = examples(&data)?;
            let m = evaluate(&model, &data, th)?;
            let mut table = format!("{:<24} {:>9} {:>9} {:>9} {:>8}\n", "label", "precision", "recall", "f1", "support");
            let mut csv = String::from("label,precision,recall,f1,support\n");
            for (a, s) in &m.per_label {
                writeln!(table, "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>8}", a.name(), s.precision, s.recall, s.f1, s.support)?;
                writeln!(csv, "{},{},{},{},{}", a.name(), s.precision, s.recall, s.f1, s.support)?;
            }
            writeln!(table, "micro P/R/F1 {:.4} / {:.4} / {:.4}, macro F1 {:.4}", m.micro_precision, m.micro_recall, m.micro_f1, m.macro_f1)?;
            print!("{table}");
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            write_json(&dir.join("metrics.json"), &m)?;
            write_text(&dir.join("pr_scatter.csv"), &csv).context("writing scatter data")
        }
    }
}
