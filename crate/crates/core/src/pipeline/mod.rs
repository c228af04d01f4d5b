//! Pipeline stages run by the `counterspeech` command.
//!
//! Each stage reads upstream artifacts from the output directory, writes its
//! own, and records a manifest under `manifests/`. Stages are deterministic:
//! identical configuration and inputs give byte-identical artifacts.

pub mod cli;
mod config;
mod manifest;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::Ensemble;
use crate::error::{Error, Result};
use crate::eval::{self, confusion, mcnemar, prf, McNemarResult, MetricsReport};
use crate::forecast::{
    majority_baseline, make_input, predict_three_way_batch, predict_two_stage_batch, split_corpus,
    split_stratified, train_stage, InputVariant, PredictionRecord, SplitAssignment, Stage, StageModel,
    Strategy, TrainedModel,
};
use crate::ingest::{build_trees, mask_pii, parse_dump, pseudonymize_author, DialogueTree, ParseMode, TreeRecord};
use crate::linguistics::{builtin_lexicons, compare_groups, load_lexicon_dir, CompareOptions, Grouping, Lexicon};
use crate::outcomes::{extract_pairs, summarize_corpus, CommunityMap, OutcomeLabel, PairRecord};

pub use config::{
    AnalysisConfig, ForecastConfig, IngestConfig, LabelingConfig, PathsConfig, RunConfig, SplitConfig,
};
pub use manifest::{check_consistent, read_manifests, sha256_hex, Manifest, MANIFEST_DIR};

use manifest::{to_jsonl, StageRun};

pub const COMMENTS: &str = "comments.jsonl";
pub const TREES: &str = "trees.jsonl";
pub const PARSE_ERRORS: &str = "parse_errors.jsonl";
pub const ORPHANS: &str = "orphans.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const PAIRS: &str = "pairs.jsonl";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_MD: &str = "summary.md";
pub const COMPARISONS_CSV: &str = "comparisons.csv";
pub const COMPARISONS_JSON: &str = "comparisons.json";
pub const COMPARISONS_MD: &str = "comparisons.md";
pub const SPLIT: &str = "split.json";
pub const REPORT: &str = "report.md";

pub const ALL_STRATEGIES: [Strategy; 3] = [Strategy::ThreeWay, Strategy::TwoStage, Strategy::Baseline];

pub fn model_path(variant: InputVariant, stage: Stage) -> String {
    format!("models/{}/{}.json", variant.as_str(), stage.as_str())
}

pub fn baseline_path(variant: InputVariant) -> String {
    format!("models/{}/baseline.json", variant.as_str())
}

pub fn predictions_path(strategy: Strategy, variant: InputVariant) -> String {
    format!("predictions/{}_{}.jsonl", strategy.as_str(), variant.as_str())
}

pub fn metrics_path(strategy: Strategy, variant: InputVariant) -> String {
    format!("metrics/{}_{}.json", strategy.as_str(), variant.as_str())
}

pub fn metrics_md_path(variant: InputVariant) -> String {
    format!("metrics/{}.md", variant.as_str())
}

pub fn mcnemar_path(variant: InputVariant) -> String {
    format!("mcnemar/{}.json", variant.as_str())
}

pub fn mcnemar_md_path(variant: InputVariant) -> String {
    format!("mcnemar/{}.md", variant.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Ingest,
    Label,
    Extract,
    Analyze,
    Split,
    Train,
    Predict,
    Evaluate,
    Compare,
    Report,
}

/// Per-invocation settings that are not part of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Strategies for `predict`, `evaluate` and `compare`; all when empty.
    pub strategies: Vec<Strategy>,
    /// Ad-hoc evaluation files for `evaluate`.
    pub gold: Option<std::path::PathBuf>,
    pub pred: Option<std::path::PathBuf>,
    pub compare: Option<std::path::PathBuf>,
}

impl RunOptions {
    fn strategies(&self) -> Vec<Strategy> {
        if self.strategies.is_empty() {
            ALL_STRATEGIES.to_vec()
        } else {
            self.strategies.clone()
        }
    }
}

/// Runs one stage.
pub fn run(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Manifest> {
    match command {
        Command::Ingest => ingest(cfg),
        Command::Label => label(cfg),
        Command::Extract => extract(cfg),
        Command::Analyze => analyze(cfg),
        Command::Split => split(cfg),
        Command::Train => train(cfg),
        Command::Predict => predict(cfg, &opts.strategies()),
        Command::Evaluate => match (&opts.gold, &opts.pred) {
            (Some(g), Some(p)) => evaluate_files(cfg, g, p, opts.compare.as_deref()),
            (None, None) => evaluate(cfg, &opts.strategies()),
            _ => Err(Error::config("--gold/--pred", "both files are required together")),
        },
        Command::Compare => compare(cfg, &opts.strategies()),
        Command::Report => report(cfg),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                reason: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn ingest(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "ingest")?;
    let input_rel = cfg
        .paths
        .input
        .as_deref()
        .ok_or_else(|| Error::config("paths.input", "required by ingest"))?;
    let input = cfg.resolve(input_rel);
    run.external_input(input_rel, &input)?;
    let file = fs::File::open(&input).map_err(|e| Error::file(&input, e))?;
    let mode = if cfg.ingest.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let mut dump = parse_dump(BufReader::new(file), mode)?;
    for c in &mut dump.comments {
        if cfg.ingest.mask_pii {
            c.body = mask_pii(&c.body);
        }
        if cfg.ingest.pseudonymize {
            c.author = pseudonymize_author(&c.author, &cfg.ingest.salt);
        }
    }
    run.write_jsonl(COMMENTS, &dump.comments)?;
    run.write_jsonl(PARSE_ERRORS, &dump.errors)?;
    let forest = build_trees(dump.comments, cfg.ingest.orphans)?;
    let records: Vec<TreeRecord> = forest.trees.iter().map(DialogueTree::to_record).collect();
    run.write_jsonl(TREES, &records)?;
    run.write_jsonl(ORPHANS, &forest.orphans)?;
    log::info!(
        "ingest: {} trees, {} orphans, {} parse errors",
        forest.trees.len(),
        forest.orphans.len(),
        dump.errors.len()
    );
    run.finish()
}

/// One line of `labels.jsonl`. `counter` is only judged for direct replies
/// to hate speech.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentLabel {
    pub id: String,
    pub hate: bool,
    pub counter: Option<bool>,
}

fn load_trees(path: &Path) -> Result<Vec<DialogueTree>> {
    read_jsonl::<TreeRecord>(path)?
        .into_iter()
        .map(DialogueTree::from_record)
        .collect()
}

fn ensemble(cfg: &RunConfig, specs: &[crate::classify::ClassifierSpec], name: &str) -> Result<Ensemble> {
    let members = specs
        .iter()
        .enumerate()
        .map(|(i, s)| s.build(&format!("labeling.{name}[{i}]"), &cfg.base_dir))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}

fn judge_parallel(e: &Ensemble, texts: &[&str]) -> Result<Vec<bool>> {
    let parts: Vec<Vec<bool>> = texts
        .par_chunks(512)
        .map(|c| e.judge_batch(c))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn label(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "label")?;
    let trees = load_trees(&run.input(TREES)?)?;
    let hate = ensemble(cfg, &cfg.labeling.hate, "hate")?;
    let counter = ensemble(cfg, &cfg.labeling.counter, "counter")?;

    let all: Vec<(usize, &crate::ingest::Comment)> = trees
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| t.preorder().into_iter().map(move |c| (ti, c)))
        .collect();
    let texts: Vec<&str> = all.iter().map(|(_, c)| c.body.as_str()).collect();
    let hate_flags = judge_parallel(&hate, &texts)?;

    let position: HashMap<(usize, &str), usize> =
        all.iter().enumerate().map(|(i, (ti, c))| ((*ti, c.key()), i)).collect();
    let candidate_idx: Vec<usize> = all
        .iter()
        .enumerate()
        .filter(|(_, (ti, c))| {
            trees[*ti]
                .parent(c.key())
                .is_some_and(|p| hate_flags[position[&(*ti, p.key())]])
        })
        .map(|(i, _)| i)
        .collect();
    let cand_texts: Vec<&str> = candidate_idx.iter().map(|&i| texts[i]).collect();
    let counter_flags = judge_parallel(&counter, &cand_texts)?;
    let counter_of: HashMap<usize, bool> = candidate_idx.into_iter().zip(counter_flags).collect();

    let labels: Vec<CommentLabel> = all
        .iter()
        .enumerate()
        .map(|(i, (_, c))| CommentLabel {
            id: c.key().to_owned(),
            hate: hate_flags[i],
            counter: counter_of.get(&i).copied(),
        })
        .collect();
    run.write_jsonl(LABELS, &labels)?;
    run.finish()
}

fn community_map(cfg: &RunConfig, run: &mut StageRun) -> Result<CommunityMap> {
    match &cfg.paths.communities {
        Some(p) => {
            let path = cfg.resolve(p);
            run.external_input(p, &path)?;
            CommunityMap::load(&path)
        }
        None => Ok(CommunityMap::builtin()),
    }
}

fn lexicons(cfg: &RunConfig, run: &mut StageRun) -> Result<Vec<Lexicon>> {
    match &cfg.paths.lexicons {
        Some(p) => {
            let dir = cfg.resolve(p);
            if !dir.is_dir() {
                return Err(Error::MissingArtifact(dir));
            }
            let lex = load_lexicon_dir(&dir)?;
            run.record_input(p, sha256_hex(&to_jsonl(&lex)?));
            Ok(lex)
        }
        None => Ok(builtin_lexicons()),
    }
}

fn extract(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "extract")?;
    let trees = load_trees(&run.input(TREES)?)?;
    let labels: Vec<CommentLabel> = read_jsonl(&run.input(LABELS)?)?;
    let communities = community_map(cfg, &mut run)?;
    let hate: HashMap<&str, bool> = labels.iter().map(|l| (l.id.as_str(), l.hate)).collect();
    let hs_ids: HashSet<String> = labels.iter().filter(|l| l.hate).map(|l| l.id.clone()).collect();
    let cs_ids: HashSet<String> = labels
        .iter()
        .filter(|l| l.counter == Some(true))
        .map(|l| l.id.clone())
        .collect();
    let pairs = extract_pairs(&trees, &hs_ids, &cs_ids, &communities, |c| {
        hate.get(c.key())
            .copied()
            .ok_or_else(|| Error::Inconsistent(format!("comment {} has no label", c.id)))
    })?;
    let records: Vec<PairRecord> = pairs.iter().map(|p| p.to_record()).collect();
    run.write_jsonl(PAIRS, &records)?;
    log::info!("extract: {} pairs", records.len());
    run.finish()
}

fn analyze(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "analyze")?;
    let pairs: Vec<PairRecord> = read_jsonl(&run.input(PAIRS)?)?;
    let lex = lexicons(cfg, &mut run)?;
    let summary = summarize_corpus(pairs.iter().map(|p| (p.community, p.outcome)), cfg.analysis.rounding);
    run.write_json(SUMMARY_JSON, &summary)?;
    run.write(SUMMARY_MD, summary.to_markdown().as_bytes())?;

    let opts = CompareOptions {
        alpha: cfg.analysis.alpha,
        direction: cfg.analysis.direction,
    };
    let mut report = compare_groups(&pairs, &lex, Grouping::ReentryVsNo, cfg.analysis.by_community, &opts)?;
    report.extend(compare_groups(
        &pairs,
        &lex,
        Grouping::HatefulVsNonhateful,
        cfg.analysis.by_community,
        &opts,
    )?);
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    run.write(COMPARISONS_CSV, &csv)?;
    run.write_json(COMPARISONS_JSON, &report)?;
    let md = format!(
        "## Reentry vs. no reentry\n\n{}\n## Hateful vs. non-hateful reentry\n\n{}",
        report.to_markdown(Grouping::ReentryVsNo),
        report.to_markdown(Grouping::HatefulVsNonhateful)
    );
    run.write(COMPARISONS_MD, md.as_bytes())?;
    run.finish()
}

fn split(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "split")?;
    let pairs: Vec<PairRecord> = read_jsonl(&run.input(PAIRS)?)?;
    let s = &cfg.split;
    let assignment = if s.stratified {
        let items: Vec<(String, OutcomeLabel)> = pairs.iter().map(|p| (p.pair_id(), p.outcome)).collect();
        split_stratified(&items, s.ratio, s.seed)?
    } else {
        let ids: Vec<String> = pairs.iter().map(PairRecord::pair_id).collect();
        split_corpus(&ids, s.ratio, s.seed)?
    };
    run.write_json(SPLIT, &assignment)?;
    run.finish()
}

fn partition(pairs: Vec<PairRecord>, split: &SplitAssignment) -> (Vec<PairRecord>, Vec<PairRecord>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for p in pairs {
        let id = p.pair_id();
        if split.train.contains(&id) {
            train.push(p);
        } else if split.test.contains(&id) {
            test.push(p);
        }
    }
    test.sort_by_key(PairRecord::pair_id);
    (train, test)
}

fn train(cfg: &RunConfig) -> Result<Manifest> {
    let variant = cfg.forecast.variant;
    let mut run = StageRun::begin(cfg, &format!("train_{}", variant.as_str()))?;
    let pairs: Vec<PairRecord> = read_jsonl(&run.input(PAIRS)?)?;
    let split: SplitAssignment = read_json(&run.input(SPLIT)?)?;
    let (train, _) = partition(pairs, &split);
    let f = &cfg.forecast;
    for stage in [Stage::Reentry, Stage::ReentryType, Stage::ThreeWay] {
        let model = train_stage(stage, &train, variant, &f.model, &f.separator)?;
        run.write_json(&model_path(variant, stage), &model)?;
    }
    let labels: Vec<usize> = train.iter().map(|p| p.outcome.index()).collect();
    let base = majority_baseline(&labels, 3)?;
    let baseline = StageModel {
        stage: Stage::ThreeWay,
        variant,
        model: TrainedModel::Constant {
            label: base.label,
            classes: 3,
        },
    };
    run.write_json(&baseline_path(variant), &baseline)?;
    run.finish()
}

fn load_model(run: &mut StageRun, rel: &str) -> Result<StageModel> {
    read_json(&run.input(rel)?)
}

fn predict(cfg: &RunConfig, strategies: &[Strategy]) -> Result<Manifest> {
    let variant = cfg.forecast.variant;
    let mut run = StageRun::begin(cfg, &format!("predict_{}", variant.as_str()))?;
    let pairs: Vec<PairRecord> = read_jsonl(&run.input(PAIRS)?)?;
    let split: SplitAssignment = read_json(&run.input(SPLIT)?)?;
    let (_, test) = partition(pairs, &split);
    let inputs: Vec<String> = test
        .iter()
        .map(|p| make_input(p, variant, &cfg.forecast.separator))
        .collect::<Result<_>>()?;
    let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
    for &strategy in strategies {
        let predicted = match strategy {
            Strategy::ThreeWay => {
                let m = load_model(&mut run, &model_path(variant, Stage::ThreeWay))?;
                predict_three_way_batch(&m, &refs)?
            }
            Strategy::Baseline => {
                let m = load_model(&mut run, &baseline_path(variant))?;
                predict_three_way_batch(&m, &refs)?
            }
            Strategy::TwoStage => {
                let s1 = load_model(&mut run, &model_path(variant, Stage::Reentry))?;
                let s2 = load_model(&mut run, &model_path(variant, Stage::ReentryType))?;
                let gold: Vec<OutcomeLabel> = test.iter().map(|p| p.outcome).collect();
                predict_two_stage_batch(&s1, &s2, &refs, cfg.forecast.routing, Some(&gold))?
            }
        };
        let records: Vec<PredictionRecord> = test
            .iter()
            .zip(predicted)
            .map(|(p, pr)| PredictionRecord {
                pair_id: p.pair_id(),
                strategy,
                variant,
                predicted: pr.label,
                scores: pr.scores,
            })
            .collect();
        run.write_jsonl(&predictions_path(strategy, variant), &records)?;
    }
    run.finish()
}

/// Metrics for one prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub strategy: Option<Strategy>,
    pub variant: Option<InputVariant>,
    pub items: usize,
    /// Three outcome classes.
    pub three_way: MetricsReport,
    /// Outcomes collapsed to no reentry / reentry.
    pub reentry: MetricsReport,
}

const REENTRY_CLASSES: [&str; 2] = ["no_reentry", "reentry"];

fn collapse(o: OutcomeLabel) -> &'static str {
    REENTRY_CLASSES[usize::from(o.is_reentry())]
}

pub fn evaluate_labels(gold: &[OutcomeLabel], pred: &[OutcomeLabel]) -> Result<(MetricsReport, MetricsReport)> {
    let three = prf(&confusion(gold, pred, &OutcomeLabel::ALL)?)?;
    let g2: Vec<&str> = gold.iter().map(|o| collapse(*o)).collect();
    let p2: Vec<&str> = pred.iter().map(|o| collapse(*o)).collect();
    let two = prf(&confusion(&g2, &p2, &REENTRY_CLASSES)?)?;
    Ok((three, two))
}

/// Aligns predictions with gold outcomes by pair id.
fn align(gold: &BTreeMap<String, OutcomeLabel>, preds: &[PredictionRecord], what: &Path) -> Result<Vec<OutcomeLabel>> {
    preds
        .iter()
        .map(|p| {
            gold.get(&p.pair_id).copied().ok_or_else(|| {
                Error::InvalidInput(format!("{}: pair {} has no gold label", what.display(), p.pair_id))
            })
        })
        .collect()
}

fn evaluation_markdown(evals: &[Evaluation]) -> String {
    let mut s = String::new();
    if let Some(first) = evals.first() {
        s.push_str("### Reentry prediction\n\n");
        s.push_str(&first.reentry.markdown_header());
        s.push('\n');
        for e in evals {
            s.push_str(&e.reentry.markdown_row(e.strategy.map(Strategy::as_str).unwrap_or("model")));
            s.push('\n');
        }
        s.push_str("\n### 3-way prediction\n\n");
        s.push_str(&first.three_way.markdown_header());
        s.push('\n');
        for e in evals {
            s.push_str(&e.three_way.markdown_row(e.strategy.map(Strategy::as_str).unwrap_or("model")));
            s.push('\n');
        }
    }
    s
}

fn gold_map(pairs: &[PairRecord]) -> BTreeMap<String, OutcomeLabel> {
    pairs.iter().map(|p| (p.pair_id(), p.outcome)).collect()
}

fn evaluate(cfg: &RunConfig, strategies: &[Strategy]) -> Result<Manifest> {
    let variant = cfg.forecast.variant;
    let mut run = StageRun::begin(cfg, &format!("evaluate_{}", variant.as_str()))?;
    let gold = gold_map(&read_jsonl::<PairRecord>(&run.input(PAIRS)?)?);
    let mut evals = Vec::new();
    for &strategy in strategies {
        let rel = predictions_path(strategy, variant);
        let path = run.input(&rel)?;
        let preds: Vec<PredictionRecord> = read_jsonl(&path)?;
        let g = align(&gold, &preds, &path)?;
        let p: Vec<OutcomeLabel> = preds.iter().map(|r| r.predicted).collect();
        let (three_way, reentry) = evaluate_labels(&g, &p)?;
        let e = Evaluation {
            strategy: Some(strategy),
            variant: Some(variant),
            items: preds.len(),
            three_way,
            reentry,
        };
        run.write_json(&metrics_path(strategy, variant), &e)?;
        evals.push(e);
    }
    run.write(&metrics_md_path(variant), evaluation_markdown(&evals).as_bytes())?;
    run.finish()
}

/// Gold file line: a `pairs.jsonl` row or any object with `pair_id` and
/// `outcome`.
#[derive(Debug, Deserialize)]
struct GoldLine {
    pair_id: Option<String>,
    hs_id: Option<String>,
    cs_id: Option<String>,
    outcome: OutcomeLabel,
}

fn read_gold(path: &Path) -> Result<BTreeMap<String, OutcomeLabel>> {
    read_jsonl::<GoldLine>(path)?
        .into_iter()
        .map(|g| {
            let id = match (g.pair_id, g.hs_id, g.cs_id) {
                (Some(id), _, _) => id,
                (None, Some(h), Some(c)) => crate::outcomes::pair_id(&h, &c),
                _ => return Err(Error::InvalidInput(format!("{}: gold line without a pair id", path.display()))),
            };
            Ok((id, g.outcome))
        })
        .collect()
}

/// Result of `evaluate --gold --pred [--compare]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEvaluation {
    pub pred: Evaluation,
    pub compare: Option<Evaluation>,
    /// McNemar on 3-way correctness, `pred` as model A.
    pub mcnemar: Option<McNemarResult>,
}

fn evaluate_files(cfg: &RunConfig, gold: &Path, pred: &Path, other: Option<&Path>) -> Result<Manifest> {
    let mut run = StageRun::begin(cfg, "evaluate_files")?;
    run.external_input(&gold.display().to_string(), gold)?;
    run.external_input(&pred.display().to_string(), pred)?;
    let gold_map = read_gold(gold)?;
    let one = |path: &Path| -> Result<(Evaluation, Vec<PredictionRecord>)> {
        let preds: Vec<PredictionRecord> = read_jsonl(path)?;
        let g = align(&gold_map, &preds, path)?;
        let p: Vec<OutcomeLabel> = preds.iter().map(|r| r.predicted).collect();
        let (three_way, reentry) = evaluate_labels(&g, &p)?;
        let strategy = preds.first().map(|r| r.strategy);
        let variant = preds.first().map(|r| r.variant);
        Ok((
            Evaluation {
                strategy,
                variant,
                items: preds.len(),
                three_way,
                reentry,
            },
            preds,
        ))
    };
    let (a, a_preds) = one(pred)?;
    let (compare, mc) = match other {
        Some(q) => {
            run.external_input(&q.display().to_string(), q)?;
            let (b, b_preds) = one(q)?;
            let mc = mcnemar_between(&gold_map, &a_preds, &b_preds)?;
            (Some(b), Some(mc))
        }
        None => (None, None),
    };
    let mut md = evaluation_markdown(std::slice::from_ref(&a));
    if let Some(b) = &compare {
        md = evaluation_markdown(&[a.clone(), b.clone()]);
    }
    if let Some(m) = &mc {
        md.push_str(&format!("\n{}", mcnemar_markdown(&[("A vs B".to_owned(), *m)])));
    }
    let result = FileEvaluation { pred: a, compare, mcnemar: mc };
    run.write_json("metrics/files.json", &result)?;
    run.write("metrics/files.md", md.as_bytes())?;
    print!("{md}");
    run.finish()
}

fn mcnemar_between(
    gold: &BTreeMap<String, OutcomeLabel>,
    a: &[PredictionRecord],
    b: &[PredictionRecord],
) -> Result<McNemarResult> {
    let bmap: HashMap<&str, OutcomeLabel> = b.iter().map(|r| (r.pair_id.as_str(), r.predicted)).collect();
    let mut g = Vec::new();
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    for r in a {
        let other = bmap
            .get(r.pair_id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("pair {} predicted by only one model", r.pair_id)))?;
        let gl = gold
            .get(&r.pair_id)
            .ok_or_else(|| Error::InvalidInput(format!("pair {} has no gold label", r.pair_id)))?;
        g.push(*gl);
        pa.push(r.predicted);
        pb.push(*other);
    }
    if bmap.len() != a.len() {
        return Err(Error::InvalidInput("prediction files cover different pairs".into()));
    }
    mcnemar(&g, &pa, &pb)
}

fn mcnemar_markdown(rows: &[(String, McNemarResult)]) -> String {
    let mut s = String::from("| Comparison | b | c | Statistic | p | Method |\n|---|---:|---:|---:|---:|---|\n");
    for (name, m) in rows {
        s.push_str(&format!(
            "| {name} | {} | {} | {} | {:.4} | {} |\n",
            m.b,
            m.c,
            eval::fmt2(m.statistic),
            m.p_value,
            serde_json::to_value(m.method).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
        ));
    }
    s
}

/// One row of `mcnemar/*.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub a: Strategy,
    pub b: Strategy,
    pub result: McNemarResult,
}

fn compare(cfg: &RunConfig, strategies: &[Strategy]) -> Result<Manifest> {
    let variant = cfg.forecast.variant;
    if strategies.len() < 2 {
        return Err(Error::config("--strategy", "compare needs at least two strategies"));
    }
    let mut run = StageRun::begin(cfg, &format!("compare_{}", variant.as_str()))?;
    let gold = gold_map(&read_jsonl::<PairRecord>(&run.input(PAIRS)?)?);
    let mut preds = Vec::new();
    for &s in strategies {
        preds.push((s, read_jsonl::<PredictionRecord>(&run.input(&predictions_path(s, variant))?)?));
    }
    let mut rows = Vec::new();
    for i in 0..preds.len() {
        for j in i + 1..preds.len() {
            rows.push(ModelComparison {
                a: preds[i].0,
                b: preds[j].0,
                result: mcnemar_between(&gold, &preds[i].1, &preds[j].1)?,
            });
        }
    }
    run.write_json(&mcnemar_path(variant), &rows)?;
    let md_rows: Vec<(String, McNemarResult)> = rows
        .iter()
        .map(|r| (format!("{} vs {}", r.a.as_str(), r.b.as_str()), r.result))
        .collect();
    run.write(&mcnemar_md_path(variant), mcnemar_markdown(&md_rows).as_bytes())?;
    run.finish()
}

fn report(cfg: &RunConfig) -> Result<Manifest> {
    let out = cfg.out_dir();
    let manifests: Vec<Manifest> = read_manifests(&out)?
        .into_iter()
        .filter(|m| m.stage != "report")
        .collect();
    if manifests.is_empty() {
        return Err(Error::MissingArtifact(out.join(MANIFEST_DIR)));
    }
    check_consistent(&out, &manifests)?;
    let mut run = StageRun::begin(cfg, "report")?;
    let mut sections: Vec<(String, String)> = Vec::new();
    let mut add = |title: &str, rel: &str, run: &mut StageRun| -> Result<()> {
        if out.join(rel).exists() {
            let text = fs::read_to_string(run.input(rel)?).map_err(|e| Error::file(out.join(rel), e))?;
            sections.push((title.to_owned(), text));
        }
        Ok(())
    };
    add("Corpus", SUMMARY_MD, &mut run)?;
    add("Linguistic comparisons", COMPARISONS_MD, &mut run)?;
    for v in InputVariant::ALL {
        add(&format!("Prediction ({} input)", v.as_str()), &metrics_md_path(v), &mut run)?;
        add(&format!("Model comparison ({} input)", v.as_str()), &mcnemar_md_path(v), &mut run)?;
    }
    let mut md = String::from("# Run report\n");
    for (title, body) in sections {
        md.push_str(&format!("\n## {title}\n\n{body}"));
    }
    run.write(REPORT, md.as_bytes())?;
    run.finish()
}

/// Serializes rows as JSON lines; exposed for tools that build artifacts.
pub fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    to_jsonl(rows)
}
