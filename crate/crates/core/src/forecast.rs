//! Hater-reaction prediction: a two-stage cascade (reentry, then reentry
//! type) against a single 3-way classifier, over three input variants.
//!
//! Training of stage 2 sees only true reentry pairs. At prediction time the
//! cascade routes by stage-1 output, so stage-1 errors propagate.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classify::{
    train_ngram, ClassifierKind, ClassifierSpec, ConstantClassifier, Decision, NgramModel, RemoteClassifier,
    RemoteConfig, Task, TextClassifier, POSITIVE,
};
use crate::error::{Error, Result};
use crate::outcomes::{OutcomeLabel, PairRecord};

pub const DEFAULT_SEPARATOR: &str = "[SEP]";

/// Items per parallel prediction chunk.
const PREDICT_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InputVariant {
    #[serde(rename = "hs")]
    HsOnly,
    #[serde(rename = "cs")]
    CounterOnly,
    #[serde(rename = "pair")]
    Pair,
}

impl InputVariant {
    pub const ALL: [InputVariant; 3] = [InputVariant::HsOnly, InputVariant::CounterOnly, InputVariant::Pair];

    pub fn as_str(self) -> &'static str {
        match self {
            InputVariant::HsOnly => "hs",
            InputVariant::CounterOnly => "cs",
            InputVariant::Pair => "pair",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

/// Model input text for one pair.
pub fn make_input(pair: &PairRecord, variant: InputVariant, separator: &str) -> Result<String> {
    let need = |text: &str, what: &str| {
        if text.trim().is_empty() {
            Err(Error::InvalidInput(format!("pair {} has no {what} text", pair.pair_id())))
        } else {
            Ok(())
        }
    };
    match variant {
        InputVariant::HsOnly => {
            need(&pair.hs_text, "hate speech")?;
            Ok(pair.hs_text.clone())
        }
        InputVariant::CounterOnly => {
            need(&pair.cs_text, "counterspeech")?;
            Ok(pair.cs_text.clone())
        }
        InputVariant::Pair => {
            need(&pair.hs_text, "hate speech")?;
            need(&pair.cs_text, "counterspeech")?;
            Ok(format!("{} {separator} {}", pair.hs_text, pair.cs_text))
        }
    }
}

/// Train/test partition of pair ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
    pub seed: u64,
    pub ratio: f64,
}

fn check_split_args(n: usize, ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config("split.ratio", format!("{ratio} not in (0,1)")));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("cannot split {n} items")));
    }
    Ok(())
}

fn sorted_unique(ids: &[String]) -> Result<Vec<String>> {
    let mut v = ids.to_vec();
    v.sort();
    if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateId(w[0].clone()));
    }
    Ok(v)
}

/// Uniform random split with `|train| = round(ratio * N)`.
///
/// Ids are sorted before shuffling, so the result depends only on the id
/// set, `ratio` and `seed`.
pub fn split_corpus(ids: &[String], ratio: f64, seed: u64) -> Result<SplitAssignment> {
    check_split_args(ids.len(), ratio)?;
    let mut v = sorted_unique(ids)?;
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * v.len() as f64).round() as usize;
    let test = v.split_off(n_train);
    Ok(SplitAssignment {
        train: v.into_iter().collect(),
        test: test.into_iter().collect(),
        seed,
        ratio,
    })
}

/// Split that applies `ratio` within each outcome class. The train size is
/// the sum of per-class rounded sizes and may differ from `round(ratio * N)`
/// by up to one per class.
pub fn split_stratified(items: &[(String, OutcomeLabel)], ratio: f64, seed: u64) -> Result<SplitAssignment> {
    check_split_args(items.len(), ratio)?;
    let ids: Vec<String> = items.iter().map(|(id, _)| id.clone()).collect();
    sorted_unique(&ids)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (BTreeSet::new(), BTreeSet::new());
    for class in OutcomeLabel::ALL {
        let mut members: Vec<String> = items
            .iter()
            .filter(|(_, l)| *l == class)
            .map(|(id, _)| id.clone())
            .collect();
        members.sort();
        members.shuffle(&mut rng);
        let k = (ratio * members.len() as f64).round() as usize;
        let rest = members.split_off(k);
        train.extend(members);
        test.extend(rest);
    }
    Ok(SplitAssignment { train, test, seed, ratio })
}

/// The three learning problems used by the two strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Binary: did the hater come back (1) or not (0)?
    Reentry,
    /// Binary over reentry pairs only: hateful (1) or non-hateful (0)?
    ReentryType,
    ThreeWay,
}

impl Stage {
    pub fn task(self) -> Task {
        match self {
            Stage::Reentry => Task::Reentry,
            Stage::ReentryType => Task::ReentryType,
            Stage::ThreeWay => Task::ThreeWay,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.task().as_str()
    }

    /// Class index for `outcome`, or `None` when the stage does not train on it.
    pub fn label(self, outcome: OutcomeLabel) -> Option<usize> {
        match (self, outcome) {
            (Stage::Reentry, o) => Some(usize::from(o.is_reentry())),
            (Stage::ReentryType, OutcomeLabel::NoReentry) => None,
            (Stage::ReentryType, o) => Some(usize::from(o == OutcomeLabel::HatefulReentry)),
            (Stage::ThreeWay, o) => Some(o.index()),
        }
    }
}

/// Model kind plus parameters, without a task; the stage supplies the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
}

impl ModelSpec {
    pub fn ngram() -> Self {
        ModelSpec {
            kind: ClassifierKind::Ngram,
            parameters: Map::new(),
        }
    }

    pub fn for_stage(&self, stage: Stage) -> ClassifierSpec {
        ClassifierSpec {
            kind: self.kind,
            task: stage.task(),
            parameters: self.parameters.clone(),
        }
    }
}

/// A ready-to-run model as stored in `models/*.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Ngram { model: NgramModel },
    Constant { label: usize, classes: usize },
    Remote { config: RemoteConfig, task: Task },
}

impl TextClassifier for TrainedModel {
    fn class_count(&self) -> usize {
        match self {
            TrainedModel::Ngram { model } => model.class_count(),
            TrainedModel::Constant { classes, .. } => *classes,
            TrainedModel::Remote { task, .. } => task.class_count(),
        }
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        match self {
            TrainedModel::Ngram { model } => model.classify_batch(texts),
            TrainedModel::Constant { label, classes } => ConstantClassifier {
                label: *label,
                classes: *classes,
            }
            .classify_batch(texts),
            TrainedModel::Remote { config, task } => {
                RemoteClassifier::new(config.clone(), *task).classify_batch(texts)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    pub stage: Stage,
    pub variant: InputVariant,
    pub model: TrainedModel,
}

impl TextClassifier for StageModel {
    fn class_count(&self) -> usize {
        self.model.class_count()
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        self.model.classify_batch(texts)
    }
}

/// Inputs and labels a stage trains on.
pub fn stage_examples(
    stage: Stage,
    pairs: &[PairRecord],
    variant: InputVariant,
    separator: &str,
) -> Result<(Vec<String>, Vec<usize>)> {
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    for p in pairs {
        if let Some(l) = stage.label(p.outcome) {
            texts.push(make_input(p, variant, separator)?);
            labels.push(l);
        }
    }
    Ok((texts, labels))
}

/// Trains (or, for remote kinds, binds) the model for one stage.
pub fn train_stage(
    stage: Stage,
    train: &[PairRecord],
    variant: InputVariant,
    spec: &ModelSpec,
    separator: &str,
) -> Result<StageModel> {
    let field = format!("forecast.{}", stage.as_str());
    let cspec = spec.for_stage(stage);
    let model = match spec.kind {
        ClassifierKind::Ngram => {
            let (texts, labels) = stage_examples(stage, train, variant, separator)?;
            if texts.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no training pairs for stage {}",
                    stage.as_str()
                )));
            }
            let hyper = cspec.ngram_hyper(&field)?;
            TrainedModel::Ngram {
                model: train_ngram(&texts, &labels, stage.task().class_count(), &hyper)?,
            }
        }
        ClassifierKind::Remote => TrainedModel::Remote {
            config: cspec.remote_config(&field)?,
            task: stage.task(),
        },
        ClassifierKind::Lexicon => {
            return Err(Error::config(
                format!("{field}.kind"),
                "lexicon classifiers cannot be used for reaction prediction",
            ))
        }
    };
    Ok(StageModel { stage, variant, model })
}

/// Most frequent label, ties to the lowest index.
pub fn majority_label(labels: &[usize], classes: usize) -> Result<usize> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("majority of an empty label set".into()));
    }
    let mut counts = vec![0usize; classes];
    for &l in labels {
        *counts
            .get_mut(l)
            .ok_or_else(|| Error::InvalidInput(format!("label {l} out of range")))? += 1;
    }
    let best = *counts.iter().max().expect("classes > 0");
    Ok(counts.iter().position(|&c| c == best).expect("max exists"))
}

/// Constant predictor of the most frequent training label.
pub fn majority_baseline(labels: &[usize], classes: usize) -> Result<ConstantClassifier> {
    Ok(ConstantClassifier {
        label: majority_label(labels, classes)?,
        classes,
    })
}

/// Classifies in parallel chunks, preserving input order.
pub fn classify_parallel(model: &dyn TextClassifier, texts: &[&str]) -> Result<Vec<Decision>> {
    let chunks: Vec<Vec<Decision>> = texts
        .par_chunks(PREDICT_CHUNK)
        .map(|c| model.classify_batch(c))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn three_way_label(d: &Decision) -> Result<OutcomeLabel> {
    OutcomeLabel::from_index(d.label)
        .ok_or_else(|| Error::Protocol(format!("3-way model produced class {}", d.label)))
}

fn type_label(d: &Decision) -> OutcomeLabel {
    if d.label == POSITIVE {
        OutcomeLabel::HatefulReentry
    } else {
        OutcomeLabel::NonHatefulReentry
    }
}

pub fn predict_three_way(model: &dyn TextClassifier, text: &str) -> Result<OutcomeLabel> {
    three_way_label(&model.classify(text)?)
}

/// Cascade for one text; stage 2 runs only when stage 1 says reentry.
pub fn predict_two_stage(stage1: &dyn TextClassifier, stage2: &dyn TextClassifier, text: &str) -> Result<OutcomeLabel> {
    if !stage1.classify(text)?.is_positive() {
        return Ok(OutcomeLabel::NoReentry);
    }
    Ok(type_label(&stage2.classify(text)?))
}

/// One prediction with the scores behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicted {
    pub label: OutcomeLabel,
    /// 3-way: class probabilities. Cascade: stage-1 scores, followed by
    /// stage-2 scores when stage 2 was consulted.
    pub scores: Vec<f64>,
    pub consulted_stage2: bool,
}

pub fn predict_three_way_batch(model: &dyn TextClassifier, texts: &[&str]) -> Result<Vec<Predicted>> {
    classify_parallel(model, texts)?
        .into_iter()
        .map(|d| {
            Ok(Predicted {
                label: three_way_label(&d)?,
                scores: d.scores,
                consulted_stage2: false,
            })
        })
        .collect()
}

/// Which items reach stage 2 of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    /// By stage-1 output, as deployed.
    #[default]
    Predicted,
    /// By gold reentry status: a diagnostic that isolates stage 2.
    Gold,
}

/// Batched cascade. `gold` is required for [`Routing::Gold`].
pub fn predict_two_stage_batch(
    stage1: &dyn TextClassifier,
    stage2: &dyn TextClassifier,
    texts: &[&str],
    routing: Routing,
    gold: Option<&[OutcomeLabel]>,
) -> Result<Vec<Predicted>> {
    let first: Vec<Decision> = match routing {
        Routing::Predicted => classify_parallel(stage1, texts)?,
        Routing::Gold => {
            let gold = gold.ok_or_else(|| Error::InvalidInput("gold routing needs gold labels".into()))?;
            if gold.len() != texts.len() {
                return Err(Error::InvalidInput("gold labels and texts differ in length".into()));
            }
            gold.iter()
                .map(|g| Decision::one_hot(usize::from(g.is_reentry()), 2))
                .collect()
        }
    };
    let routed: Vec<usize> = (0..texts.len()).filter(|&i| first[i].is_positive()).collect();
    let routed_texts: Vec<&str> = routed.iter().map(|&i| texts[i]).collect();
    let second = classify_parallel(stage2, &routed_texts)?;
    let mut second = routed.into_iter().zip(second).peekable();
    let mut out = Vec::with_capacity(texts.len());
    for (i, d1) in first.into_iter().enumerate() {
        match second.next_if(|(j, _)| *j == i) {
            Some((_, d2)) => out.push(Predicted {
                label: type_label(&d2),
                scores: d1.scores.into_iter().chain(d2.scores).collect(),
                consulted_stage2: true,
            }),
            None => out.push(Predicted {
                label: OutcomeLabel::NoReentry,
                scores: d1.scores,
                consulted_stage2: false,
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    TwoStage,
    ThreeWay,
    Baseline,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::TwoStage => "two_stage",
            Strategy::ThreeWay => "three_way",
            Strategy::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Strategy::TwoStage, Strategy::ThreeWay, Strategy::Baseline]
            .into_iter()
            .find(|x| x.as_str() == s)
    }
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub strategy: Strategy,
    pub variant: InputVariant,
    pub predicted: OutcomeLabel,
    pub scores: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcomes::Community;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn pair(i: usize, hs: &str, cs: &str, outcome: OutcomeLabel) -> PairRecord {
        PairRecord {
            hs_id: format!("h{i}"),
            cs_id: format!("c{i}"),
            hs_text: hs.into(),
            cs_text: cs.into(),
            outcome,
            reentry_id: None,
            subreddit: "s".into(),
            community: Community::Discussion,
        }
    }

    #[test]
    fn inputs_by_variant() {
        let p = pair(0, "h", "c", OutcomeLabel::NoReentry);
        assert_eq!(make_input(&p, InputVariant::Pair, "[SEP]").unwrap(), "h [SEP] c");
        assert_eq!(make_input(&p, InputVariant::HsOnly, "[SEP]").unwrap(), "h");
        assert_eq!(make_input(&p, InputVariant::CounterOnly, "[SEP]").unwrap(), "c");
        let empty = pair(1, "h", "", OutcomeLabel::NoReentry);
        let err = make_input(&empty, InputVariant::Pair, "[SEP]").unwrap_err();
        assert!(err.to_string().contains("h1:c1"));
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:03}")).collect()
    }

    #[test]
    fn split_sizes_and_errors() {
        let s = split_corpus(&ids(10), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert!(s.train.is_disjoint(&s.test));
        assert_eq!(s, split_corpus(&ids(10), 0.8, 1).unwrap());
        assert!(split_corpus(&ids(1), 0.8, 1).is_err());
        assert!(split_corpus(&ids(5), 1.0, 1).is_err());
        assert!(split_corpus(&["a".into(), "a".into()], 0.5, 1).is_err());
    }

    #[test]
    fn stratified_split_keeps_class_shares() {
        let items: Vec<(String, OutcomeLabel)> = (0..100)
            .map(|i| {
                let l = if i < 50 {
                    OutcomeLabel::NoReentry
                } else if i < 80 {
                    OutcomeLabel::HatefulReentry
                } else {
                    OutcomeLabel::NonHatefulReentry
                };
                (format!("p{i}"), l)
            })
            .collect();
        let s = split_stratified(&items, 0.8, 3).unwrap();
        let label: HashMap<&str, OutcomeLabel> = items.iter().map(|(i, l)| (i.as_str(), *l)).collect();
        let hateful_train = s.train.iter().filter(|i| label[i.as_str()] == OutcomeLabel::HatefulReentry).count();
        assert_eq!(hateful_train, 24);
        assert_eq!(s.train.len() + s.test.len(), 100);
    }

    #[test]
    fn stage_labels() {
        use OutcomeLabel::*;
        assert_eq!(Stage::Reentry.label(NoReentry), Some(0));
        assert_eq!(Stage::Reentry.label(HatefulReentry), Some(1));
        assert_eq!(Stage::Reentry.label(NonHatefulReentry), Some(1));
        assert_eq!(Stage::ReentryType.label(NoReentry), None);
        assert_eq!(Stage::ReentryType.label(HatefulReentry), Some(1));
        assert_eq!(Stage::ThreeWay.label(NonHatefulReentry), Some(2));
    }

    #[test]
    fn reentry_type_filters_and_requires_reentry() {
        let pairs = vec![
            pair(0, "a", "b", OutcomeLabel::NoReentry),
            pair(1, "a", "b", OutcomeLabel::HatefulReentry),
            pair(2, "a", "b", OutcomeLabel::NonHatefulReentry),
            pair(3, "a", "b", OutcomeLabel::HatefulReentry),
        ];
        let (texts, _) = stage_examples(Stage::ReentryType, &pairs, InputVariant::Pair, "[SEP]").unwrap();
        assert_eq!(texts.len(), 3);
        assert!(train_stage(Stage::ReentryType, &pairs[..1], InputVariant::Pair, &ModelSpec::ngram(), "[SEP]").is_err());
    }

    #[test]
    fn single_class_three_way_is_constant() {
        let pairs: Vec<PairRecord> = (0..4).map(|i| pair(i, "x", "y", OutcomeLabel::HatefulReentry)).collect();
        let m = train_stage(Stage::ThreeWay, &pairs, InputVariant::Pair, &ModelSpec::ngram(), "[SEP]").unwrap();
        assert_eq!(predict_three_way(&m, "anything").unwrap(), OutcomeLabel::HatefulReentry);
    }

    #[test]
    fn majority_and_ties() {
        assert_eq!(majority_label(&[2, 2, 2, 1, 0], 3).unwrap(), 2);
        assert_eq!(majority_label(&[1, 0], 2).unwrap(), 0);
        assert_eq!(majority_label(&[2, 1, 1, 2], 3).unwrap(), 1);
        assert!(majority_label(&[], 2).is_err());
        let reentry: Vec<usize> = (0..100).map(|i| usize::from(i < 69)).collect();
        assert_eq!(majority_baseline(&reentry, 2).unwrap().label, 1);
    }

    /// Answers from a lookup table keyed by text.
    struct Table(HashMap<String, usize>, usize);

    impl TextClassifier for Table {
        fn class_count(&self) -> usize {
            self.1
        }
        fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
            Ok(texts.iter().map(|t| Decision::one_hot(self.0[*t], self.1)).collect())
        }
    }

    /// Panics if consulted.
    struct Untouchable;

    impl TextClassifier for Untouchable {
        fn class_count(&self) -> usize {
            2
        }
        fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
            assert!(texts.is_empty(), "stage 2 consulted");
            Ok(Vec::new())
        }
    }

    #[test]
    fn cascade_short_circuits() {
        let no = ConstantClassifier { label: 0, classes: 2 };
        assert_eq!(predict_two_stage(&no, &Untouchable, "t").unwrap(), OutcomeLabel::NoReentry);
        let out = predict_two_stage_batch(&no, &Untouchable, &["a", "b"], Routing::Predicted, None).unwrap();
        assert!(out.iter().all(|p| p.label == OutcomeLabel::NoReentry && !p.consulted_stage2));
        let yes = ConstantClassifier { label: 1, classes: 2 };
        assert_eq!(predict_two_stage(&yes, &yes, "t").unwrap(), OutcomeLabel::HatefulReentry);
        let out = predict_two_stage_batch(&yes, &no, &["a"], Routing::Predicted, None).unwrap();
        assert_eq!(out[0].label, OutcomeLabel::NonHatefulReentry);
        assert_eq!(out[0].scores, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn gold_routing_ignores_stage1() {
        let no = ConstantClassifier { label: 0, classes: 2 };
        let yes = ConstantClassifier { label: 1, classes: 2 };
        let gold = [OutcomeLabel::HatefulReentry, OutcomeLabel::NoReentry];
        let out = predict_two_stage_batch(&no, &yes, &["a", "b"], Routing::Gold, Some(&gold)).unwrap();
        assert_eq!(out[0].label, OutcomeLabel::HatefulReentry);
        assert_eq!(out[1].label, OutcomeLabel::NoReentry);
        assert!(predict_two_stage_batch(&no, &yes, &["a"], Routing::Gold, None).is_err());
    }

    /// Fixed 50 items with stage decisions corrupted at known positions.
    #[test]
    fn composed_confusion_matches_hand_composition() {
        let golds: Vec<OutcomeLabel> = (0..50).map(|i| OutcomeLabel::ALL[i % 3]).collect();
        let texts: Vec<String> = (0..50).map(|i| format!("t{i}")).collect();
        let mut s1 = HashMap::new();
        let mut s2 = HashMap::new();
        for (i, g) in golds.iter().enumerate() {
            let mut r = usize::from(g.is_reentry());
            if i % 7 == 0 {
                r = 1 - r;
            }
            let mut h = usize::from(*g == OutcomeLabel::HatefulReentry);
            if i % 5 == 0 {
                h = 1 - h;
            }
            s1.insert(texts[i].clone(), r);
            s2.insert(texts[i].clone(), h);
        }
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let (t1, t2) = (Table(s1.clone(), 2), Table(s2.clone(), 2));
        let got = predict_two_stage_batch(&t1, &t2, &refs, Routing::Predicted, None).unwrap();
        let mut expected = [[0u64; 3]; 3];
        let mut actual = [[0u64; 3]; 3];
        for i in 0..50 {
            let hand = match (s1[&texts[i]], s2[&texts[i]]) {
                (0, _) => OutcomeLabel::NoReentry,
                (_, 1) => OutcomeLabel::HatefulReentry,
                _ => OutcomeLabel::NonHatefulReentry,
            };
            expected[golds[i].index()][hand.index()] += 1;
            actual[golds[i].index()][got[i].label.index()] += 1;
        }
        assert_eq!(actual, expected);
    }

    proptest! {
        #[test]
        fn split_is_order_independent(n in 2usize..60, seed in any::<u64>(), shuffle_seed in any::<u64>(), ratio in 0.05f64..0.95) {
            let base = ids(n);
            let mut permuted = base.clone();
            permuted.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
            let a = split_corpus(&base, ratio, seed).unwrap();
            let b = split_corpus(&permuted, ratio, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.train.len(), (ratio * n as f64).round() as usize);
            prop_assert!(a.train.is_disjoint(&a.test));
            prop_assert_eq!(a.train.len() + a.test.len(), n);
        }

        #[test]
        fn cascade_no_rate_equals_stage1_no_rate(bits in prop::collection::vec((0usize..2, 0usize..2), 1..40)) {
            let texts: Vec<String> = (0..bits.len()).map(|i| format!("x{i}")).collect();
            let s1 = Table(texts.iter().cloned().zip(bits.iter().map(|b| b.0)).collect(), 2);
            let s2 = Table(texts.iter().cloned().zip(bits.iter().map(|b| b.1)).collect(), 2);
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let out = predict_two_stage_batch(&s1, &s2, &refs, Routing::Predicted, None).unwrap();
            let no_out = out.iter().filter(|p| p.label == OutcomeLabel::NoReentry).count();
            let no_s1 = bits.iter().filter(|b| b.0 == 0).count();
            prop_assert_eq!(no_out, no_s1);
        }
    }
}
