//! Classifier abstraction shared by corpus labeling and reaction prediction.
//!
//! Three backends implement [`TextClassifier`]: a lexicon-ratio detector, an
//! embedded hashed n-gram logistic model, and an HTTP adapter for remote
//! models. [`Ensemble`] combines binary members with a unanimity rule.

mod ensemble;
mod lexicon;
mod ngram;
mod remote;
pub mod stub;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use ensemble::{ensemble_consensus, Ensemble};
pub use lexicon::{classify_lexicon, LexiconClassifier};
pub use ngram::{predict_ngram, train_ngram, NgramHyper, NgramModel};
pub use remote::{remote_classify, ClassifyRequest, ClassifyResponse, RemoteClassifier, RemoteConfig};

/// Tolerance for a score vector summing to one.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-6;

/// A lexicon path with this prefix names a bundled detector instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

/// Index of the positive class for binary tasks.
pub const POSITIVE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Hate,
    Counter,
    Reentry,
    ReentryType,
    ThreeWay,
}

impl Task {
    pub fn class_count(self) -> usize {
        match self {
            Task::ThreeWay => 3,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Hate => "hate",
            Task::Counter => "counter",
            Task::Reentry => "reentry",
            Task::ReentryType => "reentry_type",
            Task::ThreeWay => "three_way",
        }
    }
}

/// Model output for one text: a class index and a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: usize,
    pub scores: Vec<f64>,
}

impl Decision {
    /// Validates `scores` and takes the argmax (lowest index on ties).
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidInput("empty score vector".into()));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidInput(format!("score outside [0,1]: {scores:?}")));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("scores sum to {sum}, not 1")));
        }
        Ok(Decision {
            label: argmax(&scores),
            scores,
        })
    }

    pub fn one_hot(label: usize, classes: usize) -> Self {
        assert!(label < classes, "label {label} out of range for {classes} classes");
        let mut scores = vec![0.0; classes];
        scores[label] = 1.0;
        Decision { label, scores }
    }

    pub fn is_positive(&self) -> bool {
        self.label == POSITIVE
    }
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Anything that maps texts to [`Decision`]s.
pub trait TextClassifier: Send + Sync {
    fn class_count(&self) -> usize;

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>>;

    fn classify(&self, text: &str) -> Result<Decision> {
        let mut v = self.classify_batch(&[text])?;
        v.pop()
            .ok_or_else(|| Error::Protocol("classifier returned no decision".into()))
    }
}

impl<T: TextClassifier + ?Sized> TextClassifier for Box<T> {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        (**self).classify_batch(texts)
    }
}

/// Always answers with the same class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantClassifier {
    pub label: usize,
    pub classes: usize,
}

impl TextClassifier for ConstantClassifier {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        Ok(texts
            .iter()
            .map(|_| Decision::one_hot(self.label, self.classes))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Lexicon,
    Ngram,
    Remote,
}

/// Declarative description of one classifier, as found in run configs.
///
/// Required parameters by kind:
/// - `lexicon`: `threshold` in [0,1] plus either `lexicon` (path to a lexicon
///   file, or `builtin:NAME`) or inline `entries`;
/// - `ngram`: none (all hyperparameters default);
/// - `remote`: `endpoint` URL and `timeout_ms` > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub task: Task,
    #[serde(default)]
    pub parameters: Map<String, Value>,
}

impl ClassifierSpec {
    fn param_f64(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).and_then(Value::as_f64)
    }

    fn param_str(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).and_then(Value::as_str)
    }

    /// Checks kind-specific parameters. `field` prefixes error paths.
    pub fn validate(&self, field: &str) -> Result<()> {
        let p = |k: &str| format!("{field}.parameters.{k}");
        match self.kind {
            ClassifierKind::Lexicon => {
                match self.param_f64("threshold") {
                    Some(t) if (0.0..=1.0).contains(&t) => {}
                    Some(t) => return Err(Error::config(p("threshold"), format!("{t} not in [0,1]"))),
                    None => return Err(Error::config(p("threshold"), "required")),
                }
                if self.param_str("lexicon").is_none() && !self.parameters.contains_key("entries") {
                    return Err(Error::config(p("lexicon"), "lexicon path or entries required"));
                }
            }
            ClassifierKind::Ngram => {
                self.ngram_hyper(field)?;
            }
            ClassifierKind::Remote => {
                self.remote_config(field)?;
            }
        }
        Ok(())
    }

    /// Builds a lexicon classifier; relative lexicon paths resolve against `base`.
    pub fn lexicon_classifier(&self, field: &str, base: &Path) -> Result<LexiconClassifier> {
        self.validate(field)?;
        let threshold = self.param_f64("threshold").expect("validated");
        let lexicon = match self.param_str("lexicon") {
            Some(name) if name.starts_with(BUILTIN_PREFIX) => {
                let name = &name[BUILTIN_PREFIX.len()..];
                crate::linguistics::builtin_detector(name).ok_or_else(|| {
                    Error::config(format!("{field}.parameters.lexicon"), format!("no bundled detector {name:?}"))
                })?
            }
            Some(path) => crate::linguistics::Lexicon::load(&base.join(path))?,
            None => {
                let entries: Vec<String> = serde_json::from_value(self.parameters["entries"].clone())
                    .map_err(|e| Error::config(format!("{field}.parameters.entries"), e.to_string()))?;
                crate::linguistics::Lexicon::new(
                    format!("{}-inline", self.task.as_str()),
                    crate::linguistics::MatchMode::Exact,
                    entries,
                )?
            }
        };
        LexiconClassifier::new(lexicon, threshold)
    }

    pub fn ngram_hyper(&self, field: &str) -> Result<NgramHyper> {
        let hyper: NgramHyper = serde_json::from_value(Value::Object(self.parameters.clone()))
            .map_err(|e| Error::config(format!("{field}.parameters"), e.to_string()))?;
        hyper.validate(field)?;
        Ok(hyper)
    }

    pub fn remote_config(&self, field: &str) -> Result<RemoteConfig> {
        let cfg: RemoteConfig = serde_json::from_value(Value::Object(self.parameters.clone()))
            .map_err(|e| Error::config(format!("{field}.parameters"), e.to_string()))?;
        cfg.validate(field)?;
        Ok(cfg)
    }

    /// Instantiates a ready-to-use classifier. N-gram specs are not ready
    /// without training and are rejected here.
    pub fn build(&self, field: &str, base: &Path) -> Result<Box<dyn TextClassifier>> {
        match self.kind {
            ClassifierKind::Lexicon => Ok(Box::new(self.lexicon_classifier(field, base)?)),
            ClassifierKind::Remote => Ok(Box::new(RemoteClassifier::new(
                self.remote_config(field)?,
                self.task,
            ))),
            ClassifierKind::Ngram => Err(Error::config(
                format!("{field}.kind"),
                "an ngram classifier must be trained before use",
            )),
        }
    }
}
