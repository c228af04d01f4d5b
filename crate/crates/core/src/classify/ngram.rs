//! Hashed word n-gram features with a multinomial logistic regression head,
//! trained by seeded SGD.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Decision, TextClassifier};
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramHyper {
    /// Word n-gram orders to extract, e.g. `[1, 2]`.
    pub orders: Vec<usize>,
    /// Number of hash buckets.
    pub dimension: usize,
    /// L2 penalty applied to the weights touched by each update.
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// When false, single-class training data is an error instead of
    /// producing a constant model.
    pub allow_constant: bool,
}

impl Default for NgramHyper {
    fn default() -> Self {
        NgramHyper {
            orders: vec![1, 2],
            dimension: 1 << 18,
            l2: 1e-4,
            learning_rate: 0.5,
            epochs: 8,
            seed: 7,
            allow_constant: true,
        }
    }
}

impl NgramHyper {
    pub fn validate(&self, field: &str) -> Result<()> {
        let f = |k: &str| format!("{field}.parameters.{k}");
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(Error::config(f("orders"), "orders must be non-empty and positive"));
        }
        if self.dimension == 0 || self.dimension > u32::MAX as usize {
            return Err(Error::config(f("dimension"), "must be in 1..=2^32-1"));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(Error::config(f("l2"), "must be non-negative"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::config(f("learning_rate"), "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config(f("epochs"), "must be at least 1"));
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, parts: &[&str]) -> u64 {
    let mut h = FNV_OFFSET ^ seed.wrapping_mul(FNV_PRIME);
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in p.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Sparse L2-normalized bucket counts, sorted by bucket.
fn featurize(text: &str, orders: &[usize], dimension: usize, seed: u64) -> Vec<(u32, f64)> {
    let tokens = tokenize(text);
    let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for &n in orders {
        if refs.len() < n {
            continue;
        }
        for w in refs.windows(n) {
            // order is mixed into the seed so "a b" and ("a","b") never share a key
            let h = fnv1a(seed ^ ((n as u64) << 32), w);
            *counts.entry((h % dimension as u64) as u32).or_default() += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Vec::new();
    }
    counts.into_iter().map(|(k, v)| (k, v / norm)).collect()
}

fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// A trained n-gram model, or a constant predictor when training saw one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SparseModel", try_from = "SparseModel")]
pub struct NgramModel {
    hyper: NgramHyper,
    classes: usize,
    /// Labels seen in training, ascending.
    seen: Vec<usize>,
    constant: Option<usize>,
    bias: Vec<f64>,
    /// `dimension × classes`, row-major by bucket.
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SparseModel {
    hyper: NgramHyper,
    classes: usize,
    seen: Vec<usize>,
    constant: Option<usize>,
    bias: Vec<f64>,
    weights: Vec<(u32, Vec<f64>)>,
}

impl From<NgramModel> for SparseModel {
    fn from(m: NgramModel) -> Self {
        let k = m.classes;
        let weights = m
            .weights
            .chunks(k.max(1))
            .enumerate()
            .filter(|(_, row)| row.iter().any(|w| *w != 0.0))
            .map(|(i, row)| (i as u32, row.to_vec()))
            .collect();
        SparseModel {
            hyper: m.hyper,
            classes: m.classes,
            seen: m.seen,
            constant: m.constant,
            bias: m.bias,
            weights,
        }
    }
}

impl TryFrom<SparseModel> for NgramModel {
    type Error = Error;

    fn try_from(s: SparseModel) -> Result<Self> {
        s.hyper.validate("model")?;
        if s.classes < 2 || s.bias.len() != s.classes {
            return Err(Error::InvalidInput("model class count and bias disagree".into()));
        }
        let mut weights = if s.constant.is_some() {
            Vec::new()
        } else {
            vec![0.0; s.hyper.dimension * s.classes]
        };
        for (i, row) in s.weights {
            let i = i as usize;
            if row.len() != s.classes || i >= s.hyper.dimension || weights.is_empty() {
                return Err(Error::InvalidInput("malformed weight row".into()));
            }
            weights[i * s.classes..(i + 1) * s.classes].copy_from_slice(&row);
        }
        Ok(NgramModel {
            hyper: s.hyper,
            classes: s.classes,
            seen: s.seen,
            constant: s.constant,
            bias: s.bias,
            weights,
        })
    }
}

impl NgramModel {
    pub fn hyper(&self) -> &NgramHyper {
        &self.hyper
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn seen_labels(&self) -> &[usize] {
        &self.seen
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn features(&self, text: &str) -> Vec<(u32, f64)> {
        featurize(text, &self.hyper.orders, self.hyper.dimension, self.hyper.seed)
    }

    fn probabilities(&self, feats: &[(u32, f64)]) -> Vec<f64> {
        let k = self.classes;
        let mut logits = self.bias.clone();
        for &(f, v) in feats {
            let row = &self.weights[f as usize * k..(f as usize + 1) * k];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += w * v;
            }
        }
        softmax(&mut logits);
        logits
    }

    pub fn predict(&self, text: &str) -> Decision {
        if let Some(c) = self.constant {
            return Decision::one_hot(c, self.classes);
        }
        let p = self.probabilities(&self.features(text));
        Decision {
            label: super::argmax(&p),
            scores: p,
        }
    }
}

/// Trains a `classes`-way model. Labels must be below `classes`.
///
/// Training is single-threaded and fully determined by the inputs and
/// `hyper.seed`. If every label is the same the result is a constant
/// predictor (with a warning), unless `hyper.allow_constant` is false.
pub fn train_ngram<S: AsRef<str>>(
    texts: &[S],
    labels: &[usize],
    classes: usize,
    hyper: &NgramHyper,
) -> Result<NgramModel> {
    hyper.validate("ngram")?;
    if texts.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if texts.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} texts but {} labels",
            texts.len(),
            labels.len()
        )));
    }
    if classes < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidInput(format!("label {bad} out of range for {classes} classes")));
    }
    let mut seen = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();

    if seen.len() == 1 {
        if !hyper.allow_constant {
            return Err(Error::InvalidInput("training data has a single class".into()));
        }
        log::warn!("training data has only class {}; using a constant predictor", seen[0]);
        return Ok(NgramModel {
            hyper: hyper.clone(),
            classes,
            constant: Some(seen[0]),
            seen,
            bias: vec![0.0; classes],
            weights: Vec::new(),
        });
    }

    let feats: Vec<Vec<(u32, f64)>> = texts
        .iter()
        .map(|t| featurize(t.as_ref(), &hyper.orders, hyper.dimension, hyper.seed))
        .collect();
    let mut model = NgramModel {
        hyper: hyper.clone(),
        classes,
        seen,
        constant: None,
        bias: vec![0.0; classes],
        weights: vec![0.0; hyper.dimension * classes],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..texts.len()).collect();
    let k = classes;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let lr = hyper.learning_rate / (1.0 + epoch as f64);
        for &i in &order {
            let p = model.probabilities(&feats[i]);
            for (c, &pc) in p.iter().enumerate() {
                let g = pc - if labels[i] == c { 1.0 } else { 0.0 };
                model.bias[c] -= lr * g;
                for &(f, v) in &feats[i] {
                    let w = &mut model.weights[f as usize * k + c];
                    *w -= lr * (g * v + hyper.l2 * *w);
                }
            }
        }
    }
    Ok(model)
}

pub fn predict_ngram(model: &NgramModel, text: &str) -> Decision {
    model.predict(text)
}

impl TextClassifier for NgramModel {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        Ok(texts.iter().map(|t| self.predict(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn zebra_corpus() -> (Vec<String>, Vec<usize>) {
        let words = ["party", "music", "dance", "night", "quiet", "friends", "food", "late", "loud", "fun"];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut texts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let mut t: Vec<&str> = (0..5).map(|_| words[rng.random_range(0..words.len())]).collect();
            let label = i % 2;
            if label == 1 {
                let at = rng.random_range(0..=t.len());
                t.insert(at, "zebra");
            }
            texts.push(t.join(" "));
            labels.push(label);
        }
        (texts, labels)
    }

    fn small_hyper() -> NgramHyper {
        NgramHyper {
            dimension: 1 << 12,
            ..NgramHyper::default()
        }
    }

    #[test]
    fn learns_planted_token() {
        let (texts, labels) = zebra_corpus();
        let m = train_ngram(&texts, &labels, 2, &small_hyper()).unwrap();
        assert_eq!(predict_ngram(&m, "zebra party").label, 1);
        assert_eq!(predict_ngram(&m, "quiet party").label, 0);
        let s: f64 = predict_ngram(&m, "zebra party").scores.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_bit_identical() {
        let (texts, labels) = zebra_corpus();
        let a = train_ngram(&texts, &labels, 2, &small_hyper()).unwrap();
        let b = train_ngram(&texts, &labels, 2, &small_hyper()).unwrap();
        let bits = |m: &NgramModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.bias(), b.bias());
    }

    #[test]
    fn single_class_is_constant() {
        let m = train_ngram(&["a", "b", "c"], &[0, 0, 0], 2, &small_hyper()).unwrap();
        assert!(m.is_constant());
        assert_eq!(predict_ngram(&m, "zebra").label, 0);
        assert_eq!(predict_ngram(&m, "anything at all").scores, vec![1.0, 0.0]);
        let strict = NgramHyper {
            allow_constant: false,
            ..small_hyper()
        };
        assert!(train_ngram(&["a", "b"], &[1, 1], 2, &strict).is_err());
    }

    #[test]
    fn bad_inputs() {
        let empty: [&str; 0] = [];
        assert!(train_ngram(&empty, &[], 2, &small_hyper()).is_err());
        assert!(train_ngram(&["a"], &[0, 1], 2, &small_hyper()).is_err());
        assert!(train_ngram(&["a", "b"], &[0, 2], 2, &small_hyper()).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_predictions() {
        let (texts, labels) = zebra_corpus();
        let m = train_ngram(&texts, &labels, 2, &small_hyper()).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: NgramModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let c = train_ngram(&["a", "b"], &[1, 1], 3, &small_hyper()).unwrap();
        let back: NgramModel = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.predict("x").label, 1);
    }

    #[test]
    fn empty_text_predicts_from_bias() {
        let (texts, labels) = zebra_corpus();
        let m = train_ngram(&texts, &labels, 2, &small_hyper()).unwrap();
        let d = m.predict("");
        assert!((d.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
