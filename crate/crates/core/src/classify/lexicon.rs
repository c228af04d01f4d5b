use super::{Decision, TextClassifier};
use crate::error::{Error, Result};
use crate::linguistics::Lexicon;
use crate::text::tokenize;

/// Binary detector: positive when the share of lexicon tokens reaches a
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconClassifier {
    lexicon: Lexicon,
    threshold: f64,
}

impl LexiconClassifier {
    pub fn new(lexicon: Lexicon, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::config("threshold", format!("{threshold} not in [0,1]")));
        }
        Ok(LexiconClassifier { lexicon, threshold })
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Scores one text by the share of its tokens found in `lexicon`.
///
/// An empty text is negative with scores `(1, 0)`. Otherwise positive iff
/// `matched / total >= threshold`. The positive-class score is `ratio / 2`
/// for negatives and `0.75 + ratio / 4` for positives, so the argmax always
/// agrees with the threshold rule.
pub fn classify_lexicon(text: &str, lexicon: &Lexicon, threshold: f64) -> Decision {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Decision {
            label: 0,
            scores: vec![1.0, 0.0],
        };
    }
    let ratio = lexicon.count_matches(&tokens) as f64 / tokens.len() as f64;
    let (label, pos) = if ratio >= threshold {
        (1, 0.75 + ratio / 4.0)
    } else {
        (0, ratio / 2.0)
    };
    Decision {
        label,
        scores: vec![1.0 - pos, pos],
    }
}

impl TextClassifier for LexiconClassifier {
    fn class_count(&self) -> usize {
        2
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        Ok(texts
            .iter()
            .map(|t| classify_lexicon(t, &self.lexicon, self.threshold))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linguistics::MatchMode;

    fn awful() -> Lexicon {
        Lexicon::new("hate", MatchMode::Exact, ["awful"]).unwrap()
    }

    #[test]
    fn ratio_above_threshold() {
        // 2 of 4 tokens
        let d = classify_lexicon("you are awful awful", &awful(), 0.3);
        assert_eq!(d.label, 1);
        assert!((d.scores[1] - (0.75 + 0.5 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_is_negative() {
        let d = classify_lexicon("you are so very awful", &awful(), 0.3);
        assert_eq!(d.label, 0);
        assert!(d.scores[0] > d.scores[1]);
    }

    #[test]
    fn empty_text() {
        let d = classify_lexicon("", &awful(), 0.3);
        assert_eq!(d, Decision { label: 0, scores: vec![1.0, 0.0] });
    }

    #[test]
    fn zero_threshold_with_a_match() {
        let d = classify_lexicon("a long sentence that is awful in the end", &awful(), 0.0);
        assert_eq!(d.label, 1);
    }

    #[test]
    fn threshold_out_of_range() {
        assert!(LexiconClassifier::new(awful(), 1.5).is_err());
    }
}
