//! Tokenization shared by the lexicon and n-gram paths.

use unicode_segmentation::UnicodeSegmentation;

/// Splits `text` into lowercase words using Unicode word boundaries.
///
/// Punctuation and whitespace segments are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("This is BAD, really bad!"),
            vec!["this", "is", "bad", "really", "bad"]
        );
    }

    #[test]
    fn empty_and_symbol_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("?! ... --").is_empty());
    }

    #[test]
    fn keeps_contractions_together() {
        assert_eq!(tokenize("You're not"), vec!["you're", "not"]);
    }
}
