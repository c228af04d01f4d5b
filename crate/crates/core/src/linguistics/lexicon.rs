use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Exact,
    /// An entry matches any token it is a prefix of (stem patterns).
    Prefix,
}

/// A named word category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LexiconFile", into = "LexiconFile")]
pub struct Lexicon {
    name: String,
    match_mode: MatchMode,
    entries: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    name: String,
    #[serde(default)]
    match_mode: MatchMode,
    entries: Vec<String>,
}

impl TryFrom<LexiconFile> for Lexicon {
    type Error = Error;

    fn try_from(f: LexiconFile) -> Result<Self> {
        Lexicon::new(f.name, f.match_mode, f.entries)
    }
}

impl From<Lexicon> for LexiconFile {
    fn from(l: Lexicon) -> Self {
        LexiconFile {
            name: l.name,
            match_mode: l.match_mode,
            entries: l.entries.into_iter().collect(),
        }
    }
}

impl Lexicon {
    /// Entries are lowercased and trimmed; an empty entry set is rejected.
    pub fn new<I, S>(name: impl Into<String>, match_mode: MatchMode, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let entries: BTreeSet<String> = entries
            .into_iter()
            .map(|e| e.as_ref().trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(Error::config(
                format!("lexicon.{name}.entries"),
                "lexicon has no entries",
            ));
        }
        Ok(Lexicon {
            name,
            match_mode,
            entries,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn match_mode(&self) -> MatchMode {
        self.match_mode
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// `token` must already be lowercased.
    pub fn matches(&self, token: &str) -> bool {
        match self.match_mode {
            MatchMode::Exact => self.entries.contains(token),
            MatchMode::Prefix => token
                .char_indices()
                .map(|(i, c)| &token[..i + c.len_utf8()])
                .any(|p| self.entries.contains(p)),
        }
    }

    /// Number of tokens that belong to this category.
    pub fn count_matches<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        tokens.iter().filter(|t| self.matches(t.as_ref())).count()
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }
}

/// Loads every `*.json` lexicon in `dir`, ordered by file name.
pub fn load_lexicon_dir(dir: &Path) -> Result<Vec<Lexicon>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::file(dir, e))?;
    let mut paths = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::file(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    let lexicons = paths.iter().map(|p| Lexicon::load(p)).collect::<Result<Vec<_>>>()?;
    check_unique_names(&lexicons)?;
    Ok(lexicons)
}

pub(crate) fn check_unique_names(lexicons: &[Lexicon]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in lexicons {
        if !seen.insert(l.name()) {
            return Err(Error::config(
                format!("lexicon.{}", l.name()),
                "duplicate lexicon name",
            ));
        }
    }
    Ok(())
}

macro_rules! builtin {
    ($dir:literal: $($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/", $dir, "/", $name, ".json")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin!(
    "lexicons":
    "second_person",
    "uncertainty",
    "abstract",
    "enlightenment",
    "negative",
    "fear",
    "positive",
    "polarity",
    "valence",
    "causation",
    "format",
    "respect",
    "power",
    "worship",
    "forgiveness",
    "longing",
    "exclamation",
    "aggression",
);

/// The bundled demonstration lexicons, one per linguistic factor.
///
/// These are small hand-written word lists; swap in a full resource with
/// [`load_lexicon_dir`] for real analyses.
pub fn builtin_lexicons() -> Vec<Lexicon> {
    BUILTIN
        .iter()
        .map(|(_, json)| Lexicon::from_json(json).expect("bundled lexicon is valid"))
        .collect()
}

const DETECTORS: &[(&str, &str)] = builtin!(
    "detectors":
    "hate_a",
    "hate_b",
    "hate_c",
    "counter_a",
    "counter_b",
    "counter_c",
);

/// A bundled detector word list (`hate_a`..`hate_c`, `counter_a`..`counter_c`).
pub fn builtin_detector(name: &str) -> Option<Lexicon> {
    DETECTORS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, json)| Lexicon::from_json(json).expect("bundled detector is valid"))
}

/// Per-category token shares for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconProfile {
    pub scores: BTreeMap<String, f64>,
    pub token_count: usize,
    /// Set when the text has no tokens; all scores are then zero.
    pub degenerate: bool,
}

impl LexiconProfile {
    pub fn score(&self, category: &str) -> f64 {
        self.scores.get(category).copied().unwrap_or(0.0)
    }
}

/// Scores `text` against each lexicon as matched tokens / total tokens.
pub fn profile_text(text: &str, lexicons: &[Lexicon]) -> LexiconProfile {
    let tokens = tokenize(text);
    let n = tokens.len();
    let scores = lexicons
        .iter()
        .map(|l| {
            let s = if n == 0 {
                0.0
            } else {
                l.count_matches(&tokens) as f64 / n as f64
            };
            (l.name().to_owned(), s)
        })
        .collect();
    LexiconProfile {
        scores,
        token_count: n,
        degenerate: n == 0,
    }
}
