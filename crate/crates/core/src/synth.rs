//! Synthetic conversation dumps with known outcomes and planted signals.
//!
//! Every thread carries exactly one hate-speech/counterspeech pair. The
//! counterspeech vocabulary depends on the outcome with probability
//! `signal`; hateful-reentry counterspeech draws from the aggression lexicon,
//! which makes that category the planted linguistic difference.
//!
//! The texts are built for the bundled detectors: hate speech uses words all
//! three hate lexicons share, counterspeech uses words all three counter
//! lexicons share, and nothing else touches either vocabulary.

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_dump, Comment, DELETED_AUTHOR};
use crate::outcomes::{pair_id, OutcomeLabel};

/// Lexicon category planted in hateful-reentry counterspeech.
pub const PLANTED_CATEGORY: &str = "aggression";

const HATE: &[&str] = &["vermin", "scum", "parasites", "filth", "subhuman", "worthless", "degenerates"];
const COUNTER: &[&str] = &["wrong", "evidence", "unfair", "disagree", "facts", "actually", "untrue", "stop"];
const FILLER: &[&str] = &[
    "the", "people", "this", "thread", "about", "here", "some", "of", "them", "post", "said", "that", "with",
    "today", "point", "again", "there", "while",
];
const CUE_HATEFUL: &[&str] = &["stupid", "angry", "attack", "furious", "rage", "shut", "fight"];
const CUE_NONHATEFUL: &[&str] = &["please", "listen", "friend", "together", "kindly", "perhaps", "welcome"];
const CUE_NONE: &[&str] = &["statistics", "study", "census", "report", "dataset", "survey", "numbers"];
const CHATTER: &[&str] = &["agreed", "lol", "nice", "interesting", "sure", "fair", "ok", "hmm", "yeah"];

const SUBREDDITS: &[&str] = &[
    "changemyview",
    "antiwork",
    "Feminism",
    "MensRights",
    "DankMemes",
    "4Chan",
    "worldnews",
    "conspiracy",
    "DotA2",
    "technology",
    "somewhere_unlisted",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Target shares of no / hateful / non-hateful reentry.
    pub shares: [f64; 3],
    /// Probability that a counterspeech carries its own outcome's cues
    /// rather than another outcome's.
    pub signal: f64,
    /// Extra comments per thread that reply to the hate speech without
    /// countering it.
    pub distractors: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pairs: 2000,
            seed: 42,
            shares: [0.45, 0.2, 0.35],
            signal: 0.85,
            distractors: 1,
        }
    }
}

/// Ground truth for one generated pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthPair {
    pub pair_id: String,
    pub thread_id: String,
    pub outcome: OutcomeLabel,
    pub subreddit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub comments: Vec<Comment>,
    pub truth: Vec<SynthPair>,
}

fn sentence(rng: &mut ChaCha8Rng, parts: &[(&[&str], usize)], filler: usize) -> String {
    let mut words: Vec<&str> = Vec::new();
    for &(pool, n) in parts {
        for _ in 0..n {
            words.push(pool.choose(rng).expect("non-empty pool"));
        }
    }
    for _ in 0..filler {
        words.push(FILLER.choose(rng).expect("non-empty pool"));
    }
    // Fisher-Yates over word positions keeps the cue counts fixed.
    for i in (1..words.len()).rev() {
        let j = rng.random_range(0..=i);
        words.swap(i, j);
    }
    words.join(" ")
}

fn pick_outcome(rng: &mut ChaCha8Rng, shares: &[f64; 3]) -> OutcomeLabel {
    let x: f64 = rng.random::<f64>() * shares.iter().sum::<f64>();
    let mut acc = 0.0;
    for (o, s) in OutcomeLabel::ALL.iter().zip(shares) {
        acc += s;
        if x < acc {
            return *o;
        }
    }
    OutcomeLabel::NonHatefulReentry
}

fn cues(o: OutcomeLabel) -> &'static [&'static str] {
    match o {
        OutcomeLabel::NoReentry => CUE_NONE,
        OutcomeLabel::HatefulReentry => CUE_HATEFUL,
        OutcomeLabel::NonHatefulReentry => CUE_NONHATEFUL,
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::config("synth.pairs", "must be positive"));
        }
        if self.shares.iter().any(|s| s.is_nan() || *s < 0.0) || self.shares.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config("synth.shares", "must be non-negative with a positive sum"));
        }
        if !(0.0..=1.0).contains(&self.signal) {
            return Err(Error::config("synth.signal", "must be in [0,1]"));
        }
        Ok(())
    }
}

/// Generates a dump. Output is a pure function of `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut comments = Vec::new();
    let mut truth = Vec::new();
    for n in 0..config.pairs {
        let thread = format!("s{n:05}");
        let link = format!("t3_{thread}");
        let subreddit = SUBREDDITS.choose(&mut rng).expect("non-empty").to_string();
        let hater = format!("hater{n}");
        let t0 = 1_600_000_000 + (n as i64) * 1000;
        let outcome = pick_outcome(&mut rng, &config.shares);
        let mk = |id: String, parent: &str, author: &str, body: String, t: i64| Comment {
            id,
            parent_id: Some(parent.to_owned()),
            thread_id: link.clone(),
            author: author.to_owned(),
            body,
            created_utc: t,
            subreddit: subreddit.clone(),
        };

        let hs_id = format!("h{n:05}");
        let hs_body = sentence(&mut rng, &[(HATE, 2)], 5);
        comments.push(mk(hs_id.clone(), &link, &hater, hs_body, t0));

        let cue_source = if rng.random::<f64>() < config.signal {
            outcome
        } else {
            let others: Vec<OutcomeLabel> = OutcomeLabel::ALL.into_iter().filter(|o| *o != outcome).collect();
            *others.choose(&mut rng).expect("two others")
        };
        let cs_id = format!("c{n:05}");
        let cs_body = sentence(&mut rng, &[(COUNTER, 2), (cues(cue_source), 2)], 5);
        comments.push(mk(cs_id.clone(), &format!("t1_{hs_id}"), &format!("counter{n}"), cs_body, t0 + 10));

        for d in 0..config.distractors {
            let id = format!("d{n:05}_{d}");
            let author = if rng.random_bool(0.1) {
                DELETED_AUTHOR.to_owned()
            } else {
                format!("bystander{}", rng.random_range(0..500))
            };
            let body = sentence(&mut rng, &[(CHATTER, 2)], 4);
            comments.push(mk(id.clone(), &format!("t1_{hs_id}"), &author, body, t0 + 20 + d as i64));
            // The hater answering outside the counterspeech subtree is not reentry.
            if outcome == OutcomeLabel::NoReentry && rng.random_bool(0.3) {
                let body = sentence(&mut rng, &[(HATE, 2)], 3);
                comments.push(mk(format!("{id}r"), &format!("t1_{id}"), &hater, body, t0 + 40));
            }
        }

        // First follow-up under the counterspeech, by someone else.
        let f_id = format!("f{n:05}");
        let body = sentence(&mut rng, &[(CHATTER, 1)], 4);
        comments.push(mk(f_id.clone(), &format!("t1_{cs_id}"), &format!("bystander{}", rng.random_range(0..500)), body, t0 + 100));

        match outcome {
            OutcomeLabel::NoReentry => {}
            OutcomeLabel::HatefulReentry | OutcomeLabel::NonHatefulReentry => {
                let deep = rng.random_bool(0.5);
                let parent = if deep { f_id.clone() } else { cs_id.clone() };
                let body = if outcome == OutcomeLabel::HatefulReentry {
                    sentence(&mut rng, &[(HATE, 2)], 4)
                } else {
                    sentence(&mut rng, &[(CHATTER, 1)], 5)
                };
                comments.push(mk(format!("r{n:05}"), &format!("t1_{parent}"), &hater, body, t0 + 200));
                if outcome == OutcomeLabel::NonHatefulReentry && rng.random_bool(0.2) {
                    // A later hateful reply does not change the earliest reentry.
                    let body = sentence(&mut rng, &[(HATE, 2)], 3);
                    comments.push(mk(format!("r{n:05}b"), &format!("t1_{cs_id}"), &hater, body, t0 + 300));
                }
            }
        }
        truth.push(SynthPair {
            pair_id: pair_id(&hs_id, &cs_id),
            thread_id: thread,
            outcome,
            subreddit,
        });
    }
    Ok(SynthCorpus { comments, truth })
}

/// File names used by [`write_run_dir`].
pub const DUMP_FILE: &str = "dump.ndjson";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const CONFIG_FILE: &str = "config.json";

/// Run configuration labeling with the bundled detectors under unanimity.
pub fn default_run_config(input: &str, out: &str) -> serde_json::Value {
    let member = |task: &str, name: &str| {
        serde_json::json!({
            "kind": "lexicon",
            "task": task,
            "parameters": {"lexicon": format!("builtin:{name}"), "threshold": 0.1}
        })
    };
    serde_json::json!({
        "paths": {"input": input, "out": out},
        "labeling": {
            "consensus": 3,
            "hate": [member("hate", "hate_a"), member("hate", "hate_b"), member("hate", "hate_c")],
            "counter": [member("counter", "counter_a"), member("counter", "counter_b"), member("counter", "counter_c")]
        }
    })
}

/// Writes a generated dump, its ground truth and a matching run
/// configuration into `dir`. Returns the configuration path.
pub fn write_run_dir(dir: &Path, config: &SynthConfig) -> Result<PathBuf> {
    let corpus = generate(config)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let dump = dir.join(DUMP_FILE);
    let f = std::fs::File::create(&dump).map_err(|e| Error::file(&dump, e))?;
    write_dump(std::io::BufWriter::new(f), &corpus.comments)?;
    let mut truth = Vec::new();
    for t in &corpus.truth {
        serde_json::to_writer(&mut truth, t)?;
        truth.push(b'\n');
    }
    let tpath = dir.join(TRUTH_FILE);
    std::fs::write(&tpath, truth).map_err(|e| Error::file(&tpath, e))?;
    let cpath = dir.join(CONFIG_FILE);
    let cfg = default_run_config(DUMP_FILE, "out");
    std::fs::write(&cpath, serde_json::to_vec_pretty(&cfg)?).map_err(|e| Error::file(&cpath, e))?;
    Ok(cpath)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linguistics::builtin_lexicons;

    #[test]
    fn deterministic_and_sized() {
        let cfg = SynthConfig {
            pairs: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_eq!(a.truth.len(), 50);
        let b = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.comments, b.comments);
    }

    #[test]
    fn hateful_cues_hit_planted_lexicon_only() {
        let lex = builtin_lexicons();
        let aggression = lex.iter().find(|l| l.name() == PLANTED_CATEGORY).unwrap();
        assert!(CUE_HATEFUL.iter().all(|w| aggression.matches(w)));
        for pool in [CUE_NONE, CUE_NONHATEFUL, FILLER, COUNTER, CHATTER] {
            assert!(pool.iter().all(|w| !aggression.matches(w)), "{pool:?}");
        }
    }

    #[test]
    fn bad_config() {
        assert!(generate(&SynthConfig { pairs: 0, ..SynthConfig::default() }).is_err());
        assert!(generate(&SynthConfig { signal: 1.5, ..SynthConfig::default() }).is_err());
    }
}
