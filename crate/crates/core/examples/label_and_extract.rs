//! Labels comments with lexicon ensembles and extracts labeled
//! hate-speech/counterspeech pairs, entirely in memory.
//!
//!     cargo run --example label_and_extract

use std::collections::HashSet;

use counterspeech::classify::{Ensemble, LexiconClassifier, TextClassifier};
use counterspeech::ingest::{build_trees, OrphanPolicy};
use counterspeech::linguistics::builtin_detector;
use counterspeech::outcomes::{extract_pairs, summarize_corpus, CommunityMap, PercentRounding};
use counterspeech::synth::{generate, SynthConfig};

fn ensemble(names: &[&str]) -> counterspeech::Result<Ensemble> {
    let members = names
        .iter()
        .map(|n| {
            let lex = builtin_detector(n).expect("bundled detector");
            Ok(Box::new(LexiconClassifier::new(lex, 0.1)?) as Box<dyn TextClassifier>)
        })
        .collect::<counterspeech::Result<Vec<_>>>()?;
    Ensemble::new(members)
}

fn main() -> counterspeech::Result<()> {
    let corpus = generate(&SynthConfig { pairs: 300, ..SynthConfig::default() })?;
    let forest = build_trees(corpus.comments, OrphanPolicy::Drop)?;
    let hate = ensemble(&["hate_a", "hate_b", "hate_c"])?;
    let counter = ensemble(&["counter_a", "counter_b", "counter_c"])?;

    let mut hs_ids = HashSet::new();
    let mut cs_ids = HashSet::new();
    for tree in &forest.trees {
        for c in tree.preorder() {
            if hate.judge(&c.body)? {
                hs_ids.insert(c.key().to_owned());
            } else if tree.parent(c.key()).is_some() && counter.judge(&c.body)? {
                cs_ids.insert(c.key().to_owned());
            }
        }
    }
    let pairs = extract_pairs(&forest.trees, &hs_ids, &cs_ids, &CommunityMap::builtin(), |c| hate.judge(&c.body))?;
    println!("{} hate comments, {} counter candidates, {} pairs\n", hs_ids.len(), cs_ids.len(), pairs.len());
    for p in pairs.iter().take(3) {
        println!("{} -> {:?}\n  HS: {}\n  CS: {}\n", p.pair_id(), p.outcome, p.hs.body, p.cs.body);
    }
    let summary = summarize_corpus(pairs.iter().map(|p| (p.community, p.outcome)), PercentRounding::SumTo100);
    print!("{}", summary.to_markdown());
    Ok(())
}
