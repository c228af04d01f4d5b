//! Profiles counterspeech with the bundled lexicons and compares outcome
//! groups with rank-sum tests and Bonferroni correction.
//!
//!     cargo run --example linguistic_analysis

use counterspeech::ingest::{build_trees, OrphanPolicy};
use counterspeech::linguistics::{builtin_lexicons, compare_groups, profile_text, CompareOptions, Grouping};
use counterspeech::outcomes::{extract_pairs, CommunityMap};
use counterspeech::synth::{generate, SynthConfig};

fn main() -> counterspeech::Result<()> {
    let lexicons = builtin_lexicons();
    let p = profile_text("Stop it, you are wrong and I am furious!", &lexicons);
    println!("{} tokens; aggression {:.3}, exclamation {:.3}\n", p.token_count, p.score("aggression"), p.score("exclamation"));

    let corpus = generate(&SynthConfig { pairs: 600, ..SynthConfig::default() })?;
    let forest = build_trees(corpus.comments, OrphanPolicy::Drop)?;
    // Ground-truth ids stand in for detector output here.
    let hs = corpus.truth.iter().map(|t| t.pair_id.split(':').next().unwrap().to_owned()).collect();
    let cs = corpus.truth.iter().map(|t| t.pair_id.split(':').nth(1).unwrap().to_owned()).collect();
    let pairs: Vec<_> = extract_pairs(&forest.trees, &hs, &cs, &CommunityMap::builtin(), |c| {
        Ok(c.body.split_whitespace().any(|w| ["vermin", "scum", "filth", "subhuman"].contains(&w)))
    })?
    .iter()
    .map(|p| p.to_record())
    .collect();

    let opts = CompareOptions::default();
    for g in [Grouping::ReentryVsNo, Grouping::HatefulVsNonhateful] {
        let report = compare_groups(&pairs, &lexicons, g, false, &opts)?;
        println!("{}", report.to_markdown(g));
        for r in report.results.iter().filter(|r| r.significant_bonferroni) {
            println!("  {} {} p={:.2e}", r.category, r.direction.map_or("", |d| d.arrow()), r.p_value.unwrap_or(1.0));
        }
        println!();
    }
    Ok(())
}
