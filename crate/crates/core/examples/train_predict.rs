//! Trains hashed n-gram models for the cascade and the joint 3-way task,
//! then compares both strategies against the majority baseline.
//!
//!     cargo run --release --example train_predict

use counterspeech::eval::confusion;
use counterspeech::eval::prf;
use counterspeech::forecast::{
    make_input, majority_baseline, predict_three_way_batch, predict_two_stage_batch, split_corpus, train_stage,
    InputVariant, ModelSpec, Routing, Stage, DEFAULT_SEPARATOR,
};
use counterspeech::ingest::{build_trees, OrphanPolicy};
use counterspeech::outcomes::{extract_pairs, CommunityMap, OutcomeLabel, PairRecord};
use counterspeech::synth::{generate, SynthConfig};

fn main() -> counterspeech::Result<()> {
    let corpus = generate(&SynthConfig::default())?;
    let forest = build_trees(corpus.comments, OrphanPolicy::Drop)?;
    let hs = corpus.truth.iter().map(|t| t.pair_id.split(':').next().unwrap().to_owned()).collect();
    let cs = corpus.truth.iter().map(|t| t.pair_id.split(':').nth(1).unwrap().to_owned()).collect();
    let pairs: Vec<PairRecord> = extract_pairs(&forest.trees, &hs, &cs, &CommunityMap::builtin(), |c| {
        Ok(c.body.split_whitespace().any(|w| ["vermin", "scum", "filth", "subhuman", "worthless"].contains(&w)))
    })?
    .iter()
    .map(|p| p.to_record())
    .collect();

    let ids: Vec<String> = pairs.iter().map(|p| p.pair_id()).collect();
    let split = split_corpus(&ids, 0.8, 13)?;
    let (train, test): (Vec<PairRecord>, Vec<PairRecord>) =
        pairs.into_iter().partition(|p| split.train.contains(&p.pair_id()));
    println!("train {} / test {}", train.len(), test.len());

    let variant = InputVariant::Pair;
    let spec = ModelSpec::ngram();
    let s1 = train_stage(Stage::Reentry, &train, variant, &spec, DEFAULT_SEPARATOR)?;
    let s2 = train_stage(Stage::ReentryType, &train, variant, &spec, DEFAULT_SEPARATOR)?;
    let joint = train_stage(Stage::ThreeWay, &train, variant, &spec, DEFAULT_SEPARATOR)?;

    let texts: Vec<String> = test
        .iter()
        .map(|p| make_input(p, variant, DEFAULT_SEPARATOR))
        .collect::<counterspeech::Result<_>>()?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let gold: Vec<OutcomeLabel> = test.iter().map(|p| p.outcome).collect();

    let train_labels: Vec<usize> = train.iter().map(|p| p.outcome.index()).collect();
    let base = majority_baseline(&train_labels, 3)?;
    let strategies = [
        ("three_way", predict_three_way_batch(&joint, &refs)?),
        ("two_stage", predict_two_stage_batch(&s1, &s2, &refs, Routing::Predicted, None)?),
        ("baseline", predict_three_way_batch(&base, &refs)?),
    ];
    for (name, preds) in &strategies {
        let labels: Vec<OutcomeLabel> = preds.iter().map(|p| p.label).collect();
        let report = prf(&confusion(&gold, &labels, &OutcomeLabel::ALL)?)?;
        println!("{name:>9}: weighted F1 {:.3}, accuracy {:.3}", report.weighted.f1, report.accuracy);
    }
    Ok(())
}
