//! Writes a synthetic dump with known outcomes plus a ready-to-run config.
//!
//!     cargo run --example generate_synthetic -- /tmp/synth 2000
//!     cargo run --bin counterspeech -- ingest --config /tmp/synth/config.json

use std::path::PathBuf;

use counterspeech::synth::{generate, write_run_dir, SynthConfig};

fn main() -> counterspeech::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let pairs = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = SynthConfig { pairs, ..SynthConfig::default() };
    let path = write_run_dir(&dir, &cfg)?;
    let corpus = generate(&cfg)?;
    let mut counts = [0usize; 3];
    for t in &corpus.truth {
        counts[t.outcome.index()] += 1;
    }
    println!("{} comments, {} pairs", corpus.comments.len(), corpus.truth.len());
    println!("no / hateful / non-hateful reentry: {counts:?}");
    println!("config: {}", path.display());
    Ok(())
}
