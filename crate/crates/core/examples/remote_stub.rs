//! Runs a three-member ensemble against local stand-ins for the remote
//! classification service.
//!
//!     cargo run --example remote_stub

use std::time::Duration;

use counterspeech::classify::stub::StubServer;
use counterspeech::classify::{Ensemble, RemoteClassifier, RemoteConfig, Task, TextClassifier};

fn main() -> counterspeech::Result<()> {
    let keywords = ["vermin", "scum", "filth"];
    let stubs: Vec<StubServer> = keywords
        .iter()
        .map(|&k| StubServer::per_text(2, move |_, t| usize::from(t.contains(k) || t.contains("subhuman"))))
        .collect::<std::io::Result<_>>()?;
    let members: Vec<Box<dyn TextClassifier>> = stubs
        .iter()
        .map(|s| {
            let cfg = RemoteConfig::new(s.url(), Duration::from_secs(2));
            Box::new(RemoteClassifier::new(cfg, Task::Hate)) as Box<dyn TextClassifier>
        })
        .collect();
    let ensemble = Ensemble::new(members)?;
    let texts = ["vermin scum filth", "subhuman", "vermin only", "hello there"];
    for (t, hate) in texts.iter().zip(ensemble.judge_batch(&texts)?) {
        println!("{hate:>5}  {t}");
    }
    for (k, s) in keywords.iter().zip(&stubs) {
        println!("stub {k}: {} request(s) at {}", s.requests(), s.url());
    }
    Ok(())
}
