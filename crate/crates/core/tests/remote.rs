use std::fs;
use std::time::Duration;

use counterspeech::classify::stub::{StubReply, StubServer};
use counterspeech::classify::{
    classify_lexicon, remote_classify, ClassifierSpec, Ensemble, RemoteClassifier, RemoteConfig, Task, TextClassifier,
};
use counterspeech::linguistics::builtin_detector;
use counterspeech::pipeline::cli::main_with_args;
use counterspeech::synth::default_run_config;
use counterspeech::Error;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/dump60.ndjson");

fn config(url: &str, timeout_ms: u64) -> RemoteConfig {
    RemoteConfig::new(url, Duration::from_millis(timeout_ms))
}

#[test]
fn contract_echo() {
    let stub = StubServer::start(|_, req| {
        assert_eq!(req.task, "hate");
        assert_eq!(req.texts, ["a", "b"]);
        StubReply::labels(&[1, 0], 2)
    })
    .unwrap();
    let d = remote_classify(&config(&stub.url(), 2000), Task::Hate, &["a", "b"]).unwrap();
    assert_eq!(d.iter().map(|d| d.label).collect::<Vec<_>>(), [1, 0]);
    assert_eq!(d[0].scores, [0.0, 1.0]);
}

#[test]
fn batches_preserve_order() {
    let stub = StubServer::per_text(2, |_, t| usize::from(t.ends_with('7') || t.ends_with('3'))).unwrap();
    let mut cfg = config(&stub.url(), 2000);
    cfg.max_batch = 3;
    cfg.max_in_flight = 2;
    let texts: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let got = RemoteClassifier::new(cfg, Task::Hate).classify_batch(&refs).unwrap();
    let labels: Vec<usize> = got.iter().map(|d| d.label).collect();
    let want: Vec<usize> = texts.iter().map(|t| usize::from(t.ends_with('7') || t.ends_with('3'))).collect();
    assert_eq!(labels, want);
    assert_eq!(stub.requests(), 7);
}

#[test]
fn short_response_is_protocol_error() {
    let stub = StubServer::start(|_, _| StubReply::labels(&[1], 2)).unwrap();
    let r = remote_classify(&config(&stub.url(), 2000), Task::Hate, &["a", "b"]);
    assert!(matches!(r, Err(Error::Protocol(_))), "{r:?}");
    assert_eq!(stub.requests(), 1);
}

#[test]
fn malformed_json_is_protocol_error() {
    let stub = StubServer::start(|_, _| StubReply::json(200, "{\"labels\": [1,")).unwrap();
    let r = remote_classify(&config(&stub.url(), 2000), Task::Hate, &["a"]);
    assert!(matches!(r, Err(Error::Protocol(_))), "{r:?}");
}

#[test]
fn timeout_retries_then_transport_error() {
    let stub = StubServer::start(|_, _| StubReply::labels(&[0], 2).delayed(Duration::from_millis(600))).unwrap();
    let mut cfg = config(&stub.url(), 100);
    cfg.retries = 2;
    let r = remote_classify(&cfg, Task::Hate, &["slow"]);
    match r {
        Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(stub.requests(), 3);
}

#[test]
fn server_errors_are_retried() {
    let stub = StubServer::start(|n, _| {
        if n == 0 {
            StubReply::error(503, "loading")
        } else {
            StubReply::labels(&[1], 2)
        }
    })
    .unwrap();
    let d = remote_classify(&config(&stub.url(), 2000), Task::Counter, &["x"]).unwrap();
    assert_eq!(d[0].label, 1);
    assert_eq!(stub.requests(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = StubServer::start(|_, _| StubReply::error(404, "unknown task")).unwrap();
    let r = remote_classify(&config(&stub.url(), 2000), Task::Hate, &["x"]);
    assert!(matches!(r, Err(Error::Protocol(_))), "{r:?}");
    assert_eq!(stub.requests(), 1);
}

#[test]
fn three_member_ensemble_matches_local_oracle() {
    let names = ["hate_a", "hate_b", "hate_c"];
    let stubs: Vec<StubServer> = names
        .iter()
        .map(|n| {
            let lex = builtin_detector(n).unwrap();
            StubServer::per_text(2, move |_, t| classify_lexicon(t, &lex, 0.1).label).unwrap()
        })
        .collect();
    let words = ["vermin", "trash", "garbage", "pathetic", "scum", "hello", "there", "friend"];
    let texts: Vec<String> = (0..50)
        .map(|i| format!("{} {} {}", words[i % 8], words[(i * 3) % 8], words[(i * 5 + 1) % 8]))
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let members: Vec<Box<dyn TextClassifier>> = stubs
        .iter()
        .map(|s| Box::new(RemoteClassifier::new(config(&s.url(), 2000), Task::Hate)) as Box<dyn TextClassifier>)
        .collect();
    let got = Ensemble::new(members).unwrap().judge_batch(&refs).unwrap();
    let lexes: Vec<_> = names.iter().map(|n| builtin_detector(n).unwrap()).collect();
    let want: Vec<bool> = refs
        .iter()
        .map(|t| lexes.iter().all(|l| classify_lexicon(t, l, 0.1).label == 1))
        .collect();
    assert_eq!(got, want);
    assert!(want.iter().any(|&b| b) && want.iter().any(|&b| !b));
}

fn remote_member(task: &str, url: &str) -> serde_json::Value {
    serde_json::json!({"kind": "remote", "task": task, "parameters": {"endpoint": url, "timeout_ms": 2000}})
}

#[test]
fn label_stage_through_remote_members() {
    let dir = tempfile::tempdir().unwrap();
    let run = |cfg: &serde_json::Value, name: &str| -> (i32, Option<String>) {
        let path = dir.path().join(format!("{name}.json"));
        fs::write(&path, cfg.to_string()).unwrap();
        let code_ingest = main_with_args(["x", "ingest", "--config", path.to_str().unwrap()]);
        assert_eq!(code_ingest, 0);
        let code = main_with_args(["x", "label", "--config", path.to_str().unwrap()]);
        let labels = fs::read_to_string(dir.path().join(name).join("labels.jsonl")).ok();
        (code, labels)
    };
    let local = default_run_config(FIXTURE, "local");
    let (code, want) = run(&local, "local");
    assert_eq!(code, 0);

    let stub_for = |name: &'static str| {
        let lex = builtin_detector(name).unwrap();
        StubServer::per_text(2, move |_, t| classify_lexicon(t, &lex, 0.1).label).unwrap()
    };
    let stubs: Vec<StubServer> = ["hate_a", "hate_b", "hate_c", "counter_a", "counter_b", "counter_c"]
        .into_iter()
        .map(stub_for)
        .collect();
    let mut remote = default_run_config(FIXTURE, "remote");
    remote["labeling"]["hate"] = (0..3).map(|i| remote_member("hate", &stubs[i].url())).collect();
    remote["labeling"]["counter"] = (3..6).map(|i| remote_member("counter", &stubs[i].url())).collect();
    let (code, got) = run(&remote, "remote");
    assert_eq!(code, 0);
    assert_eq!(got, want);

    // Every member unreachable: transport failure exits 4.
    let dead = stubs[0].url();
    drop(stubs);
    let mut down = default_run_config(FIXTURE, "down");
    down["labeling"]["hate"] = (0..3).map(|_| remote_member("hate", &dead)).collect();
    let (code, _) = run(&down, "down");
    assert_eq!(code, 4);
}

#[test]
fn spec_builds_remote_member() {
    let spec: ClassifierSpec =
        serde_json::from_value(remote_member("counter", "http://127.0.0.1:1")).unwrap();
    let c = spec.build("m", std::path::Path::new(".")).unwrap();
    assert_eq!(c.class_count(), 2);
}
