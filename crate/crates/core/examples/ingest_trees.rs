//! Parses a dump, rebuilds conversation trees and prints one of them.
//!
//!     cargo run --example ingest_trees -- tests/fixtures/dump60.ndjson

use std::fs::File;
use std::io::BufReader;

use counterspeech::ingest::{build_trees, mask_pii, parse_dump, DialogueTree, OrphanPolicy, ParseMode};

fn print_subtree(tree: &DialogueTree, id: &str, depth: usize) {
    let c = tree.get(id).expect("id from the tree");
    println!("{}{} [{}] {}", "  ".repeat(depth), c.key(), c.author, mask_pii(&c.body));
    for child in tree.children(id) {
        print_subtree(tree, child, depth + 1);
    }
}

fn main() -> counterspeech::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/dump60.ndjson").into());
    let file = File::open(&path)?;
    let dump = parse_dump(BufReader::new(file), ParseMode::Lenient)?;
    println!("{} comments, {} malformed lines", dump.comments.len(), dump.errors.len());

    let forest = build_trees(dump.comments, OrphanPolicy::Drop)?;
    println!("{} trees, {} orphans", forest.trees.len(), forest.orphans.len());
    for o in &forest.orphans {
        println!("  orphan {} ({:?})", o.id, o.reason);
    }
    if let Some(tree) = forest.trees.first() {
        println!("\nthread {} (depth {}):", tree.thread_id(), tree.depth());
        print_subtree(tree, tree.root().key(), 0);
    }
    Ok(())
}
