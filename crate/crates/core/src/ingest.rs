//! Conversation dump ingestion and dialogue-tree reconstruction.
//!
//! Dumps are newline-delimited JSON, one comment per line. Parent ids may be
//! bare or carry Reddit-style `t1_` (comment) / `t3_` (submission) prefixes;
//! prefixes are stripped before resolution and a `t3_` parent marks the
//! comment as the root of a tree under that submission.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Author string used by Reddit for deleted or removed accounts.
pub const DELETED_AUTHOR: &str = "[deleted]";

/// One post or reply as it appears in a dump.
///
/// Ids are stored exactly as read so that re-serialization is lossless;
/// use [`Comment::key`] and [`Comment::parent_key`] for resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub parent_id: Option<String>,
    #[serde(rename = "link_id")]
    pub thread_id: String,
    pub author: String,
    pub body: String,
    pub created_utc: i64,
    pub subreddit: String,
}

impl Comment {
    pub fn key(&self) -> &str {
        strip_prefix(&self.id)
    }

    pub fn parent_key(&self) -> Option<&str> {
        self.parent_id.as_deref().map(strip_prefix)
    }

    pub fn thread_key(&self) -> &str {
        strip_prefix(&self.thread_id)
    }

    /// True when the author account was deleted; such comments stay in the
    /// tree but never count as the hater.
    pub fn is_deleted(&self) -> bool {
        self.author == DELETED_AUTHOR
    }

    fn parent_is_submission(&self) -> bool {
        match self.parent_id.as_deref() {
            None => true,
            Some(p) if p.starts_with("t3_") => true,
            Some(p) => strip_prefix(p) == self.thread_key(),
        }
    }

    /// Ordering key for sibling lists and earliest-first scans.
    pub fn chrono_key(&self) -> (i64, &str) {
        (self.created_utc, self.key())
    }
}

fn strip_prefix(id: &str) -> &str {
    match id.get(..3) {
        Some("t1_" | "t3_") => &id[3..],
        _ => id,
    }
}

/// A malformed dump line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Default)]
pub struct ParsedDump {
    pub comments: Vec<Comment>,
    pub errors: Vec<ParseError>,
}

/// Parses a newline-delimited JSON dump.
///
/// Blank lines are skipped. In strict mode the first malformed line aborts
/// with [`Error::Parse`]; in lenient mode it is recorded and parsing continues.
pub fn parse_dump<R: BufRead>(source: R, mode: ParseMode) -> Result<ParsedDump> {
    let mut out = ParsedDump::default();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(c) => out.comments.push(c),
            Err(reason) => {
                if mode == ParseMode::Strict {
                    return Err(Error::Parse {
                        line: lineno,
                        reason,
                    });
                }
                out.errors.push(ParseError {
                    line: lineno,
                    reason,
                });
            }
        }
    }
    Ok(out)
}

fn parse_record(line: &str) -> std::result::Result<Comment, String> {
    let c: Comment = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if c.id.is_empty() {
        return Err("empty id".into());
    }
    if c.created_utc < 0 {
        return Err(format!("negative created_utc {}", c.created_utc));
    }
    Ok(c)
}

/// Writes comments back in the dump schema.
pub fn write_dump<W: Write>(mut sink: W, comments: &[Comment]) -> Result<()> {
    for c in comments {
        serde_json::to_writer(&mut sink, c)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Parent/child thread structure rooted at a single comment.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueTree {
    thread_id: String,
    root: String,
    index: BTreeMap<String, Comment>,
    children: BTreeMap<String, Vec<String>>,
    parent: HashMap<String, String>,
}

impl DialogueTree {
    fn new(thread_id: String, root: Comment) -> Self {
        let key = root.key().to_owned();
        let mut index = BTreeMap::new();
        index.insert(key.clone(), root);
        DialogueTree {
            thread_id,
            root: key,
            index,
            children: BTreeMap::new(),
            parent: HashMap::new(),
        }
    }

    fn attach(&mut self, parent: &str, child: Comment) {
        let key = child.key().to_owned();
        self.parent.insert(key.clone(), parent.to_owned());
        self.children
            .entry(parent.to_owned())
            .or_default()
            .push(key.clone());
        self.index.insert(key, child);
    }

    fn sort_children(&mut self) {
        let index = &self.index;
        for kids in self.children.values_mut() {
            kids.sort_by(|a, b| index[a].chrono_key().cmp(&index[b].chrono_key()));
        }
    }

    pub fn thread_id(&self) -> &str {
        &self.thread_id
    }

    pub fn root(&self) -> &Comment {
        &self.index[&self.root]
    }

    pub fn get(&self, id: &str) -> Option<&Comment> {
        self.index.get(strip_prefix(id))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(strip_prefix(id))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Child keys sorted by `(created_utc, id)`.
    pub fn children(&self, id: &str) -> &[String] {
        self.children
            .get(strip_prefix(id))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn parent(&self, id: &str) -> Option<&Comment> {
        self.parent
            .get(strip_prefix(id))
            .and_then(|p| self.index.get(p))
    }

    /// All comments strictly below `id`, in pre-order.
    pub fn descendants(&self, id: &str) -> Vec<&Comment> {
        let mut out = Vec::new();
        let mut stack: Vec<&String> = self.children(id).iter().rev().collect();
        while let Some(k) = stack.pop() {
            out.push(&self.index[k]);
            stack.extend(self.children(k).iter().rev());
        }
        out
    }

    /// The whole tree in pre-order, root first.
    pub fn preorder(&self) -> Vec<&Comment> {
        let mut out = vec![self.root()];
        out.extend(self.descendants(&self.root));
        out
    }

    /// Number of levels (a lone root has depth 1).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root.as_str(), 1usize)];
        while let Some((k, d)) = stack.pop() {
            best = best.max(d);
            for c in self.children(k) {
                stack.push((c, d + 1));
            }
        }
        best
    }

    /// `(parent, child)` key pairs in pre-order.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.preorder()
            .into_iter()
            .flat_map(|c| {
                self.children(c.key())
                    .iter()
                    .map(move |k| (c.key().to_owned(), k.clone()))
            })
            .collect()
    }

    pub fn to_record(&self) -> TreeRecord {
        TreeRecord {
            thread_id: self.thread_id.clone(),
            comments: self.preorder().into_iter().cloned().collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|(p, c)| [p, c])
                .collect(),
        }
    }

    /// Rebuilds a tree from its serialized form, checking that the edges
    /// describe a single rooted tree over exactly the listed comments.
    pub fn from_record(rec: TreeRecord) -> Result<Self> {
        let mut by_key: HashMap<String, Comment> = HashMap::new();
        for c in rec.comments {
            let k = c.key().to_owned();
            if by_key.insert(k.clone(), c).is_some() {
                return Err(Error::DuplicateId(k));
            }
        }
        let mut child_of: HashMap<&str, &str> = HashMap::new();
        for [p, c] in &rec.edges {
            if !by_key.contains_key(p.as_str()) || !by_key.contains_key(c.as_str()) {
                return Err(Error::Inconsistent(format!(
                    "edge {p}->{c} references an unknown comment"
                )));
            }
            if child_of.insert(c, p).is_some() {
                return Err(Error::Inconsistent(format!("{c} has two parents")));
            }
        }
        let roots: Vec<&String> = by_key
            .keys()
            .filter(|k| !child_of.contains_key(k.as_str()))
            .collect();
        if roots.len() != 1 {
            return Err(Error::Inconsistent(format!(
                "thread {} has {} roots",
                rec.thread_id,
                roots.len()
            )));
        }
        let root_key = roots[0].clone();
        let mut kids: HashMap<&str, Vec<&str>> = HashMap::new();
        for [p, c] in &rec.edges {
            kids.entry(p.as_str()).or_default().push(c.as_str());
        }
        let mut tree = DialogueTree::new(rec.thread_id.clone(), by_key[&root_key].clone());
        let mut stack = vec![root_key.clone()];
        while let Some(k) = stack.pop() {
            for &c in kids.get(k.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                if tree.index.contains_key(c) {
                    return Err(Error::Cycle(vec![c.to_owned()]));
                }
                tree.attach(&k, by_key[c].clone());
                stack.push(c.to_owned());
            }
        }
        if tree.len() != by_key.len() {
            let mut unreached: Vec<String> = by_key
                .keys()
                .filter(|k| !tree.index.contains_key(*k))
                .cloned()
                .collect();
            unreached.sort();
            return Err(Error::Cycle(unreached));
        }
        tree.sort_children();
        Ok(tree)
    }
}

/// JSON-lines form of a tree: `{"thread_id", "comments", "edges"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub thread_id: String,
    pub comments: Vec<Comment>,
    pub edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrphanPolicy {
    #[default]
    Drop,
    PromoteToRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrphanReason {
    /// The parent id does not resolve to any comment in the dump.
    MissingParent,
    /// The parent exists but belongs to another thread.
    CrossThread,
    /// An ancestor was itself orphaned and dropped.
    DetachedAncestor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanReport {
    pub id: String,
    pub parent_id: Option<String>,
    pub reason: OrphanReason,
}

#[derive(Debug, Default)]
pub struct Forest {
    pub trees: Vec<DialogueTree>,
    pub orphans: Vec<OrphanReport>,
}

/// Groups comments into dialogue trees.
///
/// Trees come out sorted by `(thread_id, root created_utc, root id)`.
/// Under [`OrphanPolicy::Drop`] every comment lands either in exactly one
/// tree or in the orphan report.
pub fn build_trees(comments: Vec<Comment>, policy: OrphanPolicy) -> Result<Forest> {
    let mut seen = HashSet::new();
    for c in &comments {
        if !seen.insert(c.key().to_owned()) {
            return Err(Error::DuplicateId(c.id.clone()));
        }
    }
    drop(seen);

    let mut by_thread: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
    let mut thread_of: HashMap<String, String> = HashMap::new();
    for c in &comments {
        thread_of.insert(c.key().to_owned(), c.thread_key().to_owned());
    }
    for c in comments {
        by_thread.entry(c.thread_key().to_owned()).or_default().push(c);
    }

    let per_thread: Vec<Result<Forest>> = by_thread
        .into_par_iter()
        .map(|(thread, cs)| build_thread(thread, cs, &thread_of, policy))
        .collect();

    let mut forest = Forest::default();
    for r in per_thread {
        let f = r?;
        forest.trees.extend(f.trees);
        forest.orphans.extend(f.orphans);
    }
    forest.orphans.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(forest)
}

#[derive(Clone, Copy, PartialEq)]
enum Reach {
    Unknown,
    OnPath,
    Root,
    Orphan,
}

fn build_thread(
    thread: String,
    comments: Vec<Comment>,
    thread_of: &HashMap<String, String>,
    policy: OrphanPolicy,
) -> Result<Forest> {
    let pos: HashMap<&str, usize> = comments
        .iter()
        .enumerate()
        .map(|(i, c)| (c.key(), i))
        .collect();

    // parent index within this thread, or the reason it is unresolvable
    let mut parent: Vec<Option<usize>> = vec![None; comments.len()];
    let mut primary: HashMap<usize, OrphanReason> = HashMap::new();
    for (i, c) in comments.iter().enumerate() {
        if c.parent_is_submission() {
            continue;
        }
        let pk = c.parent_key().expect("non-root has a parent id");
        match pos.get(pk) {
            Some(&j) => parent[i] = Some(j),
            None if thread_of.contains_key(pk) => {
                primary.insert(i, OrphanReason::CrossThread);
            }
            None => {
                primary.insert(i, OrphanReason::MissingParent);
            }
        }
    }

    let mut reach = vec![Reach::Unknown; comments.len()];
    for start in 0..comments.len() {
        if reach[start] != Reach::Unknown {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut cur = start;
        let end = loop {
            match reach[cur] {
                Reach::Root | Reach::Orphan => break reach[cur],
                Reach::OnPath => {
                    let at = path.iter().position(|&p| p == cur).unwrap_or(0);
                    let mut ids: Vec<String> =
                        path[at..].iter().map(|&p| comments[p].id.clone()).collect();
                    ids.sort();
                    return Err(Error::Cycle(ids));
                }
                Reach::Unknown => {}
            }
            reach[cur] = Reach::OnPath;
            path.push(cur);
            if primary.contains_key(&cur) {
                break Reach::Orphan;
            }
            match parent[cur] {
                Some(p) => cur = p,
                None => break Reach::Root,
            }
        };
        for p in path {
            reach[p] = end;
        }
    }

    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); comments.len()];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            kids[*p].push(i);
        }
    }

    let mut roots: Vec<usize> = (0..comments.len())
        .filter(|&i| parent[i].is_none() && !primary.contains_key(&i))
        .collect();
    let mut orphans = Vec::new();
    for (i, c) in comments.iter().enumerate() {
        if let Some(&reason) = primary.get(&i) {
            orphans.push(OrphanReport {
                id: c.id.clone(),
                parent_id: c.parent_id.clone(),
                reason,
            });
            if policy == OrphanPolicy::PromoteToRoot {
                roots.push(i);
            }
        } else if reach[i] == Reach::Orphan && policy == OrphanPolicy::Drop {
            orphans.push(OrphanReport {
                id: c.id.clone(),
                parent_id: c.parent_id.clone(),
                reason: OrphanReason::DetachedAncestor,
            });
        }
    }

    let keys: Vec<String> = comments.iter().map(|c| c.key().to_owned()).collect();
    let mut slots: Vec<Option<Comment>> = comments.into_iter().map(Some).collect();
    let mut trees = Vec::with_capacity(roots.len());
    for r in roots {
        let root = slots[r].take().expect("each root taken once");
        let mut tree = DialogueTree::new(thread.clone(), root);
        let mut stack = vec![r];
        while let Some(i) = stack.pop() {
            for &k in &kids[i] {
                if primary.contains_key(&k) {
                    continue;
                }
                let child = slots[k].take().expect("each child taken once");
                tree.attach(&keys[i], child);
                stack.push(k);
            }
        }
        tree.sort_children();
        trees.push(tree);
    }
    trees.sort_by(|a, b| a.root().chrono_key().cmp(&b.root().chrono_key()));
    Ok(Forest { trees, orphans })
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"]*[^\s<>"'.,;:!?)\]]"#).unwrap()
    })
}

fn mention_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(^|[^\w/])/?u/[A-Za-z0-9_-]+(?:/u/[A-Za-z0-9_-]+)*").unwrap())
}

/// Replaces URLs with `[URL]` and user mentions (`u/NAME`, `/u/NAME`) with
/// `u/[USER]`. Everything else is left untouched. Chained mentions such as
/// `u/a/u/b` collapse to one marker so that masking is idempotent.
pub fn mask_pii(text: &str) -> String {
    let no_urls = url_pattern().replace_all(text, "[URL]");
    mention_pattern()
        .replace_all(&no_urls, "${1}u/[USER]")
        .into_owned()
}

/// Stable pseudonym for an author name. Deleted authors keep their marker.
pub fn pseudonymize_author(author: &str, salt: &str) -> String {
    if author == DELETED_AUTHOR {
        return author.to_owned();
    }
    let digest = Sha256::new()
        .chain_update(salt.as_bytes())
        .chain_update([0u8])
        .chain_update(author.as_bytes())
        .finalize();
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("user_{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(id: &str, parent: Option<&str>, t: i64) -> Comment {
        Comment {
            id: id.into(),
            parent_id: parent.map(Into::into),
            thread_id: "t3_th".into(),
            author: format!("a_{id}"),
            body: format!("body {id}"),
            created_utc: t,
            subreddit: "politics".into(),
        }
    }

    #[test]
    fn minimal_record() {
        let line = r#"{"id":"c1","parent_id":null,"link_id":"t3_x","author":"a","body":"b","created_utc":5,"subreddit":"s"}"#;
        let d = parse_dump(line.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(d.comments.len(), 1);
        assert_eq!(d.comments[0].id, "c1");
        assert_eq!(d.comments[0].parent_id, None);
        assert!(d.errors.is_empty());
    }

    #[test]
    fn malformed_lines() {
        let d = parse_dump("not json".as_bytes(), ParseMode::Lenient).unwrap();
        assert!(d.comments.is_empty());
        assert_eq!(d.errors.len(), 1);
        assert_eq!(d.errors[0].line, 1);
        assert!(matches!(
            parse_dump("not json".as_bytes(), ParseMode::Strict),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn five_line_fixture_with_missing_id() {
        let src = [
            r#"{"id":"a","parent_id":"t3_x","link_id":"t3_x","author":"u1","body":"one","created_utc":1,"subreddit":"s"}"#,
            r#"{"id":"b","parent_id":"t1_a","link_id":"t3_x","author":"u2","body":"two","created_utc":2,"subreddit":"s"}"#,
            r#"{"parent_id":"t1_a","link_id":"t3_x","author":"u3","body":"three","created_utc":3,"subreddit":"s"}"#,
            r#"{"id":"d","parent_id":"t1_b","link_id":"t3_x","author":"u1","body":"four","created_utc":4,"subreddit":"s"}"#,
            r#"{"id":"e","parent_id":"t1_a","link_id":"t3_x","author":"u4","body":"five","created_utc":5,"subreddit":"s"}"#,
        ]
        .join("\n");
        let d = parse_dump(src.as_bytes(), ParseMode::Lenient).unwrap();
        let ids: Vec<&str> = d.comments.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "d", "e"]);
        assert_eq!(d.errors.len(), 1);
        assert_eq!(d.errors[0].line, 3);
        assert!(d.errors[0].reason.contains("id"));
    }

    #[test]
    fn chain_and_orphan() {
        let f = build_trees(
            vec![c("A", None, 1), c("B", Some("A"), 2), c("C", Some("B"), 3)],
            OrphanPolicy::Drop,
        )
        .unwrap();
        assert_eq!(f.trees.len(), 1);
        let t = &f.trees[0];
        assert_eq!(t.depth(), 3);
        assert_eq!(t.children("A"), ["B"]);
        assert_eq!(t.children("B"), ["C"]);

        let f = build_trees(vec![c("A", None, 1), c("D", Some("missing"), 2)], OrphanPolicy::Drop).unwrap();
        assert_eq!(f.trees.len(), 1);
        assert_eq!(f.trees[0].len(), 1);
        assert_eq!(f.orphans.len(), 1);
        assert_eq!(f.orphans[0].id, "D");
        assert_eq!(f.orphans[0].reason, OrphanReason::MissingParent);

        let f = build_trees(
            vec![c("A", None, 1), c("D", Some("missing"), 2), c("E", Some("D"), 3)],
            OrphanPolicy::PromoteToRoot,
        )
        .unwrap();
        assert_eq!(f.trees.len(), 2);
        assert_eq!(f.trees[1].children("D"), ["E"]);
    }

    #[test]
    fn detached_descendants_are_reported() {
        let f = build_trees(
            vec![c("A", None, 1), c("D", Some("gone"), 2), c("E", Some("t1_D"), 3)],
            OrphanPolicy::Drop,
        )
        .unwrap();
        let reasons: Vec<(&str, OrphanReason)> = f.orphans.iter().map(|o| (o.id.as_str(), o.reason)).collect();
        assert_eq!(
            reasons,
            [("D", OrphanReason::MissingParent), ("E", OrphanReason::DetachedAncestor)]
        );
    }

    #[test]
    fn cross_thread_parent() {
        let mut other = c("X", None, 1);
        other.thread_id = "t3_other".into();
        let f = build_trees(vec![c("A", None, 1), other, c("B", Some("t1_X"), 2)], OrphanPolicy::Drop).unwrap();
        assert_eq!(f.orphans[0].reason, OrphanReason::CrossThread);
    }

    #[test]
    fn duplicates_and_cycles_are_fatal() {
        assert!(matches!(
            build_trees(vec![c("A", None, 1), c("A", None, 2)], OrphanPolicy::Drop),
            Err(Error::DuplicateId(_))
        ));
        match build_trees(
            vec![c("R", None, 0), c("A", Some("B"), 1), c("B", Some("A"), 2)],
            OrphanPolicy::Drop,
        ) {
            Err(Error::Cycle(ids)) => assert_eq!(ids, ["A", "B"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prefixes_and_thread_parent() {
        let f = build_trees(
            vec![c("t1_A", Some("t3_th"), 1), c("B", Some("th"), 1), c("C", Some("t1_A"), 2)],
            OrphanPolicy::Drop,
        )
        .unwrap();
        assert_eq!(f.trees.len(), 2);
        assert_eq!(f.trees[0].root().id, "t1_A");
        assert_eq!(f.trees[0].children("A"), ["C"]);
    }

    #[test]
    fn siblings_sorted_by_time_then_id() {
        let f = build_trees(
            vec![c("R", None, 0), c("z", Some("R"), 5), c("b", Some("R"), 5), c("q", Some("R"), 1)],
            OrphanPolicy::Drop,
        )
        .unwrap();
        assert_eq!(f.trees[0].children("R"), ["q", "b", "z"]);
    }

    #[test]
    fn tree_record_round_trip() {
        let f = build_trees(
            vec![c("R", None, 0), c("a", Some("R"), 1), c("b", Some("a"), 2), c("d", Some("R"), 3)],
            OrphanPolicy::Drop,
        )
        .unwrap();
        let rec = f.trees[0].to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back = DialogueTree::from_record(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, f.trees[0]);
        let mut bad = rec.clone();
        bad.edges.push(["b".into(), "R".into()]);
        assert!(DialogueTree::from_record(bad).is_err());
    }

    #[test]
    fn masking_examples() {
        assert_eq!(mask_pii("u/john said hi"), "u/[USER] said hi");
        assert_eq!(mask_pii(""), "");
        assert_eq!(mask_pii("see https://x.y/z and /u/ann"), "see [URL] and u/[USER]");
        assert_eq!(mask_pii("visit www.example.com."), "visit [URL].");
        assert_eq!(mask_pii("menu/item stays"), "menu/item stays");
        assert_eq!(mask_pii("u/u/u/a"), "u/[USER]");
    }

    #[test]
    fn pseudonyms_are_stable() {
        let a = pseudonymize_author("alice", "s");
        assert_eq!(a, pseudonymize_author("alice", "s"));
        assert_ne!(a, pseudonymize_author("alice", "t"));
        assert_eq!(a.len(), "user_".len() + 12);
        assert_eq!(pseudonymize_author(DELETED_AUTHOR, "s"), DELETED_AUTHOR);
    }

    /// Attaches comments to known nodes until nothing changes.
    fn oracle_trees(comments: &[Comment]) -> Vec<BTreeMap<String, Option<String>>> {
        let mut trees: Vec<BTreeMap<String, Option<String>>> = comments
            .iter()
            .filter(|c| c.parent_id.is_none())
            .map(|c| BTreeMap::from([(c.id.clone(), None)]))
            .collect();
        let mut placed: HashSet<String> = trees.iter().flat_map(|t| t.keys().cloned()).collect();
        loop {
            let mut changed = false;
            for c in comments {
                if placed.contains(&c.id) {
                    continue;
                }
                let Some(p) = &c.parent_id else { continue };
                if let Some(t) = trees.iter_mut().find(|t| t.contains_key(p)) {
                    t.insert(c.id.clone(), Some(p.clone()));
                    placed.insert(c.id.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        trees.sort();
        trees
    }

    fn random_forest() -> impl Strategy<Value = Vec<Comment>> {
        prop::collection::vec((any::<u16>(), 0i64..20, 0u8..100), 1..50).prop_map(|spec| {
            spec.iter()
                .enumerate()
                .map(|(i, &(pick, t, miss))| {
                    let parent = if i == 0 || pick % 5 == 0 {
                        None
                    } else if miss < 5 {
                        Some(format!("ghost{i}"))
                    } else {
                        Some(format!("n{}", pick as usize % i))
                    };
                    c(&format!("n{i}"), parent.as_deref(), t)
                })
                .collect()
        })
    }

    fn arb_comment() -> impl Strategy<Value = Comment> {
        (
            "[a-z0-9]{1,8}",
            prop::option::of("t1_[a-z0-9]{1,8}"),
            "t3_[a-z0-9]{1,6}",
            "\\PC{0,12}",
            "\\PC{0,40}",
            0i64..2_000_000_000,
            "[A-Za-z]{1,10}",
        )
            .prop_map(|(id, parent_id, thread_id, author, body, created_utc, subreddit)| Comment {
                id,
                parent_id,
                thread_id,
                author,
                body,
                created_utc,
                subreddit,
            })
    }

    proptest! {
        #[test]
        fn matches_attachment_oracle(comments in random_forest()) {
            let f = build_trees(comments.clone(), OrphanPolicy::Drop).unwrap();
            let mut got: Vec<BTreeMap<String, Option<String>>> = f
                .trees
                .iter()
                .map(|t| t.preorder().into_iter().map(|c| (c.id.clone(), t.parent(c.key()).map(|p| p.id.clone()))).collect())
                .collect();
            got.sort();
            prop_assert_eq!(got, oracle_trees(&comments));
            let sizes: usize = f.trees.iter().map(DialogueTree::len).sum();
            prop_assert_eq!(sizes + f.orphans.len(), comments.len());
            for t in &f.trees {
                for c in t.preorder() {
                    let kids = t.children(c.key());
                    for w in kids.windows(2) {
                        prop_assert!(t.get(&w[0]).unwrap().chrono_key() < t.get(&w[1]).unwrap().chrono_key());
                    }
                }
            }
        }

        #[test]
        fn dump_round_trip(comments in prop::collection::vec(arb_comment(), 0..20)) {
            let mut buf = Vec::new();
            write_dump(&mut buf, &comments).unwrap();
            let back = parse_dump(buf.as_slice(), ParseMode::Strict).unwrap();
            prop_assert_eq!(back.comments, comments);
        }

        #[test]
        fn masking_is_idempotent(s in "(\\PC|u/|/u/|https://|www\\.| ){0,40}") {
            let once = mask_pii(&s);
            prop_assert_eq!(mask_pii(&once), once.clone());
        }
    }
}
