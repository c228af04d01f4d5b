//! Extraction of (hate speech, counterspeech) pairs and hater-reaction labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Comment, DialogueTree};

/// What the hater did after the counterspeech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutcomeLabel {
    #[serde(rename = "no_reentry")]
    NoReentry,
    #[serde(rename = "hateful")]
    HatefulReentry,
    #[serde(rename = "non_hateful")]
    NonHatefulReentry,
}

impl OutcomeLabel {
    /// Fixed class order; also the tie-break order everywhere.
    pub const ALL: [OutcomeLabel; 3] = [
        OutcomeLabel::NoReentry,
        OutcomeLabel::HatefulReentry,
        OutcomeLabel::NonHatefulReentry,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_reentry(self) -> bool {
        self != OutcomeLabel::NoReentry
    }

    /// Wire name used in JSON artifacts.
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::NoReentry => "no_reentry",
            OutcomeLabel::HatefulReentry => "hateful",
            OutcomeLabel::NonHatefulReentry => "non_hateful",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == s)
    }

    pub fn title(self) -> &'static str {
        match self {
            OutcomeLabel::NoReentry => "No Reentry",
            OutcomeLabel::HatefulReentry => "Hateful Reentry",
            OutcomeLabel::NonHatefulReentry => "Non-hateful Reentry",
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Community {
    Discussion,
    Identity,
    #[serde(rename = "Media-sharing")]
    MediaSharing,
    Meme,
    Hobby,
    Uncategorized,
}

impl Community {
    pub const ALL: [Community; 6] = [
        Community::Discussion,
        Community::Identity,
        Community::MediaSharing,
        Community::Meme,
        Community::Hobby,
        Community::Uncategorized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Community::Discussion => "Discussion",
            Community::Identity => "Identity",
            Community::MediaSharing => "Media-sharing",
            Community::Meme => "Meme",
            Community::Hobby => "Hobby",
            Community::Uncategorized => "Uncategorized",
        }
    }

    fn parse_key(s: &str) -> Option<Self> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Self::ALL.into_iter().find(|c| {
            c.as_str()
                .chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_lowercase()
                == norm
        })
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subreddit → community lookup. Matching ignores case and an `r/` prefix;
/// unknown subreddits are [`Community::Uncategorized`].
#[derive(Debug, Clone, Default)]
pub struct CommunityMap {
    map: HashMap<String, Community>,
}

const BUILTIN_COMMUNITIES: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/communities.json"));

impl CommunityMap {
    /// Parses `{"Category": ["subreddit", ...], ...}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        let mut map = HashMap::new();
        for (cat, subs) in raw {
            let community = Community::parse_key(&cat)
                .ok_or_else(|| Error::config(format!("communities.{cat}"), "unknown community"))?;
            for s in subs {
                map.insert(normalize_subreddit(&s), community);
            }
        }
        Ok(CommunityMap { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&raw)
    }

    /// The subreddit grouping shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_COMMUNITIES).expect("bundled community map is valid")
    }

    pub fn lookup(&self, subreddit: &str) -> Community {
        self.map
            .get(&normalize_subreddit(subreddit))
            .copied()
            .unwrap_or(Community::Uncategorized)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn normalize_subreddit(s: &str) -> String {
    let s = s.trim();
    let s = s.strip_prefix("/").unwrap_or(s);
    let s = s.strip_prefix("r/").or_else(|| s.strip_prefix("R/")).unwrap_or(s);
    s.to_lowercase()
}

/// A candidate pair before its outcome is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDraft {
    pub hs: Comment,
    pub cs: Comment,
}

/// A labeled corpus unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationPair {
    pub thread_id: String,
    pub hs: Comment,
    pub cs: Comment,
    pub outcome: OutcomeLabel,
    pub reentry_comment: Option<Comment>,
    pub subreddit: String,
    pub community: Community,
}

impl ConversationPair {
    pub fn pair_id(&self) -> String {
        pair_id(self.hs.key(), self.cs.key())
    }

    pub fn to_record(&self) -> PairRecord {
        PairRecord {
            hs_id: self.hs.key().to_owned(),
            cs_id: self.cs.key().to_owned(),
            hs_text: self.hs.body.clone(),
            cs_text: self.cs.body.clone(),
            outcome: self.outcome,
            reentry_id: self.reentry_comment.as_ref().map(|c| c.key().to_owned()),
            subreddit: self.subreddit.clone(),
            community: self.community,
        }
    }
}

pub fn pair_id(hs_id: &str, cs_id: &str) -> String {
    format!("{hs_id}:{cs_id}")
}

/// One line of `pairs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub hs_id: String,
    pub cs_id: String,
    pub hs_text: String,
    pub cs_text: String,
    pub outcome: OutcomeLabel,
    pub reentry_id: Option<String>,
    pub subreddit: String,
    pub community: Community,
}

impl PairRecord {
    pub fn pair_id(&self) -> String {
        pair_id(&self.hs_id, &self.cs_id)
    }
}

/// Finds every (hate speech, counterspeech) pair in `tree` that has a
/// follow-up conversation.
///
/// A pair needs the counterspeech to be a direct reply to the hate speech,
/// written by someone else, with at least one reply of its own. Hate speech
/// by a deleted author is skipped because its reentry cannot be detected.
/// Output is sorted by `(hs id, cs id)`.
pub fn find_pairs(
    tree: &DialogueTree,
    hs_ids: &HashSet<String>,
    cs_ids: &HashSet<String>,
) -> Result<Vec<PairDraft>> {
    for id in hs_ids.iter().chain(cs_ids) {
        if !tree.contains(id) {
            return Err(Error::Inconsistent(format!(
                "id {id} is not in thread {}",
                tree.thread_id()
            )));
        }
    }
    let mut out = Vec::new();
    for h in hs_ids {
        let hs = tree.get(h).expect("checked above");
        if hs.is_deleted() {
            continue;
        }
        for c in tree.children(h) {
            if !cs_ids.contains(c.as_str()) {
                continue;
            }
            let cs = tree.get(c).expect("child is in tree");
            if cs.author == hs.author || tree.children(c).is_empty() {
                continue;
            }
            out.push(PairDraft {
                hs: hs.clone(),
                cs: cs.clone(),
            });
        }
    }
    out.sort_by(|a, b| (a.hs.key(), a.cs.key()).cmp(&(b.hs.key(), b.cs.key())));
    Ok(out)
}

/// Labels the hater's reaction below the counterspeech.
///
/// The earliest `(created_utc, id)` comment by the hater anywhere in the
/// counterspeech subtree is the reentry; `is_hateful` decides its type.
pub fn label_reentry<F>(
    draft: &PairDraft,
    tree: &DialogueTree,
    mut is_hateful: F,
) -> Result<(OutcomeLabel, Option<Comment>)>
where
    F: FnMut(&Comment) -> Result<bool>,
{
    if !tree.contains(draft.cs.key()) {
        return Err(Error::Inconsistent(format!(
            "counterspeech {} is not in thread {}",
            draft.cs.id,
            tree.thread_id()
        )));
    }
    let hater = &draft.hs.author;
    let first = tree
        .descendants(draft.cs.key())
        .into_iter()
        .filter(|c| !c.is_deleted() && &c.author == hater)
        .min_by(|a, b| a.chrono_key().cmp(&b.chrono_key()));
    match first {
        None => Ok((OutcomeLabel::NoReentry, None)),
        Some(c) => {
            let label = if is_hateful(c)? {
                OutcomeLabel::HatefulReentry
            } else {
                OutcomeLabel::NonHatefulReentry
            };
            Ok((label, Some(c.clone())))
        }
    }
}

/// Runs [`find_pairs`] and [`label_reentry`] over a forest.
///
/// `hs_ids`/`cs_ids` may span many trees; each tree sees only its own ids.
/// Pairs are sorted by `(thread_id, hs id, cs id)`.
pub fn extract_pairs<F>(
    trees: &[DialogueTree],
    hs_ids: &HashSet<String>,
    cs_ids: &HashSet<String>,
    communities: &CommunityMap,
    mut is_hateful: F,
) -> Result<Vec<ConversationPair>>
where
    F: FnMut(&Comment) -> Result<bool>,
{
    let mut pairs = Vec::new();
    for tree in trees {
        let local = |ids: &HashSet<String>| -> HashSet<String> {
            tree.preorder()
                .into_iter()
                .map(|c| c.key().to_owned())
                .filter(|k| ids.contains(k))
                .collect()
        };
        let drafts = find_pairs(tree, &local(hs_ids), &local(cs_ids))?;
        for d in drafts {
            let (outcome, reentry_comment) = label_reentry(&d, tree, &mut is_hateful)?;
            let subreddit = d.hs.subreddit.clone();
            pairs.push(ConversationPair {
                thread_id: tree.thread_id().to_owned(),
                community: communities.lookup(&subreddit),
                subreddit,
                hs: d.hs,
                cs: d.cs,
                outcome,
                reentry_comment,
            });
        }
    }
    pairs.sort_by(|a, b| {
        (a.thread_id.as_str(), a.hs.key(), a.cs.key()).cmp(&(
            b.thread_id.as_str(),
            b.hs.key(),
            b.cs.key(),
        ))
    });
    Ok(pairs)
}

/// How row percentages are turned into integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentRounding {
    /// Each cell rounded half-up on its own; a row may sum to 99 or 101.
    Nearest,
    /// Round each cell, then give the residual to the largest cell so the
    /// row sums to exactly 100.
    #[default]
    #[serde(rename = "sum_to_100")]
    SumTo100,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Community name, or `All`.
    pub community: String,
    pub total: usize,
    /// Indexed by [`OutcomeLabel::index`].
    pub counts: [usize; 3],
    pub percents: [i64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub rows: Vec<SummaryRow>,
}

pub fn row_percentages(counts: [usize; 3], rounding: PercentRounding) -> [i64; 3] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0; 3];
    }
    let mut pct = counts.map(|c| (100.0 * c as f64 / total as f64).round() as i64);
    if rounding == PercentRounding::SumTo100 {
        let residual = 100 - pct.iter().sum::<i64>();
        if residual != 0 {
            let largest = (0..3)
                .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
                .expect("three cells");
            pct[largest] += residual;
        }
    }
    pct
}

/// Outcome counts and percentages per community plus an `All` row.
///
/// Communities appear in a fixed order and only when they have pairs.
pub fn summarize_corpus<I>(outcomes: I, rounding: PercentRounding) -> CorpusSummary
where
    I: IntoIterator<Item = (Community, OutcomeLabel)>,
{
    let mut per: BTreeMap<Community, [usize; 3]> = BTreeMap::new();
    let mut all = [0usize; 3];
    for (c, o) in outcomes {
        per.entry(c).or_default()[o.index()] += 1;
        all[o.index()] += 1;
    }
    if per.is_empty() {
        return CorpusSummary::default();
    }
    let mut rows: Vec<SummaryRow> = per
        .into_iter()
        .map(|(c, counts)| SummaryRow {
            community: c.as_str().to_owned(),
            total: counts.iter().sum(),
            counts,
            percents: row_percentages(counts, rounding),
        })
        .collect();
    rows.push(SummaryRow {
        community: "All".into(),
        total: all.iter().sum(),
        counts: all,
        percents: row_percentages(all, rounding),
    });
    CorpusSummary { rows }
}

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl CorpusSummary {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Community | # Counterspeech with Follow-up | No Reentry (%) | Hateful Reentry (%) | Non-hateful Reentry (%) |\n|---|---:|---:|---:|---:|\n",
        );
        for r in &self.rows {
            s.push_str(&format!("| {} | {} |", r.community, thousands(r.total)));
            for i in 0..3 {
                s.push_str(&format!(" {} ({}%) |", thousands(r.counts[i]), r.percents[i]));
            }
            s.push('\n');
        }
        s
    }

    pub fn row(&self, community: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.community == community)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_trees, OrphanPolicy};

    fn c(id: &str, parent: Option<&str>, author: &str, t: i64) -> Comment {
        Comment {
            id: id.into(),
            parent_id: parent.map(Into::into),
            thread_id: "t3_x".into(),
            author: author.into(),
            body: format!("body of {id}"),
            created_utc: t,
            subreddit: "MensRights".into(),
        }
    }

    fn tree(cs: Vec<Comment>) -> DialogueTree {
        let mut f = build_trees(cs, OrphanPolicy::Drop).unwrap();
        assert_eq!(f.trees.len(), 1);
        f.trees.remove(0)
    }

    fn ids(v: &[&str]) -> HashSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn never(_: &Comment) -> Result<bool> {
        Ok(false)
    }

    #[test]
    fn minimal_pair() {
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c", Some("t1_h"), "u1", 2),
            c("r", Some("t1_c"), "u2", 3),
        ]);
        let p = find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap();
        assert_eq!(p.len(), 1);
        let (o, r) = label_reentry(&p[0], &t, never).unwrap();
        assert_eq!(o, OutcomeLabel::NoReentry);
        assert!(r.is_none());
    }

    #[test]
    fn no_follow_up_no_pair() {
        let t = tree(vec![c("h", None, "hater", 1), c("c", Some("h"), "u1", 2)]);
        assert!(find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap().is_empty());
    }

    #[test]
    fn two_counterspeech_children() {
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c1", Some("h"), "u1", 2),
            c("c2", Some("h"), "u2", 3),
            c("c3", Some("h"), "u3", 4),
            c("r1", Some("c1"), "u4", 5),
            c("r2", Some("c2"), "u5", 6),
            c("r3", Some("c3"), "u5", 7),
        ]);
        let p = find_pairs(&t, &ids(&["h"]), &ids(&["c1", "c2"])).unwrap();
        let got: Vec<_> = p.iter().map(|d| (d.hs.id.as_str(), d.cs.id.as_str())).collect();
        assert_eq!(got, vec![("h", "c1"), ("h", "c2")]);
    }

    #[test]
    fn self_reply_and_deleted_hater_excluded() {
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c", Some("h"), "hater", 2),
            c("r", Some("c"), "u2", 3),
        ]);
        assert!(find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap().is_empty());
        let t = tree(vec![
            c("h", None, "[deleted]", 1),
            c("c", Some("h"), "u1", 2),
            c("r", Some("c"), "[deleted]", 3),
        ]);
        assert!(find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap().is_empty());
    }

    #[test]
    fn unknown_ids_are_fatal() {
        let t = tree(vec![c("h", None, "hater", 1)]);
        assert!(matches!(
            find_pairs(&t, &ids(&["zz"]), &ids(&[])),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn hateful_reentry_when_judge_says_so() {
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c", Some("h"), "u1", 2),
            c("r", Some("c"), "hater", 3),
        ]);
        let p = find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap();
        let (o, r) = label_reentry(&p[0], &t, |_| Ok(true)).unwrap();
        assert_eq!(o, OutcomeLabel::HatefulReentry);
        assert_eq!(r.unwrap().id, "r");
    }

    #[test]
    fn earliest_hater_comment_decides() {
        // hater posts at t=20 (hateful) on one branch and t=10 (not) deeper on another
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c", Some("h"), "u1", 2),
            c("a", Some("c"), "u2", 3),
            c("late", Some("c"), "hater", 20),
            c("early", Some("a"), "hater", 10),
        ]);
        let p = find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap();
        let (o, r) = label_reentry(&p[0], &t, |c| Ok(c.id == "late")).unwrap();
        assert_eq!(o, OutcomeLabel::NonHatefulReentry);
        assert_eq!(r.unwrap().id, "early");
    }

    #[test]
    fn hater_outside_counterspeech_subtree_is_ignored() {
        let t = tree(vec![
            c("h", None, "hater", 1),
            c("c", Some("h"), "u1", 2),
            c("r", Some("c"), "u2", 3),
            c("other", Some("h"), "hater", 4),
        ]);
        let p = find_pairs(&t, &ids(&["h"]), &ids(&["c"])).unwrap();
        assert_eq!(label_reentry(&p[0], &t, never).unwrap().0, OutcomeLabel::NoReentry);
    }

    #[test]
    fn table2_all_row() {
        assert_eq!(row_percentages([1880, 1168, 2675], PercentRounding::SumTo100), [33, 20, 47]);
        assert_eq!(row_percentages([1880, 1168, 2675], PercentRounding::Nearest), [33, 20, 47]);
    }

    #[test]
    fn table2_meme_row() {
        assert_eq!(row_percentages([143, 145, 240], PercentRounding::SumTo100), [27, 27, 46]);
        // independent rounding of 45.45% gives 45 and a 99% row
        assert_eq!(row_percentages([143, 145, 240], PercentRounding::Nearest), [27, 27, 45]);
    }

    #[test]
    fn summary_single_pair_and_empty() {
        let s = summarize_corpus([(Community::Meme, OutcomeLabel::HatefulReentry)], PercentRounding::default());
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.row("Meme").unwrap().percents, [0, 100, 0]);
        assert_eq!(s.row("All").unwrap().percents, [0, 100, 0]);
        assert!(summarize_corpus([], PercentRounding::default()).rows.is_empty());
    }

    #[test]
    fn summary_markdown_uses_thousands() {
        let mut v = Vec::new();
        v.extend(std::iter::repeat_n((Community::Identity, OutcomeLabel::NoReentry), 1880));
        v.extend(std::iter::repeat_n((Community::Identity, OutcomeLabel::HatefulReentry), 1168));
        v.extend(std::iter::repeat_n((Community::Identity, OutcomeLabel::NonHatefulReentry), 2675));
        let md = summarize_corpus(v, PercentRounding::default()).to_markdown();
        assert!(md.contains("| All | 5,723 | 1,880 (33%) | 1,168 (20%) | 2,675 (47%) |"), "{md}");
    }

    #[test]
    fn community_lookup() {
        let m = CommunityMap::builtin();
        assert_eq!(m.lookup("MensRights"), Community::Identity);
        assert_eq!(m.lookup("r/mensrights"), Community::Identity);
        assert_eq!(m.lookup("DankMemes"), Community::Meme);
        assert_eq!(m.lookup("worldnews"), Community::MediaSharing);
        assert_eq!(m.lookup("DotA2"), Community::Hobby);
        assert_eq!(m.lookup("changemyview"), Community::Discussion);
        assert_eq!(m.lookup("rust"), Community::Uncategorized);
    }

    #[test]
    fn outcome_wire_names() {
        for o in OutcomeLabel::ALL {
            assert_eq!(OutcomeLabel::parse(o.as_str()), Some(o));
            assert_eq!(serde_json::to_string(&o).unwrap(), format!("\"{}\"", o.as_str()));
        }
        assert_eq!(serde_json::to_string(&Community::MediaSharing).unwrap(), "\"Media-sharing\"");
    }
}
