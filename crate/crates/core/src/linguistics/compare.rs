//! Per-category comparison of counterspeech between outcome groups.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lexicon::{profile_text, Lexicon, LexiconProfile};
use super::stats::{bonferroni_threshold, wilcoxon_rank_sum, EXACT_MAX_SMALL};
use crate::error::Result;
use crate::outcomes::{Community, OutcomeLabel, PairRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Any reentry (group A) against no reentry (group B).
    ReentryVsNo,
    /// Hateful (A) against non-hateful (B) reentry; no-reentry pairs dropped.
    HatefulVsNonhateful,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::ReentryVsNo => "reentry_vs_no",
            Grouping::HatefulVsNonhateful => "hateful_vs_nonhateful",
        }
    }

    pub fn group_names(self) -> (&'static str, &'static str) {
        match self {
            Grouping::ReentryVsNo => ("reentry", "no_reentry"),
            Grouping::HatefulVsNonhateful => ("hateful", "non_hateful"),
        }
    }

    /// `Some(true)` for group A, `Some(false)` for B, `None` if excluded.
    fn side(self, o: OutcomeLabel) -> Option<bool> {
        match (self, o) {
            (Grouping::ReentryVsNo, o) => Some(o.is_reentry()),
            (Grouping::HatefulVsNonhateful, OutcomeLabel::NoReentry) => None,
            (Grouping::HatefulVsNonhateful, o) => Some(o == OutcomeLabel::HatefulReentry),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherInA,
    HigherInB,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::HigherInA => "↑",
            Direction::HigherInB => "↓",
        }
    }
}

/// Which group summary decides the arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionRule {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub alpha: f64,
    pub direction: DirectionRule,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            alpha: 0.05,
            direction: DirectionRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub grouping: Grouping,
    /// Community name or `All`.
    pub community: String,
    pub category: String,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub median_a: f64,
    pub median_b: f64,
    /// False when the groups are too small for any outcome to reach `alpha`.
    pub testable: bool,
    pub direction: Option<Direction>,
    pub u: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub significant_raw: bool,
    pub significant_bonferroni: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub results: Vec<ComparisonResult>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Whether groups of these sizes can produce a two-sided p at or below
/// `alpha`. Exact-path sizes are bounded by `2 / C(n_a + n_b, min)`.
pub fn can_reach_alpha(n_a: usize, n_b: usize, alpha: f64) -> bool {
    let small = n_a.min(n_b);
    if small < 2 {
        return false;
    }
    if small > EXACT_MAX_SMALL {
        return true;
    }
    2.0 / binomial(n_a + n_b, small) <= alpha
}

/// Tests each lexicon category between the two outcome groups, overall and
/// optionally per community.
///
/// Bonferroni family size is the number of categories in a cell. Results
/// are ordered by community (fixed order, `All` last) then lexicon order.
pub fn compare_groups(
    pairs: &[PairRecord],
    lexicons: &[Lexicon],
    grouping: Grouping,
    by_community: bool,
    options: &CompareOptions,
) -> Result<ComparisonReport> {
    let threshold = bonferroni_threshold(options.alpha, lexicons.len().max(1))?;
    let selected: Vec<(&PairRecord, bool)> = pairs
        .iter()
        .filter_map(|p| grouping.side(p.outcome).map(|s| (p, s)))
        .collect();
    let profiles: Vec<LexiconProfile> = selected
        .par_iter()
        .map(|(p, _)| profile_text(&p.cs_text, lexicons))
        .collect();

    let mut cells: BTreeMap<(u8, String), Vec<usize>> = BTreeMap::new();
    for (i, (p, _)) in selected.iter().enumerate() {
        if by_community {
            let rank = Community::ALL.iter().position(|c| *c == p.community).unwrap_or(0) as u8;
            cells.entry((rank, p.community.as_str().to_owned())).or_default().push(i);
        }
        cells.entry((u8::MAX, "All".to_owned())).or_default().push(i);
    }

    let (name_a, name_b) = grouping.group_names();
    let mut results = Vec::new();
    for ((_, community), members) in cells {
        let (in_a, in_b): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| selected[i].1);
        let testable = can_reach_alpha(in_a.len(), in_b.len(), options.alpha);
        for lex in lexicons {
            let cat = lex.name();
            let a: Vec<f64> = in_a.iter().map(|&i| profiles[i].score(cat)).collect();
            let b: Vec<f64> = in_b.iter().map(|&i| profiles[i].score(cat)).collect();
            let mut r = ComparisonResult {
                grouping,
                community: community.clone(),
                category: cat.to_owned(),
                group_a: name_a.into(),
                group_b: name_b.into(),
                n_a: a.len(),
                n_b: b.len(),
                mean_a: mean(&a),
                mean_b: mean(&b),
                median_a: median(&a),
                median_b: median(&b),
                testable,
                direction: None,
                u: None,
                z: None,
                p_value: None,
                significant_raw: false,
                significant_bonferroni: false,
            };
            if testable {
                let t = wilcoxon_rank_sum(&a, &b)?;
                let diff = match options.direction {
                    DirectionRule::Mean => r.mean_a - r.mean_b,
                    DirectionRule::Median => r.median_a - r.median_b,
                };
                let higher_in_a = if diff != 0.0 { diff > 0.0 } else { t.z > 0.0 };
                r.direction = Some(if higher_in_a {
                    Direction::HigherInA
                } else {
                    Direction::HigherInB
                });
                r.u = Some(t.u_a);
                r.z = Some(t.z);
                r.p_value = Some(t.p_value);
                r.significant_raw = t.p_value <= options.alpha;
                r.significant_bonferroni = t.p_value <= threshold;
            }
            results.push(r);
        }
    }
    Ok(ComparisonReport { results })
}

impl ComparisonReport {
    pub fn extend(&mut self, other: ComparisonReport) {
        self.results.extend(other.results);
    }

    pub fn find(&self, grouping: Grouping, community: &str, category: &str) -> Option<&ComparisonResult> {
        self.results
            .iter()
            .find(|r| r.grouping == grouping && r.community == community && r.category == category)
    }

    /// CSV of every testable result:
    /// `grouping,community,category,direction,U,z,p,sig_raw,sig_bonferroni`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "grouping",
            "community",
            "category",
            "direction",
            "U",
            "z",
            "p",
            "sig_raw",
            "sig_bonferroni",
        ])?;
        for r in self.results.iter().filter(|r| r.testable) {
            let dir = match r.direction {
                Some(Direction::HigherInA) => format!("higher_in_{}", r.group_a),
                Some(Direction::HigherInB) => format!("higher_in_{}", r.group_b),
                None => String::new(),
            };
            w.write_record([
                r.grouping.as_str().to_owned(),
                r.community.clone(),
                r.category.clone(),
                dir,
                r.u.map(|v| v.to_string()).unwrap_or_default(),
                r.z.map(|v| format!("{v:.6}")).unwrap_or_default(),
                r.p_value.map(|v| format!("{v:.6e}")).unwrap_or_default(),
                r.significant_raw.to_string(),
                r.significant_bonferroni.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Arrow table for one grouping: categories as rows, communities as
    /// columns. Arrows that miss the Bonferroni cut are underlined and
    /// untestable cells show `–`.
    pub fn to_markdown(&self, grouping: Grouping) -> String {
        let rows: Vec<&ComparisonResult> = self.results.iter().filter(|r| r.grouping == grouping).collect();
        let mut communities: Vec<&str> = Vec::new();
        let mut categories: Vec<&str> = Vec::new();
        for r in &rows {
            if !communities.contains(&r.community.as_str()) {
                communities.push(&r.community);
            }
            if !categories.contains(&r.category.as_str()) {
                categories.push(&r.category);
            }
        }
        let mut s = format!("| Factor | {} |\n|---|", communities.join(" | "));
        s.push_str(&":---:|".repeat(communities.len()));
        s.push('\n');
        for cat in categories {
            s.push_str(&format!("| {cat} |"));
            for com in &communities {
                let cell = rows
                    .iter()
                    .find(|r| r.category == cat && r.community == *com)
                    .map(|r| match (r.testable, r.direction) {
                        (true, Some(d)) if r.significant_bonferroni => d.arrow().to_owned(),
                        (true, Some(d)) => format!("<u>{}</u>", d.arrow()),
                        _ => "–".to_owned(),
                    })
                    .unwrap_or_default();
                s.push_str(&format!(" {cell} |"));
            }
            s.push('\n');
        }
        s
    }
}
