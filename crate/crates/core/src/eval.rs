//! Evaluation math: confusion matrices, precision/recall/F1, McNemar's test,
//! Cohen's kappa and error-cause distributions.
//!
//! Raw values are kept at full precision; rounding to two decimals
//! (half away from zero) happens only when rendering.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::hash::Hash;
use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::outcomes::OutcomeLabel;

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Builds a matrix directly from counts.
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::InvalidInput("confusion matrix must be square over its classes".into()));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

/// Counts `(gold, predicted)` pairs over `classes`.
pub fn confusion<L>(gold: &[L], pred: &[L], classes: &[L]) -> Result<ConfusionMatrix>
where
    L: PartialEq + Display,
{
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let idx = |l: &L| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::InvalidInput(format!("unknown label {l}")))
    };
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        counts[idx(g)?][idx(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.iter().map(ToString::to_string).collect(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    /// Support-weighted averages.
    pub weighted: Averages,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class and support-weighted precision, recall and F1.
///
/// Zero denominators give 0, so a class that is never predicted scores
/// 0/0/0 rather than being dropped.
pub fn prf(matrix: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::InvalidInput("confusion matrix is empty".into()));
    }
    let per_class: Vec<ClassMetrics> = matrix
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let tp = matrix.counts[i][i];
            let precision = ratio(tp, matrix.col_sum(i));
            let recall = ratio(tp, matrix.row_sum(i));
            ClassMetrics {
                class: c.clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: matrix.row_sum(i),
            }
        })
        .collect();
    let w = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| m.support as f64 / total as f64 * f(m))
            .sum::<f64>()
    };
    Ok(MetricsReport {
        weighted: Averages {
            precision: w(|m| m.precision),
            // Support-weighted recall is trace/total; computed from counts it
            // equals accuracy bit for bit.
            recall: matrix.trace() as f64 / total as f64,
            f1: w(|m| m.f1),
        },
        accuracy: matrix.accuracy(),
        total,
        confusion: matrix.clone(),
        per_class,
    })
}

impl MetricsReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.class == name)
    }

    /// One table row: `| label | P | R | F1 | ... | wP | wR | wF1 |`.
    pub fn markdown_row(&self, label: &str) -> String {
        let mut s = format!("| {label} |");
        for m in &self.per_class {
            s.push_str(&format!(" {} | {} | {} |", fmt2(m.precision), fmt2(m.recall), fmt2(m.f1)));
        }
        s.push_str(&format!(
            " {} | {} | {} |",
            fmt2(self.weighted.precision),
            fmt2(self.weighted.recall),
            fmt2(self.weighted.f1)
        ));
        s
    }

    pub fn markdown_header(&self) -> String {
        let mut s = String::from("| Model |");
        for m in &self.per_class {
            s.push_str(&format!(" {c} P | {c} R | {c} F1 |", c = m.class));
        }
        s.push_str(" Weighted P | Weighted R | Weighted F1 |\n|---|");
        s.push_str(&"---:|".repeat(3 * self.per_class.len() + 3));
        s
    }

    pub fn to_markdown(&self, label: &str) -> String {
        format!("{}\n{}\n", self.markdown_header(), self.markdown_row(label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    ExactBinomial,
    ChiSquare,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Items A gets right and B gets wrong.
    pub b: u64,
    /// Items A gets wrong and B gets right.
    pub c: u64,
    /// Continuity-corrected chi-square, `(|b - c| - 1)^2 / (b + c)`.
    pub statistic: f64,
    pub p_value: f64,
    pub method: McNemarMethod,
}

/// Below this many discordant items the exact binomial p-value is used.
pub const MCNEMAR_EXACT_BELOW: u64 = 25;

/// McNemar's test between two predictors on the same items.
pub fn mcnemar<L: PartialEq>(gold: &[L], pred_a: &[L], pred_b: &[L]) -> Result<McNemarResult> {
    if gold.len() != pred_a.len() || gold.len() != pred_b.len() {
        return Err(Error::InvalidInput("McNemar inputs differ in length".into()));
    }
    let (mut b, mut c) = (0u64, 0u64);
    for ((g, a), p) in gold.iter().zip(pred_a).zip(pred_b) {
        match (a == g, p == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

pub fn mcnemar_from_counts(b: u64, c: u64) -> McNemarResult {
    let n = b + c;
    if n == 0 {
        return McNemarResult {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
            method: McNemarMethod::Degenerate,
        };
    }
    let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let statistic = diff * diff / n as f64;
    if n < MCNEMAR_EXACT_BELOW {
        // 2 * P(X <= min(b, c)), X ~ Binomial(n, 1/2)
        let k = b.min(c);
        let mut term = 1.0f64;
        let mut tail = 1.0f64;
        for i in 1..=k {
            term *= (n - i + 1) as f64 / i as f64;
            tail += term;
        }
        let p = (2.0 * tail / 2f64.powi(n as i32)).min(1.0);
        McNemarResult {
            b,
            c,
            statistic,
            p_value: p,
            method: McNemarMethod::ExactBinomial,
        }
    } else {
        McNemarResult {
            b,
            c,
            statistic,
            p_value: erfc((statistic / 2.0).sqrt()).min(1.0),
            method: McNemarMethod::ChiSquare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub agreement_rate: f64,
    pub kappa: f64,
}

/// Raw agreement and Cohen's kappa between two labelings of the same items.
///
/// When chance agreement is 1 (both raters used one and the same label)
/// kappa is 1 for perfect agreement and 0 otherwise.
pub fn cohen_kappa<L: Eq + Hash>(a: &[L], b: &[L]) -> Result<Agreement> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("{} vs {} labels", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("no items to compare".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    let mut ma: HashMap<&L, f64> = HashMap::new();
    let mut mb: HashMap<&L, f64> = HashMap::new();
    for x in a {
        *ma.entry(x).or_default() += 1.0;
    }
    for y in b {
        *mb.entry(y).or_default() += 1.0;
    }
    let p_e: f64 = ma
        .iter()
        .map(|(k, ca)| ca / n * mb.get(k).copied().unwrap_or(0.0) / n)
        .sum();
    let kappa = if (1.0 - p_e).abs() < 1e-15 {
        if p_o == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(Agreement {
        agreement_rate: p_o,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub item_id: String,
    pub label_a: String,
    pub label_b: String,
}

/// Reads an `item_id,label_a,label_b` CSV with a header row.
pub fn read_annotations<R: Read>(source: R) -> Result<Vec<AnnotationRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    Ok(r.deserialize().collect::<std::result::Result<Vec<AnnotationRow>, _>>()?)
}

pub fn annotation_agreement(rows: &[AnnotationRow]) -> Result<Agreement> {
    let a: Vec<&str> = rows.iter().map(|r| r.label_a.as_str()).collect();
    let b: Vec<&str> = rows.iter().map(|r| r.label_b.as_str()).collect();
    cohen_kappa(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "FN")]
    FalseNegative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::FalsePositive => "FP",
            Polarity::FalseNegative => "FN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCause {
    RhetoricalQuestion,
    Negation,
    SarcasmIrony,
    IntricateText,
    GeneralKnowledge,
    Other,
}

impl ErrorCause {
    pub const ALL: [ErrorCause; 6] = [
        ErrorCause::RhetoricalQuestion,
        ErrorCause::Negation,
        ErrorCause::SarcasmIrony,
        ErrorCause::IntricateText,
        ErrorCause::GeneralKnowledge,
        ErrorCause::Other,
    ];

    pub fn title(self) -> &'static str {
        match self {
            ErrorCause::RhetoricalQuestion => "Rhetorical Questions",
            ErrorCause::Negation => "Negation",
            ErrorCause::SarcasmIrony => "Sarcasm or Irony",
            ErrorCause::IntricateText => "Intricate Text",
            ErrorCause::GeneralKnowledge => "General Knowledge",
            ErrorCause::Other => "Other",
        }
    }
}

/// One annotated misclassification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub pair_id: String,
    pub gold: OutcomeLabel,
    pub predicted: OutcomeLabel,
    /// Class the polarity refers to.
    pub class: OutcomeLabel,
    pub polarity: Polarity,
    pub cause: ErrorCause,
}

impl ErrorRecord {
    /// A record must be a real error, and an FP (FN) for `class` must have
    /// predicted (gold) equal to that class.
    pub fn validate(&self) -> Result<()> {
        if self.gold == self.predicted {
            return Err(Error::InvalidInput(format!("{}: gold equals predicted", self.pair_id)));
        }
        let consistent = match self.polarity {
            Polarity::FalsePositive => self.predicted == self.class,
            Polarity::FalseNegative => self.gold == self.class,
        };
        if !consistent {
            return Err(Error::InvalidInput(format!(
                "{}: {} for {} does not match gold/predicted",
                self.pair_id,
                self.polarity.as_str(),
                self.class
            )));
        }
        Ok(())
    }
}

/// Reads `pair_id,gold,predicted,class,polarity,cause` rows (with header).
pub fn read_error_records<R: Read>(source: R) -> Result<Vec<ErrorRecord>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let recs = r.deserialize().collect::<std::result::Result<Vec<ErrorRecord>, _>>()?;
    for rec in &recs {
        rec.validate()?;
    }
    Ok(recs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorColumn {
    /// `None` for the aggregate column.
    pub class: Option<OutcomeLabel>,
    pub polarity: Option<Polarity>,
    pub count: usize,
    /// Share of each cause, in [`ErrorCause::ALL`] order; empty when `count` is 0.
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub columns: Vec<ErrorColumn>,
}

fn cause_shares(records: &[&ErrorRecord]) -> Vec<f64> {
    if records.is_empty() {
        return Vec::new();
    }
    let mut counts: BTreeMap<ErrorCause, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.cause).or_default() += 1;
    }
    ErrorCause::ALL
        .iter()
        .map(|c| counts.get(c).copied().unwrap_or(0) as f64 / records.len() as f64)
        .collect()
}

/// Cause proportions per (class, polarity) column plus an `All` column.
pub fn error_report(records: &[ErrorRecord]) -> ErrorReport {
    if records.is_empty() {
        return ErrorReport::default();
    }
    let mut columns = Vec::new();
    for class in OutcomeLabel::ALL {
        for pol in [Polarity::FalsePositive, Polarity::FalseNegative] {
            let sel: Vec<&ErrorRecord> = records
                .iter()
                .filter(|r| r.class == class && r.polarity == pol)
                .collect();
            columns.push(ErrorColumn {
                class: Some(class),
                polarity: Some(pol),
                count: sel.len(),
                proportions: cause_shares(&sel),
            });
        }
    }
    let all: Vec<&ErrorRecord> = records.iter().collect();
    columns.push(ErrorColumn {
        class: None,
        polarity: None,
        count: all.len(),
        proportions: cause_shares(&all),
    });
    ErrorReport { columns }
}

impl ErrorReport {
    pub fn all(&self) -> Option<&ErrorColumn> {
        self.columns.iter().find(|c| c.class.is_none())
    }

    pub fn column(&self, class: OutcomeLabel, polarity: Polarity) -> Option<&ErrorColumn> {
        self.columns
            .iter()
            .find(|c| c.class == Some(class) && c.polarity == Some(polarity))
    }

    pub fn to_markdown(&self) -> String {
        if self.columns.is_empty() {
            return String::new();
        }
        let heads: Vec<String> = self
            .columns
            .iter()
            .map(|c| match (c.class, c.polarity) {
                (Some(cl), Some(p)) => format!("{} {}", cl.title(), p.as_str()),
                _ => "All".to_owned(),
            })
            .collect();
        let mut s = format!("| Cause | {} |\n|---|{}\n", heads.join(" | "), "---:|".repeat(heads.len()));
        for (i, cause) in ErrorCause::ALL.iter().enumerate() {
            s.push_str(&format!("| {} |", cause.title()));
            for c in &self.columns {
                match c.proportions.get(i) {
                    Some(&v) => s.push_str(&format!(" {} |", fmt2(v))),
                    None => s.push_str("  |"),
                }
            }
            s.push('\n');
        }
        s
    }
}
