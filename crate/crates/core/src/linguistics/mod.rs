//! Lexicon-category profiling of counterspeech and the rank-sum machinery
//! used to compare outcome groups.

mod compare;
mod lexicon;
mod stats;

pub use compare::{
    can_reach_alpha, compare_groups, CompareOptions, ComparisonReport, ComparisonResult, Direction,
    DirectionRule, Grouping,
};
pub use lexicon::{builtin_detector, builtin_lexicons, load_lexicon_dir, profile_text, Lexicon, LexiconProfile, MatchMode};
pub use stats::{
    bonferroni, bonferroni_threshold, wilcoxon_rank_sum, PValueMethod, RankSumResult, EXACT_MAX_SMALL,
    EXACT_MAX_TOTAL,
};
