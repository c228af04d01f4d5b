use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classify::{ClassifierSpec, Task};
use crate::error::{Error, Result};
use crate::forecast::{InputVariant, ModelSpec, Routing, DEFAULT_SEPARATOR};
use crate::ingest::OrphanPolicy;
use crate::linguistics::DirectionRule;
use crate::outcomes::PercentRounding;

/// One run's configuration, read from a single JSON document.
///
/// Relative paths resolve against the directory holding the config file.
/// String values may reference environment variables as `${NAME}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    pub labeling: LabelingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Newline-delimited JSON dump; needed by `ingest` only.
    #[serde(default)]
    pub input: Option<String>,
    /// Directory of lexicon files; the bundled lexicons when absent.
    #[serde(default)]
    pub lexicons: Option<String>,
    /// Subreddit-to-community map; the bundled map when absent.
    #[serde(default)]
    pub communities: Option<String>,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub strict: bool,
    pub orphans: OrphanPolicy,
    pub mask_pii: bool,
    pub pseudonymize: bool,
    pub salt: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            strict: false,
            orphans: OrphanPolicy::Drop,
            mask_pii: true,
            pseudonymize: true,
            salt: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingConfig {
    pub hate: Vec<ClassifierSpec>,
    pub counter: Vec<ClassifierSpec>,
    /// Required ensemble size; every member must vote positive.
    pub consensus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub direction: DirectionRule,
    pub by_community: bool,
    pub rounding: PercentRounding,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.05,
            direction: DirectionRule::Mean,
            by_community: true,
            rounding: PercentRounding::SumTo100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: 0.8,
            seed: 13,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub variant: InputVariant,
    pub separator: String,
    pub model: ModelSpec,
    pub routing: Routing,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            variant: InputVariant::Pair,
            separator: DEFAULT_SEPARATOR.to_owned(),
            model: ModelSpec::ngram(),
            routing: Routing::Predicted,
        }
    }
}

fn env_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Replaces `${NAME}` in every string value. Unset variables are errors
/// reported at the value's field path.
fn interpolate(value: &mut Value, path: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<()> {
    match value {
        Value::String(s) => {
            let mut missing = None;
            let replaced = env_pattern().replace_all(s, |c: &regex::Captures| {
                env(&c[1]).unwrap_or_else(|| {
                    missing.get_or_insert_with(|| c[1].to_owned());
                    String::new()
                })
            });
            if let Some(name) = missing {
                return Err(Error::config(path, format!("environment variable {name} is not set")));
            }
            *s = replaced.into_owned();
        }
        Value::Array(items) => {
            for (i, v) in items.iter_mut().enumerate() {
                interpolate(v, &format!("{path}[{i}]"), env)?;
            }
        }
        Value::Object(map) => {
            for (k, v) in map.iter_mut() {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                interpolate(v, &p, env)?;
            }
        }
        _ => {}
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_owned()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let base = path.parent().map(Path::to_owned).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        Self::from_json_with_env(text, base_dir, &|k| std::env::var(k).ok())
    }

    pub fn from_json_with_env(text: &str, base_dir: &Path, env: &dyn Fn(&str) -> Option<String>) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        interpolate(&mut value, "", env)?;
        let mut cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<document>".into() } else { path }, e.inner().to_string())
        })?;
        cfg.base_dir = base_dir.to_owned();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks cross-field rules not expressible in the schema.
    pub fn validate(&self) -> Result<()> {
        let l = &self.labeling;
        if l.consensus == 0 {
            return Err(Error::config("labeling.consensus", "must be at least 1"));
        }
        for (name, specs, task) in [("hate", &l.hate, Task::Hate), ("counter", &l.counter, Task::Counter)] {
            if specs.len() != l.consensus {
                return Err(Error::config(
                    format!("labeling.{name}"),
                    format!("{} classifiers configured but consensus is {}", specs.len(), l.consensus),
                ));
            }
            for (i, s) in specs.iter().enumerate() {
                let field = format!("labeling.{name}[{i}]");
                if s.task != task {
                    return Err(Error::config(format!("{field}.task"), format!("must be {:?}", task.as_str())));
                }
                if s.kind == crate::classify::ClassifierKind::Ngram {
                    return Err(Error::config(format!("{field}.kind"), "labeling needs a ready-made classifier"));
                }
                s.validate(&field)?;
            }
        }
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(Error::config("analysis.alpha", "must be in (0,1)"));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::config("split.ratio", "must be in (0,1)"));
        }
        if self.forecast.separator.trim().is_empty() {
            return Err(Error::config("forecast.separator", "must not be blank"));
        }
        for stage in [
            crate::forecast::Stage::Reentry,
            crate::forecast::Stage::ReentryType,
            crate::forecast::Stage::ThreeWay,
        ] {
            let spec = self.forecast.model.for_stage(stage);
            if spec.kind == crate::classify::ClassifierKind::Lexicon {
                return Err(Error::config("forecast.model.kind", "lexicon models cannot predict reactions"));
            }
            spec.validate("forecast.model")?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.paths.out)
    }

    /// Hash of the configuration, excluding the output directory so that
    /// identical runs into different directories share it.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.paths.out = String::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        super::manifest::sha256_hex(&bytes)
    }
}
