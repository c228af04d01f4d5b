//! Command-line front end. Exit codes: 0 ok, 1 other failure, 2 missing
//! input, 3 bad configuration or usage, 4 remote-service failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Parser};

use super::{run, Command, RunConfig, RunOptions};
use crate::error::{Error, Result};
use crate::forecast::{InputVariant, Strategy};

#[derive(Debug, Parser)]
#[command(name = "counterspeech", version, about = "Hater-reaction corpus and prediction pipeline")]
pub struct Cli {
    /// Stage to run.
    #[arg(value_enum)]
    pub command: Command,

    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,

    /// Worker threads for intra-stage parallelism.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,

    /// Abort ingest on the first malformed line.
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "lenient")]
    pub strict: bool,

    /// Record malformed lines and keep going (the default).
    #[arg(long, action = ArgAction::SetTrue)]
    pub lenient: bool,

    /// Split seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Training share of the split.
    #[arg(long)]
    pub ratio: Option<f64>,

    #[arg(long, value_parser = parse_variant, value_name = "hs|cs|pair")]
    pub variant: Option<InputVariant>,

    /// May be repeated; all strategies when omitted.
    #[arg(long, value_parser = parse_strategy, value_name = "two_stage|three_way|baseline")]
    pub strategy: Vec<Strategy>,

    /// Output directory, overriding the configured one.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Gold outcomes for ad-hoc evaluation.
    #[arg(long, value_name = "PATH", requires = "pred")]
    pub gold: Option<PathBuf>,

    /// Predictions for ad-hoc evaluation.
    #[arg(long, value_name = "PATH", requires = "gold")]
    pub pred: Option<PathBuf>,

    /// Second prediction file; adds a McNemar comparison.
    #[arg(long, value_name = "PATH", requires = "pred")]
    pub compare: Option<PathBuf>,
}

fn parse_variant(s: &str) -> std::result::Result<InputVariant, String> {
    InputVariant::parse(s).ok_or_else(|| format!("unknown variant {s:?}; expected hs, cs or pair"))
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    Strategy::parse(s).ok_or_else(|| format!("unknown strategy {s:?}; expected two_stage, three_way or baseline"))
}

impl Cli {
    /// Loads the configuration and applies flag overrides.
    pub fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if self.strict {
            cfg.ingest.strict = true;
        }
        if self.lenient {
            cfg.ingest.strict = false;
        }
        if let Some(s) = self.seed {
            cfg.split.seed = s;
        }
        if let Some(r) = self.ratio {
            cfg.split.ratio = r;
        }
        if let Some(v) = self.variant {
            cfg.forecast.variant = v;
        }
        if let Some(o) = &self.out {
            let cwd = std::env::current_dir()?;
            cfg.paths.out = cwd.join(o).to_string_lossy().into_owned();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            strategies: self.strategy.clone(),
            gold: self.gold.clone(),
            pred: self.pred.clone(),
            compare: self.compare.clone(),
        }
    }

    pub fn execute(&self) -> Result<()> {
        if self.jobs == Some(0) {
            return Err(Error::config("--jobs", "must be at least 1"));
        }
        let cfg = self.config()?;
        let opts = self.options();
        let go = || run(self.command, &cfg, &opts).map(|_| ());
        match self.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("--jobs", e.to_string()))?
                .install(go),
            None => go(),
        }
    }
}

/// Parses `args` (including the program name), runs the stage and returns
/// the process exit code. Errors are printed to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.execute() {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                Error::MissingArtifact(p) => eprintln!("error: missing input {}", p.display()),
                other => eprintln!("error: {other}"),
            }
            e.exit_code()
        }
    }
}
