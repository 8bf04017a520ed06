//! Flat `key = value` run configuration shared by every command.
//!
//! Resolution order is built-in defaults, then the config file, then
//! command-line overrides. A `profile` key, wherever it comes from, is
//! applied before everything else so explicit keys always win over it.

use std::fs;
use std::path::{Path, PathBuf};

use crate::attention::Aggregation;
use crate::corpus::{ColumnSpec, Delimiter};
use crate::error::{Error, Result};
use crate::eval::CandidatePolicy;
use crate::model::ModelConfig;
use crate::optim::TrainConfig;

/// Dataset-dependent defaults for window length, target count and norm
/// clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// Dense MovieLens-style logs: L = 5, T = 3, ℓ2 on every table.
    #[default]
    Movielens,
    /// Sparse logs: L = 2, T = 1, norm clipping instead of ℓ2 on embeddings.
    Sparse,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "movielens" => Ok(Profile::Movielens),
            "sparse" => Ok(Profile::Sparse),
            other => Err(format!("unknown profile {other:?} (expected movielens or sparse)")),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Movielens => "movielens",
            Profile::Sparse => "sparse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    // data
    pub input: Option<PathBuf>,
    pub delimiter: Delimiter,
    pub skip_header: bool,
    pub implicit_threshold: Option<f64>,
    pub min_actions: usize,
    pub workdir: PathBuf,
    // model + training
    pub train: TrainConfig,
    /// Reserved; only 0 is accepted.
    pub dropout: f64,
    // evaluation
    pub k: usize,
    pub candidate_policy: CandidatePolicy,
    pub include_ranks: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: Profile::Movielens,
            input: None,
            delimiter: Delimiter::Tab,
            skip_header: false,
            implicit_threshold: None,
            min_actions: 10,
            workdir: PathBuf::from("attrec-out"),
            train: TrainConfig::default(),
            dropout: 0.0,
            k: 50,
            candidate_policy: CandidatePolicy::ExcludeSeen,
            include_ranks: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn parse_with<T>(value: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, String> {
    f(value)
}

/// Keys that name filesystem locations; left out of the config echo so
/// artifacts do not depend on where a run writes.
const PATH_KEYS: [&str; 2] = ["input", "workdir"];

impl RunConfig {
    pub fn apply_profile(&mut self, profile: Profile) {
        self.profile = profile;
        let m = &mut self.train.model;
        match profile {
            Profile::Movielens => {
                m.window = 5;
                m.targets = 3;
                m.clip_norms = false;
            }
            Profile::Sparse => {
                m.window = 2;
                m.targets = 1;
                m.clip_norms = true;
            }
        }
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        let m = &mut self.train.model;
        match key {
            "profile" => {
                let p = parse_with(value, |v| v.parse())?;
                self.apply_profile(p);
            }
            "input" => self.input = Some(PathBuf::from(value)),
            "delimiter" => self.delimiter = parse_with(value, |v| v.parse())?,
            "skip_header" => self.skip_header = parse(key, value)?,
            "implicit_threshold" => {
                self.implicit_threshold = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "min_actions" => self.min_actions = parse(key, value)?,
            "workdir" => self.workdir = PathBuf::from(value),
            "d" => m.dim = parse(key, value)?,
            "L" => m.window = parse(key, value)?,
            "T" => m.targets = parse(key, value)?,
            "omega" => m.omega = parse(key, value)?,
            "margin" => m.margin = parse(key, value)?,
            "lambda" => m.l2 = parse(key, value)?,
            "clip_norms" => m.clip_norms = parse(key, value)?,
            "aggregation" => m.aggregation = parse_with(value, |v| v.parse())?,
            "use_attention" => m.use_attention = parse(key, value)?,
            "use_time_encoding" => m.use_time_encoding = parse(key, value)?,
            "untied_projections" => m.untied_projections = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "epsilon" => self.train.epsilon = parse(key, value)?,
            "seed" => self.train.seed = parse(key, value)?,
            "negatives_exclude_history" => self.train.negatives_exclude_history = parse(key, value)?,
            "k" => {
                self.k = parse(key, value)?;
                self.train.eval_k = self.k;
            }
            "candidate_policy" => {
                self.candidate_policy = parse_with(value, |v| v.parse())?;
                self.train.candidate_policy = self.candidate_policy;
            }
            "include_ranks" => self.include_ranks = parse(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Applies `pairs` in order, except that any `profile` entry goes first.
    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let mut errs = Vec::new();
        let (profiles, rest): (Vec<_>, Vec<_>) = pairs.iter().partition(|(k, _)| k == "profile");
        for (k, v) in profiles.into_iter().chain(rest) {
            if let Err(e) = self.set(k, v) {
                errs.push(e);
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Defaults, then the file's pairs, then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match file {
            Some(path) => parse_kv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
            None => Vec::new(),
        };
        pairs.extend(overrides.iter().cloned());
        let mut cfg = RunConfig::default();
        cfg.apply_pairs(&pairs)?;
        Ok(cfg)
    }

    /// Every problem with the configuration, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.train.validate();
        if self.min_actions == 0 {
            errs.push("min_actions must be at least 1".into());
        }
        if self.dropout != 0.0 {
            errs.push("dropout is not supported; leave it at 0".into());
        }
        if self.k == 0 {
            errs.push("k must be at least 1".into());
        }
        errs
    }

    pub fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn model(&self) -> &ModelConfig {
        &self.train.model
    }

    pub fn column_spec(&self) -> ColumnSpec {
        ColumnSpec {
            skip_header: self.skip_header,
            ..ColumnSpec::with_delimiter(self.delimiter)
        }
    }

    /// All keys, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("profile".to_string(), self.profile.to_string()),
            (
                "input".to_string(),
                self.input.as_ref().map_or(String::new(), |p| p.display().to_string()),
            ),
            ("delimiter".to_string(), self.delimiter.to_string()),
            ("skip_header".to_string(), self.skip_header.to_string()),
            (
                "implicit_threshold".to_string(),
                self.implicit_threshold.map_or("none".to_string(), |t| t.to_string()),
            ),
            ("min_actions".to_string(), self.min_actions.to_string()),
            ("workdir".to_string(), self.workdir.display().to_string()),
        ];
        out.extend(
            self.train
                .model
                .to_pairs()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v)),
        );
        let t = &self.train;
        out.extend([
            ("dropout".to_string(), self.dropout.to_string()),
            ("epochs".to_string(), t.epochs.to_string()),
            ("batch_size".to_string(), t.batch_size.to_string()),
            ("learning_rate".to_string(), t.learning_rate.to_string()),
            ("epsilon".to_string(), t.epsilon.to_string()),
            ("seed".to_string(), t.seed.to_string()),
            (
                "negatives_exclude_history".to_string(),
                t.negatives_exclude_history.to_string(),
            ),
            ("k".to_string(), self.k.to_string()),
            ("candidate_policy".to_string(), self.candidate_policy.to_string()),
            ("include_ranks".to_string(), self.include_ranks.to_string()),
        ]);
        out
    }

    /// [`Self::to_pairs`] minus filesystem paths.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.to_pairs()
            .into_iter()
            .filter(|(k, _)| !PATH_KEYS.contains(&k.as_str()))
            .collect()
    }

    /// The config as file text that [`RunConfig::resolve`] reads back.
    pub fn to_file_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key = value, found {raw:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Model variants visited by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Omega,
    Window,
    Dim,
    Aggregation,
    Attention,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "omega" => Ok(SweepAxis::Omega),
            "L" | "l" | "window" => Ok(SweepAxis::Window),
            "d" | "dim" => Ok(SweepAxis::Dim),
            "aggregation" => Ok(SweepAxis::Aggregation),
            "attention" | "attention_on_off" => Ok(SweepAxis::Attention),
            other => Err(format!(
                "unknown sweep axis {other:?} (expected omega, L, d, aggregation, or attention_on_off)"
            )),
        }
    }
}

impl SweepAxis {
    /// Config key the axis writes.
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Omega => "omega",
            SweepAxis::Window => "L",
            SweepAxis::Dim => "d",
            SweepAxis::Aggregation => "aggregation",
            SweepAxis::Attention => "use_attention",
        }
    }

    pub fn default_grid(self) -> Vec<String> {
        let v: &[&str] = match self {
            SweepAxis::Omega => &["0", "0.2", "0.4", "0.6", "0.8", "1"],
            SweepAxis::Window => &["1", "2", "3", "4", "5", "6", "7"],
            SweepAxis::Dim => &["10", "20", "40", "60", "80", "100", "150", "200"],
            SweepAxis::Aggregation => &["mean", "sum", "max", "min"],
            SweepAxis::Attention => &["true", "false"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Omega => "omega",
            SweepAxis::Window => "L",
            SweepAxis::Dim => "d",
            SweepAxis::Aggregation => "aggregation",
            SweepAxis::Attention => "attention_on_off",
        })
    }
}

pub fn aggregation_names() -> Vec<String> {
    Aggregation::ALL.iter().map(|a| a.to_string()).collect()
}
