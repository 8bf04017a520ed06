//! The `attrec` command line: prepare, train, evaluate, sweep and
//! export-attention.
//!
//! Every command resolves a [`RunConfig`] from defaults, an optional
//! `--config` file and flags, then works inside `workdir`:
//!
//! | file | written by |
//! |------|------------|
//! | `log.txt` | prepare |
//! | `checkpoint.bin`, `trace.tsv` | train |
//! | `report.txt` / `report-pop.txt` | evaluate |
//! | `sweep-<axis>.tsv` | sweep |
//! | `attention-<user>.csv` | export-attention |

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, SweepAxis};
use crate::corpus::{self, chronological_split, InteractionLog, Split, Target};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport, Popularity};
use crate::model::ModelParams;
use crate::optim::{self, EpochRecord, TrainOutcome};

pub const LOG_FILE: &str = "log.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRACE_FILE: &str = "trace.tsv";

#[derive(Debug, Parser)]
#[command(name = "attrec", version, about = "Self-attentive metric-learning sequential recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a rating file, filter it and write the indexed log.
    Prepare {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train on the prepared log; writes a checkpoint and a per-epoch trace.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Rank held-out items with a checkpoint or the popularity baseline.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Score with a baseline instead of the checkpoint.
        #[arg(long, value_parser = ["pop"])]
        baseline: Option<String>,
        /// Which held-out item to rank.
        #[arg(long, default_value = "test", value_parser = ["test", "validation"])]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model per grid point and tabulate test HR@k and MRR.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// omega, L, d, aggregation or attention_on_off.
        #[arg(long)]
        axis: String,
        /// Comma-separated grid; defaults to the axis' standard grid.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one user's L×L attention matrix as CSV.
    ExportAttention {
        #[command(flatten)]
        config: ConfigArgs,
        /// External user id as it appears in the input file.
        #[arg(long)]
        user: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

macro_rules! config_flags {
    ($($field:ident => $key:literal, $long:literal, $help:literal;)*) => {
        /// Flags shared by all commands; each maps to one config key.
        #[derive(Debug, Default, Args)]
        pub struct ConfigArgs {
            /// Flat `key = value` config file; flags override it.
            #[arg(long)]
            pub config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long = $long, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl ConfigArgs {
            /// Set flags as config pairs.
            pub fn overrides(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key.to_string(), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

config_flags! {
    profile => "profile", "profile", "movielens (L=5, T=3) or sparse (L=2, T=1, clipping)";
    input => "input", "input", "Raw interaction file";
    delimiter => "delimiter", "delimiter", "tab, ::, or comma";
    skip_header => "skip_header", "skip-header", "Skip the first line of the input";
    implicit_threshold => "implicit_threshold", "implicit-threshold", "Keep ratings at or above this value (default: keep all)";
    min_actions => "min_actions", "min-actions", "Drop users and items with fewer interactions";
    workdir => "workdir", "workdir", "Directory for artifacts";
    d => "d", "d", "Latent dimension";
    window => "L", "L", "Window length";
    targets => "T", "T", "Positive targets per window";
    omega => "omega", "omega", "Weight of the long-term distance, in [0,1]";
    margin => "margin", "margin", "Hinge margin";
    lambda => "lambda", "lambda", "L2 weight";
    clip_norms => "clip_norms", "clip-norms", "Project embedding rows into the unit ball";
    aggregation => "aggregation", "aggregation", "mean, sum, max or min";
    use_attention => "use_attention", "use-attention", "false uses the window mean as intent";
    use_time_encoding => "use_time_encoding", "use-time-encoding", "Add sinusoidal position signals";
    untied_projections => "untied_projections", "untied-projections", "Separate query and key matrices";
    dropout => "dropout", "dropout", "Reserved, must be 0";
    epochs => "epochs", "epochs", "Training epochs";
    batch_size => "batch_size", "batch-size", "Instances per Adagrad step";
    learning_rate => "learning_rate", "learning-rate", "Adagrad learning rate";
    epsilon => "epsilon", "epsilon", "Adagrad epsilon";
    seed => "seed", "seed", "Seed for every random draw";
    negatives_exclude_history => "negatives_exclude_history", "negatives-exclude-history", "Sample negatives outside the whole train history";
    k => "k", "k", "Cutoff for HR@k";
    candidate_policy => "candidate_policy", "candidate-policy", "exclude-seen or rank-all";
    include_ranks => "include_ranks", "include-ranks", "Write per-user ranks into reports";
}

impl ConfigArgs {
    /// Resolves and validates, reporting every problem at once.
    pub fn resolve(&self) -> Result<RunConfig> {
        let cfg = RunConfig::resolve(self.config.as_deref(), &self.overrides())?;
        cfg.check()?;
        Ok(cfg)
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(msg) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one command and returns what it would print.
pub fn run(command: &Command) -> Result<String> {
    match command {
        Command::Prepare { config } => {
            let cfg = config.resolve()?;
            let log = prepare(&cfg)?;
            Ok(format!(
                "{}\ndensity {:.4}%\nwrote {}\n",
                summary_line(&log),
                100.0 * log.density(),
                cfg.workdir.join(LOG_FILE).display()
            ))
        }
        Command::Train { config } => {
            let cfg = config.resolve()?;
            let outcome = train(&cfg, |r| {
                eprintln!(
                    "epoch {:>3}  loss {:.4}  val hr@{} {:.4}  mrr {:.4}  ({:.1}s)",
                    r.epoch, r.loss, cfg.k, r.val_hr, r.val_mrr, r.train_seconds
                );
            })?;
            let best = &outcome.trace[outcome.best_epoch - 1];
            Ok(format!(
                "best epoch {} (val hr@{} {:.4}, mrr {:.4})\nwrote {} and {}\n",
                outcome.best_epoch,
                cfg.k,
                best.val_hr,
                best.val_mrr,
                cfg.workdir.join(CHECKPOINT_FILE).display(),
                cfg.workdir.join(TRACE_FILE).display()
            ))
        }
        Command::Evaluate {
            config,
            baseline,
            target,
            out,
        } => {
            let cfg = config.resolve()?;
            let target = if target == "validation" {
                Target::Validation
            } else {
                Target::Test
            };
            let pop = baseline.is_some();
            let path = out
                .clone()
                .unwrap_or_else(|| cfg.workdir.join(if pop { "report-pop.txt" } else { "report.txt" }));
            let report = evaluate(&cfg, pop, target, &path)?;
            Ok(format!(
                "hr@{} {:.4}  mrr {:.4}  ({} users)\nwrote {}\n",
                report.k,
                report.hr_at_k,
                report.mrr,
                report.per_user_rank.len(),
                path.display()
            ))
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let axis: SweepAxis = axis.parse().map_err(|e| Error::Config(vec![e]))?;
            let cfg = config.resolve()?;
            let grid = match values {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
                None => axis.default_grid(),
            };
            let path = out
                .clone()
                .unwrap_or_else(|| cfg.workdir.join(format!("sweep-{axis}.tsv")));
            let rows = sweep(&cfg, axis, &grid, |setting, r| {
                eprintln!("{axis}={setting} epoch {:>3}  val hr {:.4}", r.epoch, r.val_hr);
            })?;
            let text = sweep_table(&cfg, axis, &rows);
            write_file(&path, text.as_bytes())?;
            Ok(format!("{text}wrote {}\n", path.display()))
        }
        Command::ExportAttention { config, user, out } => {
            let cfg = config.resolve()?;
            let path = out
                .clone()
                .unwrap_or_else(|| cfg.workdir.join(format!("attention-{user}.csv")));
            let csv = export_attention(&cfg, user)?;
            write_file(&path, csv.as_bytes())?;
            Ok(format!("{csv}wrote {}\n", path.display()))
        }
    }
}

pub fn summary_line(log: &InteractionLog) -> String {
    format!(
        "{} users, {} items, {} interactions",
        log.num_users(),
        log.num_items(),
        log.num_interactions()
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads, converts, filters and indexes `cfg.input`, then saves the log to
/// the workdir.
pub fn prepare(cfg: &RunConfig) -> Result<InteractionLog> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["input is required for prepare".into()]))?;
    let raw = corpus::load_raw(input, &cfg.column_spec())?;
    let events = corpus::to_implicit_with_threshold(raw, cfg.implicit_threshold);
    let log = corpus::filter_and_index(events, cfg.min_actions)?;
    fs::create_dir_all(&cfg.workdir).map_err(|e| Error::io(&cfg.workdir, e))?;
    log.save_with(cfg.workdir.join(LOG_FILE), &cfg.echo())?;
    Ok(log)
}

pub fn load_prepared(cfg: &RunConfig) -> Result<(InteractionLog, Split)> {
    let log = InteractionLog::load(cfg.workdir.join(LOG_FILE))?;
    let split = chronological_split(&log)?;
    Ok((log, split))
}

/// Trains on the prepared log and writes the checkpoint and trace.
pub fn train(cfg: &RunConfig, on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainOutcome> {
    cfg.check()?;
    let (log, split) = load_prepared(cfg)?;
    let outcome = optim::train_with(&log, &split, &cfg.train, on_epoch)?;
    let echo = cfg.echo();
    outcome
        .params
        .save_with(cfg.workdir.join(CHECKPOINT_FILE), &echo)?;
    let mut buf = Vec::new();
    optim::write_trace_with(&outcome.trace, cfg.k, &echo, &mut buf)
        .map_err(|e| Error::io(TRACE_FILE, e))?;
    write_file(&cfg.workdir.join(TRACE_FILE), &buf)?;
    Ok(outcome)
}

fn load_checkpoint(cfg: &RunConfig, log: &InteractionLog) -> Result<ModelParams> {
    let params = ModelParams::load(cfg.workdir.join(CHECKPOINT_FILE))?;
    if params.num_users() != log.num_users() || params.num_items() != log.num_items() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} users and {} items, prepared log has {} and {}",
            params.num_users(),
            params.num_items(),
            log.num_users(),
            log.num_items()
        )));
    }
    Ok(params)
}

/// Evaluates the checkpoint (or popularity when `pop`) and writes the
/// report to `path`.
pub fn evaluate(cfg: &RunConfig, pop: bool, target: Target, path: &Path) -> Result<EvalReport> {
    let (log, split) = load_prepared(cfg)?;
    let report = if pop {
        let scorer = Popularity::from_order(eval::pop_baseline(&split.train, log.num_items()));
        eval::evaluate(&scorer, &split, cfg.model().window, cfg.k, cfg.candidate_policy, target)?
    } else {
        let params = load_checkpoint(cfg, &log)?;
        eval::evaluate(&params, &split, params.config.window, cfg.k, cfg.candidate_policy, target)?
    };
    let mut echo = cfg.echo();
    echo.push(("baseline".into(), if pop { "pop" } else { "none" }.into()));
    let mut w = BufWriter::new(Vec::new());
    let ids = |u: usize| log.user_id(u).to_string();
    report
        .write(&mut w, &echo, cfg.include_ranks, Some(&ids))
        .map_err(|e| Error::io(path, e))?;
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_file(path, &bytes)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub setting: String,
    pub best_epoch: usize,
    pub hr_at_k: f64,
    pub mrr: f64,
}

/// One training run per grid value with the shared seed, each scored on
/// the test items with its best-validation parameters.
pub fn sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    grid: &[String],
    mut on_epoch: impl FnMut(&str, &EpochRecord),
) -> Result<Vec<SweepRow>> {
    let mut points = Vec::with_capacity(grid.len());
    let mut errs = Vec::new();
    for value in grid {
        let mut point = cfg.clone();
        match point.set(axis.key(), value) {
            Ok(()) => errs.extend(point.validate()),
            Err(e) => errs.push(e),
        }
        points.push((value.clone(), point));
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let (log, split) = load_prepared(cfg)?;
    let mut rows = Vec::with_capacity(points.len());
    for (value, point) in points {
        let outcome = optim::train_with(&log, &split, &point.train, |r| on_epoch(&value, r))?;
        let report = eval::evaluate(
            &outcome.params,
            &split,
            point.model().window,
            point.k,
            point.candidate_policy,
            Target::Test,
        )?;
        rows.push(SweepRow {
            setting: value,
            best_epoch: outcome.best_epoch,
            hr_at_k: report.hr_at_k,
            mrr: report.mrr,
        });
    }
    Ok(rows)
}

pub fn sweep_table(cfg: &RunConfig, axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    for (k, v) in cfg.echo() {
        if k != axis.key() {
            let _ = writeln!(s, "# config.{k}={v}");
        }
    }
    let _ = writeln!(s, "{axis}\thr@{}\tmrr\tbest_epoch", cfg.k);
    for r in rows {
        let _ = writeln!(s, "{}\t{:.6}\t{:.6}\t{}", r.setting, r.hr_at_k, r.mrr, r.best_epoch);
    }
    s
}

/// Affinity matrix of `user`'s last L items before the test item, as CSV
/// with six decimals.
pub fn export_attention(cfg: &RunConfig, user: &str) -> Result<String> {
    let (log, split) = load_prepared(cfg)?;
    let params = load_checkpoint(cfg, &log)?;
    let u = log.user_index(user).ok_or_else(|| Error::UnknownUser {
        id: user.to_string(),
        valid: user_id_range(&log),
    })?;
    if !params.config.use_attention {
        return Err(Error::Config(vec![
            "checkpoint was trained with use_attention = false; there is no attention map".into(),
        ]));
    }
    let window = split.context(u, params.config.window, Target::Test);
    let out = params.attend_window(&window)?;
    Ok(affinity_csv(&out.affinity))
}

pub fn affinity_csv(affinity: &crate::numerics::Matrix) -> String {
    let mut s = String::new();
    for r in 0..affinity.rows() {
        let row: Vec<String> = affinity.row(r).iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Human-readable description of the external user ids in `log`.
pub fn user_id_range(log: &InteractionLog) -> String {
    let n = log.num_users();
    if n == 0 {
        return "none (empty log)".into();
    }
    let numeric: Option<Vec<i64>> = (0..n).map(|u| log.user_id(u).parse().ok()).collect();
    match numeric {
        Some(ids) => format!(
            "{}..={} ({n} users)",
            ids.iter().min().expect("nonempty"),
            ids.iter().max().expect("nonempty")
        ),
        None => format!("{:?} .. {:?} ({n} users)", log.user_id(0), log.user_id(n - 1)),
    }
}
