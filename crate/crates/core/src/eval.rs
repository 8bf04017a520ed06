//! Leave-one-out ranking evaluation: hit ratio at a cutoff, mean reciprocal
//! rank, and the popularity baseline.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::corpus::{Split, Target};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which items compete with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CandidatePolicy {
    /// All items except those already in the user's visible history; the
    /// ground truth is always kept.
    #[default]
    ExcludeSeen,
    /// All items.
    RankAll,
}

impl FromStr for CandidatePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude-seen" => Ok(CandidatePolicy::ExcludeSeen),
            "rank-all" => Ok(CandidatePolicy::RankAll),
            other => Err(format!("unknown candidate policy {other:?} (expected exclude-seen or rank-all)")),
        }
    }
}

impl fmt::Display for CandidatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidatePolicy::ExcludeSeen => "exclude-seen",
            CandidatePolicy::RankAll => "rank-all",
        })
    }
}

/// Anything that can score every item for a user given their recent window.
/// Lower scores rank first.
pub trait Scorer {
    fn num_items(&self) -> usize;
    fn scores(&self, user: usize, window: &[usize]) -> Result<Vec<f64>>;
}

impl Scorer for ModelParams {
    fn num_items(&self) -> usize {
        ModelParams::num_items(self)
    }

    fn scores(&self, user: usize, window: &[usize]) -> Result<Vec<f64>> {
        let m = self.intent(window)?;
        self.score_all(user, &m)
    }
}

/// Non-personalized ranking by training popularity.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    /// Items, most popular first.
    pub order: Vec<usize>,
    position: Vec<f64>,
}

impl Popularity {
    pub fn from_order(order: Vec<usize>) -> Self {
        let mut position = vec![0.0; order.len()];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p as f64;
        }
        Popularity { order, position }
    }
}

impl Scorer for Popularity {
    fn num_items(&self) -> usize {
        self.order.len()
    }

    fn scores(&self, _user: usize, _window: &[usize]) -> Result<Vec<f64>> {
        Ok(self.position.clone())
    }
}

/// Items by descending interaction count over `train`, ties by index.
pub fn pop_baseline(train: &[Vec<usize>], num_items: usize) -> Vec<usize> {
    let mut counts = vec![0usize; num_items];
    for seq in train {
        for &i in seq {
            counts[i] += 1;
        }
    }
    let mut order: Vec<usize> = (0..num_items).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order
}

/// Candidates sorted best first: ascending score, then ascending index.
pub fn rank_items(scorer: &impl Scorer, user: usize, window: &[usize], candidates: &[usize]) -> Result<Vec<usize>> {
    let scores = scorer.scores(user, window)?;
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Ok(ranked)
}

/// 1-based rank of `truth` among the candidates accepted by `is_candidate`
/// under the (score, index) order.
pub fn rank_of(scores: &[f64], truth: usize, is_candidate: impl Fn(usize) -> bool) -> usize {
    let key = scores[truth];
    1 + (0..scores.len())
        .filter(|&i| i != truth && is_candidate(i))
        .filter(|&i| scores[i] < key || (scores[i] == key && i < truth))
        .count()
}

/// Rank of `truth` within an explicit candidate list.
pub fn rank_in(scores: &[f64], truth: usize, candidates: &[usize]) -> Result<usize> {
    if !candidates.contains(&truth) {
        return Err(Error::MissingGroundTruth(truth));
    }
    let key = scores[truth];
    Ok(1 + candidates
        .iter()
        .filter(|&&i| i != truth)
        .filter(|&&i| scores[i] < key || (scores[i] == key && i < truth))
        .count())
}

pub fn hit_ratio_at(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

pub fn mrr(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Rank of each user's ground-truth item, in user-index order.
    pub per_user_rank: Vec<usize>,
    pub hr_at_k: f64,
    pub mrr: f64,
    pub k: usize,
    pub candidate_policy: CandidatePolicy,
    pub target: Target,
}

impl EvalReport {
    pub fn from_ranks(per_user_rank: Vec<usize>, k: usize, candidate_policy: CandidatePolicy, target: Target) -> Self {
        EvalReport {
            hr_at_k: hit_ratio_at(&per_user_rank, k),
            mrr: mrr(&per_user_rank),
            per_user_rank,
            k,
            candidate_policy,
            target,
        }
    }

    /// `key=value` lines: metrics, then the config echo, then optionally
    /// one `rank.<user>=<rank>` line per user.
    pub fn write(
        &self,
        mut out: impl Write,
        config_echo: &[(String, String)],
        include_ranks: bool,
        user_ids: Option<&dyn Fn(usize) -> String>,
    ) -> std::io::Result<()> {
        writeln!(out, "# attrec evaluation report")?;
        writeln!(out, "users={}", self.per_user_rank.len())?;
        writeln!(out, "target={}", match self.target {
            Target::Validation => "validation",
            Target::Test => "test",
        })?;
        writeln!(out, "candidate_policy={}", self.candidate_policy)?;
        writeln!(out, "k={}", self.k)?;
        writeln!(out, "hr@{}={:.6}", self.k, self.hr_at_k)?;
        writeln!(out, "mrr={:.6}", self.mrr)?;
        for (k, v) in config_echo {
            writeln!(out, "config.{k}={v}")?;
        }
        if include_ranks {
            for (u, r) in self.per_user_rank.iter().enumerate() {
                let id = user_ids.map_or_else(|| u.to_string(), |f| f(u));
                writeln!(out, "rank.{id}={r}")?;
            }
        }
        Ok(())
    }
}

/// Ranks each user's held-out `target` item given the latest `window`
/// items before it.
pub fn evaluate(
    scorer: &impl Scorer,
    split: &Split,
    window: usize,
    k: usize,
    policy: CandidatePolicy,
    target: Target,
) -> Result<EvalReport> {
    let n = scorer.num_items();
    let mut seen = vec![false; n];
    let mut ranks = Vec::with_capacity(split.num_users());
    for u in 0..split.num_users() {
        let history = split.history(u, target);
        let context = &history[history.len().saturating_sub(window)..];
        let truth = split.target(u, target);
        let scores = scorer.scores(u, context)?;
        let rank = match policy {
            CandidatePolicy::RankAll => rank_of(&scores, truth, |_| true),
            CandidatePolicy::ExcludeSeen => {
                for &i in &history {
                    seen[i] = true;
                }
                let r = rank_of(&scores, truth, |i| !seen[i]);
                for &i in &history {
                    seen[i] = false;
                }
                r
            }
        };
        ranks.push(rank);
    }
    Ok(EvalReport::from_ranks(ranks, k, policy, target))
}
