//! Interaction logs: reading delimited rating files, implicit conversion,
//! sparse-user filtering, chronological leave-last-two split, sliding-window
//! training instances, and negative sampling.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// MovieLens 100K `u.data`.
    #[default]
    Tab,
    /// MovieLens 1M `ratings.dat`.
    DoubleColon,
    Comma,
}

impl Delimiter {
    fn as_str(self) -> &'static str {
        match self {
            Delimiter::Tab => "\t",
            Delimiter::DoubleColon => "::",
            Delimiter::Comma => ",",
        }
    }
}

impl FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tab" | "\\t" | "\t" => Ok(Delimiter::Tab),
            "::" | "colons" => Ok(Delimiter::DoubleColon),
            "," | "comma" => Ok(Delimiter::Comma),
            other => Err(format!("unknown delimiter {other:?} (expected tab, ::, or comma)")),
        }
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delimiter::Tab => "tab",
            Delimiter::DoubleColon => "::",
            Delimiter::Comma => "comma",
        })
    }
}

/// Where each field lives in a delimited row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub delimiter: Delimiter,
    pub user: usize,
    pub item: usize,
    pub rating: Option<usize>,
    pub timestamp: usize,
    pub skip_header: bool,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            delimiter: Delimiter::Tab,
            user: 0,
            item: 1,
            rating: Some(2),
            timestamp: 3,
            skip_header: false,
        }
    }
}

impl ColumnSpec {
    pub fn with_delimiter(delimiter: Delimiter) -> Self {
        ColumnSpec {
            delimiter,
            ..ColumnSpec::default()
        }
    }
}

pub fn load_raw(path: impl AsRef<Path>, format: &ColumnSpec) -> Result<Vec<RawEvent>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_events(reader: impl BufRead, format: &ColumnSpec) -> Result<Vec<RawEvent>> {
    let needed = [Some(format.user), Some(format.item), format.rating, Some(format.timestamp)]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
        + 1;
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if format.skip_header && idx == 0 {
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(format.delimiter.as_str()).collect();
        if fields.len() < needed {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least {needed} fields, found {}", fields.len()),
            });
        }
        let rating = match format.rating {
            Some(col) => Some(fields[col].trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("rating {:?} is not a number", fields[col]),
            })?),
            None => None,
        };
        let ts_field = fields[format.timestamp].trim();
        let timestamp = ts_field.parse::<i64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("timestamp {ts_field:?} is not an integer"),
        })?;
        if timestamp < 0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("negative timestamp {timestamp}"),
            });
        }
        events.push(RawEvent {
            user: fields[format.user].trim().to_string(),
            item: fields[format.item].trim().to_string(),
            rating,
            timestamp,
        });
    }
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    Ok(events)
}

/// Treats every rated event as a positive interaction and drops the rating.
pub fn to_implicit(events: Vec<RawEvent>) -> Vec<RawEvent> {
    to_implicit_with_threshold(events, None)
}

/// Like [`to_implicit`], but drops events rated strictly below `threshold`.
/// Events without a rating are always kept.
pub fn to_implicit_with_threshold(events: Vec<RawEvent>, threshold: Option<f64>) -> Vec<RawEvent> {
    events
        .into_iter()
        .filter(|e| match (threshold, e.rating) {
            (Some(t), Some(r)) => r >= t,
            _ => true,
        })
        .map(|e| RawEvent { rating: None, ..e })
        .collect()
}

/// Chronologically ordered per-user item sequences over dense indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionLog {
    users: Vec<String>,
    items: Vec<String>,
    sequences: Vec<Vec<usize>>,
    timestamps: Vec<Vec<i64>>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
}

/// Numeric ids sort numerically, the rest lexicographically after them.
fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

pub fn filter_and_index(events: Vec<RawEvent>, min_actions: usize) -> Result<InteractionLog> {
    let min_actions = min_actions.max(1);

    let mut seen = HashSet::new();
    let events: Vec<RawEvent> = events
        .into_iter()
        .filter(|e| seen.insert((e.user.clone(), e.item.clone(), e.timestamp)))
        .collect();

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for e in &events {
        *counts.entry(e.user.as_str()).or_default() += 1;
    }
    let kept: Vec<&RawEvent> = events
        .iter()
        .filter(|e| counts[e.user.as_str()] >= min_actions)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoEvents);
    }

    let mut users: Vec<String> = kept.iter().map(|e| e.user.clone()).collect::<HashSet<_>>().into_iter().collect();
    let mut items: Vec<String> = kept.iter().map(|e| e.item.clone()).collect::<HashSet<_>>().into_iter().collect();
    users.sort_by(|a, b| id_order(a, b));
    items.sort_by(|a, b| id_order(a, b));
    let user_index: HashMap<String, usize> = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
    let item_index: HashMap<String, usize> = items.iter().enumerate().map(|(i, it)| (it.clone(), i)).collect();

    let mut per_user: Vec<Vec<(i64, usize)>> = vec![Vec::new(); users.len()];
    for e in kept {
        per_user[user_index[&e.user]].push((e.timestamp, item_index[&e.item]));
    }
    let mut sequences = Vec::with_capacity(users.len());
    let mut timestamps = Vec::with_capacity(users.len());
    for mut events in per_user {
        // stable: equal timestamps keep file order
        events.sort_by_key(|&(ts, _)| ts);
        timestamps.push(events.iter().map(|&(ts, _)| ts).collect());
        sequences.push(events.into_iter().map(|(_, item)| item).collect());
    }

    Ok(InteractionLog {
        users,
        items,
        sequences,
        timestamps,
        user_index,
        item_index,
    })
}

const LOG_MAGIC: &str = "attrec-log v1";

impl InteractionLog {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        self.num_interactions() as f64 / (self.num_users() as f64 * self.num_items() as f64)
    }

    pub fn sequence(&self, user: usize) -> &[usize] {
        &self.sequences[user]
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn timestamps(&self, user: usize) -> &[i64] {
        &self.timestamps[user]
    }

    pub fn user_id(&self, user: usize) -> &str {
        &self.users[user]
    }

    pub fn item_id(&self, item: usize) -> &str {
        &self.items[item]
    }

    pub fn user_index(&self, external: &str) -> Option<usize> {
        self.user_index.get(external).copied()
    }

    pub fn item_index(&self, external: &str) -> Option<usize> {
        self.item_index.get(external).copied()
    }

    /// Line-delimited text; `read` reproduces the log exactly.
    pub fn write(&self, out: impl Write) -> std::io::Result<()> {
        self.write_with(out, &[])
    }

    /// [`Self::write`] with `# config.key=value` comment lines after the
    /// header. Readers skip them.
    pub fn write_with(&self, mut out: impl Write, echo: &[(String, String)]) -> std::io::Result<()> {
        writeln!(out, "{LOG_MAGIC}")?;
        for (k, v) in echo {
            writeln!(out, "# config.{k}={v}")?;
        }
        writeln!(out, "users\t{}", self.num_users())?;
        writeln!(out, "items\t{}", self.num_items())?;
        for item in &self.items {
            writeln!(out, "i\t{item}")?;
        }
        for u in 0..self.num_users() {
            let items: Vec<String> = self.sequences[u].iter().map(usize::to_string).collect();
            let ts: Vec<String> = self.timestamps[u].iter().map(i64::to_string).collect();
            writeln!(out, "u\t{}\t{}\t{}", self.users[u], items.join(","), ts.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with(path, &[])
    }

    pub fn save_with(&self, path: impl AsRef<Path>, echo: &[(String, String)]) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_with(&mut w, echo)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let bad = |msg: String| Error::Format(msg);
        let mut lines = reader.lines();
        let mut next = || -> Result<Option<String>> {
            loop {
                match lines.next().transpose().map_err(|e| Error::io("<log>", e))? {
                    Some(l) if l.starts_with('#') => continue,
                    other => return Ok(other),
                }
            }
        };
        if next()?.as_deref() != Some(LOG_MAGIC) {
            return Err(bad(format!("missing {LOG_MAGIC:?} header")));
        }
        let count = |line: Option<String>, key: &str| -> Result<usize> {
            let line = line.ok_or_else(|| bad(format!("missing {key} line")))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('\t'))
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| bad(format!("bad {key} line {line:?}")))
        };
        let num_users = count(next()?, "users")?;
        let num_items = count(next()?, "items")?;
        let mut items = Vec::with_capacity(num_items);
        for _ in 0..num_items {
            let line = next()?.ok_or_else(|| bad("truncated item table".into()))?;
            let id = line.strip_prefix("i\t").ok_or_else(|| bad(format!("bad item line {line:?}")))?;
            items.push(id.to_string());
        }
        let parse_list = |s: &str| -> Result<Vec<i64>> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|x| x.parse::<i64>().map_err(|_| bad(format!("bad number {x:?}"))))
                .collect()
        };
        let mut users = Vec::with_capacity(num_users);
        let mut sequences = Vec::with_capacity(num_users);
        let mut timestamps = Vec::with_capacity(num_users);
        for _ in 0..num_users {
            let line = next()?.ok_or_else(|| bad("truncated user table".into()))?;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 || fields[0] != "u" {
                return Err(bad(format!("bad user line {line:?}")));
            }
            let seq: Vec<usize> = parse_list(fields[2])?
                .into_iter()
                .map(|i| usize::try_from(i).ok().filter(|&i| i < num_items))
                .collect::<Option<_>>()
                .ok_or_else(|| bad(format!("item index out of range for user {}", fields[1])))?;
            let ts = parse_list(fields[3])?;
            if ts.len() != seq.len() {
                return Err(bad(format!("user {} has mismatched item/timestamp counts", fields[1])));
            }
            users.push(fields[1].to_string());
            sequences.push(seq);
            timestamps.push(ts);
        }
        let user_index = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let item_index = items.iter().enumerate().map(|(i, it)| (it.clone(), i)).collect();
        Ok(InteractionLog {
            users,
            items,
            sequences,
            timestamps,
            user_index,
            item_index,
        })
    }

    /// Builds a log directly from index sequences, mostly for tests and
    /// synthetic data. External ids are the decimal indices.
    pub fn from_sequences(num_items: usize, sequences: Vec<Vec<usize>>) -> Self {
        let users: Vec<String> = (0..sequences.len()).map(|u| u.to_string()).collect();
        let items: Vec<String> = (0..num_items).map(|i| i.to_string()).collect();
        let timestamps = sequences.iter().map(|s| (0..s.len() as i64).collect()).collect();
        let user_index = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let item_index = items.iter().enumerate().map(|(i, it)| (it.clone(), i)).collect();
        InteractionLog {
            users,
            items,
            sequences,
            timestamps,
            user_index,
            item_index,
        }
    }
}

/// Leave-last-two split: the most recent item of each user is the test
/// target, the one before it the validation target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Vec<usize>>,
    pub validation_target: Vec<usize>,
    pub test_target: Vec<usize>,
}

pub fn chronological_split(log: &InteractionLog) -> Result<Split> {
    let mut split = Split {
        train: Vec::with_capacity(log.num_users()),
        validation_target: Vec::with_capacity(log.num_users()),
        test_target: Vec::with_capacity(log.num_users()),
    };
    for (u, seq) in log.sequences().iter().enumerate() {
        let n = seq.len();
        if n < 3 {
            return Err(Error::SequenceTooShort {
                user: log.user_id(u).to_string(),
                len: n,
            });
        }
        split.train.push(seq[..n - 2].to_vec());
        split.validation_target.push(seq[n - 2]);
        split.test_target.push(seq[n - 1]);
    }
    Ok(split)
}

/// Which held-out target a window is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Validation,
    Test,
}

impl Split {
    pub fn num_users(&self) -> usize {
        self.train.len()
    }

    /// The full history visible when predicting `target`, oldest first.
    pub fn history(&self, user: usize, target: Target) -> Vec<usize> {
        let mut h = self.train[user].clone();
        if target == Target::Test {
            h.push(self.validation_target[user]);
        }
        h
    }

    /// The latest (up to) `len` items preceding `target`.
    pub fn context(&self, user: usize, len: usize, target: Target) -> Vec<usize> {
        let h = self.history(user, target);
        h[h.len().saturating_sub(len)..].to_vec()
    }

    pub fn target(&self, user: usize, target: Target) -> usize {
        match target {
            Target::Validation => self.validation_target[user],
            Target::Test => self.test_target[user],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub user: usize,
    pub context: Vec<usize>,
    pub positives: Vec<usize>,
}

/// Every stride-1 window of `window` train items followed by `targets`
/// more train items. Users with too short a train sequence yield nothing.
pub fn windowize(split: &Split, window: usize, targets: usize) -> Vec<TrainingInstance> {
    assert!(window >= 1 && targets >= 1, "window and target counts must be positive");
    let span = window + targets;
    let mut out = Vec::new();
    for (user, seq) in split.train.iter().enumerate() {
        if seq.len() < span {
            continue;
        }
        for start in 0..=seq.len() - span {
            out.push(TrainingInstance {
                user,
                context: seq[start..start + window].to_vec(),
                positives: seq[start + window..start + span].to_vec(),
            });
        }
    }
    out
}

/// Draws `count` distinct items uniformly from `0..num_items` minus the
/// instance's positives (and minus `also_exclude`, when given).
pub fn sample_negatives(
    instance: &TrainingInstance,
    num_items: usize,
    rng: &mut Rng,
    count: usize,
    also_exclude: Option<&[usize]>,
) -> Vec<usize> {
    let mut excluded: HashSet<usize> = instance.positives.iter().copied().collect();
    if let Some(extra) = also_exclude {
        excluded.extend(extra.iter().copied());
    }
    let available = num_items - excluded.iter().filter(|&&i| i < num_items).count();
    assert!(
        available >= count,
        "cannot draw {count} negatives from {available} eligible items"
    );
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let j = rng.below(num_items);
        if !excluded.contains(&j) && !out.contains(&j) {
            out.push(j);
        }
    }
    debug_assert!(out.iter().all(|j| !instance.positives.contains(j)));
    out
}

/// Random sequences with sequential structure: each user mostly walks the
/// item ring with a fixed stride (1, 2 or 3 by user), otherwise jumps to a
/// uniform item. Deterministic in `seed`.
pub fn synthetic_sequences(num_users: usize, num_items: usize, len: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(num_items > 0, "need at least one item");
    let mut rng = Rng::seed(seed);
    (0..num_users)
        .map(|u| {
            let stride = 1 + u % 3;
            let mut cur = rng.below(num_items);
            let mut seq = Vec::with_capacity(len);
            for _ in 0..len {
                seq.push(cur);
                cur = if rng.uniform(0.0, 1.0) < 0.7 {
                    (cur + stride) % num_items
                } else {
                    rng.below(num_items)
                };
            }
            seq
        })
        .collect()
}

/// Writes `sequences` as a tab-separated `user item rating timestamp` file
/// with 1-based ids, the layout [`load_raw`] reads by default.
pub fn write_raw(sequences: &[Vec<usize>], mut out: impl Write) -> std::io::Result<()> {
    for (u, seq) in sequences.iter().enumerate() {
        for (t, &item) in seq.iter().enumerate() {
            writeln!(out, "{}\t{}\t1\t{}", u + 1, item + 1, 1_000_000 + t)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(rows: &[(&str, &str, i64)]) -> Vec<RawEvent> {
        rows.iter()
            .map(|&(u, i, t)| RawEvent {
                user: u.into(),
                item: i.into(),
                rating: Some(1.0),
                timestamp: t,
            })
            .collect()
    }

    #[test]
    fn parses_movielens_row() {
        let ev = parse_events("196\t242\t3\t881250949\n".as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(
            ev,
            vec![RawEvent {
                user: "196".into(),
                item: "242".into(),
                rating: Some(3.0),
                timestamp: 881250949
            }]
        );
    }

    #[test]
    fn parses_double_colon_rows() {
        let spec = ColumnSpec::with_delimiter(Delimiter::DoubleColon);
        let ev = parse_events("1::1193::5::978300760\n".as_bytes(), &spec).unwrap();
        assert_eq!(ev[0].item, "1193");
        assert_eq!(ev[0].timestamp, 978300760);
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_events("".as_bytes(), &ColumnSpec::default()).unwrap_err();
        assert_eq!(err.to_string(), "no events");
    }

    #[test]
    fn bad_timestamp_names_line() {
        let input = "1\t2\t3\t100\n1\t3\t4\tyesterday\n";
        let err = parse_events(input.as_bytes(), &ColumnSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_raw("/nonexistent/u.data", &ColumnSpec::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/u.data"));
    }

    #[test]
    fn implicit_conversion_keeps_everything() {
        let mut ev = events(&[("1", "1", 0), ("1", "2", 1)]);
        ev[1].rating = Some(1.0);
        let out = to_implicit(ev);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|e| e.rating.is_none()));
        assert!(to_implicit(Vec::new()).is_empty());
    }

    #[test]
    fn threshold_drops_low_ratings() {
        let mut ev = events(&[("1", "1", 0), ("1", "2", 1)]);
        ev[0].rating = Some(2.0);
        ev[1].rating = Some(4.0);
        let out = to_implicit_with_threshold(ev, Some(4.0));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].item, "2");
    }

    #[test]
    fn sparse_users_are_dropped() {
        let mut rows: Vec<(&str, &str, i64)> = (0..9).map(|t| ("a", "x", t)).collect();
        rows.extend((0..10).map(|t| ("b", "y", t)));
        let log = filter_and_index(events(&rows), 10).unwrap();
        assert_eq!(log.num_users(), 1);
        assert_eq!(log.user_index("a"), None);
        // item "x" only belonged to the dropped user
        assert_eq!(log.num_items(), 1);
    }

    #[test]
    fn shared_items_count_once() {
        let log = filter_and_index(events(&[("a", "x", 0), ("b", "x", 0)]), 1).unwrap();
        assert_eq!(log.num_items(), 1);
        assert_eq!(log.num_users(), 2);
    }

    #[test]
    fn duplicates_removed_and_ties_stable() {
        let log = filter_and_index(
            events(&[("a", "3", 5), ("a", "1", 5), ("a", "3", 5), ("a", "2", 1)]),
            1,
        )
        .unwrap();
        let seq: Vec<&str> = log.sequence(0).iter().map(|&i| log.item_id(i)).collect();
        assert_eq!(seq, vec!["2", "3", "1"]);
    }

    #[test]
    fn numeric_ids_index_in_numeric_order() {
        let log = filter_and_index(events(&[("10", "5", 0), ("9", "40", 0), ("2", "100", 0)]), 1).unwrap();
        assert_eq!(log.user_id(0), "2");
        assert_eq!(log.user_id(2), "10");
        assert_eq!(log.item_id(0), "5");
    }

    #[test]
    fn empty_after_filter_is_an_error() {
        assert!(filter_and_index(events(&[("a", "x", 0)]), 2).is_err());
    }

    #[test]
    fn split_examples() {
        let log = InteractionLog::from_sequences(4, vec![vec![0, 1, 2, 3], vec![0, 1, 2]]);
        let s = chronological_split(&log).unwrap();
        assert_eq!(s.train, vec![vec![0, 1], vec![0]]);
        assert_eq!(s.validation_target, vec![2, 1]);
        assert_eq!(s.test_target, vec![3, 2]);
    }

    #[test]
    fn split_rejects_short_sequences() {
        let log = InteractionLog::from_sequences(2, vec![vec![0, 1]]);
        assert!(matches!(
            chronological_split(&log),
            Err(Error::SequenceTooShort { len: 2, .. })
        ));
    }

    #[test]
    fn contexts_for_held_out_targets() {
        let log = InteractionLog::from_sequences(8, vec![vec![0, 1, 2, 3, 4, 5, 6]]);
        let s = chronological_split(&log).unwrap();
        assert_eq!(s.context(0, 3, Target::Validation), vec![2, 3, 4]);
        assert_eq!(s.context(0, 3, Target::Test), vec![3, 4, 5]);
        assert_eq!(s.context(0, 10, Target::Validation), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn windowize_enumerates_windows() {
        let split = Split {
            train: vec![vec![10, 11, 12, 13], vec![1, 2, 3, 4, 5]],
            validation_target: vec![0, 0],
            test_target: vec![0, 0],
        };
        let inst = windowize(&split, 2, 1);
        assert_eq!(inst[0].context, vec![10, 11]);
        assert_eq!(inst[0].positives, vec![12]);
        assert_eq!(inst[1].context, vec![11, 12]);
        assert_eq!(inst[1].positives, vec![13]);
        assert_eq!(inst.len(), 2 + 3);
        assert!(windowize(&split, 5, 1).is_empty());
    }

    #[test]
    fn forced_negative() {
        let inst = TrainingInstance {
            user: 0,
            context: vec![],
            positives: vec![0, 1],
        };
        let mut rng = Rng::seed(1);
        for _ in 0..100 {
            assert_eq!(sample_negatives(&inst, 3, &mut rng, 1, None), vec![2]);
        }
    }

    #[test]
    fn history_exclusion_option() {
        let inst = TrainingInstance {
            user: 0,
            context: vec![2, 3],
            positives: vec![0],
        };
        let mut rng = Rng::seed(2);
        for _ in 0..100 {
            let neg = sample_negatives(&inst, 5, &mut rng, 1, Some(&[1, 2, 3]));
            assert_eq!(neg, vec![4]);
        }
    }

    #[test]
    fn negatives_are_uniform_and_disjoint() {
        let inst = TrainingInstance {
            user: 0,
            context: vec![],
            positives: vec![0, 1],
        };
        let n = 10;
        let draws = 100_000;
        let mut rng = Rng::seed(99);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            let neg = sample_negatives(&inst, n, &mut rng, 1, None);
            assert!(!inst.positives.contains(&neg[0]));
            counts[neg[0]] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        let p = 1.0 / 8.0;
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts[2..] {
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // chi-square critical value, 7 degrees of freedom, p = 0.001
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn multiple_negatives_are_distinct() {
        let inst = TrainingInstance {
            user: 0,
            context: vec![],
            positives: vec![0, 1, 2],
        };
        let mut rng = Rng::seed(4);
        for _ in 0..1000 {
            let mut neg = sample_negatives(&inst, 7, &mut rng, 3, None);
            neg.sort();
            neg.dedup();
            assert_eq!(neg.len(), 3);
            assert!(neg.iter().all(|j| *j >= 3));
        }
    }

    #[test]
    fn log_text_round_trip() {
        let log = filter_and_index(
            events(&[("u1", "a", 3), ("u1", "b", 1), ("u2", "a", 7), ("u2", "c", 7)]),
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        log.write(&mut buf).unwrap();
        let back = InteractionLog::read(buf.as_slice()).unwrap();
        assert_eq!(back, log);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(again, buf);
    }
}
