use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attrec::corpus::{synthetic_sequences, write_raw};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_attrec");
const SMALL: [&str; 6] = ["--d", "8", "--batch-size", "200", "--epochs", "3"];

fn attrec(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn attrec")
}

fn ok(args: &[&str]) -> String {
    let out = attrec(args);
    assert!(
        out.status.success(),
        "attrec {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = attrec(args);
    assert!(!out.status.success(), "attrec {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn ratings(dir: &Path) -> PathBuf {
    let path = dir.join("ratings.tsv");
    let mut buf = Vec::new();
    write_raw(&synthetic_sequences(60, 40, 20, 12), &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

struct Run {
    _tmp: TempDir,
    input: PathBuf,
    work: PathBuf,
}

impl Run {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let input = ratings(tmp.path());
        let work = tmp.path().join("run");
        Run { _tmp: tmp, input, work }
    }

    fn w(&self) -> &str {
        self.work.to_str().unwrap()
    }

    fn prepare(&self) -> String {
        ok(&["prepare", "--input", self.input.to_str().unwrap(), "--workdir", self.w()])
    }

    fn args<'a>(&'a self, cmd: &'a [&'a str]) -> Vec<&'a str> {
        let mut v = cmd.to_vec();
        v.extend(["--workdir", self.w()]);
        v.extend(SMALL);
        v
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.work.join(name)).unwrap()
    }
}

#[test]
fn prepare_reports_counts_and_is_repeatable() {
    let run = Run::new();
    let out = run.prepare();
    assert!(out.contains(" users, ") && out.contains(" interactions"), "{out}");
    assert!(out.contains("density"));
    let first = run.read("log.txt");
    run.prepare();
    assert_eq!(first, run.read("log.txt"));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.data");
    let err = fail(&["prepare", "--input", missing.to_str().unwrap(), "--workdir", dir.path().to_str().unwrap()]);
    assert!(err.contains("nope.data"), "{err}");
}

#[test]
fn invalid_config_is_rejected_before_any_work() {
    let run = Run::new();
    run.prepare();
    let err = fail(&["train", "--workdir", run.w(), "--omega", "1.5", "--batch-size", "0"]);
    assert!(err.contains("omega must lie in [0,1]"), "{err}");
    assert!(err.contains("batch size"), "{err}");
    assert!(!run.work.join("checkpoint.bin").exists());
    let err = fail(&["train", "--workdir", run.w(), "--omega", "half"]);
    assert!(err.contains("omega"), "{err}");
}

#[test]
fn train_and_evaluate_are_deterministic() {
    let a = Run::new();
    let b = Run::new();
    for run in [&a, &b] {
        run.prepare();
        ok(&run.args(&["train", "--seed", "7"]));
        ok(&run.args(&["evaluate", "--include-ranks", "true"]));
    }
    for name in ["log.txt", "checkpoint.bin", "trace.tsv", "report.txt"] {
        assert_eq!(a.read(name), b.read(name), "{name} differs");
    }
    let trace = String::from_utf8(a.read("trace.tsv")).unwrap();
    let rows = trace.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 3);
    assert!(trace.contains("# config.seed=7"));
    assert!(String::from_utf8(a.read("report.txt")).unwrap().contains("config.d=8"));

    ok(&a.args(&["train", "--seed", "8"]));
    assert_ne!(a.read("trace.tsv"), b.read("trace.tsv"));
}

fn metric(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from report"))
        .parse()
        .unwrap()
}

#[test]
fn evaluate_cutoffs_and_baseline() {
    let run = Run::new();
    run.prepare();
    // popularity needs no checkpoint
    ok(&run.args(&["evaluate", "--baseline", "pop"]));
    let pop = String::from_utf8(run.read("report-pop.txt")).unwrap();
    assert!(pop.contains("config.baseline=pop"));
    assert!(pop.contains("k=50"));

    ok(&run.args(&["train"]));
    ok(&run.args(&["evaluate", "--k", "10", "--out", run.work.join("r10.txt").to_str().unwrap()]));
    ok(&run.args(&["evaluate", "--k", "50", "--out", run.work.join("r50.txt").to_str().unwrap()]));
    let r10 = String::from_utf8(run.read("r10.txt")).unwrap();
    let r50 = String::from_utf8(run.read("r50.txt")).unwrap();
    assert!(metric(&r10, "hr@10") <= metric(&r50, "hr@50"));
    assert_eq!(metric(&r10, "mrr"), metric(&r50, "mrr"));
}

#[test]
fn checkpoint_must_match_prepared_data() {
    let run = Run::new();
    run.prepare();
    ok(&run.args(&["train"]));
    let other = tempfile::tempdir().unwrap();
    let path = other.path().join("small.tsv");
    let mut buf = Vec::new();
    write_raw(&synthetic_sequences(30, 25, 15, 2), &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    ok(&["prepare", "--input", path.to_str().unwrap(), "--workdir", run.w()]);
    let err = fail(&run.args(&["evaluate"]));
    assert!(err.contains("does not match"), "{err}");
}

#[test]
fn export_attention_matrix() {
    let run = Run::new();
    run.prepare();
    ok(&run.args(&["train"]));
    ok(&run.args(&["export-attention", "--user", "3"]));
    let first = run.read("attention-3.csv");
    ok(&run.args(&["export-attention", "--user", "3"]));
    assert_eq!(first, run.read("attention-3.csv"));

    let text = String::from_utf8(first).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 5);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert_eq!(row[r], 0.0);
    }
    assert!(text.lines().next().unwrap().split(',').all(|x| x.split('.').nth(1).unwrap().len() == 6));

    let err = fail(&run.args(&["export-attention", "--user", "9999"]));
    assert!(err.contains("9999") && err.contains("1..=60"), "{err}");
}

#[test]
fn sweep_tables() {
    let run = Run::new();
    run.prepare();
    ok(&run.args(&["sweep", "--axis", "omega", "--values", "0.3"]));
    let table = String::from_utf8(run.read("sweep-omega.tsv")).unwrap();
    let body: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "omega\thr@50\tmrr\tbest_epoch");
    assert_eq!(body.len(), 2);

    ok(&run.args(&["sweep", "--axis", "aggregation"]));
    let table = String::from_utf8(run.read("sweep-aggregation.tsv")).unwrap();
    let settings: Vec<&str> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(settings, ["mean", "sum", "max", "min"]);

    let err = fail(&run.args(&["sweep", "--axis", "colour"]));
    assert!(err.contains("unknown sweep axis"), "{err}");
    let err = fail(&run.args(&["sweep", "--axis", "omega", "--values", "0.2,7"]));
    assert!(err.contains("omega must lie in [0,1]"), "{err}");
}

#[test]
fn config_file_then_flags() {
    let run = Run::new();
    run.prepare();
    let conf = run.work.join("run.conf");
    fs::write(&conf, "epochs = 2\nseed = 3\nd = 8\nbatch_size = 200\n").unwrap();
    ok(&["train", "--workdir", run.w(), "--config", conf.to_str().unwrap(), "--seed", "5"]);
    let trace = String::from_utf8(run.read("trace.tsv")).unwrap();
    assert!(trace.contains("# config.seed=5"));
    assert!(trace.contains("# config.epochs=2"));
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 2);
}
