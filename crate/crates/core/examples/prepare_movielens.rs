// Turn a MovieLens-style rating file into an indexed, chronologically
// sorted log and print its statistics.
//
//     cargo run --release --example prepare_movielens -- data/ml-100k/u.data
//
// Without an argument a small synthetic file is generated and used.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use attrec::corpus::{
    chronological_split, filter_and_index, load_raw, synthetic_sequences, to_implicit, windowize, write_raw,
    ColumnSpec,
};

fn describe(path: &Path) -> Result<(), Box<dyn Error>> {
    let raw = load_raw(path, &ColumnSpec::default())?;
    let log = filter_and_index(to_implicit(raw), 10)?;
    println!(
        "{} users, {} items, {} interactions",
        log.num_users(),
        log.num_items(),
        log.num_interactions()
    );
    println!("density {:.4}%", 100.0 * log.density());
    let split = chronological_split(&log)?;
    let instances = windowize(&split, 5, 3);
    println!("{} training windows (L=5, T=3)", instances.len());
    let u = 0;
    println!(
        "user {}: {} train items, validation item {}, test item {}",
        log.user_id(u),
        split.train[u].len(),
        log.item_id(split.target(u, attrec::Target::Validation)),
        log.item_id(split.target(u, attrec::Target::Test)),
    );
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("attrec-prepare-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let path = dir.join("ratings.tsv");
    let mut buf = Vec::new();
    write_raw(&synthetic_sequences(40, 50, 30, 1), &mut buf)?;
    fs::write(&path, buf)?;
    let out = describe(&path);
    fs::remove_dir_all(&dir)?;
    out
}

fn main() {
    match std::env::args_os().nth(1).map(PathBuf::from) {
        Some(path) => describe(&path).expect("prepare failed"),
        None => run_example().expect("prepare failed"),
    }
}
