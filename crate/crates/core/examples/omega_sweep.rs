// Sweep the long-term/short-term weight and print the results table.

use std::error::Error;
use std::fs;

use attrec::cli::{prepare, sweep, sweep_table};
use attrec::config::{RunConfig, SweepAxis};
use attrec::corpus::{synthetic_sequences, write_raw};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("attrec-sweep-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let input = dir.join("ratings.tsv");
    let mut buf = Vec::new();
    write_raw(&synthetic_sequences(60, 40, 20, 6), &mut buf)?;
    fs::write(&input, buf)?;

    let mut cfg = RunConfig::default();
    for (k, v) in [("d", "8"), ("epochs", "3"), ("batch_size", "200"), ("k", "10")] {
        cfg.set(k, v)?;
    }
    cfg.input = Some(input);
    cfg.workdir = dir.join("run");
    prepare(&cfg)?;

    let axis = SweepAxis::Omega;
    let rows = sweep(&cfg, axis, &axis.default_grid(), |_, _| {})?;
    print!("{}", sweep_table(&cfg, axis, &rows));
    fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    run_example().expect("sweep example failed");
}
