// Drive the command line in-process: prepare, train, evaluate (model and
// popularity), export one attention map.
//
// The same steps from a shell:
//
//     attrec prepare --input ratings.tsv --workdir run
//     attrec train --workdir run --epochs 5
//     attrec evaluate --workdir run
//     attrec evaluate --workdir run --baseline pop
//     attrec export-attention --workdir run --user 1

use std::error::Error;
use std::fs;

use attrec::cli::{run, Cli};
use attrec::corpus::{synthetic_sequences, write_raw};
use clap::Parser;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("attrec-cli-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let input = dir.join("ratings.tsv");
    let mut buf = Vec::new();
    write_raw(&synthetic_sequences(50, 40, 20, 4), &mut buf)?;
    fs::write(&input, buf)?;
    let workdir = dir.join("run");
    let (input, workdir) = (input.to_str().unwrap(), workdir.to_str().unwrap());

    let common = ["--workdir", workdir, "--d", "8", "--batch-size", "100"];
    let steps: Vec<Vec<&str>> = vec![
        vec!["prepare", "--input", input],
        vec!["train", "--epochs", "3"],
        vec!["evaluate", "--k", "10"],
        vec!["evaluate", "--k", "10", "--baseline", "pop"],
        vec!["export-attention", "--user", "1"],
    ];
    for step in steps {
        let args = std::iter::once("attrec").chain(step.iter().copied()).chain(common);
        let cli = Cli::try_parse_from(args)?;
        println!("$ attrec {}", step.join(" "));
        print!("{}", run(&cli.command)?);
    }
    fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    run_example().expect("cli pipeline failed");
}
