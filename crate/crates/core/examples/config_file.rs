// Resolve a run configuration from a flat `key = value` file plus
// command-line style overrides.

use std::error::Error;
use std::fs;

use attrec::config::RunConfig;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("attrec-config-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let path = dir.join("run.conf");
    fs::write(
        &path,
        "# sparse data: short windows, clipping instead of l2\nprofile = sparse\nomega = 0.4\nepochs = 20\n",
    )?;
    let overrides = vec![("epochs".to_string(), "5".to_string())];
    let cfg = RunConfig::resolve(Some(&path), &overrides)?;
    fs::remove_dir_all(&dir)?;

    let m = cfg.model();
    println!("L={} T={} clip_norms={} omega={} epochs={}", m.window, m.targets, m.clip_norms, m.omega, cfg.train.epochs);
    assert_eq!(cfg.train.epochs, 5);

    let mut bad = cfg.clone();
    bad.set("omega", "1.5")?;
    bad.set("batch_size", "0")?;
    println!("problems: {:?}", bad.validate());
    print!("{}", cfg.to_file_text());
    Ok(())
}

fn main() {
    run_example().expect("config example failed");
}
