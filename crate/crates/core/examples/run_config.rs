//! Loads a JSON experiment config (with optional `key=value` overrides), runs
//! it and writes the CSV, the same path the `lifted-mala run` command takes.
//!
//! cargo run --release --example run_config -- configs/custom_ghmala.json out.csv n_samples=20000

use std::path::PathBuf;

use lifted_mala::experiment::{load_config, run_experiment, Registry};

fn main() -> lifted_mala::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/custom_ghmala.json").into()
    }));
    let output = args.next().map(PathBuf::from);
    let overrides: Vec<String> = args.collect();

    let registry = Registry::with_presets();
    let cfg = load_config(&config, &overrides, &registry)?;
    let report = run_experiment(&cfg, &registry, None)?;
    print!("{}", report.summary());
    match output.or(cfg.output_path.clone()) {
        Some(path) => {
            report.write_csv(&path)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}
