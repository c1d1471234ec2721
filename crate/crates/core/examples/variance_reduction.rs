//! Variance of replicated time averages for MALA, GMALA and GHMALA through
//! the experiment presets, reporting each method at its best step size.
//!
//! cargo run --release --example variance_reduction [-- anisotropic|warped|quartic]

use lifted_mala::experiment::{run_experiment, ExperimentConfig, ExperimentPreset, Registry};

fn main() -> lifted_mala::Result<()> {
    let which = std::env::args().nth(1).unwrap_or_else(|| "quartic".into());
    let preset = match which.as_str() {
        "anisotropic" => ExperimentPreset::VarianceAnisotropic,
        "warped" => ExperimentPreset::VarianceWarped,
        "quartic" => ExperimentPreset::VarianceQuartic,
        other => return Err(lifted_mala::Error::Config(format!("unknown case `{other}`"))),
    };
    let cfg = ExperimentConfig::preset(preset, 2024)?;
    let report = run_experiment(&cfg, &Registry::with_presets(), None)?;
    print!("{}", report.summary());

    println!("\nbest step size per sampler:");
    let mut best: Vec<(String, f64, f64)> = Vec::new();
    for p in &report.points {
        let v = p.stats.as_ref().expect("variance presets replicate").variance;
        let label = p.sampler.to_string();
        match best.iter_mut().find(|b| b.0 == label) {
            Some(b) if v < b.2 => *b = (label, p.h, v),
            Some(_) => {}
            None => best.push((label, p.h, v)),
        }
    }
    let mala = best.iter().find(|b| b.0 == "mala").map(|b| b.2);
    for (label, h, v) in &best {
        let ratio = mala.map(|m| format!("  MALA / method = {:.1}", m / v)).unwrap_or_default();
        println!("  {label:<34} h = {h:<6} variance = {v:.4e}{ratio}");
    }
    Ok(())
}
