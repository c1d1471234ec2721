//! Mean rejection probability against the step size on the anisotropic
//! target, with log-log slopes for each kernel and for the GHMALA hybrid move.
//!
//! cargo run --release --example rejection_scaling

use std::sync::Arc;

use lifted_mala::diagnostics::log_spaced;
use lifted_mala::prelude::*;

fn main() -> lifted_mala::Result<()> {
    let target: Arc<dyn Target<2>> = Arc::new(Preset::Anisotropic);
    let skew = SkewDrift::rotation(1.0);
    let grid = log_spaced(0.005, 0.16, 8);

    let report = |label: &str, n_steps: usize, make: &dyn Fn(f64) -> Box<dyn Sampler<2>>, hybrid: bool| -> lifted_mala::Result<()> {
        let cfg = ChainConfig::new(n_steps, 2024)?;
        let mut rates = Vec::new();
        for &h in &grid {
            let r = rejection_rate(make(h).as_ref(), &cfg)?;
            rates.push(if hybrid { r.hybrid.expect("hybrid rate").rate } else { r.primary.rate });
        }
        let fit = loglog_slope(&grid, &rates)?;
        let shown: Vec<String> = rates.iter().map(|r| format!("{r:.1e}")).collect();
        println!("{label:<16} slope {:.2} (r^2 {:.3})  rates {}", fit.slope, fit.r_squared, shown.join(" "));
        Ok(())
    };

    report("mala", 20_000, &|h| Box::new(Mala { target: target.clone(), h }), false)?;
    for kernel in Kernel::ALL {
        report(&format!("gmala {kernel}"), 20_000, &|h| {
            Box::new(Gmala { target: target.clone(), skew, kernel, h, picard: PicardConfig::default() })
        }, false)?;
    }
    let midpoint = Arc::new(MidpointIntegrator::new(target.clone(), skew, PicardConfig::default()));
    report("ghmala hybrid", 100_000, &|h| {
        Box::new(Ghmala { target: target.clone(), integrator: midpoint.clone(), h })
    }, true)?;
    Ok(())
}
