//! A GMALA chain next to a MALA chain on the anisotropic target: acceptance
//! bookkeeping, direction flips and autocorrelation of the tail observable.
//!
//! cargo run --release --example gmala_chain [-- <n_steps>]

use std::sync::Arc;

use lifted_mala::diagnostics::mean_with_stderr;
use lifted_mala::prelude::*;

fn main() -> lifted_mala::Result<()> {
    let n_steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let target: Arc<dyn Target<2>> = Arc::new(Preset::Anisotropic);
    let f = make_observable("indicator_tail_quadratic")?;
    let cfg = ChainConfig::new(n_steps, 1)?.with_trace(TraceOptions { observable: true, ..Default::default() });

    let mala = Mala { target: target.clone(), h: 1.0 };
    let gmala = Gmala {
        target,
        skew: SkewDrift::rotation(20.0),
        kernel: Kernel::Q2,
        h: 0.0375,
        picard: PicardConfig::default(),
    };
    let samplers: [&dyn Sampler<2>; 2] = [&mala, &gmala];
    for sampler in samplers {
        let s = run_chain(sampler, &cfg, &f)?;
        let m = mean_with_stderr(&s.observable_trace);
        println!("{}", sampler.label());
        println!("  estimate of E[f]      {:.3} +- {:.3}", m.mean, m.stderr);
        println!("  autocorrelation time  {:.1}", m.iat);
        println!("  rejection fraction    {:.4}", s.primary.rejection_fraction());
        println!("  direction flips       {}", s.flips);
        println!("  Picard iterations     {:.2} per step", s.picard_iters as f64 / n_steps as f64);
    }
    Ok(())
}
