#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use lifted_mala::integrators::build_integrator;
use lifted_mala::prelude::*;

/// MALA, GMALA with each kernel, and GHMALA with the midpoint rule.
pub fn lineup(target: Arc<dyn Target<2>>, alpha: f64, h: f64) -> Vec<Box<dyn Sampler<2>>> {
    let skew = SkewDrift::rotation(alpha);
    let picard = PicardConfig::default();
    let mut out: Vec<Box<dyn Sampler<2>>> = vec![Box::new(Mala { target: target.clone(), h })];
    for kernel in [Kernel::Q1, Kernel::Q2, Kernel::Q3] {
        out.push(Box::new(Gmala { target: target.clone(), skew, kernel, h, picard }));
    }
    out.push(Box::new(ghmala(target, IntegratorKind::Midpoint, alpha, h)));
    out
}

pub fn ghmala(target: Arc<dyn Target<2>>, kind: IntegratorKind, alpha: f64, h: f64) -> Ghmala<2> {
    let integrator = build_integrator(kind, target.clone(), SkewDrift::rotation(alpha), PicardConfig::default()).unwrap();
    Ghmala { target, integrator, h }
}

pub fn std_gaussian() -> Arc<dyn Target<2>> {
    Arc::new(Preset::StdGaussian)
}

/// Keeps every `thin`-th post burn-in position of one chain.
pub fn positions(sampler: &dyn Sampler<2>, n_steps: usize, seed: u64, thin: usize) -> Vec<Point<2>> {
    let cfg = ChainConfig::new(n_steps, seed)
        .unwrap()
        .with_trace(TraceOptions { positions_thin: Some(thin), ..Default::default() });
    run_chain(sampler, &cfg, &Observable::constant(0.0)).unwrap().positions
}
