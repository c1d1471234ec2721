//! The three hybrid-move integrators: contract checks (reversibility,
//! volume preservation, energy error) and GHMALA chains built on each.
//!
//! cargo run --release --example ghmala_integrators

use std::sync::Arc;

use lifted_mala::integrators::build_integrator;
use lifted_mala::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lifted_mala::Result<()> {
    let cases = [
        (IntegratorKind::Midpoint, Preset::Anisotropic, 1.0, 0.1),
        (IntegratorKind::ConjugatedMidpoint, Preset::WarpedGaussian, 3.0, 0.3),
        (IntegratorKind::ExplicitSplitting, Preset::QuarticGaussian, 30.0, 0.03),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r2 = make_observable("radius_squared")?;

    for (kind, preset, alpha, h) in cases {
        let target: Arc<dyn Target<2>> = Arc::new(preset);
        let integrator = build_integrator(kind, target.clone(), SkewDrift::rotation(alpha), PicardConfig::default())?;

        let (mut rev, mut vol, mut energy) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let x = Point::<2>::new(rng.gen_range(-5.0..5.0), rng.gen_range(-2.0..2.0));
            let d = verify_integrator(integrator.as_ref(), target.as_ref(), &x, Direction::Plus, h)?;
            rev = rev.max(d.reversibility);
            vol = vol.max(d.volume);
            energy = energy.max(d.energy);
        }
        println!("{} on {} (alpha {alpha}, h {h})", integrator.name(), preset.id());
        println!("  max reversibility defect {rev:.2e}, max |det - 1| {vol:.2e}, max energy error {energy:.2e}");

        let sampler = Ghmala { target, integrator, h };
        let s = run_chain(&sampler, &ChainConfig::new(100_000, 3)?, &r2)?;
        let hybrid = s.hybrid.expect("GHMALA reports the hybrid move");
        println!(
            "  GHMALA: E[|x|^2] ~ {:.3}, MALA-substep rejection {:.4}, hybrid rejection {:.2e}",
            s.time_average,
            s.primary.mean_reject_prob,
            hybrid.mean_reject_prob
        );
    }
    Ok(())
}
