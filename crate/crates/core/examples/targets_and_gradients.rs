//! Benchmark targets, gradient checks, truncation and observables.
//!
//! cargo run --release --example targets_and_gradients

use std::sync::Arc;

use lifted_mala::prelude::*;
use lifted_mala::target::{check_gradient, check_hessian, FnTarget};

fn main() -> lifted_mala::Result<()> {
    let probe = Point::<2>::new(3.0, -1.5);
    println!("{:<18} {:>12} {:>24} {:>10} {:>10}", "preset", "U(x)", "grad U(x)", "grad err", "hess err");
    for preset in Preset::ALL {
        let g = preset.gradient(&probe);
        println!(
            "{:<18} {:>12.6} {:>24} {:>10.2e} {:>10.2e}",
            preset.id(),
            preset.potential(&probe),
            format!("({:.4}, {:.4})", g[0], g[1]),
            check_gradient(&preset, &probe, 1e-5),
            check_hessian(&preset, &probe, 1e-5).unwrap_or(f64::NAN),
        );
    }

    // Gradient clipping for proposals (the potential is unchanged).
    let warped: Arc<dyn Target<2>> = Arc::new(Preset::WarpedGaussian);
    let clipped = truncate_gradient(warped.clone(), 10.0)?;
    let far = Point::<2>::new(25.0, 0.0);
    println!(
        "\nwarped at (25, 0): |grad U| = {:.2}, truncated |grad U| = {:.2}",
        warped.gradient(&far).norm(),
        clipped.gradient(&far).norm()
    );

    // A user-defined target from closures: a correlated Gaussian.
    let precision = Matrix::<2>::new(2.0, 0.9, 0.9, 1.0);
    let custom = FnTarget::new(
        "correlated_gaussian",
        move |x: &Point<2>| 0.5 * x.dot(&(precision * x)),
        move |x: &Point<2>| precision * x,
    )
    .with_hessian(move |_| precision);
    println!(
        "{} gradient error at the probe: {:.2e}",
        custom.name(),
        check_gradient(&custom, &probe, 1e-5)
    );

    // Presets by name, as used in experiment configs.
    let params = [("truncation_radius".to_string(), 5.0)].into_iter().collect();
    let t = make_builtin_target("anisotropic", &params)?;
    println!("built `{}` (separable: {})", t.name(), t.is_separable());

    for name in ["indicator_tail_quadratic", "radius_squared"] {
        let f = make_observable(name)?;
        println!("{name} at (16, 3) = {}", f.eval(&Point::<2>::new(16.0, 3.0)));
    }
    Ok(())
}
