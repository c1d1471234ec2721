use std::sync::Arc;

use lifted_mala::experiment::{run_experiment, validate_config, Registry};
use lifted_mala::prelude::*;
use lifted_mala::target::FnTarget;
use serde_json::json;

fn gradient_only() -> FnTarget<2> {
    FnTarget::new(
        "gradient_only",
        |x: &Point<2>| 0.5 * x.norm_squared(),
        |x: &Point<2>| *x,
    )
}

#[test]
fn q3_on_target_without_hessian_fails_before_sampling() {
    let registry = Registry::with_presets().register("gradient_only", Arc::new(gradient_only()));
    let cfg = json!({
        "experiment": "custom", "target": "gradient_only", "sampler": "gmala", "kernel": "q3",
        "h_grid": [0.1], "master_seed": 1
    });
    let errors = validate_config(&cfg, &registry).unwrap_err();
    assert!(errors.mentions("kernel"), "{errors}");

    // The same target is fine for the Hessian-free kernels.
    let cfg = json!({
        "experiment": "custom", "target": "gradient_only", "sampler": "gmala", "kernel": "q2",
        "h_grid": [0.1], "n_samples": 500, "master_seed": 1
    });
    let cfg = validate_config(&cfg, &registry).unwrap();
    assert!(!run_experiment(&cfg, &registry, Some(1)).unwrap().rows.is_empty());
}

#[test]
fn registered_target_with_hessian_supports_q3() {
    let target = gradient_only().with_hessian(|_: &Point<2>| Matrix::<2>::identity());
    let registry = Registry::empty().register("quadratic", Arc::new(target));
    let cfg = json!({
        "experiment": "custom", "target": "quadratic", "sampler": "gmala", "kernel": "q3",
        "h_grid": [0.1, 0.2], "n_samples": 500, "master_seed": 1
    });
    let cfg = validate_config(&cfg, &registry).unwrap();
    assert_eq!(run_experiment(&cfg, &registry, None).unwrap().points.len(), 2);
}

#[test]
fn unknown_target_lists_registered_names() {
    let cfg = json!({"experiment": "custom", "target": "nope", "sampler": "mala", "h_grid": [0.1], "master_seed": 1});
    let errors = validate_config(&cfg, &Registry::with_presets()).unwrap_err();
    assert!(errors.mentions("target"));
    assert!(errors.to_string().contains("anisotropic"), "{errors}");
}
