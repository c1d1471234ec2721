//! Independent re-derivations of kernels, ratios and integrators checked
//! against the library.

mod common;

use common::oracle::*;
use lifted_mala::kernels::{implicit_map, q1_propose, q2_propose, q3_matrix, q3_propose};
use lifted_mala::prelude::*;
use lifted_mala::target::check_gradient;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn q2_picard_matches_linear_solve_on_std_gaussian() {
    let worst = q2_linear_solve_deviation(10);
    assert!(worst <= 1e-10, "worst deviation {worst:e}");
}

#[test]
fn q2_residual_and_shared_midpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for preset in [Preset::StdGaussian, Preset::Anisotropic, Preset::WarpedGaussian] {
        let skew = SkewDrift::rotation(1.0);
        for _ in 0..100 {
            let s = LiftedState::new(random_point(&mut rng, 3.0), random_xi(&mut rng));
            let chi = random_point(&mut rng, 2.0);
            let h = rng.gen_range(0.001..0.02);
            let y = q2_propose(&preset, &skew, &s, h, chi, &PicardConfig::default()).unwrap().y;
            let target_rhs = s.x - preset.gradient(&s.x) * h + chi * (2.0 * h).sqrt();
            let residual = (implicit_map(&preset, &skew, s.xi, &s.x, &y, h) - target_rhs).norm();
            assert!(residual <= 1e-12 * target_rhs.norm().max(1.0), "{preset}: residual {residual:e}");
            let fwd = implicit_map(&preset, &skew, s.xi, &s.x, &y, h);
            let rev = implicit_map(&preset, &skew, -s.xi, &y, &s.x, h);
            assert!((fwd + rev - (s.x + y)).norm() <= 1e-12 * (s.x + y).norm().max(1.0));
        }
    }
}


#[test]
fn q2_ratio_matches_brute_force_densities() {
    let worst = q2_ratio_deviation(12);
    assert!(worst <= 1e-6, "worst deviation {worst:e}");
}

#[test]
fn jacobian_ratio_lemma() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for preset in Preset::ALL {
        for _ in 0..50 {
            let alpha = rng.gen_range(0.1..3.0);
            let skew = SkewDrift::rotation(alpha);
            let h = rng.gen_range(0.001..0.1);
            let xi = random_xi(&mut rng);
            let x = p(rng.gen_range(-5.0..5.0), rng.gen_range(-1.5..1.5));
            let y = x + random_point(&mut rng, 0.5);
            let fwd = fd_jacobian(|z| implicit_map(&preset, &skew, xi, &x, z, h), &y, 1e-5);
            let rev = fd_jacobian(|z| implicit_map(&preset, &skew, -xi, &y, z, h), &x, 1e-5);
            let ratio = det2(&fwd) / det2(&rev);
            assert!((ratio - 1.0).abs() <= 1e-6, "{preset}: ratio {ratio}");
        }
    }
}


#[test]
fn q1_and_q3_densities_integrate_to_one() {
    assert!(q1_mass_error() <= 1e-4);
    assert!(q3_mass_error(15) <= 1e-4);
}

#[test]
fn q3_matches_closed_form_and_determinant() {
    let target = Preset::StdGaussian;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.0..3.0);
        let h = rng.gen_range(0.01..0.5);
        let skew = SkewDrift::rotation(alpha);
        let s = LiftedState::new(random_point(&mut rng, 3.0), random_xi(&mut rng));
        let chi = random_point(&mut rng, 2.0);
        let m = q3_matrix(&target, &skew, s.xi, &s.x, h).unwrap();
        assert!((det2(&m) - (1.0 + (h * alpha / 2.0).powi(2))).abs() <= 1e-12);
        // M (y - x) = h b(x) + sqrt(2h) chi, solved by Cramer's rule.
        let rhs = skew.drift_from_gradient(&s.x, s.xi) * h + chi * (2.0 * h).sqrt();
        let d = det2(&m);
        let step = p(
            (rhs[0] * m[(1, 1)] - m[(0, 1)] * rhs[1]) / d,
            (m[(0, 0)] * rhs[1] - rhs[0] * m[(1, 0)]) / d,
        );
        let y = q3_propose(&target, &skew, &s, h, chi).unwrap().y;
        assert!((y - (s.x + step)).norm() <= 1e-12 * (1.0 + y.norm()));
    }
}


#[test]
fn q1_arithmetic_example() {
    let s = LiftedState::new(p(1.0, 0.0), Direction::Plus);
    let y = q1_propose(&Preset::StdGaussian, &SkewDrift::rotation(1.0), &s, 0.1, Point::<2>::zeros()).y;
    assert!((y - p(0.9, 0.1)).norm() < 1e-15);
}


#[test]
fn explicit_splitting_matches_transcription() {
    assert_eq!(splitting_mismatches(17), 0);
}

#[test]
fn literal_index_order_is_not_volume_preserving() {
    // Kicking x1 with dV/dx1 (and x2 with dV/dx2) rescales each coordinate.
    let literal = |x: &Point<2>| {
        let (a, h) = (1.0, 0.1);
        let y1_half = x[0] - h / 2.0 * a * x[0] / 50.0;
        let y2 = x[1] + h * a * 4.0 * x[1].powi(3);
        let y1 = y1_half - h / 2.0 * a * y1_half / 50.0;
        p(y1, y2)
    };
    let jac = fd_jacobian(literal, &p(10.0, 1.0), 1e-6);
    assert!((det2(&jac) - 1.0).abs() > 0.1);
    let corrected = fd_jacobian(|x| splitting_oracle(*x, 1.0, 1.0, 0.1), &p(10.0, 1.0), 1e-6);
    assert!((det2(&corrected) - 1.0).abs() < 1e-6);
}


#[test]
fn preset_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for preset in Preset::ALL {
        for _ in 0..100 {
            let x = random_point(&mut rng, 20.0);
            let err = check_gradient(&preset, &x, 1e-5);
            assert!(err <= 1e-5, "{preset} at {x:?}: {err:e}");
            let hess = preset.hessian(&x).unwrap();
            assert_eq!(hess, hess.transpose());
        }
    }
    assert!(check_gradient(&Preset::WarpedGaussian, &p(3.0, 2.0), 1e-5) <= 1e-5);
    assert!(check_gradient(&Preset::Anisotropic, &p(15.0, 0.0), 1e-5) <= 1e-5);
    assert!(check_gradient(&Preset::StdGaussian, &p(-7.0, 3.0), 1e-5) <= 1e-9);
}


#[test]
fn skew_drift_is_orthogonal_to_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for preset in Preset::ALL {
        let skew = SkewDrift::rotation(rng.gen_range(-5.0..5.0));
        for _ in 0..100 {
            let x = random_point(&mut rng, 20.0);
            let g = preset.gradient(&x);
            let gamma = skew.gamma(&preset, &x);
            assert!(gamma.dot(&g).abs() <= 1e-12 * g.norm_squared().max(1.0));
        }
    }
}
