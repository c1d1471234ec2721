//! Independent re-derivations of kernels, ratios and integrators. Each
//! `*_deviation` function returns the worst disagreement with the library.

use std::sync::Arc;

use lifted_mala::integrators::build_integrator;
use lifted_mala::kernels::{implicit_map, q1_log_density, q1_propose, q2_log_mh_ratio, q2_propose, q3_log_density, q3_propose};
use lifted_mala::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn p(a: f64, b: f64) -> Point<2> {
    Point::<2>::new(a, b)
}

pub fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Point<2> {
    p(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn random_xi(rng: &mut ChaCha8Rng) -> Direction {
    if rng.gen_bool(0.5) {
        Direction::Plus
    } else {
        Direction::Minus
    }
}

pub fn det2(m: &Matrix<2>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn fd_jacobian(f: impl Fn(&Point<2>) -> Point<2>, at: &Point<2>, eps: f64) -> Matrix<2> {
    let mut jac = Matrix::<2>::zeros();
    for j in 0..2 {
        let mut plus = *at;
        let mut minus = *at;
        plus[j] += eps;
        minus[j] -= eps;
        jac.set_column(j, &((f(&plus) - f(&minus)) / (2.0 * eps)));
    }
    jac
}

fn log_gauss(r: &Point<2>, h: f64) -> f64 {
    -(4.0 * std::f64::consts::PI * h).ln() - r.norm_squared() / (4.0 * h)
}

/// `log Q2^xi(x, y)` written out as a change of variables: the noise is
/// `Phi_x(y) - (x - h ∇U(x))`, with the Jacobian of `Phi_x` taken numerically.
pub fn brute_q2_log_density(target: &dyn Target<2>, skew: &SkewDrift<2>, xi: Direction, x: &Point<2>, y: &Point<2>, h: f64) -> f64 {
    let phi = |z: &Point<2>| implicit_map(target, skew, xi, x, z, h);
    let jac = fd_jacobian(phi, y, 1e-6);
    let r = phi(y) - (x - target.gradient(x) * h);
    log_gauss(&r, h) + det2(&jac).abs().ln()
}

fn brute_q2_log_ratio(target: &dyn Target<2>, skew: &SkewDrift<2>, xi: Direction, x: &Point<2>, y: &Point<2>, h: f64) -> f64 {
    target.potential(x) - target.potential(y) + brute_q2_log_density(target, skew, -xi, y, x, h)
        - brute_q2_log_density(target, skew, xi, x, y, h)
}

/// Q2 by Picard iteration against the linear solve available for a
/// Gaussian target.
pub fn q2_linear_solve_deviation(seed: u64) -> f64 {
    let target = Preset::StdGaussian;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let alpha = rng.gen_range(0.1..3.0);
        let skew = SkewDrift::rotation(alpha);
        let h = rng.gen_range(0.001..0.2);
        let s = LiftedState::new(random_point(&mut rng, 5.0), random_xi(&mut rng));
        let chi = random_point(&mut rng, 2.0);
        let y = q2_propose(&target, &skew, &s, h, chi, &PicardConfig::default()).unwrap().y;
        // (I + h xi J / 2) y = (1 - h) x + sqrt(2h) chi - (h xi / 2) J x
        let hj = skew.matrix() * (0.5 * h * s.xi.sign());
        let lhs = Matrix::<2>::identity() + hj;
        let rhs = s.x * (1.0 - h) + chi * (2.0 * h).sqrt() - hj * s.x;
        let exact = lhs.try_inverse().unwrap() * rhs;
        worst = worst.max((y - exact).norm());
    }
    worst
}

/// `q2_log_mh_ratio` against densities with numerical Jacobians, on the
/// standard Gaussian and on the three non-Gaussian presets.
pub fn q2_ratio_deviation(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let skew = SkewDrift::rotation(1.0);
    for _ in 0..200 {
        let x = random_point(&mut rng, 2.0);
        let y = x + random_point(&mut rng, 0.5);
        let xi = random_xi(&mut rng);
        let brute = brute_q2_log_ratio(&Preset::StdGaussian, &skew, xi, &x, &y, 0.05);
        let lib = q2_log_mh_ratio(&Preset::StdGaussian, &skew, &LiftedState::new(x, xi), &y, 0.05);
        worst = worst.max((lib - brute).abs());
    }
    let skew = SkewDrift::rotation(2.0);
    for preset in [Preset::Anisotropic, Preset::WarpedGaussian, Preset::QuarticGaussian] {
        for _ in 0..50 {
            let x = p(rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..1.0));
            let y = x + random_point(&mut rng, 0.2);
            let xi = random_xi(&mut rng);
            let brute = brute_q2_log_ratio(&preset, &skew, xi, &x, &y, 0.02);
            let lib = q2_log_mh_ratio(&preset, &skew, &LiftedState::new(x, xi), &y, 0.02);
            worst = worst.max((lib - brute).abs());
        }
    }
    worst
}

/// Midpoint-rule integral of `exp(log_density)` over a square around `center`.
pub fn quadrature(log_density: impl Fn(&Point<2>) -> f64, center: Point<2>, half_width: f64, n: usize) -> f64 {
    let dx = 2.0 * half_width / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = center + p(-half_width + (i as f64 + 0.5) * dx, -half_width + (j as f64 + 0.5) * dx);
            total += log_density(&z).exp();
        }
    }
    total * dx * dx
}

/// Largest `|mass - 1|` of the Q1 density over a few starting states.
pub fn q1_mass_error() -> f64 {
    let target = Preset::StdGaussian;
    let skew = SkewDrift::rotation(1.0);
    let h = 0.1;
    [(p(1.0, 0.0), Direction::Plus), (p(-0.5, 2.0), Direction::Minus)]
        .into_iter()
        .map(|(x, xi)| {
            let mean = q1_propose(&target, &skew, &LiftedState::new(x, xi), h, Point::<2>::zeros()).y;
            let mass = quadrature(|y| q1_log_density(&target, &skew, xi, &x, y, h), mean, 8.0 * (2.0 * h).sqrt(), 600);
            (mass - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest `|mass - 1|` of the Q3 density over random starting states.
pub fn q3_mass_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for preset in [Preset::StdGaussian, Preset::Anisotropic] {
        let skew = SkewDrift::rotation(2.0);
        let h = 0.2;
        for _ in 0..3 {
            let x = random_point(&mut rng, 2.0);
            let xi = random_xi(&mut rng);
            let mean = q3_propose(&preset, &skew, &LiftedState::new(x, xi), h, Point::<2>::zeros()).unwrap().y;
            let mass = quadrature(|y| q3_log_density(&preset, &skew, xi, &x, y, h).unwrap(), mean, 8.0 * (2.0 * h).sqrt(), 600);
            worst = worst.max((mass - 1.0).abs());
        }
    }
    worst
}

/// The splitting scheme written out stage by stage. The first and last
/// stages move `x1` along `dV/dx2`, the middle one moves `x2` along `dV/dx1`,
/// as required for the flow `dx = -xi J ∇V(x)`.
pub fn splitting_oracle(x: Point<2>, alpha: f64, xi: f64, h: f64) -> Point<2> {
    let d1 = |x1: f64| x1 / 50.0;
    let d2 = |x2: f64| 4.0 * x2 * x2 * x2;
    let y1_half = x[0] - h / 2.0 * alpha * xi * d2(x[1]);
    let y2 = x[1] + h * alpha * xi * d1(y1_half);
    let y1 = y1_half - h / 2.0 * alpha * xi * d2(y2);
    p(y1, y2)
}

/// Number of draws (out of 101) where the library's splitting step differs
/// from the transcription in any bit.
pub fn splitting_mismatches(seed: u64) -> usize {
    let build = |alpha: f64| {
        build_integrator(IntegratorKind::ExplicitSplitting, Arc::new(Preset::QuarticGaussian), SkewDrift::rotation(alpha), PicardConfig::default()).unwrap()
    };
    let mut mismatches = usize::from(build(1.0).step(&p(10.0, 1.0), Direction::Plus, 0.1).unwrap() != splitting_oracle(p(10.0, 1.0), 1.0, 1.0, 0.1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let x = p(rng.gen_range(-20.0..20.0), rng.gen_range(-2.0..2.0));
        let (alpha, h) = (rng.gen_range(0.1..5.0), rng.gen_range(0.001..0.3));
        let xi = random_xi(&mut rng);
        mismatches += usize::from(build(alpha).step(&x, xi, h).unwrap() != splitting_oracle(x, alpha, xi.sign(), h));
    }
    mismatches
}

/// Worst round-trip defect and worst `|det Jac - 1|` of the three
/// integrators over 100 random `(x, h, xi)` draws each, at `alpha = 1`.
pub fn integrator_contract_defects(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut round_trip, mut volume): (f64, f64) = (0.0, 0.0);
    for (kind, preset) in [
        (IntegratorKind::Midpoint, Preset::Anisotropic),
        (IntegratorKind::ConjugatedMidpoint, Preset::WarpedGaussian),
        (IntegratorKind::ExplicitSplitting, Preset::QuarticGaussian),
    ] {
        let integ = build_integrator(kind, Arc::new(preset), SkewDrift::rotation(1.0), PicardConfig::default()).unwrap();
        for _ in 0..100 {
            let x = p(rng.gen_range(-10.0..10.0), rng.gen_range(-2.0..2.0));
            let h = rng.gen_range(0.01..0.2);
            let d = verify_integrator(integ.as_ref(), &preset, &x, random_xi(&mut rng), h).unwrap();
            round_trip = round_trip.max(d.reversibility);
            volume = volume.max(d.volume);
        }
    }
    (round_trip, volume)
}
