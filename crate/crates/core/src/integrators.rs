//! Integrators `Phi^xi_h` for the energy-conserving flow `dx = -xi J ∇U(x) dt`.
//!
//! Used by the hybrid step of GHMALA, which is unbiased as long as the
//! integrator is reversible in the direction (`Phi^xi_h = (Phi^{-xi}_h)^{-1}`)
//! and volume-preserving (`det Jac Phi^xi_h = 1`). [`verify_integrator`]
//! measures both defects together with the energy error.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{picard_solve, PicardConfig};
use crate::lifted::{Direction, SkewDrift};
use crate::linalg;
use crate::target::{Preset, Target};
use crate::{Matrix, Point};

/// One-step map for the skew (Hamiltonian) part of the lifted dynamics.
pub trait Integrator<const D: usize>: Send + Sync {
    fn name(&self) -> &str;

    fn requires_hessian(&self) -> bool {
        false
    }

    fn step(&self, x: &Point<D>, xi: Direction, h: f64) -> Result<Point<D>>;
}

/// Integrator selector used by configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntegratorKind {
    Midpoint,
    ConjugatedMidpoint,
    ExplicitSplitting,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 3] = [
        IntegratorKind::Midpoint,
        IntegratorKind::ConjugatedMidpoint,
        IntegratorKind::ExplicitSplitting,
    ];

    pub fn id(self) -> &'static str {
        match self {
            IntegratorKind::Midpoint => "midpoint",
            IntegratorKind::ConjugatedMidpoint => "conjugated_midpoint",
            IntegratorKind::ExplicitSplitting => "explicit_splitting",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        IntegratorKind::ALL
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown integrator `{id}`")))
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Implicit midpoint rule `y = x - h xi J ∇U((x + y) / 2)`, solved by Picard
/// iteration.
pub struct MidpointIntegrator<const D: usize> {
    target: Arc<dyn Target<D>>,
    skew: SkewDrift<D>,
    picard: PicardConfig,
}

impl<const D: usize> MidpointIntegrator<D> {
    pub fn new(target: Arc<dyn Target<D>>, skew: SkewDrift<D>, picard: PicardConfig) -> Self {
        Self {
            target,
            skew,
            picard,
        }
    }
}

impl<const D: usize> Integrator<D> for MidpointIntegrator<D> {
    fn name(&self) -> &str {
        "midpoint"
    }

    fn step(&self, x: &Point<D>, xi: Direction, h: f64) -> Result<Point<D>> {
        let scale = h * xi.sign();
        if scale == 0.0 || self.skew.is_zero() {
            return Ok(*x);
        }
        let init = x - self.skew.apply(&self.target.gradient(x)) * scale;
        let map = |y: &Point<D>| x - self.skew.apply(&self.target.gradient(&((x + y) * 0.5))) * scale;
        picard_solve(map, init, &self.picard).map(|(y, _)| y)
    }
}

/// Convenience constructor mirroring the other integrator builders.
pub fn midpoint_integrator<const D: usize>(
    target: Arc<dyn Target<D>>,
    skew: SkewDrift<D>,
    picard: PicardConfig,
) -> MidpointIntegrator<D> {
    MidpointIntegrator::new(target, skew, picard)
}

/// A change of variables `u = psi(x)` with unit Jacobian determinant.
///
/// In two dimensions a unit determinant makes `psi` symplectic for any
/// rotation `J`, so the flow keeps its form in the new coordinates with
/// potential `U o psi^{-1}`. In higher dimensions the map must satisfy
/// `Dpsi J Dpsi^T = J`.
pub trait VolumePreservingMap<const D: usize>: Send + Sync {
    fn name(&self) -> &str;
    fn forward(&self, x: &Point<D>) -> Point<D>;
    fn inverse(&self, u: &Point<D>) -> Point<D>;
    /// Jacobian of [`forward`](Self::forward) at `x`.
    fn jacobian(&self, x: &Point<D>) -> Matrix<D>;
}

/// `psi(x1, x2) = (x1, x2 + x1^2 / 20 - 5)`, which straightens the warped
/// Gaussian into `u1^2 / 100 + u2^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WarpedShear;

impl VolumePreservingMap<2> for WarpedShear {
    fn name(&self) -> &str {
        "warped_shear"
    }

    fn forward(&self, x: &Point<2>) -> Point<2> {
        Point::<2>::new(x[0], x[1] + x[0] * x[0] / 20.0 - 5.0)
    }

    fn inverse(&self, u: &Point<2>) -> Point<2> {
        Point::<2>::new(u[0], u[1] - u[0] * u[0] / 20.0 + 5.0)
    }

    fn jacobian(&self, x: &Point<2>) -> Matrix<2> {
        Matrix::<2>::new(1.0, 0.0, x[0] / 10.0, 1.0)
    }
}

/// Quadratic potential `(u - center)^T A (u - center) / 2` in the new coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPushforward<const D: usize> {
    pub hessian: Matrix<D>,
    pub center: Point<D>,
}

/// Midpoint rule applied in the coordinates `u = psi(x)`:
/// `Phi = psi^{-1} o Midpoint[U o psi^{-1}] o psi`.
pub struct ConjugatedMidpoint<const D: usize> {
    target: Arc<dyn Target<D>>,
    skew: SkewDrift<D>,
    map: Arc<dyn VolumePreservingMap<D>>,
    quadratic: Option<QuadraticPushforward<D>>,
    picard: PicardConfig,
    name: String,
}

impl<const D: usize> ConjugatedMidpoint<D> {
    /// General form; the inner step is solved by Picard iteration on the
    /// pushforward gradient `Dpsi^{-T} ∇U(psi^{-1}(u))`.
    pub fn new(
        target: Arc<dyn Target<D>>,
        skew: SkewDrift<D>,
        map: Arc<dyn VolumePreservingMap<D>>,
        picard: PicardConfig,
    ) -> Self {
        let name = format!("conjugated_midpoint[{}]", map.name());
        Self {
            target,
            skew,
            map,
            quadratic: None,
            picard,
            name,
        }
    }

    /// Declares that the pushforward potential is quadratic, so the inner
    /// midpoint step becomes a linear solve.
    pub fn with_quadratic_pushforward(mut self, quadratic: QuadraticPushforward<D>) -> Self {
        self.quadratic = Some(quadratic);
        self
    }

    fn pushforward_gradient(&self, u: &Point<D>) -> Result<Point<D>> {
        let x = self.map.inverse(u);
        let jac_t = self.map.jacobian(&x).transpose();
        linalg::solve(&jac_t, &self.target.gradient(&x)).ok_or(Error::Singular("change-of-variables Jacobian"))
    }
}

impl ConjugatedMidpoint<2> {
    /// The warped-Gaussian preset: [`WarpedShear`] with the closed-form inner step.
    pub fn warped(target: Arc<dyn Target<2>>, skew: SkewDrift<2>, picard: PicardConfig) -> Self {
        Self::new(target, skew, Arc::new(WarpedShear), picard).with_quadratic_pushforward(
            QuadraticPushforward {
                hessian: Matrix::<2>::new(1.0 / 50.0, 0.0, 0.0, 2.0),
                center: Point::<2>::zeros(),
            },
        )
    }
}

impl<const D: usize> Integrator<D> for ConjugatedMidpoint<D> {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&self, x: &Point<D>, xi: Direction, h: f64) -> Result<Point<D>> {
        let scale = h * xi.sign();
        if scale == 0.0 || self.skew.is_zero() {
            return Ok(*x);
        }
        let u = self.map.forward(x);
        let u_next = match &self.quadratic {
            Some(q) => {
                // (I + s/2 J A) w' = (I - s/2 J A) w with w = u - center.
                let ja = self.skew.matrix() * q.hessian * (0.5 * scale);
                let id = Matrix::<D>::identity();
                let w = u - q.center;
                let w_next = linalg::solve(&(id + ja), &((id - ja) * w)).ok_or(Error::Singular("midpoint linear solve"))?;
                w_next + q.center
            }
            None => {
                let init = u - self.skew.apply(&self.pushforward_gradient(&u)?) * scale;
                // Jacobian failures inside the fixed point surface as NaN residuals.
                let map = |v: &Point<D>| {
                    let grad = self
                        .pushforward_gradient(&((u + v) * 0.5))
                        .unwrap_or_else(|_| Point::<D>::repeat(f64::NAN));
                    u - self.skew.apply(&grad) * scale
                };
                picard_solve(map, init, &self.picard)?.0
            }
        };
        Ok(self.map.inverse(&u_next))
    }
}

/// Builds the conjugated integrator for an arbitrary change of variables.
pub fn conjugated_midpoint_integrator<const D: usize>(
    target: Arc<dyn Target<D>>,
    skew: SkewDrift<D>,
    map: Arc<dyn VolumePreservingMap<D>>,
    picard: PicardConfig,
) -> ConjugatedMidpoint<D> {
    ConjugatedMidpoint::new(target, skew, map, picard)
}

/// Explicit leapfrog for separable two-dimensional potentials with
/// `J = alpha [[0, 1], [-1, 0]]`:
///
/// ```text
/// y1' = x1  - (h/2) alpha xi dV/dx2(x1, x2)
/// y2  = x2  +  h    alpha xi dV/dx1(y1', x2)
/// y1  = y1' - (h/2) alpha xi dV/dx2(y1', y2)
/// ```
///
/// Every stage is a shear, so the map is exactly volume-preserving, and the
/// palindromic ordering makes the `-xi` map its inverse.
pub struct ExplicitSplitting {
    target: Arc<dyn Target<2>>,
    alpha: f64,
}

impl ExplicitSplitting {
    pub fn new(target: Arc<dyn Target<2>>, skew: SkewDrift<2>) -> Result<Self> {
        if !target.is_separable() {
            return Err(Error::Config(format!(
                "explicit_splitting requires a separable target, `{}` is not",
                target.name()
            )));
        }
        Ok(Self {
            target,
            alpha: skew.alpha(),
        })
    }
}

impl Integrator<2> for ExplicitSplitting {
    fn name(&self) -> &str {
        "explicit_splitting"
    }

    fn step(&self, x: &Point<2>, xi: Direction, h: f64) -> Result<Point<2>> {
        let a = h * self.alpha * xi.sign();
        let y1_half = x[0] - 0.5 * a * self.target.gradient(x)[1];
        let y2 = x[1] + a * self.target.gradient(&Point::<2>::new(y1_half, x[1]))[0];
        let y1 = y1_half - 0.5 * a * self.target.gradient(&Point::<2>::new(y1_half, y2))[1];
        Ok(Point::<2>::new(y1, y2))
    }
}

pub fn explicit_splitting_integrator(
    target: Arc<dyn Target<2>>,
    skew: SkewDrift<2>,
) -> Result<ExplicitSplitting> {
    ExplicitSplitting::new(target, skew)
}

/// Builds a two-dimensional integrator from its selector. The conjugated
/// midpoint uses [`WarpedShear`], with the closed-form inner step only when
/// `target` is the warped preset itself.
pub fn build_integrator(
    kind: IntegratorKind,
    target: Arc<dyn Target<2>>,
    skew: SkewDrift<2>,
    picard: PicardConfig,
) -> Result<Arc<dyn Integrator<2>>> {
    Ok(match kind {
        IntegratorKind::Midpoint => Arc::new(MidpointIntegrator::new(target, skew, picard)),
        IntegratorKind::ConjugatedMidpoint => {
            if target.name() == Preset::WarpedGaussian.id() {
                Arc::new(ConjugatedMidpoint::warped(target, skew, picard))
            } else {
                Arc::new(ConjugatedMidpoint::new(target, skew, Arc::new(WarpedShear), picard))
            }
        }
        IntegratorKind::ExplicitSplitting => Arc::new(ExplicitSplitting::new(target, skew)?),
    })
}

/// Step used for the finite-difference Jacobian in [`verify_integrator`].
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// Defects of an integrator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorDefects {
    /// `|Phi^{-xi}(Phi^xi(x)) - x|`.
    pub reversibility: f64,
    /// `|det Jac Phi^xi(x) - 1|` by central differences.
    pub volume: f64,
    /// `|U(Phi^xi(x)) - U(x)|`.
    pub energy: f64,
}

pub fn verify_integrator<const D: usize>(
    integrator: &dyn Integrator<D>,
    target: &dyn Target<D>,
    x: &Point<D>,
    xi: Direction,
    h: f64,
) -> Result<IntegratorDefects> {
    let y = integrator.step(x, xi, h)?;
    let back = integrator.step(&y, -xi, h)?;

    let mut jac = Matrix::<D>::zeros();
    for j in 0..D {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += JACOBIAN_FD_STEP;
        minus[j] -= JACOBIAN_FD_STEP;
        let column = (integrator.step(&plus, xi, h)? - integrator.step(&minus, xi, h)?)
            / (2.0 * JACOBIAN_FD_STEP);
        jac.set_column(j, &column);
    }

    Ok(IntegratorDefects {
        reversibility: (back - x).norm(),
        volume: (linalg::determinant(&jac) - 1.0).abs(),
        energy: (target.potential(&y) - target.potential(x)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Preset;

    fn p(a: f64, b: f64) -> Point<2> {
        Point::<2>::new(a, b)
    }

    #[test]
    fn zero_step_is_identity() {
        let skew = SkewDrift::rotation(1.3);
        let x = p(2.0, -0.5);
        let mid = MidpointIntegrator::new(Arc::new(Preset::Anisotropic), skew, PicardConfig::default());
        let conj = ConjugatedMidpoint::warped(Arc::new(Preset::WarpedGaussian), skew, PicardConfig::default());
        let split = ExplicitSplitting::new(Arc::new(Preset::QuarticGaussian), skew).unwrap();
        assert_eq!(mid.step(&x, Direction::Plus, 0.0).unwrap(), x);
        assert!((conj.step(&x, Direction::Plus, 0.0).unwrap() - x).norm() < 1e-14);
        assert_eq!(split.step(&x, Direction::Plus, 0.0).unwrap(), x);
    }

    #[test]
    fn midpoint_matches_cayley_transform_for_gaussian() {
        let alpha = 0.8;
        let skew = SkewDrift::rotation(alpha);
        let mid = MidpointIntegrator::new(Arc::new(Preset::StdGaussian), skew, PicardConfig::default());
        let x = p(1.3, -0.6);
        for (xi, h) in [(Direction::Plus, 0.1), (Direction::Minus, 0.35)] {
            let half = skew.matrix() * (0.5 * h * xi.sign());
            let id = Matrix::<2>::identity();
            let exact = (id + half).try_inverse().unwrap() * (id - half) * x;
            assert!((mid.step(&x, xi, h).unwrap() - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn splitting_rejects_non_separable_target() {
        let skew = SkewDrift::rotation(1.0);
        assert!(matches!(
            ExplicitSplitting::new(Arc::new(Preset::WarpedGaussian), skew),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn warped_shear_round_trips() {
        let psi = WarpedShear;
        for x in [p(0.0, 0.0), p(13.5, -2.25), p(-7.0, 40.0)] {
            assert!((psi.inverse(&psi.forward(&x)) - x).norm() < 1e-12);
            assert!((psi.forward(&psi.inverse(&x)) - x).norm() < 1e-12);
            assert_eq!(psi.jacobian(&x).determinant(), 1.0);
        }
    }

    #[test]
    fn conjugated_closed_form_matches_picard_route() {
        let skew = SkewDrift::rotation(2.0);
        let target: Arc<dyn Target<2>> = Arc::new(Preset::WarpedGaussian);
        let closed = ConjugatedMidpoint::warped(target.clone(), skew, PicardConfig::default());
        let iterative = ConjugatedMidpoint::new(target, skew, Arc::new(WarpedShear), PicardConfig::default());
        for x in [p(1.0, 2.0), p(-6.0, 3.0), p(10.0, -1.0)] {
            let a = closed.step(&x, Direction::Plus, 0.05).unwrap();
            let b = iterative.step(&x, Direction::Plus, 0.05).unwrap();
            assert!((a - b).norm() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn exact_linear_flow_has_no_defects() {
        // The Cayley map conserves quadratic energy exactly.
        let skew = SkewDrift::rotation(1.0);
        let mid = MidpointIntegrator::new(Arc::new(Preset::StdGaussian), skew, PicardConfig::default());
        let d = verify_integrator(&mid, &Preset::StdGaussian, &p(0.4, -1.1), Direction::Plus, 0.1).unwrap();
        assert!(d.reversibility <= 1e-10 && d.volume <= 1e-8 && d.energy <= 1e-10, "{d:?}");
    }
}
