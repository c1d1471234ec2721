//! Proposal kernels for the lifted Metropolis-adjusted Langevin sampler.
//!
//! All three kernels discretize `dX = -(I + xi J) ∇U(X) dt + sqrt(2) dW` over a
//! step `h`:
//!
//! * `Q1`: explicit Euler–Maruyama, `y = x - h (I + xi J) ∇U(x) + sqrt(2h) chi`.
//! * `Q2`: the skew part is taken at the midpoint,
//!   `Phi_x(y) := y + h xi J ∇U((x + y) / 2) = x - h ∇U(x) + sqrt(2h) chi`,
//!   solved by Picard iteration. For a skew `J` the Jacobians of the forward and
//!   reverse maps have equal determinants, so the Metropolis–Hastings ratio only
//!   needs the two noise residuals.
//! * `Q3`: the midpoint rule linearized with the Hessian at `x`,
//!   `M(x) (y - x) = -h (I + xi J) ∇U(x) + sqrt(2h) chi` with
//!   `M(x) = I + (h xi / 2) J Hess U(x)`.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lifted::{Direction, LiftedState, SkewDrift};
use crate::linalg;
use crate::target::Target;
use crate::{Matrix, Point};

/// Proposal kernel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Q1,
    Q2,
    Q3,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Q1, Kernel::Q2, Kernel::Q3];

    pub fn id(self) -> &'static str {
        match self {
            Kernel::Q1 => "q1",
            Kernel::Q2 => "q2",
            Kernel::Q3 => "q3",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown kernel `{id}` (expected q1, q2 or q3)")))
    }

    pub fn requires_hessian(self) -> bool {
        matches!(self, Kernel::Q3)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Settings of the fixed-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Tolerance on the residual norm `|y - map(y)|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

impl PicardConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Config(format!("picard_tol must be positive, got {tol}")));
        }
        if max_iter == 0 {
            return Err(Error::Config("picard_max_iter must be at least 1".into()));
        }
        Ok(Self { tol, max_iter })
    }
}

/// Result of a proposal draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalOutcome<const D: usize> {
    pub y: Point<D>,
    /// The standard normal deviate that generated `y`.
    pub chi: Point<D>,
    /// Fixed-point iterations (0 for explicit kernels).
    pub picard_iters: usize,
}

/// Draws `chi ~ N(0, I_D)`.
pub fn standard_normal<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Point<D> {
    Point::<D>::from_fn(|_, _| rng.sample(StandardNormal))
}

fn gaussian_log_norm(d: usize, h: f64) -> f64 {
    -0.5 * d as f64 * (4.0 * PI * h).ln()
}

/// Iterates `y <- map(y)` from `init` until `|y - map(y)| <= tol`.
///
/// Returns `map(y)` for the first iterate `y` meeting the tolerance (for a
/// contraction its residual is smaller still) and the number of updates
/// applied before that iterate was reached.
pub fn picard_solve<const D: usize>(
    map: impl Fn(&Point<D>) -> Point<D>,
    init: Point<D>,
    cfg: &PicardConfig,
) -> Result<(Point<D>, usize)> {
    let mut y = init;
    let mut residual = f64::INFINITY;
    for iter in 0..=cfg.max_iter {
        let next = map(&y);
        residual = (next - y).norm();
        if !residual.is_finite() {
            return Err(Error::PicardDiverged {
                iterations: iter,
                residual,
            });
        }
        if residual <= cfg.tol {
            return Ok((next, iter));
        }
        y = next;
    }
    Err(Error::PicardDiverged {
        iterations: cfg.max_iter,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Q1
// ---------------------------------------------------------------------------

/// Explicit proposal from a given noise vector.
pub fn q1_propose<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    chi: Point<D>,
) -> ProposalOutcome<D> {
    let b = skew.drift_from_gradient(&target.gradient(&s.x), s.xi);
    ProposalOutcome {
        y: s.x + b * h + chi * (2.0 * h).sqrt(),
        chi,
        picard_iters: 0,
    }
}

pub fn q1_sample<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
) -> ProposalOutcome<D> {
    q1_propose(target, skew, s, h, standard_normal(rng))
}

/// `log N(y; x + h b^xi(x), 2h I)`.
pub fn q1_log_density<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    xi: Direction,
    x: &Point<D>,
    y: &Point<D>,
    h: f64,
) -> f64 {
    let b = skew.drift_from_gradient(&target.gradient(x), xi);
    let r = y - x - b * h;
    gaussian_log_norm(D, h) - r.norm_squared() / (4.0 * h)
}

// ---------------------------------------------------------------------------
// Q2
// ---------------------------------------------------------------------------

/// `Phi_x^{h xi}(y) = y + h xi J ∇U((x + y) / 2)`.
pub fn implicit_map<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    xi: Direction,
    x: &Point<D>,
    y: &Point<D>,
    h: f64,
) -> Point<D> {
    let mid = (x + y) * 0.5;
    y + skew.apply(&target.gradient(&mid)) * (h * xi.sign())
}

/// Solves the midpoint proposal equation for a given noise vector, starting
/// the fixed point from the explicit `Q1` point.
pub fn q2_propose<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    chi: Point<D>,
    cfg: &PicardConfig,
) -> Result<ProposalOutcome<D>> {
    let x = s.x;
    let grad_x = target.gradient(&x);
    let rhs = x - grad_x * h + chi * (2.0 * h).sqrt();
    if skew.is_zero() {
        return Ok(ProposalOutcome {
            y: rhs,
            chi,
            picard_iters: 0,
        });
    }
    let scale = h * s.xi.sign();
    let init = rhs - skew.apply(&grad_x) * scale;
    let (y, picard_iters) = picard_solve(
        |y| rhs - skew.apply(&target.gradient(&((x + y) * 0.5))) * scale,
        init,
        cfg,
    )?;
    Ok(ProposalOutcome { y, chi, picard_iters })
}

pub fn q2_sample<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
    cfg: &PicardConfig,
) -> Result<ProposalOutcome<D>> {
    q2_propose(target, skew, s, h, standard_normal(rng), cfg)
}

/// Log Metropolis–Hastings ratio `log[pi(y) Q2^{-xi}(y, x) / (pi(x) Q2^{xi}(x, y))]`.
///
/// Evaluated from the forward and reverse noise residuals; the Jacobian
/// determinants of the two implicit maps are equal and cancel.
pub fn q2_log_mh_ratio<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    y: &Point<D>,
    h: f64,
) -> f64 {
    let x = &s.x;
    let mid = (x + y) * 0.5;
    // Both implicit maps share the midpoint, so the skew term is computed once.
    let skew_term = skew.apply(&target.gradient(&mid)) * (h * s.xi.sign());
    let forward = y + skew_term - x + target.gradient(x) * h;
    let reverse = x - skew_term - y + target.gradient(y) * h;
    let delta_u = target.potential(x) - target.potential(y);
    delta_u + (forward.norm_squared() - reverse.norm_squared()) / (4.0 * h)
}

// ---------------------------------------------------------------------------
// Q3
// ---------------------------------------------------------------------------

/// `M^xi(x) = I + (h xi / 2) J Hess U(x)`.
pub fn q3_matrix<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    xi: Direction,
    x: &Point<D>,
    h: f64,
) -> Result<Matrix<D>> {
    let hess = target
        .hessian(x)
        .ok_or_else(|| Error::MissingHessian(target.name().to_string()))?;
    Ok(Matrix::<D>::identity() + skew.matrix() * hess * (0.5 * h * xi.sign()))
}

pub fn q3_propose<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    chi: Point<D>,
) -> Result<ProposalOutcome<D>> {
    let m = q3_matrix(target, skew, s.xi, &s.x, h)?;
    let rhs = skew.drift_from_gradient(&target.gradient(&s.x), s.xi) * h + chi * (2.0 * h).sqrt();
    let step = linalg::solve(&m, &rhs).ok_or(Error::Singular("Q3 proposal matrix"))?;
    Ok(ProposalOutcome {
        y: s.x + step,
        chi,
        picard_iters: 0,
    })
}

pub fn q3_sample<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
) -> Result<ProposalOutcome<D>> {
    q3_propose(target, skew, s, h, standard_normal(rng))
}

/// `log Q3^xi(x, y)`, including the `log |det M^xi(x)|` change-of-variables term.
pub fn q3_log_density<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    xi: Direction,
    x: &Point<D>,
    y: &Point<D>,
    h: f64,
) -> Result<f64> {
    let m = q3_matrix(target, skew, xi, x, h)?;
    let det = linalg::determinant(&m);
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular("Q3 proposal matrix"));
    }
    let r = m * (y - x) - skew.drift_from_gradient(&target.gradient(x), xi) * h;
    Ok(gaussian_log_norm(D, h) + det.abs().ln() - r.norm_squared() / (4.0 * h))
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Draws a proposal from the selected kernel.
pub fn sample<const D: usize, R: Rng + ?Sized>(
    kernel: Kernel,
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
    cfg: &PicardConfig,
) -> Result<ProposalOutcome<D>> {
    match kernel {
        Kernel::Q1 => Ok(q1_sample(target, skew, s, h, rng)),
        Kernel::Q2 => q2_sample(target, skew, s, h, rng, cfg),
        Kernel::Q3 => q3_sample(target, skew, s, h, rng),
    }
}

/// Log of the lifted acceptance ratio
/// `pi(y) Q^{-xi}(y, x) / (pi(x) Q^{xi}(x, y))` for the selected kernel.
pub fn log_mh_ratio<const D: usize>(
    kernel: Kernel,
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
    y: &Point<D>,
    h: f64,
) -> Result<f64> {
    let x = &s.x;
    let xi = s.xi;
    match kernel {
        Kernel::Q1 => Ok(target.potential(x) - target.potential(y)
            + q1_log_density(target, skew, -xi, y, x, h)
            - q1_log_density(target, skew, xi, x, y, h)),
        Kernel::Q2 => Ok(q2_log_mh_ratio(target, skew, s, y, h)),
        Kernel::Q3 => Ok(target.potential(x) - target.potential(y)
            + q3_log_density(target, skew, -xi, y, x, h)?
            - q3_log_density(target, skew, xi, x, y, h)?),
    }
}
