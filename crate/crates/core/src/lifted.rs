//! The lifted state space `R^d x {-1, +1}`, the flip involution and the
//! skew-symmetric drift.

use std::ops::Neg;

use crate::error::{Error, Result};
use crate::target::Target;
use crate::{Matrix, Point};

/// Direction of the nonreversible perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Direction::Plus),
            -1 => Ok(Direction::Minus),
            other => Err(Error::Config(format!("direction must be +1 or -1, got {other}"))),
        }
    }
}

impl Neg for Direction {
    type Output = Direction;

    #[inline]
    fn neg(self) -> Direction {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }
}

/// A point of the lifted space: position plus direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedState<const D: usize> {
    pub x: Point<D>,
    pub xi: Direction,
}

impl<const D: usize> LiftedState<D> {
    pub fn new(x: Point<D>, xi: Direction) -> Self {
        Self { x, xi }
    }

    /// The involution `(x, xi) -> (x, -xi)`.
    #[inline]
    pub fn flip(&self) -> Self {
        Self {
            x: self.x,
            xi: -self.xi,
        }
    }
}

/// Free-function form of [`LiftedState::flip`].
pub fn flip<const D: usize>(s: &LiftedState<D>) -> LiftedState<D> {
    s.flip()
}

/// Skew-symmetric matrix `J` (intensity included) defining the nonreversible
/// drift `gamma(x) = J ∇log pi(x) = -J ∇U(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewDrift<const D: usize> {
    j: Matrix<D>,
}

impl<const D: usize> SkewDrift<D> {
    /// Validates `J + J^T = 0` exactly.
    pub fn new(j: Matrix<D>) -> Result<Self> {
        let asym = (j + j.transpose()).amax();
        if asym != 0.0 {
            return Err(Error::NotSkewSymmetric(asym));
        }
        Ok(Self { j })
    }

    pub fn zero() -> Self {
        Self { j: Matrix::<D>::zeros() }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<D> {
        &self.j
    }

    pub fn is_zero(&self) -> bool {
        self.j.iter().all(|&v| v == 0.0)
    }

    /// `J v`.
    #[inline]
    pub fn apply(&self, v: &Point<D>) -> Point<D> {
        self.j * v
    }

    /// The nonreversible vector field `gamma(x) = -J ∇U(x)`.
    pub fn gamma(&self, target: &dyn Target<D>, x: &Point<D>) -> Point<D> {
        -(self.j * target.gradient(x))
    }

    /// `b^xi = -(I + xi J) g` for a precomputed gradient `g`.
    #[inline]
    pub fn drift_from_gradient(&self, grad: &Point<D>, xi: Direction) -> Point<D> {
        -(grad + (self.j * grad) * xi.sign())
    }
}

impl SkewDrift<2> {
    /// `J = alpha [[0, 1], [-1, 0]]`.
    pub fn rotation(alpha: f64) -> Self {
        Self {
            j: Matrix::<2>::new(0.0, alpha, -alpha, 0.0),
        }
    }

    /// The intensity `alpha` of a two-dimensional rotation drift.
    pub fn alpha(&self) -> f64 {
        self.j[(0, 1)]
    }
}

/// `J = alpha [[0, 1], [-1, 0]]` in two dimensions.
pub fn make_rotation_drift(alpha: f64) -> SkewDrift<2> {
    SkewDrift::rotation(alpha)
}

/// Lifted Langevin drift `b^xi(x) = -(I + xi J) ∇U(x)`.
pub fn drift<const D: usize>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    s: &LiftedState<D>,
) -> Point<D> {
    skew.drift_from_gradient(&target.gradient(&s.x), s.xi)
}

/// Reversible (plain MALA) drift `-∇U(x)`.
pub fn reversible_drift<const D: usize>(target: &dyn Target<D>, x: &Point<D>) -> Point<D> {
    -target.gradient(x)
}
