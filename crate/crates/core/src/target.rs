//! Target distributions `pi(x) ∝ exp(-U(x))`, benchmark presets and observables.
//!
//! A [`Target`] exposes the potential `U`, its gradient and (optionally) its
//! Hessian. The four built-in presets are two-dimensional; user targets of any
//! fixed dimension can be built from closures with [`FnTarget`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::{Matrix, Point};

/// Unnormalized target `pi(x) = exp(-U(x))` on `R^D`.
pub trait Target<const D: usize>: Send + Sync {
    fn name(&self) -> &str;

    /// Potential energy `U(x) = -log pi(x)` up to an additive constant.
    fn potential(&self, x: &Point<D>) -> f64;

    fn gradient(&self, x: &Point<D>) -> Point<D>;

    /// Hessian of `U`, when available.
    fn hessian(&self, _x: &Point<D>) -> Option<Matrix<D>> {
        None
    }

    fn has_hessian(&self) -> bool {
        false
    }

    /// True when `U(x) = sum_i U_i(x_i)`, i.e. the gradient's i-th component
    /// only depends on `x_i`. Explicit splitting integrators require it.
    fn is_separable(&self) -> bool {
        false
    }
}

/// Identifiers of the built-in two-dimensional targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// `U(x) = x1^2 / sqrt(1 + 50 x1^2) + x2^2`, stretched along `x1`.
    Anisotropic,
    /// `U(x) = x1^2 / 100 + (x2 + x1^2 / 20 - 5)^2`, a banana-shaped density.
    WarpedGaussian,
    /// `U(x) = x1^2 / 100 + x2^4`.
    QuarticGaussian,
    /// `U(x) = |x|^2 / 2`.
    StdGaussian,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Anisotropic,
        Preset::WarpedGaussian,
        Preset::QuarticGaussian,
        Preset::StdGaussian,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Preset::Anisotropic => "anisotropic",
            Preset::WarpedGaussian => "warped_gaussian",
            Preset::QuarticGaussian => "quartic_gaussian",
            Preset::StdGaussian => "std_gaussian",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown target preset `{id}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

// x^2 / sqrt(1 + 50 x^2) and its first two derivatives.
fn stretched_quadratic(x: f64) -> (f64, f64, f64) {
    let s = 1.0 + 50.0 * x * x;
    let value = x * x / s.sqrt();
    let first = x * (2.0 + 50.0 * x * x) / s.powf(1.5);
    let second = (2.0 - 50.0 * x * x) / s.powf(2.5);
    (value, first, second)
}

impl Target<2> for Preset {
    fn name(&self) -> &str {
        self.id()
    }

    fn potential(&self, x: &Point<2>) -> f64 {
        let (x1, x2) = (x[0], x[1]);
        match self {
            Preset::Anisotropic => stretched_quadratic(x1).0 + x2 * x2,
            Preset::WarpedGaussian => {
                let w = x2 + x1 * x1 / 20.0 - 5.0;
                x1 * x1 / 100.0 + w * w
            }
            Preset::QuarticGaussian => x1 * x1 / 100.0 + x2.powi(4),
            Preset::StdGaussian => 0.5 * (x1 * x1 + x2 * x2),
        }
    }

    fn gradient(&self, x: &Point<2>) -> Point<2> {
        let (x1, x2) = (x[0], x[1]);
        match self {
            Preset::Anisotropic => Point::<2>::new(stretched_quadratic(x1).1, 2.0 * x2),
            Preset::WarpedGaussian => {
                let w = x2 + x1 * x1 / 20.0 - 5.0;
                Point::<2>::new(x1 / 50.0 + w * x1 / 5.0, 2.0 * w)
            }
            Preset::QuarticGaussian => Point::<2>::new(x1 / 50.0, 4.0 * x2.powi(3)),
            Preset::StdGaussian => *x,
        }
    }

    fn hessian(&self, x: &Point<2>) -> Option<Matrix<2>> {
        let (x1, x2) = (x[0], x[1]);
        let h = match self {
            Preset::Anisotropic => Matrix::<2>::new(stretched_quadratic(x1).2, 0.0, 0.0, 2.0),
            Preset::WarpedGaussian => {
                let w = x2 + x1 * x1 / 20.0 - 5.0;
                let off = x1 / 5.0;
                Matrix::<2>::new(1.0 / 50.0 + x1 * x1 / 50.0 + w / 5.0, off, off, 2.0)
            }
            Preset::QuarticGaussian => Matrix::<2>::new(1.0 / 50.0, 0.0, 0.0, 12.0 * x2 * x2),
            Preset::StdGaussian => Matrix::<2>::identity(),
        };
        Some(h)
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn is_separable(&self) -> bool {
        !matches!(self, Preset::WarpedGaussian)
    }
}

type ScalarFn<const D: usize> = Box<dyn Fn(&Point<D>) -> f64 + Send + Sync>;
type VectorFn<const D: usize> = Box<dyn Fn(&Point<D>) -> Point<D> + Send + Sync>;
type MatrixFn<const D: usize> = Box<dyn Fn(&Point<D>) -> Matrix<D> + Send + Sync>;

/// A target assembled from closures.
pub struct FnTarget<const D: usize> {
    name: String,
    potential: ScalarFn<D>,
    gradient: VectorFn<D>,
    hessian: Option<MatrixFn<D>>,
    separable: bool,
}

impl<const D: usize> FnTarget<D> {
    pub fn new(
        name: impl Into<String>,
        potential: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Point<D>) -> Point<D> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            potential: Box::new(potential),
            gradient: Box::new(gradient),
            hessian: None,
            separable: false,
        }
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&Point<D>) -> Matrix<D> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }

    pub fn separable(mut self, separable: bool) -> Self {
        self.separable = separable;
        self
    }

    /// `U ≡ 0`: the flat (improper) target, useful for degenerate checks.
    pub fn flat() -> Self {
        Self::new("flat", |_| 0.0, |_| Point::<D>::zeros())
            .with_hessian(|_| Matrix::<D>::zeros())
            .separable(true)
    }
}

impl<const D: usize> Target<D> for FnTarget<D> {
    fn name(&self) -> &str {
        &self.name
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        (self.potential)(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        (self.gradient)(x)
    }

    fn hessian(&self, x: &Point<D>) -> Option<Matrix<D>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    fn is_separable(&self) -> bool {
        self.separable
    }
}

/// Norm-clipped gradient `g_R(x) = ∇U(x) min(1, R / |∇U(x)|)`.
///
/// Potential and Hessian pass through unchanged; only proposal construction
/// sees the clipped field.
pub struct Truncated<const D: usize> {
    inner: Arc<dyn Target<D>>,
    radius: f64,
    name: String,
}

impl<const D: usize> Truncated<D> {
    pub fn new(inner: Arc<dyn Target<D>>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!(
                "truncation radius must be positive and finite, got {radius}"
            )));
        }
        let name = format!("{}[truncated@{radius}]", inner.name());
        Ok(Self {
            inner,
            radius,
            name,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl<const D: usize> Target<D> for Truncated<D> {
    fn name(&self) -> &str {
        &self.name
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        self.inner.potential(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let g = self.inner.gradient(x);
        let norm = g.norm();
        if norm > self.radius {
            g * (self.radius / norm)
        } else {
            g
        }
    }

    fn hessian(&self, x: &Point<D>) -> Option<Matrix<D>> {
        self.inner.hessian(x)
    }

    fn has_hessian(&self) -> bool {
        self.inner.has_hessian()
    }

    fn is_separable(&self) -> bool {
        // Norm clipping couples the components.
        false
    }
}

/// Wraps `target` so that its gradient is norm-clipped at `radius`.
pub fn truncate_gradient<const D: usize>(
    target: Arc<dyn Target<D>>,
    radius: f64,
) -> Result<Arc<dyn Target<D>>> {
    Ok(Arc::new(Truncated::new(target, radius)?))
}

/// Builds a preset target. The only recognised parameter is
/// `truncation_radius`, which wraps the preset in [`Truncated`].
pub fn make_builtin_target(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<Arc<dyn Target<2>>> {
    let preset = Preset::from_id(name)?;
    let mut target: Arc<dyn Target<2>> = Arc::new(preset);
    for (key, &value) in params {
        match key.as_str() {
            "truncation_radius" => target = truncate_gradient(target, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown parameter `{other}` for target `{name}`"
                )))
            }
        }
    }
    Ok(target)
}

/// Worst componentwise error between the analytic gradient and central
/// differences of the potential. Each component's error is scaled by
/// `max(1, |analytic|)` so that vanishing components are compared absolutely.
pub fn check_gradient<const D: usize>(target: &dyn Target<D>, x: &Point<D>, eps: f64) -> f64 {
    let analytic = target.gradient(x);
    let mut worst: f64 = 0.0;
    for i in 0..D {
        let mut plus = *x;
        let mut minus = *x;
        plus[i] += eps;
        minus[i] -= eps;
        let numeric = (target.potential(&plus) - target.potential(&minus)) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

/// Same comparison as [`check_gradient`] for the Hessian against central
/// differences of the gradient. Returns `None` when the target has no Hessian.
pub fn check_hessian<const D: usize>(
    target: &dyn Target<D>,
    x: &Point<D>,
    eps: f64,
) -> Option<f64> {
    let analytic = target.hessian(x)?;
    let mut worst: f64 = 0.0;
    for j in 0..D {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += eps;
        minus[j] -= eps;
        let column = (target.gradient(&plus) - target.gradient(&minus)) / (2.0 * eps);
        for i in 0..D {
            let err = (analytic[(i, j)] - column[i]).abs() / analytic[(i, j)].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Some(worst)
}

/// A scalar function `f` whose expectation under the target is estimated.
#[derive(Clone)]
pub struct Observable<const D: usize> {
    name: String,
    f: Arc<dyn Fn(&Point<D>) -> f64 + Send + Sync>,
}

impl<const D: usize> Observable<D> {
    pub fn new(name: impl Into<String>, f: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new("constant", move |_| c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: &Point<D>) -> f64 {
        (self.f)(x)
    }
}

impl<const D: usize> fmt::Debug for Observable<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

/// Preset observables: `indicator_tail_quadratic` is `x1^2 1{x1 > 15}`,
/// `radius_squared` is `x1^2 + x2^2`.
pub fn make_observable(name: &str) -> Result<Observable<2>> {
    match name {
        "indicator_tail_quadratic" => Ok(Observable::new(name, |x: &Point<2>| {
            if x[0] > 15.0 {
                x[0] * x[0]
            } else {
                0.0
            }
        })),
        "radius_squared" => Ok(Observable::new(name, |x: &Point<2>| x.norm_squared())),
        other => Err(Error::Config(format!("unknown observable `{other}`"))),
    }
}
