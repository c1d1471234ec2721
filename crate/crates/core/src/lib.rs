//! Nonreversible lifted Metropolis-adjusted Langevin samplers.
//!
//! The crate samples `pi(x) ∝ exp(-U(x))` with three unbiased Markov chains:
//!
//! * **MALA**, the reversible baseline;
//! * **GMALA**, which proposes from a discretization of the nonreversible
//!   Langevin dynamics `dX = -(I + xi J) ∇U(X) dt + sqrt(2) dW` (with `J`
//!   skew-symmetric) on the lifted space `R^d x {-1, +1}` and flips `xi` on
//!   every rejection;
//! * **GHMALA**, which alternates a MALA step with a hybrid Monte Carlo move
//!   along the energy-conserving flow `dx = -xi J ∇U(x) dt`.
//!
//! Modules:
//!
//! * [`target`]: the target interface, benchmark presets, gradient truncation, observables;
//! * [`lifted`]: lifted states, the direction flip, the skew drift;
//! * [`kernels`]: the GMALA proposal kernels `Q1`, `Q2`, `Q3` and the Picard solver;
//! * [`integrators`]: reversible volume-preserving integrators for the hybrid move;
//! * [`samplers`]: step functions and the chain driver;
//! * [`diagnostics`]: rejection rates, autocorrelation times, replicate variances, scaling fits;
//! * [`experiment`]: JSON-configured benchmark sweeps writing CSV.
//!
//! ```
//! use std::sync::Arc;
//! use lifted_mala::prelude::*;
//!
//! let target: Arc<dyn Target<2>> = Arc::new(Preset::StdGaussian);
//! let sampler = Gmala {
//!     target,
//!     skew: SkewDrift::rotation(1.0),
//!     kernel: Kernel::Q2,
//!     h: 0.05,
//!     picard: PicardConfig::default(),
//! };
//! let cfg = ChainConfig::new(5_000, 42).unwrap();
//! let r2 = make_observable("radius_squared").unwrap();
//! let summary = run_chain(&sampler, &cfg, &r2).unwrap();
//! assert!((summary.time_average - 2.0).abs() < 0.5);
//! ```

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod integrators;
pub mod kernels;
pub mod lifted;
mod linalg;
pub mod samplers;
pub mod target;

pub use error::{Error, Result};

/// A point of `R^D`.
pub type Point<const D: usize> = nalgebra::SVector<f64, D>;
/// A `D x D` matrix.
pub type Matrix<const D: usize> = nalgebra::SMatrix<f64, D, D>;

pub mod prelude {
    pub use crate::diagnostics::{
        integrated_autocorrelation_time, loglog_slope, rejection_rate, replicate_variance,
        RateEstimate, RejectionReport, ReplicateStats, ScalingFit,
    };
    pub use crate::error::{Error, Result};
    pub use crate::integrators::{
        verify_integrator, ConjugatedMidpoint, ExplicitSplitting, Integrator, IntegratorKind,
        MidpointIntegrator,
    };
    pub use crate::kernels::{Kernel, PicardConfig};
    pub use crate::lifted::{Direction, LiftedState, SkewDrift};
    pub use crate::samplers::{
        run_chain, ChainConfig, ChainSummary, Ghmala, Gmala, Mala, Sampler, TraceOptions,
    };
    pub use crate::target::{
        make_builtin_target, make_observable, truncate_gradient, Observable, Preset, Target,
    };
    pub use crate::{Matrix, Point};
}
