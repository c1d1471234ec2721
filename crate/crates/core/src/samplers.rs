//! MALA, GMALA and GHMALA transition steps and the chain driver.
//!
//! * MALA: Euler–Maruyama proposal for `-∇U`, standard Metropolis–Hastings.
//! * GMALA: proposal from a lifted kernel `Q^xi`, accepted with
//!   `1 ∧ pi(y) Q^{-xi}(y, x) / (pi(x) Q^xi(x, y))`; on rejection the position is
//!   kept and the direction flips.
//! * GHMALA: one MALA step, then an integrator step for `-xi J ∇U` accepted with
//!   `1 ∧ exp(U(x) - U(Phi(x)))`; on rejection of that hybrid move the direction
//!   flips.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrators::Integrator;
use crate::kernels::{self, standard_normal, Kernel, PicardConfig};
use crate::lifted::{Direction, LiftedState, SkewDrift};
use crate::target::{Observable, Target};
use crate::Point;

/// Outcome of one accept/reject decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    pub log_ratio: f64,
    /// `1 - min(1, exp(log_ratio))`, the conditional rejection probability.
    pub reject_prob: f64,
}

impl Decision {
    /// Accepts when `log(u) < log_ratio` for `u ~ U(0, 1)`. A NaN ratio is a rejection.
    /// Always consumes exactly one uniform draw.
    fn draw<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> Self {
        let u: f64 = rng.gen();
        let log_ratio = if log_ratio.is_nan() { f64::NEG_INFINITY } else { log_ratio };
        let reject_prob = if log_ratio >= 0.0 { 0.0 } else { -log_ratio.exp_m1() };
        Self {
            accepted: u.ln() < log_ratio,
            log_ratio,
            reject_prob,
        }
    }
}

/// One transition of a lifted chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<const D: usize> {
    pub state: LiftedState<D>,
    /// The MALA / GMALA decision, or GHMALA's MALA substep.
    pub primary: Decision,
    /// GHMALA's hybrid substep.
    pub hybrid: Option<Decision>,
    pub picard_iters: usize,
    pub grad_evals: usize,
}

/// A transition kernel on the lifted space.
pub trait Sampler<const D: usize>: Send + Sync {
    fn label(&self) -> String;
    fn step(&self, s: &LiftedState<D>, rng: &mut dyn RngCore) -> Result<StepRecord<D>>;
}

/// Sampler family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    Mala,
    Gmala,
    Ghmala,
}

impl SamplerKind {
    pub fn id(self) -> &'static str {
        match self {
            SamplerKind::Mala => "mala",
            SamplerKind::Gmala => "gmala",
            SamplerKind::Ghmala => "ghmala",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "mala" => Ok(SamplerKind::Mala),
            "gmala" => Ok(SamplerKind::Gmala),
            "ghmala" => Ok(SamplerKind::Ghmala),
            other => Err(Error::Config(format!(
                "unknown sampler `{other}` (expected mala, gmala or ghmala)"
            ))),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One MALA transition from `x`. Returns the new position and the decision.
pub fn mala_step<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    x: &Point<D>,
    h: f64,
    rng: &mut R,
) -> (Point<D>, Decision) {
    let chi = standard_normal::<D, R>(rng);
    let grad_x = target.gradient(x);
    let y = x - grad_x * h + chi * (2.0 * h).sqrt();
    let grad_y = target.gradient(&y);
    let forward = y - x + grad_x * h;
    let reverse = x - y + grad_y * h;
    let log_ratio = target.potential(x) - target.potential(&y)
        + (forward.norm_squared() - reverse.norm_squared()) / (4.0 * h);
    let decision = Decision::draw(log_ratio, rng);
    (if decision.accepted { y } else { *x }, decision)
}

/// One GMALA transition (propose, accept, or flip the direction).
pub fn gmala_step<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    skew: &SkewDrift<D>,
    kernel: Kernel,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
    picard: &PicardConfig,
) -> Result<StepRecord<D>> {
    let proposal = kernels::sample(kernel, target, skew, s, h, rng, picard)?;
    let log_ratio = kernels::log_mh_ratio(kernel, target, skew, s, &proposal.y, h)?;
    let decision = Decision::draw(log_ratio, rng);
    let state = if decision.accepted {
        LiftedState::new(proposal.y, s.xi)
    } else {
        s.flip()
    };
    let grad_evals = match kernel {
        Kernel::Q1 | Kernel::Q3 => 3,
        // Fixed-point map evaluations, then x, y and the shared midpoint.
        Kernel::Q2 => proposal.picard_iters + 1 + 3,
    };
    Ok(StepRecord {
        state,
        primary: decision,
        hybrid: None,
        picard_iters: proposal.picard_iters,
        grad_evals,
    })
}

/// One GHMALA transition: a MALA substep followed by the hybrid move.
pub fn ghmala_step<const D: usize, R: Rng + ?Sized>(
    target: &dyn Target<D>,
    integrator: &dyn Integrator<D>,
    s: &LiftedState<D>,
    h: f64,
    rng: &mut R,
) -> Result<StepRecord<D>> {
    let (half, mala) = mala_step(target, &s.x, h, rng);
    let moved = integrator.step(&half, s.xi, h)?;
    let log_beta = target.potential(&half) - target.potential(&moved);
    let hybrid = Decision::draw(log_beta, rng);
    let state = if hybrid.accepted {
        LiftedState::new(moved, s.xi)
    } else {
        LiftedState::new(half, -s.xi)
    };
    Ok(StepRecord {
        state,
        primary: mala,
        hybrid: Some(hybrid),
        picard_iters: 0,
        grad_evals: 2,
    })
}

/// MALA on the lifted space (the direction is carried along untouched).
pub struct Mala<const D: usize> {
    pub target: Arc<dyn Target<D>>,
    pub h: f64,
}

impl<const D: usize> Sampler<D> for Mala<D> {
    fn label(&self) -> String {
        "mala".into()
    }

    fn step(&self, s: &LiftedState<D>, rng: &mut dyn RngCore) -> Result<StepRecord<D>> {
        let (x, decision) = mala_step(self.target.as_ref(), &s.x, self.h, rng);
        Ok(StepRecord {
            state: LiftedState::new(x, s.xi),
            primary: decision,
            hybrid: None,
            picard_iters: 0,
            grad_evals: 2,
        })
    }
}

pub struct Gmala<const D: usize> {
    pub target: Arc<dyn Target<D>>,
    pub skew: SkewDrift<D>,
    pub kernel: Kernel,
    pub h: f64,
    pub picard: PicardConfig,
}

impl<const D: usize> Sampler<D> for Gmala<D> {
    fn label(&self) -> String {
        format!("gmala[{}]", self.kernel)
    }

    fn step(&self, s: &LiftedState<D>, rng: &mut dyn RngCore) -> Result<StepRecord<D>> {
        gmala_step(
            self.target.as_ref(),
            &self.skew,
            self.kernel,
            s,
            self.h,
            rng,
            &self.picard,
        )
    }
}

pub struct Ghmala<const D: usize> {
    /// Target seen by the MALA substep; its potential also drives the hybrid
    /// acceptance.
    pub target: Arc<dyn Target<D>>,
    pub integrator: Arc<dyn Integrator<D>>,
    pub h: f64,
}

impl<const D: usize> Sampler<D> for Ghmala<D> {
    fn label(&self) -> String {
        format!("ghmala[{}]", self.integrator.name())
    }

    fn step(&self, s: &LiftedState<D>, rng: &mut dyn RngCore) -> Result<StepRecord<D>> {
        ghmala_step(self.target.as_ref(), self.integrator.as_ref(), s, self.h, rng)
    }
}

/// Random stream for chain `stream` under `seed`. Streams of one seed are
/// independent ChaCha sequences.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Which per-step series [`run_chain`] keeps (all post burn-in).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceOptions {
    pub observable: bool,
    pub rejection: bool,
    /// Keep every `k`-th retained position.
    pub positions_thin: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig<const D: usize> {
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream: u64,
    pub initial_state: LiftedState<D>,
    pub trace: TraceOptions,
}

impl<const D: usize> ChainConfig<D> {
    /// Chain from the origin with direction `+1` and a 10% burn-in.
    pub fn new(n_steps: usize, seed: u64) -> Result<Self> {
        Self {
            n_steps,
            burn_in: n_steps / 10,
            seed,
            stream: 0,
            initial_state: LiftedState::new(Point::<D>::zeros(), Direction::Plus),
            trace: TraceOptions::default(),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than n_steps ({})",
                self.burn_in, self.n_steps
            )));
        }
        if !self.initial_state.x.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("initial position must be finite".into()));
        }
        Ok(self)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Result<Self> {
        self.burn_in = burn_in;
        self.validated()
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_initial_state(mut self, state: LiftedState<D>) -> Result<Self> {
        self.initial_state = state;
        self.validated()
    }

    pub fn with_trace(mut self, trace: TraceOptions) -> Self {
        self.trace = trace;
        self
    }

    pub fn retained(&self) -> usize {
        self.n_steps - self.burn_in
    }
}

/// Acceptance bookkeeping for one kind of decision over the retained steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateTally {
    pub accepted: usize,
    pub rejected: usize,
    /// Average of the conditional rejection probabilities.
    pub mean_reject_prob: f64,
}

impl RateTally {
    fn push(&mut self, d: &Decision) {
        if d.accepted {
            self.accepted += 1;
        } else {
            self.rejected += 1;
        }
        self.mean_reject_prob += d.reject_prob;
    }

    fn finish(&mut self) {
        let n = self.accepted + self.rejected;
        if n > 0 {
            self.mean_reject_prob /= n as f64;
        }
    }

    pub fn rejection_fraction(&self) -> f64 {
        let n = self.accepted + self.rejected;
        if n == 0 {
            0.0
        } else {
            self.rejected as f64 / n as f64
        }
    }
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary<const D: usize> {
    /// `(1 / (N - B)) sum_{n > B} f(x_n)`.
    pub time_average: f64,
    pub n_retained: usize,
    pub primary: RateTally,
    pub hybrid: Option<RateTally>,
    /// Direction flips over the whole run, burn-in included.
    pub flips: usize,
    /// Rejections that flip the direction (GMALA rejections, GHMALA hybrid
    /// rejections) over the whole run.
    pub flipping_rejections: usize,
    pub picard_iters: usize,
    pub grad_evals: usize,
    pub final_state: LiftedState<D>,
    pub observable_trace: Vec<f64>,
    pub reject_prob_trace: Vec<f64>,
    pub hybrid_reject_prob_trace: Vec<f64>,
    pub positions: Vec<Point<D>>,
}

/// Runs `cfg.n_steps` transitions and averages `observable` over the states
/// after burn-in. Deterministic in `(cfg.seed, cfg.stream)`.
pub fn run_chain<const D: usize>(
    sampler: &dyn Sampler<D>,
    cfg: &ChainConfig<D>,
    observable: &Observable<D>,
) -> Result<ChainSummary<D>> {
    let cfg = cfg.validated()?;
    let mut rng = chain_rng(cfg.seed, cfg.stream);
    let mut state = cfg.initial_state;
    let retained = cfg.retained();
    let trace = cfg.trace;

    let mut sum = 0.0;
    let mut primary = RateTally::default();
    let mut hybrid: Option<RateTally> = None;
    let mut flips = 0;
    let mut flipping_rejections = 0;
    let mut picard_iters = 0;
    let mut grad_evals = 0;
    let mut observable_trace = Vec::with_capacity(if trace.observable { retained } else { 0 });
    let mut reject_prob_trace = Vec::with_capacity(if trace.rejection { retained } else { 0 });
    let mut hybrid_reject_prob_trace = Vec::new();
    let mut positions = Vec::new();

    for n in 1..=cfg.n_steps {
        let record = sampler.step(&state, &mut rng).map_err(|e| Error::ChainAborted {
            step: n,
            seed: cfg.seed,
            stream: cfg.stream,
            source: Box::new(e),
        })?;
        if record.state.xi != state.xi {
            flips += 1;
        }
        let flipping = match &record.hybrid {
            Some(hy) => !hy.accepted,
            None => !record.primary.accepted && record.state.xi != state.xi,
        };
        if flipping {
            flipping_rejections += 1;
        }
        picard_iters += record.picard_iters;
        grad_evals += record.grad_evals;
        state = record.state;

        if n > cfg.burn_in {
            let k = n - cfg.burn_in - 1;
            let f = observable.eval(&state.x);
            sum += f;
            primary.push(&record.primary);
            if let Some(hy) = &record.hybrid {
                hybrid.get_or_insert_with(RateTally::default).push(hy);
                if trace.rejection {
                    hybrid_reject_prob_trace.push(hy.reject_prob);
                }
            }
            if trace.observable {
                observable_trace.push(f);
            }
            if trace.rejection {
                reject_prob_trace.push(record.primary.reject_prob);
            }
            if let Some(thin) = trace.positions_thin {
                if k % thin.max(1) == 0 {
                    positions.push(state.x);
                }
            }
        }
    }
    primary.finish();
    if let Some(h) = hybrid.as_mut() {
        h.finish();
    }

    Ok(ChainSummary {
        time_average: sum / retained as f64,
        n_retained: retained,
        primary,
        hybrid,
        flips,
        flipping_rejections,
        picard_iters,
        grad_evals,
        final_state: state,
        observable_trace,
        reject_prob_trace,
        hybrid_reject_prob_trace,
        positions,
    })
}
