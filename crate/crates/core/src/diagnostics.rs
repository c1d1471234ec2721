//! Estimators used to compare samplers: rejection rates, integrated
//! autocorrelation times, replicate-based variances and log–log scaling fits.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::samplers::{run_chain, ChainConfig, Sampler, TraceOptions};
use crate::target::Observable;

/// Empirical autocovariances `c_0, ..., c_{n-1}` (biased, divided by `n`)
/// computed with a zero-padded FFT.
pub fn autocovariance(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = trace
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// Integrated autocorrelation time `1 + 2 sum_k rho_k`, truncated with
/// Geyer's initial positive sequence: pairs `rho_{2m} + rho_{2m+1}` are summed
/// while positive. A constant (or too short) trace gives 1.
pub fn integrated_autocorrelation_time(trace: &[f64]) -> f64 {
    let n = trace.len();
    if n < 2 {
        return 1.0;
    }
    let acov = autocovariance(trace);
    let c0 = acov[0];
    if c0 <= 0.0 || !c0.is_finite() {
        return 1.0;
    }
    // tau = -1 + 2 sum_m Gamma_m with Gamma_m = rho_{2m} + rho_{2m+1}.
    let mut tau = -1.0;
    for pair in acov.chunks_exact(2) {
        let gamma = (pair[0] + pair[1]) / c0;
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
    }
    tau.max(1.0 / n as f64)
}

/// Mean of a correlated series with its autocorrelation-corrected standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub iat: f64,
}

pub fn mean_with_stderr(trace: &[f64]) -> MeanEstimate {
    let n = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / n;
    let var = trace.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let iat = integrated_autocorrelation_time(trace);
    MeanEstimate {
        mean,
        stderr: (var * iat / n).sqrt(),
        iat,
    }
}

/// A rejection rate: the mean conditional rejection probability and its
/// standard error, plus the raw fraction of rejected steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub fraction: f64,
}

impl RateEstimate {
    pub fn from_trace(reject_probs: &[f64], fraction: f64) -> Self {
        let m = mean_with_stderr(reject_probs);
        Self {
            rate: m.mean,
            stderr: m.stderr,
            fraction,
        }
    }

    /// Averages independent estimates (equal weights).
    pub fn pool(estimates: &[RateEstimate]) -> Self {
        let k = estimates.len() as f64;
        Self {
            rate: estimates.iter().map(|e| e.rate).sum::<f64>() / k,
            stderr: estimates.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / k,
            fraction: estimates.iter().map(|e| e.fraction).sum::<f64>() / k,
        }
    }
}

/// Rejection rates of one chain. `hybrid` is set for GHMALA, in which case
/// `primary` refers to its MALA substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionReport {
    pub primary: RateEstimate,
    pub hybrid: Option<RateEstimate>,
}

/// Runs one chain and reports post burn-in rejection rates.
pub fn rejection_rate<const D: usize>(
    sampler: &dyn Sampler<D>,
    cfg: &ChainConfig<D>,
) -> Result<RejectionReport> {
    let cfg = cfg.with_trace(TraceOptions {
        rejection: true,
        ..cfg.trace
    });
    let s = run_chain(sampler, &cfg, &Observable::constant(0.0))?;
    Ok(RejectionReport {
        primary: RateEstimate::from_trace(&s.reject_prob_trace, s.primary.rejection_fraction()),
        hybrid: s.hybrid.map(|tally| {
            RateEstimate::from_trace(&s.hybrid_reject_prob_trace, tally.rejection_fraction())
        }),
    })
}

/// Spread of independent time-average estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateStats {
    pub n_replicates: usize,
    pub n_samples: usize,
    /// Per-replicate estimates, in replicate order.
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance of the estimates.
    pub variance: f64,
    /// 95% chi-square interval for the variance.
    pub variance_ci: (f64, f64),
}

impl ReplicateStats {
    pub fn from_estimates(estimates: Vec<f64>, n_samples: usize) -> Result<Self> {
        let k = estimates.len();
        if k < 2 {
            return Err(Error::Domain("need at least two replicates".into()));
        }
        let mean = estimates.iter().sum::<f64>() / k as f64;
        let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let dof = (k - 1) as f64;
        let chi2 = ChiSquared::new(dof).map_err(|e| Error::Domain(e.to_string()))?;
        let variance_ci = (
            dof * variance / chi2.inverse_cdf(0.975),
            dof * variance / chi2.inverse_cdf(0.025),
        );
        Ok(Self {
            n_replicates: k,
            n_samples,
            estimates,
            mean,
            variance,
            variance_ci,
        })
    }

    /// Standard error of [`mean`](Self::mean) across replicates.
    pub fn mean_stderr(&self) -> f64 {
        (self.variance / self.n_replicates as f64).sqrt()
    }

    pub fn ci_halfwidth(&self) -> f64 {
        0.5 * (self.variance_ci.1 - self.variance_ci.0)
    }

    /// True when the two 95% variance intervals do not overlap.
    pub fn ci_disjoint(&self, other: &ReplicateStats) -> bool {
        self.variance_ci.1 < other.variance_ci.0 || other.variance_ci.1 < self.variance_ci.0
    }
}

/// Ratio `var(a) / var(b)` with its 95% F interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRatio {
    pub ratio: f64,
    pub ci: (f64, f64),
}

pub fn variance_ratio(a: &ReplicateStats, b: &ReplicateStats) -> Result<VarianceRatio> {
    let ratio = a.variance / b.variance;
    let f = FisherSnedecor::new((a.n_replicates - 1) as f64, (b.n_replicates - 1) as f64)
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(VarianceRatio {
        ratio,
        ci: (ratio / f.inverse_cdf(0.975), ratio / f.inverse_cdf(0.025)),
    })
}

/// Runs `n_replicates` independent chains (stream `i` for replicate `i`) and
/// summarizes their time averages. Replicates run in parallel; the result
/// does not depend on scheduling.
pub fn replicate_variance<const D: usize>(
    sampler: &dyn Sampler<D>,
    observable: &Observable<D>,
    n_replicates: usize,
    template: &ChainConfig<D>,
    master_seed: u64,
) -> Result<ReplicateStats> {
    let mut cfg = template.validated()?;
    cfg.seed = master_seed;
    cfg.trace = TraceOptions::default();
    let results: Vec<Result<f64>> = (0..n_replicates)
        .into_par_iter()
        .map(|i| {
            run_chain(sampler, &cfg.with_stream(i as u64), observable).map(|s| s.time_average)
        })
        .collect();
    let estimates = results.into_iter().collect::<Result<Vec<_>>>()?;
    ReplicateStats::from_estimates(estimates, cfg.retained())
}

/// Least-squares fit of `log y = slope log h + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub h_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_slope(h_grid: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if h_grid.len() != values.len() {
        return Err(Error::Domain(format!(
            "{} step sizes but {} values",
            h_grid.len(),
            values.len()
        )));
    }
    if h_grid.len() < 3 {
        return Err(Error::Domain("a scaling fit needs at least three points".into()));
    }
    if let Some(bad) = h_grid.iter().chain(values).find(|v| **v <= 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "log-log fit needs strictly positive finite data, got {bad}"
        )));
    }
    let lx: Vec<f64> = h_grid.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("step sizes must not all be equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit {
        h_values: h_grid.to_vec(),
        y_values: values.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
