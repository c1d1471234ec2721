//! JSON-configured benchmark sweeps.
//!
//! A sweep runs a lineup of samplers over a grid of step sizes, with
//! `n_replicates` independent chains per `(sampler, h)` point, and reports
//! one [`CsvRow`] per `(sampler, h, metric)`. Replicate `i` of every point
//! uses random stream `i` of `master_seed`, and all work units are reduced in
//! index order, so the output depends on the configuration only.
//!
//! ```
//! use lifted_mala::experiment::{run_experiment, validate_config, Registry};
//!
//! let raw = serde_json::json!({
//!     "experiment": "custom",
//!     "target": "std_gaussian",
//!     "sampler": "gmala",
//!     "kernel": "q1",
//!     "h_grid": [0.05, 0.1, 0.2],
//!     "n_samples": 2000,
//!     "master_seed": 7
//! });
//! let registry = Registry::with_presets();
//! let cfg = validate_config(&raw, &registry).unwrap();
//! let report = run_experiment(&cfg, &registry, Some(1)).unwrap();
//! assert_eq!(report.rows.len(), 6);
//! assert!(report.to_csv().starts_with("experiment,sampler,"));
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::diagnostics::{
    log_spaced, mean_with_stderr, variance_ratio, RateEstimate, ReplicateStats,
};
use crate::error::{Error, Result};
use crate::integrators::{build_integrator, IntegratorKind};
use crate::kernels::{Kernel, PicardConfig};
use crate::lifted::{Direction, LiftedState, SkewDrift};
use crate::samplers::{
    run_chain, ChainConfig, Ghmala, Gmala, Mala, Sampler, SamplerKind, TraceOptions,
};
use crate::target::{make_observable, truncate_gradient, Preset, Target};
use crate::Point;

/// Named sweeps. Every preset except `Custom` fixes its sampler lineup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentPreset {
    RejectionQ1VsQ2,
    RejectionAll,
    VarianceAnisotropic,
    VarianceWarped,
    VarianceQuartic,
    Custom,
}

impl ExperimentPreset {
    pub const ALL: [ExperimentPreset; 6] = [
        ExperimentPreset::RejectionQ1VsQ2,
        ExperimentPreset::RejectionAll,
        ExperimentPreset::VarianceAnisotropic,
        ExperimentPreset::VarianceWarped,
        ExperimentPreset::VarianceQuartic,
        ExperimentPreset::Custom,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentPreset::RejectionQ1VsQ2 => "rejection_q1_vs_q2",
            ExperimentPreset::RejectionAll => "rejection_all",
            ExperimentPreset::VarianceAnisotropic => "variance_anisotropic",
            ExperimentPreset::VarianceWarped => "variance_warped",
            ExperimentPreset::VarianceQuartic => "variance_quartic",
            ExperimentPreset::Custom => "custom",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.id() == id)
    }

    pub fn is_variance(self) -> bool {
        matches!(
            self,
            ExperimentPreset::VarianceAnisotropic
                | ExperimentPreset::VarianceWarped
                | ExperimentPreset::VarianceQuartic
        )
    }

    /// Configuration used for every key the JSON object leaves out.
    pub fn defaults(self) -> Defaults {
        let rejection_grid = log_spaced(0.005, 0.16, 8);
        let base = Defaults {
            target: None,
            observable: "radius_squared",
            alpha: 1.0,
            h_grid: None,
            n_samples: 20_000,
            n_replicates: 1,
            truncation_radius: None,
            on_divergence: DivergencePolicy::Abort,
        };
        match self {
            ExperimentPreset::RejectionQ1VsQ2 => Defaults {
                target: Some(Preset::Anisotropic.id()),
                observable: "indicator_tail_quadratic",
                h_grid: Some(rejection_grid),
                ..base
            },
            ExperimentPreset::RejectionAll => Defaults {
                target: Some(Preset::Anisotropic.id()),
                observable: "indicator_tail_quadratic",
                h_grid: Some(rejection_grid),
                n_samples: 100_000,
                ..base
            },
            ExperimentPreset::VarianceAnisotropic => Defaults {
                target: Some(Preset::Anisotropic.id()),
                observable: "indicator_tail_quadratic",
                alpha: 20.0,
                h_grid: Some(vec![0.0125, 0.0375, 0.3, 1.2]),
                n_replicates: 100,
                on_divergence: DivergencePolicy::Skip,
                ..base
            },
            ExperimentPreset::VarianceWarped => Defaults {
                target: Some(Preset::WarpedGaussian.id()),
                alpha: 3.0,
                h_grid: Some(vec![0.03, 0.1, 0.25, 1.0]),
                n_replicates: 100,
                truncation_radius: Some(100.0),
                on_divergence: DivergencePolicy::Skip,
                ..base
            },
            ExperimentPreset::VarianceQuartic => Defaults {
                target: Some(Preset::QuarticGaussian.id()),
                alpha: 30.0,
                h_grid: Some(vec![0.005, 0.03, 0.1, 0.3]),
                n_replicates: 100,
                ..base
            },
            ExperimentPreset::Custom => base,
        }
    }

    /// Samplers compared by the preset; `None` for `Custom`.
    pub fn lineup(self) -> Option<Vec<SamplerSpec>> {
        use IntegratorKind::*;
        let mala = SamplerSpec::mala();
        Some(match self {
            ExperimentPreset::RejectionQ1VsQ2 => {
                vec![mala, SamplerSpec::gmala(Kernel::Q1), SamplerSpec::gmala(Kernel::Q2)]
            }
            ExperimentPreset::RejectionAll => vec![
                mala,
                SamplerSpec::gmala(Kernel::Q1),
                SamplerSpec::gmala(Kernel::Q2),
                SamplerSpec::gmala(Kernel::Q3),
                SamplerSpec::ghmala(Midpoint),
            ],
            ExperimentPreset::VarianceAnisotropic => {
                vec![mala, SamplerSpec::gmala(Kernel::Q2), SamplerSpec::ghmala(Midpoint)]
            }
            ExperimentPreset::VarianceWarped => vec![
                mala,
                SamplerSpec::gmala(Kernel::Q2),
                SamplerSpec::ghmala(ConjugatedMidpoint),
            ],
            ExperimentPreset::VarianceQuartic => vec![mala, SamplerSpec::ghmala(ExplicitSplitting)],
            ExperimentPreset::Custom => return None,
        })
    }
}

impl fmt::Display for ExperimentPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Per-preset default values.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub target: Option<&'static str>,
    pub observable: &'static str,
    pub alpha: f64,
    pub h_grid: Option<Vec<f64>>,
    pub n_samples: usize,
    pub n_replicates: usize,
    pub truncation_radius: Option<f64>,
    pub on_divergence: DivergencePolicy,
}

/// What a sweep does when a chain aborts on Picard divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergencePolicy {
    /// Fail the whole run.
    Abort,
    /// Drop the `(sampler, h)` point from the CSV and report it in the summary.
    Skip,
}

impl DivergencePolicy {
    pub fn id(self) -> &'static str {
        match self {
            DivergencePolicy::Abort => "abort",
            DivergencePolicy::Skip => "skip",
        }
    }
}

/// One sampler of a lineup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub kernel: Option<Kernel>,
    pub integrator: Option<IntegratorKind>,
}

impl SamplerSpec {
    pub fn mala() -> Self {
        Self { kind: SamplerKind::Mala, kernel: None, integrator: None }
    }

    pub fn gmala(kernel: Kernel) -> Self {
        Self { kind: SamplerKind::Gmala, kernel: Some(kernel), integrator: None }
    }

    pub fn ghmala(integrator: IntegratorKind) -> Self {
        Self { kind: SamplerKind::Ghmala, kernel: None, integrator: Some(integrator) }
    }

    /// Value of the `kernel_or_integrator` column.
    pub fn detail(&self) -> &'static str {
        match (self.kernel, self.integrator) {
            (Some(k), _) => k.id(),
            (None, Some(i)) => i.id(),
            (None, None) => "none",
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SamplerKind::Mala => f.write_str("mala"),
            _ => write!(f, "{}[{}]", self.kind, self.detail()),
        }
    }
}

/// Validated sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentPreset,
    pub target: String,
    pub observable: String,
    pub samplers: Vec<SamplerSpec>,
    pub alpha: f64,
    pub h_grid: Vec<f64>,
    /// Chain length per replicate, burn-in included.
    pub n_samples: usize,
    pub n_replicates: usize,
    pub burn_in_fraction: f64,
    pub master_seed: u64,
    pub picard: PicardConfig,
    pub truncation_radius: Option<f64>,
    pub initial_x: Point<2>,
    pub initial_xi: Direction,
    pub on_divergence: DivergencePolicy,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A preset with all defaults.
    pub fn preset(experiment: ExperimentPreset, master_seed: u64) -> Result<Self> {
        let raw = serde_json::json!({ "experiment": experiment.id(), "master_seed": master_seed });
        validate_config(&raw, &Registry::with_presets()).map_err(Error::from)
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.n_samples as f64).floor() as usize
    }

    pub fn chain_template(&self) -> Result<ChainConfig<2>> {
        ChainConfig::new(self.n_samples, self.master_seed)?
            .with_burn_in(self.burn_in())?
            .with_initial_state(LiftedState::new(self.initial_x, self.initial_xi))
    }
}

/// A config problem located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found in a config, in key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn mentions(&self, field: &str) -> bool {
        let path = format!("$.{field}");
        self.0.iter().any(|i| i.path == path || i.path.starts_with(&format!("{path}[")))
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&lines.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

/// Targets selectable by name from a config.
#[derive(Clone)]
pub struct Registry {
    targets: BTreeMap<String, Arc<dyn Target<2>>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { targets: BTreeMap::new() }
    }

    /// The four benchmark presets under their ids.
    pub fn with_presets() -> Self {
        let mut r = Self::empty();
        for p in Preset::ALL {
            r.targets.insert(p.id().to_string(), Arc::new(p));
        }
        r
    }

    pub fn register(mut self, name: impl Into<String>, target: Arc<dyn Target<2>>) -> Self {
        self.targets.insert(name.into(), target);
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Target<2>>> {
        self.targets.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.targets.keys().map(String::as_str)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_presets()
    }
}

const KEYS: [&str; 20] = [
    "experiment",
    "target",
    "observable",
    "sampler",
    "kernel",
    "integrator",
    "alpha",
    "h_grid",
    "n_samples",
    "n_steps",
    "n_replicates",
    "burn_in_fraction",
    "master_seed",
    "picard_tol",
    "picard_max_iter",
    "truncation_radius",
    "initial_x",
    "initial_xi",
    "on_divergence",
    "output_path",
];

struct Checker<'a> {
    obj: &'a Map<String, Value>,
    issues: Vec<ConfigIssue>,
}

impl<'a> Checker<'a> {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue { path: path.into(), message: message.into() });
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn string(&mut self, key: &str) -> Option<&'a str> {
        let v = self.get(key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.fail(format!("$.{key}"), "expected a string");
                None
            }
        }
    }

    fn number_at(&mut self, path: String, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.fail(path, "expected a finite number");
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let v = self.get(key)?;
        self.number_at(format!("$.{key}"), v)
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        let v = self.get(key)?;
        if let Some(n) = v.as_u64() {
            return Some(n);
        }
        match v.as_f64() {
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => {
                Some(x as u64)
            }
            _ => {
                self.fail(format!("$.{key}"), "expected a non-negative integer");
                None
            }
        }
    }
}

/// Validates a raw JSON config against the target registry, collecting
/// every problem before returning.
pub fn validate_config(
    raw: &Value,
    registry: &Registry,
) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let Some(obj) = raw.as_object() else {
        return Err(ConfigErrors(vec![ConfigIssue {
            path: "$".into(),
            message: "config must be a JSON object".into(),
        }]));
    };
    let mut c = Checker { obj, issues: Vec::new() };

    let mut unknown: Vec<&String> = obj.keys().filter(|k| !KEYS.contains(&k.as_str())).collect();
    unknown.sort();
    for k in unknown {
        c.fail(format!("$.{k}"), "unknown key");
    }

    let experiment = match c.string("experiment") {
        Some(id) => {
            let p = ExperimentPreset::from_id(id);
            if p.is_none() {
                let ids: Vec<&str> = ExperimentPreset::ALL.iter().map(|p| p.id()).collect();
                c.fail("$.experiment", format!("unknown experiment `{id}` (expected one of {})", ids.join(", ")));
            }
            p
        }
        None => {
            if c.get("experiment").is_none() {
                c.fail("$.experiment", "missing required field");
            }
            None
        }
    };
    let defaults = experiment.unwrap_or(ExperimentPreset::Custom).defaults();

    let target_name = c.string("target").or(defaults.target);
    let target = match target_name {
        Some(name) => {
            let t = registry.get(name);
            if t.is_none() {
                let known: Vec<&str> = registry.names().collect();
                c.fail("$.target", format!("unknown target `{name}` (known: {})", known.join(", ")));
            }
            t
        }
        None => {
            if c.get("target").is_none() && experiment.is_some() {
                c.fail("$.target", "missing required field");
            }
            None
        }
    };

    let observable = c.string("observable").unwrap_or(defaults.observable);
    if make_observable(observable).is_err() {
        c.fail("$.observable", format!("unknown observable `{observable}` (expected indicator_tail_quadratic or radius_squared)"));
    }

    let samplers = sampler_lineup(&mut c, experiment);

    let alpha = c.number("alpha").unwrap_or(defaults.alpha);

    let h_grid = match c.get("h_grid") {
        Some(v) => parse_h_grid(&mut c, v),
        None => match &defaults.h_grid {
            Some(g) => g.clone(),
            None => {
                if experiment.is_some() {
                    c.fail("$.h_grid", "missing required field");
                }
                Vec::new()
            }
        },
    };

    let n_samples = match (c.get("n_samples").is_some(), c.get("n_steps").is_some()) {
        (true, true) => {
            c.fail("$.n_steps", "n_steps is an alias of n_samples; give only one");
            None
        }
        (false, true) => c.integer("n_steps").map(|n| ("n_steps", n)),
        _ => c.integer("n_samples").map(|n| ("n_samples", n)),
    };
    let n_samples = match n_samples {
        Some((key, 0)) => {
            c.fail(format!("$.{key}"), format!("{key} must be positive"));
            0
        }
        Some((_, n)) => n as usize,
        None => defaults.n_samples,
    };

    let n_replicates = c.integer("n_replicates").map(|n| n as usize).unwrap_or(defaults.n_replicates);
    if n_replicates == 0 {
        c.fail("$.n_replicates", "n_replicates must be positive");
    } else if n_replicates < 2 && experiment.is_some_and(|e| e.is_variance()) {
        c.fail("$.n_replicates", "variance experiments need at least 2 replicates");
    }

    let burn_in_fraction = c.number("burn_in_fraction").unwrap_or(0.1);
    if !(0.0..1.0).contains(&burn_in_fraction) {
        c.fail("$.burn_in_fraction", "burn_in_fraction must lie in [0, 1)");
    } else if n_samples > 0 && (burn_in_fraction * n_samples as f64).floor() as usize >= n_samples {
        c.fail("$.burn_in_fraction", "burn-in leaves no retained samples");
    }

    let master_seed = c.integer("master_seed");
    if c.get("master_seed").is_none() {
        c.fail("$.master_seed", "missing required field");
    }

    let picard_tol = c.number("picard_tol").unwrap_or(PicardConfig::default().tol);
    if picard_tol <= 0.0 {
        c.fail("$.picard_tol", "picard_tol must be positive");
    }
    let picard_max_iter = c.integer("picard_max_iter").map(|n| n as usize).unwrap_or(PicardConfig::default().max_iter);
    if picard_max_iter == 0 {
        c.fail("$.picard_max_iter", "picard_max_iter must be at least 1");
    }

    let truncation_radius = match c.obj.get("truncation_radius") {
        Some(Value::Null) => None,
        Some(_) => c.number("truncation_radius"),
        None => defaults.truncation_radius,
    };
    if truncation_radius.is_some_and(|r| r <= 0.0) {
        c.fail("$.truncation_radius", "truncation_radius must be positive (or null to disable)");
    }

    let initial_x = match c.get("initial_x") {
        Some(v) => match v.as_array() {
            Some(a) if a.len() == 2 => {
                let x0 = c.number_at("$.initial_x[0]".into(), &a[0]);
                let x1 = c.number_at("$.initial_x[1]".into(), &a[1]);
                Point::<2>::new(x0.unwrap_or(0.0), x1.unwrap_or(0.0))
            }
            _ => {
                c.fail("$.initial_x", "expected an array of two numbers");
                Point::<2>::zeros()
            }
        },
        None => Point::<2>::zeros(),
    };

    let initial_xi = match c.get("initial_xi") {
        Some(v) => match v.as_f64() {
            Some(1.0) => Direction::Plus,
            Some(-1.0) => Direction::Minus,
            _ => {
                c.fail("$.initial_xi", "initial_xi must be 1 or -1");
                Direction::Plus
            }
        },
        None => Direction::Plus,
    };

    let on_divergence = match c.string("on_divergence") {
        Some("abort") => DivergencePolicy::Abort,
        Some("skip") => DivergencePolicy::Skip,
        Some(other) => {
            c.fail("$.on_divergence", format!("unknown policy `{other}` (expected abort or skip)"));
            defaults.on_divergence
        }
        None => defaults.on_divergence,
    };

    let output_path = c.string("output_path").map(PathBuf::from);

    // Capability checks against the selected target.
    if let Some(t) = &target {
        for s in &samplers {
            if s.kernel.is_some_and(Kernel::requires_hessian) && !t.has_hessian() {
                c.fail("$.kernel", format!("kernel q3 needs a Hessian, which target `{}` does not provide", t.name()));
            }
            if s.integrator == Some(IntegratorKind::ExplicitSplitting) && !t.is_separable() {
                c.fail("$.integrator", format!("explicit_splitting needs a separable potential; `{}` is not separable", t.name()));
            }
        }
    }

    if !c.issues.is_empty() {
        return Err(ConfigErrors(c.issues));
    }
    Ok(ExperimentConfig {
        experiment: experiment.expect("checked"),
        target: target_name.expect("checked").to_string(),
        observable: observable.to_string(),
        samplers,
        alpha,
        h_grid,
        n_samples,
        n_replicates,
        burn_in_fraction,
        master_seed: master_seed.expect("checked"),
        picard: PicardConfig { tol: picard_tol, max_iter: picard_max_iter },
        truncation_radius,
        initial_x,
        initial_xi,
        on_divergence,
        output_path,
    })
}

fn parse_h_grid(c: &mut Checker<'_>, v: &Value) -> Vec<f64> {
    let Some(items) = v.as_array() else {
        c.fail("$.h_grid", "expected an array of numbers");
        return Vec::new();
    };
    if items.is_empty() {
        c.fail("$.h_grid", "h_grid must not be empty");
    }
    let mut grid = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if let Some(h) = c.number_at(format!("$.h_grid[{i}]"), item) {
            if h <= 0.0 {
                c.fail(format!("$.h_grid[{i}]"), "h must be positive");
            }
            grid.push(h);
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        c.fail("$.h_grid", "h_grid must be strictly ascending");
    }
    grid
}

fn sampler_lineup(c: &mut Checker<'_>, experiment: Option<ExperimentPreset>) -> Vec<SamplerSpec> {
    let sampler = c.string("sampler");
    let kernel = c.string("kernel");
    let integrator = c.string("integrator");
    if let Some(lineup) = experiment.and_then(ExperimentPreset::lineup) {
        for (key, given) in [("sampler", sampler), ("kernel", kernel), ("integrator", integrator)] {
            if given.is_some() {
                c.fail(format!("$.{key}"), format!("{key} is fixed by the preset; use experiment=custom to choose it"));
            }
        }
        return lineup;
    }
    if experiment.is_none() {
        return Vec::new();
    }
    let Some(sampler) = sampler else {
        c.fail("$.sampler", "missing required field");
        return Vec::new();
    };
    let kind = match SamplerKind::from_id(sampler) {
        Ok(k) => k,
        Err(e) => {
            c.fail("$.sampler", e.to_string().trim_start_matches("configuration error: ").to_string());
            return Vec::new();
        }
    };
    let kernel = kernel.and_then(|k| match Kernel::from_id(k) {
        Ok(k) => Some(k),
        Err(_) => {
            c.fail("$.kernel", format!("unknown kernel `{k}` (expected q1, q2 or q3)"));
            None
        }
    });
    let integrator = integrator.and_then(|i| match IntegratorKind::from_id(i) {
        Ok(i) => Some(i),
        Err(_) => {
            c.fail("$.integrator", format!("unknown integrator `{i}` (expected midpoint, conjugated_midpoint or explicit_splitting)"));
            None
        }
    });
    if kind != SamplerKind::Gmala && c.get("kernel").is_some() {
        c.fail("$.kernel", "kernel applies to sampler gmala only");
    }
    if kind != SamplerKind::Ghmala && c.get("integrator").is_some() {
        c.fail("$.integrator", "integrator applies to sampler ghmala only");
    }
    vec![match kind {
        SamplerKind::Mala => SamplerSpec::mala(),
        SamplerKind::Gmala => SamplerSpec::gmala(kernel.unwrap_or(Kernel::Q2)),
        SamplerKind::Ghmala => SamplerSpec::ghmala(integrator.unwrap_or(IntegratorKind::Midpoint)),
    }]
}

/// Applies `key=value` overrides to a raw config. Values are parsed as JSON
/// when possible and taken as strings otherwise.
pub fn apply_overrides<S: AsRef<str>>(
    raw: &mut Value,
    overrides: &[S],
) -> std::result::Result<(), ConfigErrors> {
    let mut issues = Vec::new();
    let Some(obj) = raw.as_object_mut() else {
        return Err(ConfigErrors(vec![ConfigIssue {
            path: "$".into(),
            message: "config must be a JSON object".into(),
        }]));
    };
    for o in overrides {
        let o = o.as_ref();
        match o.split_once('=') {
            Some((key, value)) if !key.trim().is_empty() => {
                let value = value.trim();
                let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
                obj.insert(key.trim().to_string(), parsed);
            }
            _ => issues.push(ConfigIssue {
                path: "--override".into(),
                message: format!("expected key=value, got `{o}`"),
            }),
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(issues))
    }
}

/// Reads a JSON config file, applies overrides and validates.
pub fn load_config<S: AsRef<str>>(
    path: &Path,
    overrides: &[S],
    registry: &Registry,
) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let issue = |message: String| ConfigErrors(vec![ConfigIssue { path: "$".into(), message }]);
    let text = std::fs::read_to_string(path)
        .map_err(|e| issue(format!("cannot read {}: {e}", path.display())))?;
    let mut raw: Value = serde_json::from_str(&text)
        .map_err(|e| issue(format!("invalid JSON in {}: {e}", path.display())))?;
    apply_overrides(&mut raw, overrides)?;
    validate_config(&raw, registry)
}

/// Quantities reported in the `metric_name` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    RejectionRate,
    RejectionRateMalaSubstep,
    RejectionRateHybridSubstep,
    Variance,
    VarianceRatioVsMala,
    MeanEstimate,
}

impl Metric {
    pub fn id(self) -> &'static str {
        match self {
            Metric::RejectionRate => "rejection_rate",
            Metric::RejectionRateMalaSubstep => "rejection_rate_mala_substep",
            Metric::RejectionRateHybridSubstep => "rejection_rate_hybrid_substep",
            Metric::Variance => "variance",
            Metric::VarianceRatioVsMala => "variance_ratio_vs_mala",
            Metric::MeanEstimate => "mean_estimate",
        }
    }
}

/// One line of the output table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub sampler: String,
    pub kernel_or_integrator: String,
    pub alpha: f64,
    pub h: f64,
    pub metric: Metric,
    pub value: f64,
    /// Standard error for rates and means, 95% CI half-width for variances
    /// and variance ratios.
    pub stderr_or_ci_halfwidth: f64,
    pub n_samples: usize,
    pub n_replicates: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "experiment,sampler,kernel_or_integrator,alpha,h,metric_name,value,stderr_or_ci_halfwidth,n_samples,n_replicates,seed";

/// Formats like C's `printf("%.12e", v)`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

impl CsvRow {
    fn sort_key(&self) -> (&str, &str, f64, &str) {
        (&self.sampler, &self.kernel_or_integrator, self.h, self.metric.id())
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.sampler,
            self.kernel_or_integrator,
            format_sci(self.alpha),
            format_sci(self.h),
            self.metric.id(),
            format_sci(self.value),
            format_sci(self.stderr_or_ci_halfwidth),
            self.n_samples,
            self.n_replicates,
            self.seed
        )
    }
}

/// Orders rows by sampler (then kernel or integrator), h, metric name.
pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(kb.0)
            .then(ka.1.cmp(kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.cmp(kb.3))
    });
}

/// Serializes rows (header included, LF endings).
pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// A `(sampler, h)` point dropped because a chain diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub sampler: SamplerSpec,
    pub h: f64,
    pub error: Error,
}

/// Per-point results kept for programmatic use.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub sampler: SamplerSpec,
    pub h: f64,
    pub primary_rate: RateEstimate,
    pub hybrid_rate: Option<RateEstimate>,
    pub mean: f64,
    pub mean_stderr: f64,
    pub stats: Option<ReplicateStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<CsvRow>,
    pub points: Vec<PointResult>,
    pub skipped: Vec<SkippedPoint>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        csv_string(&self.rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
    }

    pub fn point(&self, sampler: SamplerSpec, h: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| p.sampler == sampler && p.h == h)
    }

    /// Human-readable digest of the run.
    pub fn summary(&self) -> String {
        let cfg = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}: target {}, alpha {}, {} step sizes, {} samples x {} replicates, seed {}",
            cfg.experiment,
            cfg.target,
            cfg.alpha,
            cfg.h_grid.len(),
            cfg.n_samples,
            cfg.n_replicates,
            cfg.master_seed
        );
        for p in &self.points {
            let _ = write!(s, "  {:<34} h={:<10.4e} reject={:.4e}", p.sampler.to_string(), p.h, p.primary_rate.rate);
            if let Some(hy) = p.hybrid_rate {
                let _ = write!(s, " hybrid_reject={:.4e}", hy.rate);
            }
            if let Some(st) = &p.stats {
                let _ = write!(s, " variance={:.4e}", st.variance);
            }
            let _ = writeln!(s, " mean={:.4e}", p.mean);
        }
        for k in &self.skipped {
            let _ = writeln!(s, "  skipped {} at h={}: {}", k.sampler, k.h, k.error);
        }
        let _ = writeln!(s, "{} rows", self.rows.len());
        s
    }
}

struct ReplicateOutcome {
    time_average: f64,
    primary: RateEstimate,
    hybrid: Option<RateEstimate>,
    observable_trace: Vec<f64>,
}

fn build_sampler(
    spec: &SamplerSpec,
    cfg: &ExperimentConfig,
    base: &Arc<dyn Target<2>>,
    h: f64,
) -> Result<Box<dyn Sampler<2>>> {
    let proposal_target = match cfg.truncation_radius {
        Some(r) => truncate_gradient(base.clone(), r)?,
        None => base.clone(),
    };
    let skew = SkewDrift::rotation(cfg.alpha);
    Ok(match spec.kind {
        SamplerKind::Mala => Box::new(Mala { target: proposal_target, h }),
        SamplerKind::Gmala => Box::new(Gmala {
            target: proposal_target,
            skew,
            kernel: spec.kernel.unwrap_or(Kernel::Q2),
            h,
            picard: cfg.picard,
        }),
        SamplerKind::Ghmala => Box::new(Ghmala {
            target: proposal_target,
            integrator: build_integrator(
                spec.integrator.unwrap_or(IntegratorKind::Midpoint),
                base.clone(),
                skew,
                cfg.picard,
            )?,
            h,
        }),
    })
}

fn contextualize(spec: &SamplerSpec, h: f64, e: Error) -> Error {
    Error::AtPoint {
        point: format!("{spec} at h={h}"),
        source: Box::new(e),
    }
}

fn is_divergence(e: &Error) -> bool {
    match e {
        Error::PicardDiverged { .. } => true,
        Error::ChainAborted { source, .. } | Error::AtPoint { source, .. } => is_divergence(source),
        _ => false,
    }
}

/// Runs the sweep on `threads` workers (`None`: rayon's default pool).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    registry: &Registry,
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| run_in_pool(cfg, registry)),
        None => run_in_pool(cfg, registry),
    }
}

fn run_in_pool(cfg: &ExperimentConfig, registry: &Registry) -> Result<ExperimentReport> {
    let base = registry
        .get(&cfg.target)
        .ok_or_else(|| Error::Config(format!("unknown target `{}`", cfg.target)))?;
    let observable = make_observable(&cfg.observable)?;
    let template = cfg.chain_template()?.with_trace(TraceOptions {
        observable: cfg.n_replicates == 1,
        rejection: true,
        positions_thin: None,
    });

    let points: Vec<(SamplerSpec, f64)> = cfg
        .samplers
        .iter()
        .flat_map(|s| cfg.h_grid.iter().map(move |&h| (*s, h)))
        .collect();
    let samplers = points
        .iter()
        .map(|(s, h)| build_sampler(s, cfg, &base, *h))
        .collect::<Result<Vec<_>>>()?;

    let k = cfg.n_replicates;
    let outcomes: Vec<Result<ReplicateOutcome>> = (0..points.len() * k)
        .into_par_iter()
        .map(|unit| {
            let (p, r) = (unit / k, unit % k);
            let summary = run_chain(samplers[p].as_ref(), &template.with_stream(r as u64), &observable)?;
            let primary = RateEstimate::from_trace(&summary.reject_prob_trace, summary.primary.rejection_fraction());
            let hybrid = summary.hybrid.map(|t| {
                RateEstimate::from_trace(&summary.hybrid_reject_prob_trace, t.rejection_fraction())
            });
            Ok(ReplicateOutcome {
                time_average: summary.time_average,
                primary,
                hybrid,
                observable_trace: summary.observable_trace,
            })
        })
        .collect();

    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut chunks = outcomes.into_iter();
    for &(spec, h) in &points {
        let chunk: Vec<Result<ReplicateOutcome>> = chunks.by_ref().take(k).collect();
        let chunk = match chunk.into_iter().collect::<Result<Vec<_>>>() {
            Ok(c) => c,
            Err(e) if cfg.on_divergence == DivergencePolicy::Skip && is_divergence(&e) => {
                skipped.push(SkippedPoint { sampler: spec, h, error: e });
                continue;
            }
            Err(e) => return Err(contextualize(&spec, h, e)),
        };
        results.push(summarize_point(spec, h, chunk, cfg.n_samples - cfg.burn_in())?);
    }

    let rows = build_rows(cfg, &results)?;
    Ok(ExperimentReport { config: cfg.clone(), rows, points: results, skipped })
}

fn summarize_point(
    sampler: SamplerSpec,
    h: f64,
    chunk: Vec<ReplicateOutcome>,
    retained: usize,
) -> Result<PointResult> {
    let primary: Vec<RateEstimate> = chunk.iter().map(|o| o.primary).collect();
    let hybrid: Option<Vec<RateEstimate>> = chunk.iter().map(|o| o.hybrid).collect();
    let (mean, mean_stderr, stats) = if chunk.len() == 1 {
        let m = mean_with_stderr(&chunk[0].observable_trace);
        (chunk[0].time_average, m.stderr, None)
    } else {
        let stats = ReplicateStats::from_estimates(chunk.iter().map(|o| o.time_average).collect(), retained)?;
        (stats.mean, stats.mean_stderr(), Some(stats))
    };
    Ok(PointResult {
        sampler,
        h,
        primary_rate: RateEstimate::pool(&primary),
        hybrid_rate: hybrid.map(|v| RateEstimate::pool(&v)),
        mean,
        mean_stderr,
        stats,
    })
}

fn build_rows(cfg: &ExperimentConfig, results: &[PointResult]) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    let mut push = |p: &PointResult, metric: Metric, value: f64, err: f64| {
        // Degenerate values (e.g. a ratio against a zero variance) are left out.
        if value.is_finite() && err.is_finite() {
            rows.push(CsvRow {
                experiment: cfg.experiment.id().to_string(),
                sampler: p.sampler.kind.id().to_string(),
                kernel_or_integrator: p.sampler.detail().to_string(),
                alpha: if p.sampler.kind == SamplerKind::Mala { 0.0 } else { cfg.alpha },
                h: p.h,
                metric,
                value,
                stderr_or_ci_halfwidth: err,
                n_samples: cfg.n_samples,
                n_replicates: cfg.n_replicates,
                seed: cfg.master_seed,
            });
        }
    };
    for p in results {
        match p.hybrid_rate {
            Some(hy) => {
                push(p, Metric::RejectionRateMalaSubstep, p.primary_rate.rate, p.primary_rate.stderr);
                push(p, Metric::RejectionRateHybridSubstep, hy.rate, hy.stderr);
            }
            None => push(p, Metric::RejectionRate, p.primary_rate.rate, p.primary_rate.stderr),
        }
        push(p, Metric::MeanEstimate, p.mean, p.mean_stderr);
        if let Some(st) = &p.stats {
            push(p, Metric::Variance, st.variance, st.ci_halfwidth());
        }
        if cfg.experiment.is_variance() && p.sampler.kind != SamplerKind::Mala {
            let mala = results
                .iter()
                .find(|m| m.sampler.kind == SamplerKind::Mala && m.h == p.h);
            if let (Some(st), Some(mst)) = (&p.stats, mala.and_then(|m| m.stats.as_ref())) {
                let r = variance_ratio(mst, st)?;
                push(p, Metric::VarianceRatioVsMala, r.ratio, 0.5 * (r.ci.1 - r.ci.0));
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}
