//! Config-driven runs: single optimizations and the GD vs. sign-descent grid
//! on rotated quadratics. Everything here is deterministic given the config.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{linf_bruteforce, smoothness_constant, AnalysisError, BRUTE_FORCE_MAX_DIM};
use crate::norms::{BlockPartition, NormKind};
use crate::optim::{
    run_adam_family, run_normalized_sd, run_relaxed_nsd, run_signsgd, run_steepest_descent,
    AdamConfig, AdamVariant, OptimError, RunOptions, StepSchedule, Trace,
};
use crate::problems::{make_quadratic, CoshProblem, Oracle, ProblemError, QuadraticProblem};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

impl ExperimentError {
    /// Partial trace of a diverged run.
    pub fn divergence_trace(&self) -> Option<&Trace> {
        match self {
            ExperimentError::Optim(OptimError::Divergence { trace, .. }) => Some(trace),
            _ => None,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Config(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub d: usize,
    pub lambda_max: f64,
    pub theta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoshSpec {
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic(QuadraticSpec),
    Cosh(CoshSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamParams {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub step: f64,
    #[serde(default)]
    pub blocks: Option<BlockPartition>,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl AdamParams {
    fn config(&self, variant: AdamVariant) -> AdamConfig {
        AdamConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            step: self.step,
            variant,
            blocks: self.blocks.clone(),
        }
    }
}

/// Optimizer selection. Smoothness constants default to the exact values of
/// the quadratic; they are required for the cosh problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Gd {
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    /// `x ← x − (α_t/L)·sign(∇f)` with `α_t = 1/√(t+1)`.
    Signgd {
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    /// `x ← x − (‖∇f‖₁/L)·sign(∇f)`.
    SigngdNormscaled {
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    Cd {
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    Blocknorm {
        blocks: BlockPartition,
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    Nsd {
        norm: NormKind,
        #[serde(rename = "L", default)]
        l: Option<f64>,
    },
    RelaxedNsd {
        norm: NormKind,
        #[serde(rename = "L0", default)]
        l0: Option<f64>,
        #[serde(rename = "L1", default)]
        l1: Option<f64>,
        eps: f64,
    },
    Signsgd {
        #[serde(default = "default_schedule")]
        schedule: StepSchedule,
    },
    Adam(AdamParams),
    AdamShuffled(AdamParams),
    AdamAveraged(AdamParams),
    MomentumSign(AdamParams),
}

fn default_schedule() -> StepSchedule {
    StepSchedule::InvSqrt
}

impl OptimizerSpec {
    /// Methods whose guarantees assume exact gradients.
    pub fn needs_exact_gradients(&self) -> bool {
        !matches!(
            self,
            OptimizerSpec::Signsgd { .. }
                | OptimizerSpec::Adam(_)
                | OptimizerSpec::AdamShuffled(_)
                | OptimizerSpec::AdamAveraged(_)
                | OptimizerSpec::MomentumSign(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    #[serde(rename = "T", alias = "iters")]
    pub iters: usize,
    /// Explicit starting point; overrides `x0_seed`.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Seed for `x₀ ~ N(0, I)`.
    #[serde(default)]
    pub x0_seed: u64,
    /// Seed for gradient noise and shuffling.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Draws `count` standard normal vectors from one seeded stream.
pub fn gaussian_draws(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

enum Built {
    Quadratic(QuadraticProblem, f64),
    Cosh(CoshProblem),
}

fn positive(name: &str, v: f64) -> Result<f64, ExperimentError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        config_err(format!("{name} must be positive, got {v}"))
    }
}

/// Runs one optimization as described by `cfg`.
pub fn run_config(cfg: &RunConfig) -> Result<Trace, ExperimentError> {
    let built = match &cfg.problem {
        ProblemSpec::Quadratic(q) => {
            if !(q.sigma.is_finite() && q.sigma >= 0.0) {
                return Err(ProblemError::BadSigma(q.sigma).into());
            }
            Built::Quadratic(make_quadratic(q.d, q.lambda_max, q.theta, q.seed)?, q.sigma)
        }
        ProblemSpec::Cosh(c) => {
            if c.d == 0 {
                return Err(ProblemError::DimensionTooSmall(0).into());
            }
            Built::Cosh(CoshProblem::new(c.d))
        }
    };
    let d = match &built {
        Built::Quadratic(p, _) => p.dim(),
        Built::Cosh(c) => c.dim,
    };
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != d => {
            return config_err(format!(
                "x0 has {} entries, problem dimension is {d}",
                x.len()
            ))
        }
        Some(x) => x.clone(),
        None => gaussian_draws(d, 1, cfg.x0_seed).remove(0),
    };
    let opts = RunOptions::new(cfg.iters);

    match built {
        Built::Quadratic(p, sigma) => {
            if sigma > 0.0 && cfg.optimizer.needs_exact_gradients() {
                return config_err("this method requires exact gradients; set sigma to 0");
            }
            let smooth = |kind: &NormKind| -> Result<f64, ExperimentError> {
                if matches!(kind, NormKind::Max) && d > BRUTE_FORCE_MAX_DIM {
                    return config_err(format!(
                        "the max-norm constant is exact only up to d = {BRUTE_FORCE_MAX_DIM}; pass L explicitly"
                    ));
                }
                Ok(smoothness_constant(p.hessian(), kind)?)
            };
            let mut noisy = p.with_noise(sigma, cfg.seed);
            dispatch(
                &cfg.optimizer,
                &mut noisy,
                &x0,
                opts,
                cfg.seed,
                |k| smooth(k),
                |_| Ok((smooth(&NormKind::Max)?, 0.0)),
            )
        }
        Built::Cosh(c) => {
            let mut c = c;
            let (l0, l1) = c.relaxed_constants();
            dispatch(
                &cfg.optimizer,
                &mut c,
                &x0,
                opts,
                cfg.seed,
                |_| config_err("L must be given for the cosh problem"),
                |kind| match kind {
                    NormKind::Max => Ok((l0, l1)),
                    _ => config_err("L0 and L1 must be given for this norm"),
                },
            )
        }
    }
}

fn dispatch<O, S, R>(
    spec: &OptimizerSpec,
    oracle: &mut O,
    x0: &[f64],
    opts: RunOptions,
    seed: u64,
    default_l: S,
    default_relaxed: R,
) -> Result<Trace, ExperimentError>
where
    O: Oracle + ?Sized,
    S: Fn(&NormKind) -> Result<f64, ExperimentError>,
    R: Fn(&NormKind) -> Result<(f64, f64), ExperimentError>,
{
    let pick = |l: &Option<f64>, kind: &NormKind| match l {
        Some(v) => positive("L", *v),
        None => default_l(kind),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = match spec {
        OptimizerSpec::Gd { l } => {
            let kind = NormKind::Euclidean;
            run_steepest_descent(oracle, &kind, pick(l, &kind)?, x0, opts)
        }
        OptimizerSpec::Signgd { l } => {
            let kind = NormKind::Max;
            run_normalized_sd(oracle, &kind, pick(l, &kind)?, x0, opts)
        }
        OptimizerSpec::SigngdNormscaled { l } => {
            let kind = NormKind::Max;
            run_steepest_descent(oracle, &kind, pick(l, &kind)?, x0, opts)
        }
        OptimizerSpec::Cd { l } => {
            let kind = NormKind::One;
            run_steepest_descent(oracle, &kind, pick(l, &kind)?, x0, opts)
        }
        OptimizerSpec::Blocknorm { blocks, l } => {
            let kind = NormKind::BlockMax(blocks.clone());
            run_steepest_descent(oracle, &kind, pick(l, &kind)?, x0, opts)
        }
        OptimizerSpec::Nsd { norm, l } => run_normalized_sd(oracle, norm, pick(l, norm)?, x0, opts),
        OptimizerSpec::RelaxedNsd { norm, l0, l1, eps } => {
            let (l0, l1) = match (l0, l1) {
                (Some(a), Some(b)) => (*a, *b),
                (a, b) => {
                    let (da, db) = default_relaxed(norm)?;
                    (a.unwrap_or(da), b.unwrap_or(db))
                }
            };
            run_relaxed_nsd(oracle, norm, l0, l1, x0, opts, *eps)
        }
        OptimizerSpec::Signsgd { schedule } => run_signsgd(oracle, *schedule, x0, opts),
        OptimizerSpec::Adam(p) => {
            run_adam_family(oracle, &p.config(AdamVariant::Standard), x0, opts, &mut rng)
        }
        OptimizerSpec::AdamShuffled(p) => {
            run_adam_family(oracle, &p.config(AdamVariant::Shuffled), x0, opts, &mut rng)
        }
        OptimizerSpec::AdamAveraged(p) => {
            run_adam_family(oracle, &p.config(AdamVariant::Averaged), x0, opts, &mut rng)
        }
        OptimizerSpec::MomentumSign(p) => run_adam_family(
            oracle,
            &p.config(AdamVariant::MomentumSign),
            x0,
            opts,
            &mut rng,
        ),
    };
    Ok(trace?)
}

/// Grid of rotated quadratics comparing GD (step `1/L₂`) with norm-scaled
/// sign descent (step `1/L∞`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(default = "default_lambdas")]
    pub lambda_max_values: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub theta_values: Vec<f64>,
    #[serde(rename = "T", alias = "iters", default = "default_grid_iters")]
    pub iters: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub skew_seed: u64,
    #[serde(default)]
    pub x0_seed: u64,
    #[serde(default)]
    pub sigma: f64,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
}
fn default_thetas() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}
fn default_grid_iters() -> usize {
    100
}
fn default_repeats() -> usize {
    64
}

impl GridConfig {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            lambda_max_values: default_lambdas(),
            theta_values: default_thetas(),
            iters: default_grid_iters(),
            repeats: default_repeats(),
            skew_seed: 0,
            x0_seed: 0,
            sigma: 0.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.d < 2 {
            return config_err(format!("d must be at least 2, got {}", self.d));
        }
        if self.d > BRUTE_FORCE_MAX_DIM {
            return config_err(format!(
                "d = {} exceeds {BRUTE_FORCE_MAX_DIM}; the grid needs the exact max-norm constant",
                self.d
            ));
        }
        if self.lambda_max_values.is_empty() || self.theta_values.is_empty() {
            return config_err("lambda_max_values and theta_values must be non-empty");
        }
        if let Some(l) = self
            .lambda_max_values
            .iter()
            .find(|l| !(l.is_finite() && **l >= 1.0))
        {
            return config_err(format!("lambda_max values must be at least 1, got {l}"));
        }
        if let Some(t) = self.theta_values.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return config_err(format!("theta values must lie in [0, 1], got {t}"));
        }
        if self.repeats == 0 {
            return config_err("repeats must be at least 1");
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return config_err(format!("sigma must be non-negative, got {}", self.sigma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub lambda_max: f64,
    pub theta: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
    /// `Linf/(d·L2)`.
    pub ratio_smoothness: f64,
    pub mean_dist_gd: f64,
    pub mean_dist_signgd: f64,
    /// `log₁₀(mean_dist_signgd/mean_dist_gd)`, each mean floored at the
    /// smallest positive normal float.
    pub log10_perf_ratio: f64,
}

/// Starting points consumed by each method in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDraws {
    pub gd: Vec<Vec<f64>>,
    pub signgd: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutput {
    pub cells: Vec<GridCell>,
    /// Present when requested; aligned with `cells`.
    pub draws: Option<Vec<CellDraws>>,
}

pub const GRID_HEADER: &str =
    "lambda_max,theta,L2,Linf,ratio_smoothness,mean_dist_gd,mean_dist_signgd,log10_perf_ratio";

fn noise_seed(base: u64, cell: usize, repeat: usize, method: u64) -> u64 {
    base ^ (cell as u64).rotate_left(40) ^ (repeat as u64).rotate_left(8) ^ method
}

fn run_cell(
    cfg: &GridConfig,
    index: usize,
    lambda_max: f64,
    theta: f64,
    x0s: &[Vec<f64>],
    keep_draws: bool,
) -> Result<(GridCell, Option<CellDraws>), ExperimentError> {
    let p = make_quadratic(cfg.d, lambda_max, theta, cfg.skew_seed)?;
    let l2 = p.analysis().l2;
    let linf = linf_bruteforce(p.hessian())?;
    let opts = RunOptions::new(cfg.iters);
    let mut used = CellDraws {
        gd: Vec::new(),
        signgd: Vec::new(),
    };
    let mut total_gd = 0.0;
    let mut total_sign = 0.0;
    for (r, x0) in x0s.iter().enumerate() {
        let mut oracle = p.with_noise(cfg.sigma, noise_seed(cfg.x0_seed, index, r, 0));
        let gd = run_steepest_descent(&mut oracle, &NormKind::Euclidean, l2, x0, opts)?;
        let mut oracle = p.with_noise(cfg.sigma, noise_seed(cfg.x0_seed, index, r, 1));
        let sign = run_steepest_descent(&mut oracle, &NormKind::Max, linf, x0, opts)?;
        total_gd += gd.last().dist_sq.unwrap_or(f64::NAN);
        total_sign += sign.last().dist_sq.unwrap_or(f64::NAN);
        if keep_draws {
            used.gd.push(x0.clone());
            used.signgd.push(x0.clone());
        }
    }
    let n = x0s.len() as f64;
    let mean_dist_gd = total_gd / n;
    let mean_dist_signgd = total_sign / n;
    let floor = |v: f64| v.max(f64::MIN_POSITIVE);
    let cell = GridCell {
        lambda_max,
        theta,
        l2,
        linf,
        ratio_smoothness: linf / (cfg.d as f64 * l2),
        mean_dist_gd,
        mean_dist_signgd,
        log10_perf_ratio: (floor(mean_dist_signgd) / floor(mean_dist_gd)).log10(),
    };
    Ok((cell, keep_draws.then_some(used)))
}

/// Evaluates every `(λ_max, θ)` cell, in parallel, returning cells in
/// lexicographic order. `progress` is called once per finished `λ_max` row.
pub fn run_grid<P>(
    cfg: &GridConfig,
    keep_draws: bool,
    progress: P,
) -> Result<GridOutput, ExperimentError>
where
    P: Fn(usize, f64) + Sync,
{
    cfg.validate()?;
    let x0s = gaussian_draws(cfg.d, cfg.repeats, cfg.x0_seed);
    let nt = cfg.theta_values.len();
    let rows: Vec<Vec<(GridCell, Option<CellDraws>)>> = cfg
        .lambda_max_values
        .par_iter()
        .enumerate()
        .map(|(i, &lm)| {
            let row = cfg
                .theta_values
                .par_iter()
                .enumerate()
                .map(|(j, &th)| run_cell(cfg, i * nt + j, lm, th, &x0s, keep_draws))
                .collect::<Result<Vec<_>, _>>()?;
            progress(i, lm);
            Ok(row)
        })
        .collect::<Result<_, ExperimentError>>()?;
    let (cells, draws): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();
    Ok(GridOutput {
        cells,
        draws: keep_draws.then(|| draws.into_iter().flatten().collect()),
    })
}

/// Writes the grid CSV with 17 significant digits per float.
pub fn write_grid_csv<W: Write>(cells: &[GridCell], mut out: W) -> io::Result<()> {
    writeln!(out, "{GRID_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.lambda_max,
            c.theta,
            c.l2,
            c.linf,
            c.ratio_smoothness,
            c.mean_dist_gd,
            c.mean_dist_signgd,
            c.log10_perf_ratio
        )?;
    }
    Ok(())
}

/// Writes one row per starting point.
pub fn write_draws_csv<W: Write>(draws: &[Vec<f64>], mut out: W) -> io::Result<()> {
    for x in draws {
        let row: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
