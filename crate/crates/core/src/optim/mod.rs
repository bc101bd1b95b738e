//! Iterative methods and the bookkeeping around them.
//!
//! Every runner evaluates the oracle at `x_0`, then performs up to `T`
//! updates, recording a [`StepRecord`] after each one. A run aborts with
//! [`OptimError::Divergence`] as soon as the objective or gradient stops
//! being finite or `f` exceeds [`DIVERGENCE_LIMIT`]; the partial trace is
//! returned inside the error.

mod adam;
mod rates;
mod steepest;
mod trace;

pub use adam::{adam_gamma, run_adam_family, AdamConfig, AdamState, AdamStep, AdamVariant};
pub use rates::{
    check_normalized_rate, relaxed_iteration_bound, verify_rate_bounds, BoundCheck, RateCheck,
    RATE_TOL,
};
pub use steepest::{
    run_normalized_sd, run_relaxed_nsd, run_signsgd, run_steepest_descent, StepSchedule,
    STATIONARITY_TOL,
};
pub use trace::{RunOptions, StepRecord, Trace};

use thiserror::Error;

use crate::norms::{NormError, NormKind};
use crate::problems::Oracle;

/// Objective values above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("divergence at step {step}")]
    Divergence { step: usize, trace: Box<Trace> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("starting point has dimension {got}, problem has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("Adam damping undefined at coordinate {0}: v = 0 with epsilon = 0")]
    DegenerateAdam(usize),
}

pub(crate) enum Step {
    Move(Vec<f64>),
    Stop,
}

/// State handed to an update rule at iteration `t`.
pub(crate) struct Point<'a> {
    pub t: usize,
    pub grad: &'a [f64],
    pub dual_norm: f64,
}

fn diverged(f: f64, g: &[f64]) -> bool {
    !f.is_finite() || f > DIVERGENCE_LIMIT || g.iter().any(|v| !v.is_finite())
}

/// Shared iteration loop: `x_{t+1} = x_t − delta_t`.
pub(crate) fn drive<O, F>(
    oracle: &mut O,
    geometry: &NormKind,
    x0: &[f64],
    opts: RunOptions,
    mut update: F,
) -> Result<Trace, OptimError>
where
    O: Oracle + ?Sized,
    F: FnMut(Point<'_>) -> Result<Step, OptimError>,
{
    let d = oracle.dim();
    if x0.len() != d {
        return Err(OptimError::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    geometry.check_dim(d)?;
    let optimum = oracle.minimizer();
    let dist = |x: &[f64]| {
        optimum
            .as_ref()
            .map(|o| x.iter().zip(o).map(|(a, b)| (a - b) * (a - b)).sum())
    };

    let mut x = x0.to_vec();
    let mut trace = Trace {
        records: Vec::with_capacity(opts.iters + 1),
        iterates: opts.keep_iterates.then(Vec::new),
        ..Trace::default()
    };
    let (mut f, mut g) = oracle.eval(&x);
    let mut t = 0;
    loop {
        let dual_norm = geometry.dual_norm_unchecked(&g);
        trace.records.push(StepRecord {
            t,
            f,
            dual_grad_norm: dual_norm,
            dist_sq: dist(&x),
        });
        if let Some(it) = trace.iterates.as_mut() {
            it.push(x.clone());
        }
        if diverged(f, &g) || !dual_norm.is_finite() {
            trace.x_final = x;
            return Err(OptimError::Divergence {
                step: t,
                trace: Box::new(trace),
            });
        }
        if t == opts.iters {
            break;
        }
        let step = update(Point {
            t,
            grad: &g,
            dual_norm,
        })?;
        match step {
            Step::Stop => break,
            Step::Move(delta) => {
                for (xi, di) in x.iter_mut().zip(&delta) {
                    *xi -= di;
                }
            }
        }
        (f, g) = oracle.eval(&x);
        t += 1;
    }
    trace.x_final = x;
    Ok(trace)
}
