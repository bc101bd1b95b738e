use serde::{Deserialize, Serialize};

use super::{drive, OptimError, RunOptions, Step, Trace};
use crate::norms::{sign, NormKind};
use crate::problems::Oracle;

/// Normalized methods stop once the dual gradient norm drops to this.
pub const STATIONARITY_TOL: f64 = 1e-14;

fn check_positive(name: &str, v: f64) -> Result<(), OptimError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(OptimError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Steepest descent with constant step `1/L`: `x ← x − P(∇f)/L`.
///
/// With [`NormKind::Max`] this is norm-scaled sign descent. With
/// [`NormKind::One`] it is greedy coordinate descent.
pub fn run_steepest_descent<O: Oracle + ?Sized>(
    oracle: &mut O,
    kind: &NormKind,
    l: f64,
    x0: &[f64],
    opts: RunOptions,
) -> Result<Trace, OptimError> {
    check_positive("L", l)?;
    drive(oracle, kind, x0, opts, |p| {
        let dir = kind.steepest_op_unchecked(p.grad);
        Ok(Step::Move(dir.into_iter().map(|v| v / l).collect()))
    })
}

/// Normalized steepest descent `x ← x − (α_t/L)·P(∇f)/‖∇f‖*` with
/// `α_t = 1/√(t+1)`. Stops early at exact stationarity.
pub fn run_normalized_sd<O: Oracle + ?Sized>(
    oracle: &mut O,
    kind: &NormKind,
    l: f64,
    x0: &[f64],
    opts: RunOptions,
) -> Result<Trace, OptimError> {
    check_positive("L", l)?;
    drive(oracle, kind, x0, opts, |p| {
        if p.dual_norm <= STATIONARITY_TOL {
            return Ok(Step::Stop);
        }
        let alpha = StepSchedule::InvSqrt.at(p.t);
        let dir = kind.steepest_op_unchecked(p.grad);
        Ok(Step::Move(
            dir.into_iter()
                .map(|v| alpha / l * (v / p.dual_norm))
                .collect(),
        ))
    })
}

/// Soft-normalized steepest descent for `(L⁽⁰⁾, L⁽¹⁾)`-smooth objectives:
/// `x ← x − P(∇f) / (5L⁽⁰⁾ + 4L⁽¹⁾‖∇f‖*)`, run until `‖∇f‖* ≤ eps` or the
/// budget is spent. The trace records the first iteration meeting `eps`.
pub fn run_relaxed_nsd<O: Oracle + ?Sized>(
    oracle: &mut O,
    kind: &NormKind,
    l0: f64,
    l1: f64,
    x0: &[f64],
    opts: RunOptions,
    eps: f64,
) -> Result<Trace, OptimError> {
    check_positive("L0", l0)?;
    check_positive("eps", eps)?;
    if !(l1.is_finite() && l1 >= 0.0) {
        return Err(OptimError::InvalidParameter(format!(
            "L1 must be non-negative, got {l1}"
        )));
    }
    let mut trace = drive(oracle, kind, x0, opts, |p| {
        if p.dual_norm <= eps {
            return Ok(Step::Stop);
        }
        let denom = 5.0 * l0 + 4.0 * l1 * p.dual_norm;
        let dir = kind.steepest_op_unchecked(p.grad);
        Ok(Step::Move(dir.into_iter().map(|v| v / denom).collect()))
    })?;
    trace.first_hit = trace
        .records
        .iter()
        .find(|r| r.dual_grad_norm <= eps)
        .map(|r| r.t);
    Ok(trace)
}

/// Step-size sequence for sign methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant(f64),
    /// `α_t = 1/√(t+1)`.
    InvSqrt,
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::InvSqrt => 1.0 / ((t + 1) as f64).sqrt(),
        }
    }
}

/// `x ← x − α_t·sign(g)`, with `g` from a possibly stochastic oracle.
/// Records ℓ1 gradient norms.
pub fn run_signsgd<O: Oracle + ?Sized>(
    oracle: &mut O,
    schedule: StepSchedule,
    x0: &[f64],
    opts: RunOptions,
) -> Result<Trace, OptimError> {
    if let StepSchedule::Constant(a) = schedule {
        check_positive("step", a)?;
    }
    drive(oracle, &NormKind::Max, x0, opts, |p| {
        let alpha = schedule.at(p.t);
        Ok(Step::Move(
            p.grad.iter().map(|&g| alpha * sign(g)).collect(),
        ))
    })
}
