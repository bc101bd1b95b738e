use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{drive, OptimError, RunOptions, Step, Trace};
use crate::norms::{sign, BlockPartition, NormKind};
use crate::problems::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdamVariant {
    /// `x ← x − step·m/(√v+ε)`.
    Standard,
    /// Damping magnitudes permuted within each block.
    Shuffled,
    /// Damping magnitudes replaced by their block mean.
    Averaged,
    /// `x ← x − step·sign(m)`.
    MomentumSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: f64,
    pub variant: AdamVariant,
    /// Scope of shuffling and averaging; the whole vector when absent.
    #[serde(default)]
    pub blocks: Option<BlockPartition>,
}

impl AdamConfig {
    pub fn new(variant: AdamVariant) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 1e-3,
            variant,
            blocks: None,
        }
    }

    pub fn validate(&self, d: usize) -> Result<(), OptimError> {
        let bad = |msg: String| Err(OptimError::InvalidParameter(msg));
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if let Some(p) = &self.blocks {
            if p.dim() != d {
                return Err(OptimError::Norm(
                    crate::norms::NormError::DimensionMismatch {
                        expected: d,
                        got: p.dim(),
                    },
                ));
            }
        }
        Ok(())
    }
}

/// `γ = |m|/(√v + ε)` elementwise.
pub fn adam_gamma(m: &[f64], v: &[f64], epsilon: f64) -> Result<Vec<f64>, OptimError> {
    if m.len() != v.len() {
        return Err(OptimError::DimensionMismatch {
            expected: m.len(),
            got: v.len(),
        });
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(OptimError::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    m.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (&mi, &vi))| {
            if vi.is_nan() || vi < 0.0 {
                return Err(OptimError::InvalidParameter(format!(
                    "second moment must be non-negative, got v[{i}] = {vi}"
                )));
            }
            let denom = vi.sqrt() + epsilon;
            if denom == 0.0 {
                return Err(OptimError::DegenerateAdam(i));
            }
            Ok(mi.abs() / denom)
        })
        .collect()
}

/// Moment estimates, starting from zero with no bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Quantities produced by one update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamStep {
    /// Damping magnitudes `|m|/(√v+ε)`; empty for the momentum-sign variant.
    pub gamma: Vec<f64>,
    /// Per-coordinate magnitudes actually applied, before scaling by `step`.
    pub magnitudes: Vec<f64>,
    /// Update direction; `x ← x − step·direction`.
    pub direction: Vec<f64>,
}

impl AdamState {
    pub fn new(d: usize) -> Self {
        Self {
            m: vec![0.0; d],
            v: vec![0.0; d],
        }
    }

    /// Folds in gradient `g` and returns the resulting direction.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        cfg: &AdamConfig,
        g: &[f64],
        rng: &mut R,
    ) -> Result<AdamStep, OptimError> {
        for ((m, v), &gi) in self.m.iter_mut().zip(self.v.iter_mut()).zip(g) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gi;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gi * gi;
        }
        let d = g.len();
        let whole;
        let blocks: &[Vec<usize>] = match &cfg.blocks {
            Some(p) => p.blocks(),
            None => {
                whole = [(0..d).collect::<Vec<_>>()];
                &whole
            }
        };

        if cfg.variant == AdamVariant::MomentumSign {
            return Ok(AdamStep {
                gamma: Vec::new(),
                magnitudes: vec![1.0; d],
                direction: self.m.iter().map(|&m| sign(m)).collect(),
            });
        }

        let gamma = adam_gamma(&self.m, &self.v, cfg.epsilon)?;
        let magnitudes = match cfg.variant {
            AdamVariant::Standard => gamma.clone(),
            AdamVariant::Shuffled => {
                let mut out = vec![0.0; d];
                for b in blocks {
                    let mut vals: Vec<f64> = b.iter().map(|&i| gamma[i]).collect();
                    vals.shuffle(rng);
                    for (&i, val) in b.iter().zip(vals) {
                        out[i] = val;
                    }
                }
                out
            }
            AdamVariant::Averaged => {
                let mut out = vec![0.0; d];
                for b in blocks {
                    let mean = b.iter().map(|&i| gamma[i]).sum::<f64>() / b.len() as f64;
                    for &i in b {
                        out[i] = mean;
                    }
                }
                out
            }
            AdamVariant::MomentumSign => unreachable!(),
        };
        let direction = match cfg.variant {
            AdamVariant::Standard => self
                .m
                .iter()
                .zip(&self.v)
                .map(|(&m, &v)| m / (v.sqrt() + cfg.epsilon))
                .collect(),
            _ => magnitudes
                .iter()
                .zip(&self.m)
                .map(|(&a, &m)| a * sign(m))
                .collect(),
        };
        Ok(AdamStep {
            gamma,
            magnitudes,
            direction,
        })
    }
}

/// Runs one member of the Adam family. Records ℓ1 gradient norms.
pub fn run_adam_family<O, R>(
    oracle: &mut O,
    cfg: &AdamConfig,
    x0: &[f64],
    opts: RunOptions,
    rng: &mut R,
) -> Result<Trace, OptimError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate(oracle.dim())?;
    let mut state = AdamState::new(oracle.dim());
    drive(oracle, &NormKind::Max, x0, opts, |p| {
        let s = state.step(cfg, p.grad, rng)?;
        Ok(Step::Move(
            s.direction.into_iter().map(|v| cfg.step * v).collect(),
        ))
    })
}
