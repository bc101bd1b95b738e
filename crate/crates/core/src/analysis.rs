//! Smoothness constants of quadratic models and their bounds.
//!
//! The central quantity is the induced norm `‖H‖∞,1 = max_{‖x‖∞≤1} ‖Hx‖₁`,
//! computed exactly by enumerating sign vectors and bracketed by cheaper
//! eigenvalue and diagonal-concentration bounds.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{eigh, is_psd, MatrixError, SymMatrix};
use crate::norms::{self, BlockPartition, NormError, NormKind};

/// Largest dimension for which `‖H‖∞,1` is enumerated exactly.
pub const BRUTE_FORCE_MAX_DIM: usize = 24;

/// Tolerance used when deciding whether a matrix counts as PSD.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("dimension {d} too large for exact norm (limit {BRUTE_FORCE_MAX_DIM})")]
    DimensionTooLarge { d: usize },
    #[error("ratio undefined for the zero matrix")]
    ZeroMatrix,
    #[error("closed form requires a 2x2 matrix, got {0}x{0}")]
    NotTwoByTwo(usize),
    #[error("closed form requires a positive definite matrix")]
    NotPositiveDefinite,
    #[error("matrix must be positive semi-definite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("improvement ratio undefined for a zero gradient")]
    ZeroGradient,
}

// Gray-code runs are restarted from a freshly computed product every
// 2^INNER_BITS steps, which bounds rounding drift and makes the chunking
// independent of the thread count.
const INNER_BITS: usize = 12;

fn column(h: &SymMatrix, j: usize) -> Vec<f64> {
    (0..h.dim()).map(|i| h.get(i, j)).collect()
}

/// Exact `max_{s ∈ {−1,1}^d} ‖Hs‖₁` by Gray-code enumeration.
///
/// Uses `‖H(−s)‖₁ = ‖Hs‖₁` to fix the last sign, so `2^(d−1)` vectors are
/// visited, each in `O(d)` work.
pub fn linf_bruteforce(h: &SymMatrix) -> Result<f64, AnalysisError> {
    let d = h.dim();
    if d > BRUTE_FORCE_MAX_DIM {
        return Err(AnalysisError::DimensionTooLarge { d });
    }
    if d == 0 {
        return Err(MatrixError::Empty.into());
    }
    let free = d - 1;
    let inner = free.min(INNER_BITS);
    let outer = free - inner;
    let cols: Vec<Vec<f64>> = (0..d).map(|j| column(h, j)).collect();

    let chunk_max = |chunk: u64| -> f64 {
        let mut s = vec![1.0f64; d];
        for b in 0..outer {
            if chunk >> b & 1 == 1 {
                s[inner + b] = -1.0;
            }
        }
        let mut y = h.matvec(&s);
        let mut best = norms::l1(&y);
        for k in 1u64..(1u64 << inner) {
            let i = k.trailing_zeros() as usize;
            s[i] = -s[i];
            let twice = 2.0 * s[i];
            for (yr, hr) in y.iter_mut().zip(&cols[i]) {
                *yr += twice * hr;
            }
            best = best.max(norms::l1(&y));
        }
        best
    };

    let best = (0..1u64 << outer)
        .into_par_iter()
        .map(chunk_max)
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `ρ_diag(H) = Σ|Hᵢᵢ| / Σ|Hᵢⱼ|`.
pub fn rho_diag(h: &SymMatrix) -> Result<f64, AnalysisError> {
    let d = h.dim();
    let diag: f64 = (0..d).map(|i| h.get(i, i).abs()).sum();
    let total: f64 = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| h.get(i, j).abs())
        .sum();
    if total == 0.0 {
        return Err(AnalysisError::ZeroMatrix);
    }
    Ok(diag / total)
}

/// Eigen-based brackets on `‖H‖∞,1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfBounds {
    /// `ρ_diag⁻¹ Σλᵢ`, only for PSD input.
    pub bound_psd: Option<f64>,
    /// `Σ|λᵢ|·‖vᵢ‖₁²`.
    pub bound_sym: f64,
    /// `maxᵢ |λᵢ|·‖vᵢ‖₁/‖vᵢ‖∞`.
    pub lower_bound: f64,
}

pub fn linf_bounds(h: &SymMatrix) -> Result<LinfBounds, AnalysisError> {
    let eig = eigh(h)?;
    let d = h.dim();
    let mut bound_sym = 0.0;
    let mut lower_bound = 0.0f64;
    for k in 0..d {
        let v = eig.vector(k);
        let lam = eig.values[k].abs();
        let v1 = norms::l1(&v);
        bound_sym += lam * v1 * v1;
        lower_bound = lower_bound.max(lam * v1 / norms::linf(&v));
    }
    let bound_psd = if eig.values[0] >= -PSD_TOL {
        match rho_diag(h) {
            Ok(rho) => Some(eig.values.iter().sum::<f64>() / rho),
            Err(AnalysisError::ZeroMatrix) => Some(0.0),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(LinfBounds {
        bound_psd,
        bound_sym,
        lower_bound,
    })
}

/// Diagonally dominant separable bound `lᵢ = Σⱼ|Hᵢⱼ|` and its total.
pub fn lsep_rowsum(h: &SymMatrix) -> (Vec<f64>, f64) {
    let d = h.dim();
    let l: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| h.get(i, j).abs()).sum())
        .collect();
    let total = l.iter().sum();
    (l, total)
}

/// `a + d + 2|b|` for a positive definite `[[a, b], [b, d]]`.
pub fn lsep_exact_2x2(h: &SymMatrix) -> Result<f64, AnalysisError> {
    if h.dim() != 2 {
        return Err(AnalysisError::NotTwoByTwo(h.dim()));
    }
    let (a, b, d) = (h.get(0, 0), h.get(0, 1), h.get(1, 1));
    if !(a > 0.0 && a * d - b * b > 0.0) {
        return Err(AnalysisError::NotPositiveDefinite);
    }
    Ok(a + d + 2.0 * b.abs())
}

fn block(h: &SymMatrix, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| cols.iter().map(|&j| h.get(i, j)).collect())
        .collect()
}

/// Spectral norm of a rectangular block via `λ_max(MᵀM)`.
fn rect_spectral_norm(m: &[Vec<f64>]) -> Result<f64, MatrixError> {
    let cols = m.first().map_or(0, Vec::len);
    let gram = SymMatrix::from_fn(cols, |i, j| m.iter().map(|r| r[i] * r[j]).sum());
    let eig = eigh(&gram)?;
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// `Σ_{B,B'} ‖H_BB'‖₂`, an upper bound on the block matrix norm of any
/// symmetric `H`.
pub fn block_norm_upper(h: &SymMatrix, partition: &BlockPartition) -> Result<f64, AnalysisError> {
    NormKind::BlockMax(partition.clone()).check_dim(h.dim())?;
    let mut total = 0.0;
    for b in partition.blocks() {
        for c in partition.blocks() {
            total += rect_spectral_norm(&block(h, b, c))?;
        }
    }
    Ok(total)
}

/// Concentration of a PSD matrix on its block diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub rho_block: f64,
    pub bound: f64,
    pub sampled_lower: f64,
    pub block_lambda_max: Vec<f64>,
}

/// Block concentration `ρ^B`, the resulting upper bound on
/// `max_{‖x‖^B∞≤1} ‖Hx‖^B₁`, and a sampled lower estimate of that norm.
pub fn block_analysis<R: Rng + ?Sized>(
    h: &SymMatrix,
    partition: &BlockPartition,
    samples: usize,
    rng: &mut R,
) -> Result<BlockReport, AnalysisError> {
    let kind = NormKind::BlockMax(partition.clone());
    kind.check_dim(h.dim())?;
    let eig = eigh(h)?;
    if eig.values[0] < -PSD_TOL {
        return Err(AnalysisError::NotPsd(eig.values[0]));
    }
    let mut diag_sum = 0.0;
    let mut all_sum = 0.0;
    let mut block_lambda_max = Vec::with_capacity(partition.len());
    for b in partition.blocks() {
        for c in partition.blocks() {
            let n = rect_spectral_norm(&block(h, b, c))?;
            all_sum += n;
            if std::ptr::eq(b, c) {
                diag_sum += n;
            }
        }
        let sub = eigh(&h.principal(b))?;
        block_lambda_max.push(*sub.values.last().expect("non-empty block"));
    }
    if all_sum == 0.0 {
        return Err(AnalysisError::ZeroMatrix);
    }
    let rho_block = diag_sum / all_sum;
    let bound = block_lambda_max.iter().sum::<f64>() / rho_block;

    let mut sampled_lower = 0.0f64;
    let mut x = vec![0.0; h.dim()];
    for _ in 0..samples {
        for b in partition.blocks() {
            // uniform direction on each block's unit sphere
            let mut n2 = 0.0;
            while n2 == 0.0 {
                for &i in b {
                    x[i] = rng.sample(StandardNormal);
                }
                n2 = b.iter().map(|&i| x[i] * x[i]).sum::<f64>();
            }
            let n = n2.sqrt();
            for &i in b {
                x[i] /= n;
            }
        }
        sampled_lower = sampled_lower.max(kind.dual_norm_unchecked(&h.matvec(&x)));
    }

    Ok(BlockReport {
        rho_block,
        bound,
        sampled_lower,
        block_lambda_max,
    })
}

/// `R = φ(∇f)·d·L2/L∞`, the ratio of guaranteed one-step improvements of
/// norm-scaled sign descent over gradient descent.
pub fn improvement_ratio(l2: f64, linf: f64, grad: &[f64]) -> Result<f64, AnalysisError> {
    let phi = norms::gradient_density(grad).map_err(|_| AnalysisError::ZeroGradient)?;
    Ok(phi * grad.len() as f64 * l2 / linf)
}

/// The smoothness constant of `½xᵀHx` with respect to `kind`, i.e. the
/// induced norm `max_{‖x‖≤1} ‖Hx‖*`.
///
/// Exact for every geometry except the block-max one, where the
/// `Σ_{B,B'} ‖H_BB'‖₂` upper bound is returned.
pub fn smoothness_constant(h: &SymMatrix, kind: &NormKind) -> Result<f64, AnalysisError> {
    let d = h.dim();
    kind.check_dim(d)?;
    match kind {
        NormKind::Euclidean => Ok(eigh(h)?.max_abs_value()),
        NormKind::Max => linf_bruteforce(h),
        NormKind::One => Ok(h.max_abs()),
        NormKind::WeightedDiag(l) => {
            let scaled = SymMatrix::from_fn(d, |i, j| h.get(i, j) / (l[i] * l[j]).sqrt());
            Ok(eigh(&scaled)?.max_abs_value())
        }
        NormKind::BlockMax(p) => block_norm_upper(h, p),
    }
}

/// Geometry summary of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(
        rename = "Linf_exact",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub linf_exact: Option<f64>,
    pub rho_diag: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound_psd: Option<f64>,
    pub bound_sym: f64,
    pub lower_bound: f64,
    pub lsep_rowsum: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lsep_exact_2x2: Option<f64>,
    #[serde(
        rename = "ratio_dL2_over_Linf",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub ratio_dl2_over_linf: Option<f64>,
}

impl SmoothnessReport {
    /// Builds the report; the exact `L∞` is skipped above
    /// [`BRUTE_FORCE_MAX_DIM`].
    pub fn compute(h: &SymMatrix) -> Result<Self, AnalysisError> {
        let d = h.dim();
        let eig = eigh(h)?;
        let l2 = eig.max_abs_value();
        let linf_exact = if d <= BRUTE_FORCE_MAX_DIM {
            Some(linf_bruteforce(h)?)
        } else {
            None
        };
        let bounds = linf_bounds(h)?;
        let lsep_exact_2x2 = if d == 2 { lsep_exact_2x2(h).ok() } else { None };
        let ratio_dl2_over_linf = linf_exact.filter(|&l| l > 0.0).map(|l| d as f64 * l2 / l);
        Ok(Self {
            l2,
            linf_exact,
            rho_diag: rho_diag(h)?,
            bound_psd: bounds.bound_psd,
            bound_sym: bounds.bound_sym,
            lower_bound: bounds.lower_bound,
            lsep_rowsum: lsep_rowsum(h).1,
            lsep_exact_2x2,
            ratio_dl2_over_linf,
        })
    }
}

/// True when `H` passes the PSD test used throughout this module.
pub fn is_psd_default(h: &SymMatrix) -> Result<bool, AnalysisError> {
    Ok(is_psd(h, PSD_TOL)?)
}
