//! Test objectives with known minimizers. Rotated quadratics have a
//! controlled spectrum and optional gradient noise; the separable `cosh`
//! objective has curvature that grows with the gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::analysis::{AnalysisError, SmoothnessReport, PSD_TOL};
use crate::matrix::{eigh, random_skew, rotated_hessian, MatrixError, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("quadratic problems need dimension >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("lambda_max must be finite and >= 1, got {0}")]
    BadLambdaMax(f64),
    #[error("theta must lie in [0, 1], got {0}")]
    BadTheta(f64),
    #[error("Hessian is not positive semi-definite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("noise level must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error("cosh objective overflows for |x_i| > {COSH_MAX_ABS}")]
    Overflow,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// First-order oracle: returns `(f(x), g)` where `g` is the gradient or an
/// unbiased estimate of it.
pub trait Oracle {
    fn dim(&self) -> usize;

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>);

    /// Whether `eval` is a pure function of `x`.
    fn is_deterministic(&self) -> bool {
        true
    }

    /// The global minimizer, when known.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).eval(x)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        (**self).minimizer()
    }
}

/// `f(x) = ½ xᵀHx` with PSD `H`; minimized at the origin with `f* = 0`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    h: SymMatrix,
    analysis: SmoothnessReport,
}

impl QuadraticProblem {
    pub fn from_hessian(h: SymMatrix) -> Result<Self, ProblemError> {
        let lmin = eigh(&h)?.values[0];
        if lmin < -PSD_TOL {
            return Err(ProblemError::NotPsd(lmin));
        }
        let analysis = SmoothnessReport::compute(&h)?;
        Ok(Self { h, analysis })
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.h
    }

    pub fn analysis(&self) -> &SmoothnessReport {
        &self.analysis
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn quad_eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let g = self.h.matvec(x);
        let f = 0.5 * g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        (f, g)
    }

    /// Deterministic-per-call noisy gradient oracle over this problem.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> NoisyQuadratic<'_> {
        NoisyQuadratic {
            problem: self,
            sigma,
            seed,
            calls: 0,
        }
    }
}

impl Oracle for QuadraticProblem {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.quad_eval(x)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.h.dim()])
    }
}

impl Oracle for &QuadraticProblem {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.quad_eval(x)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.h.dim()])
    }
}

/// Spectrum `(1, …, 1, λ_max)` rotated by `exp(θ·S)` for a Gaussian skew
/// generator `S` drawn from `seed`.
pub fn make_quadratic(
    d: usize,
    lambda_max: f64,
    theta: f64,
    seed: u64,
) -> Result<QuadraticProblem, ProblemError> {
    if d < 2 {
        return Err(ProblemError::DimensionTooSmall(d));
    }
    if !(lambda_max.is_finite() && lambda_max >= 1.0) {
        return Err(ProblemError::BadLambdaMax(lambda_max));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(ProblemError::BadTheta(theta));
    }
    let mut eigs = vec![1.0; d];
    eigs[d - 1] = lambda_max;
    let skew = random_skew(d, &mut ChaCha8Rng::seed_from_u64(seed));
    QuadraticProblem::from_hessian(rotated_hessian(&eigs, &skew, theta))
}

/// `Hx + σξ` with `ξ ~ N(0, I)` drawn from stream `call_index` of the
/// generator seeded with `seed`, so the result is a pure function of its
/// arguments.
pub fn noisy_grad(
    p: &QuadraticProblem,
    x: &[f64],
    sigma: f64,
    seed: u64,
    call_index: u64,
) -> Vec<f64> {
    let mut g = p.h.matvec(x);
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(call_index);
        for gi in g.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *gi += sigma * xi;
        }
    }
    g
}

/// Stochastic oracle: exact `f`, gradient perturbed by isotropic Gaussian
/// noise. The `k`-th call uses stream `k`.
#[derive(Debug, Clone)]
pub struct NoisyQuadratic<'a> {
    problem: &'a QuadraticProblem,
    sigma: f64,
    seed: u64,
    calls: u64,
}

impl Oracle for NoisyQuadratic<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        let (f, _) = self.problem.quad_eval(x);
        let g = noisy_grad(self.problem, x, self.sigma, self.seed, self.calls);
        self.calls += 1;
        (f, g)
    }

    fn is_deterministic(&self) -> bool {
        self.sigma == 0.0
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.problem.dim()])
    }
}

pub const COSH_MAX_ABS: f64 = 700.0;

/// `f(x) = Σ cosh(xᵢ) − d`.
///
/// With respect to the max norm the Hessian norm is `Σ cosh(xᵢ)`, which is
/// at most `d + ‖∇f‖₁`, so the objective is `(d, 1)`-relaxed-smooth while
/// having no global smoothness constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoshProblem {
    pub dim: usize,
}

impl CoshProblem {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    /// `(L⁽⁰⁾, L⁽¹⁾)` with respect to the max norm.
    pub fn relaxed_constants(&self) -> (f64, f64) {
        (self.dim as f64, 1.0)
    }

    pub fn cosh_eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        assert_eq!(x.len(), self.dim, "cosh_eval dimension mismatch");
        if x.iter().any(|v| v.is_nan() || v.abs() > COSH_MAX_ABS) {
            return Err(ProblemError::Overflow);
        }
        let f = x.iter().map(|v| v.cosh() - 1.0).sum();
        let g = x.iter().map(|v| v.sinh()).collect();
        Ok((f, g))
    }
}

impl Oracle for CoshProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        // out-of-range points report an infinite value, which the optimizers
        // treat as divergence
        self.cosh_eval(x)
            .unwrap_or_else(|_| (f64::INFINITY, vec![f64::NAN; self.dim]))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }
}
