//! Dense real linear algebra for small symmetric problems.
//!
//! Everything here targets desk-scale dimensions (d up to a few dozen). The
//! cyclic Jacobi eigensolver backs all spectral quantities; skew generators
//! and their exponentials build the rotated-spectrum test Hessians.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors raised by matrix construction, parsing and decomposition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix must have dimension at least 1")]
    Empty,
    #[error("non-finite entry at ({0}, {1})")]
    NotFinite(usize, usize),
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failed: off-diagonal residual {residual:e} after {sweeps} sweeps")]
    EigenFailed { residual: f64, sweeps: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Square dense matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(MatrixError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len(), "matvec dimension mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum; an upper bound on the spectral norm.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `(A + Aᵀ) / 2` as a symmetric matrix.
    pub fn symmetrize(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    /// `AᵀA`, which is symmetric positive semi-definite.
    pub fn gram(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self.get(k, i) * self.get(k, j)).sum()
        })
    }
}

/// Dense real symmetric matrix. Only the upper triangle is stored, so
/// `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    #[inline]
    fn offset(dim: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row i of the packed upper triangle starts after i rows of shrinking length
        i * dim - i * (i + 1) / 2 + j
    }

    /// Builds a symmetric matrix reading `f(i, j)` for `i <= j` only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        Self { dim, upper }
    }

    /// Validates and builds from row data. Entries must be finite and
    /// symmetric within `sym_tol` (relative to the larger of 1 and the
    /// magnitudes involved); the result is the symmetrized average.
    pub fn from_rows(rows: &[Vec<f64>], sym_tol: f64) -> Result<Self, MatrixError> {
        let m = Matrix::from_rows(rows)?;
        Self::from_dense(&m, sym_tol)
    }

    pub fn from_dense(m: &Matrix, sym_tol: f64) -> Result<Self, MatrixError> {
        let n = m.dim();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        for i in 0..n {
            for j in 0..n {
                let a = m.get(i, j);
                if !a.is_finite() {
                    return Err(MatrixError::NotFinite(i, j));
                }
                if j > i {
                    let b = m.get(j, i);
                    let diff = (a - b).abs();
                    if diff > sym_tol * 1f64.max(a.abs()).max(b.abs()) {
                        return Err(MatrixError::Asymmetric { i, j, diff });
                    }
                }
            }
        }
        Ok(m.symmetrize())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[Self::offset(self.dim, i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        s.sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, x.len(), "matvec dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `xᵀ H x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            upper: self.upper.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.get(i, j))
    }

    /// Principal submatrix on the given index set.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Parses the text format: the dimension on the first line, then `d`
    /// lines of `d` whitespace-separated numbers. Blank lines are skipped.
    pub fn parse_text(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first_no, first) = lines.next().ok_or(MatrixError::Parse {
            line: 1,
            msg: "missing dimension".into(),
        })?;
        let d: usize = first.parse().map_err(|_| MatrixError::Parse {
            line: first_no,
            msg: format!("invalid dimension {first:?}"),
        })?;
        if d == 0 {
            return Err(MatrixError::Empty);
        }
        let mut rows = Vec::with_capacity(d);
        for (line_no, line) in lines {
            if rows.len() == d {
                return Err(MatrixError::Parse {
                    line: line_no,
                    msg: "unexpected trailing data".into(),
                });
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| MatrixError::Parse {
                        line: line_no,
                        msg: format!("invalid number {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != d {
                return Err(MatrixError::Parse {
                    line: line_no,
                    msg: format!("expected {d} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != d {
            return Err(MatrixError::Parse {
                line: rows.len() + 2,
                msg: format!("expected {d} rows, found {}", rows.len()),
            });
        }
        Self::from_rows(&rows, 1e-12)
    }
}

impl fmt::Display for SymMatrix {
    /// Writes the text format accepted by [`SymMatrix::parse_text`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:.16e}", self.get(i, j)))
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        Matrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k))
                .sum()
        })
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).powi(2);
            }
        }
    }
    s.sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius mass drops to
/// `1e-14 · ‖H‖_F`, giving up after 100 sweeps.
pub fn eigh(h: &SymMatrix) -> Result<EigenDecomposition, MatrixError> {
    let n = h.dim();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    if !h.is_finite() {
        return Err(MatrixError::NotFinite(0, 0));
    }
    let mut a = h.to_dense();
    let mut v = Matrix::identity(n);
    let target = JACOBI_REL_TOL * h.frobenius();

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(MatrixError::EigenFailed {
                residual: off,
                sweeps,
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k != p && k != q {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        let nkp = c * akp - s * akq;
                        let nkq = s * akp + c * akq;
                        a.set(k, p, nkp);
                        a.set(p, k, nkp);
                        a.set(k, q, nkq);
                        a.set(q, k, nkq);
                    }
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&k| a.get(k, k)).collect();
    let vectors = Matrix::from_fn(n, |i, j| v.get(i, order[j]));
    Ok(EigenDecomposition { values, vectors })
}

/// `λ_min(H) ≥ −tol`.
pub fn is_psd(h: &SymMatrix, tol: f64) -> Result<bool, MatrixError> {
    let eig = eigh(h)?;
    Ok(eig.values[0] >= -tol)
}

/// Largest singular value of a general square matrix, via `λ_max(AᵀA)`.
pub fn spectral_norm(a: &Matrix) -> Result<f64, MatrixError> {
    let eig = eigh(&a.gram())?;
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Real skew-symmetric matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(Matrix);

impl SkewMatrix {
    /// Builds from the strictly-upper entries of `m`, mirroring them negated.
    pub fn from_upper(m: &Matrix) -> Self {
        let n = m.dim();
        Self(Matrix::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => m.get(i, j),
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -m.get(j, i),
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn largest_singular_value(&self) -> Result<f64, MatrixError> {
        spectral_norm(&self.0)
    }
}

/// Real orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(Matrix);

impl OrthogonalMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `‖QᵀQ − I‖_max`.
    pub fn orthogonality_residual(&self) -> f64 {
        self.0
            .transpose()
            .matmul(&self.0)
            .sub(&Matrix::identity(self.0.dim()))
            .max_abs()
    }
}

/// Gaussian skew-symmetric generator scaled so its largest singular value
/// is π. Deterministic for a given generator state.
pub fn random_skew<R: Rng + ?Sized>(d: usize, rng: &mut R) -> SkewMatrix {
    assert!(d >= 2, "random_skew requires d >= 2");
    let mut upper = Matrix::zeros(d);
    for i in 0..d {
        for j in i + 1..d {
            upper.set(i, j, rng.sample(StandardNormal));
        }
    }
    let raw = SkewMatrix::from_upper(&upper);
    // SᵀS is PSD and tiny, the eigensolver cannot fail on it
    let top = raw
        .largest_singular_value()
        .expect("Gram matrix of a finite skew matrix");
    SkewMatrix(raw.0.scale(PI / top))
}

/// `exp(θ·S)` by scaling and squaring with a truncated Taylor series.
pub fn exp_skew(s: &SkewMatrix, theta: f64) -> OrthogonalMatrix {
    let n = s.dim();
    let a = s.0.scale(theta);
    let norm = a.norm_one();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let a = a.scale(1.0 / 2f64.powi(squarings as i32));

    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&a).scale(1.0 / k as f64);
        result = result.add(&term);
        if term.max_abs() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    OrthogonalMatrix(result)
}

/// `Q(θ)·diag(eigs)·Q(θ)ᵀ` with `Q(θ) = exp(θ·S)`, symmetrized.
///
/// An isotropic spectrum is returned as an exact multiple of the identity.
pub fn rotated_hessian(eigs: &[f64], s: &SkewMatrix, theta: f64) -> SymMatrix {
    assert_eq!(
        eigs.len(),
        s.dim(),
        "spectrum and generator dimensions differ"
    );
    if eigs.iter().all(|&e| e == eigs[0]) {
        return SymMatrix::diag(eigs);
    }
    let q = exp_skew(s, theta).into_matrix();
    let n = eigs.len();
    let scaled = Matrix::from_fn(n, |i, j| q.get(i, j) * eigs[j]);
    scaled.matmul(&q.transpose()).symmetrize()
}
