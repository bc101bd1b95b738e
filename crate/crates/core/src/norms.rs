//! Vector norms with their duals, plus the steepest-descent operator
//! `P(z) ∈ argmax_x ⟨z, x⟩ − ½‖x‖²` for each supported geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("norm expects dimension {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be finite and strictly positive (index {0})")]
    NonPositiveWeight(usize),
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),
    #[error("gradient density is undefined for the zero vector")]
    ZeroVector,
}

/// Disjoint, non-empty index blocks covering `0..d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self, NormError> {
        let dim: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; dim];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(NormError::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= dim {
                    return Err(NormError::InvalidPartition(format!(
                        "index {i} outside 0..{dim}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(NormError::InvalidPartition(format!(
                        "index {i} appears twice"
                    )));
                }
            }
        }
        if dim == 0 {
            return Err(NormError::InvalidPartition("no blocks".into()));
        }
        Ok(Self { blocks, dim })
    }

    /// One block per coordinate.
    pub fn singletons(d: usize) -> Self {
        Self {
            blocks: (0..d).map(|i| vec![i]).collect(),
            dim: d,
        }
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self, NormError> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (start..start + s).collect();
                start += s;
                b
            })
            .collect();
        Self::new(blocks)
    }

    pub fn whole(d: usize) -> Self {
        Self {
            blocks: vec![(0..d).collect()],
            dim: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

impl TryFrom<Vec<Vec<usize>>> for BlockPartition {
    type Error = NormError;

    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self, Self::Error> {
        Self::new(blocks)
    }
}

impl From<BlockPartition> for Vec<Vec<usize>> {
    fn from(p: BlockPartition) -> Self {
        p.blocks
    }
}

/// Which norm defines the steepest-descent geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// ℓ2; steepest descent is gradient descent.
    Euclidean,
    /// ℓ∞; steepest descent is norm-scaled sign descent.
    Max,
    /// ℓ1; steepest descent is greedy coordinate descent.
    One,
    /// `‖x‖_L = sqrt(Σ lᵢ xᵢ²)` with positive weights.
    #[serde(rename = "weighted")]
    WeightedDiag(Vec<f64>),
    /// `max_B ‖x_B‖₂`; steepest descent is block-normalized GD.
    #[serde(rename = "blockmax")]
    BlockMax(BlockPartition),
}

impl NormKind {
    /// Checks that the kind is valid for vectors of length `d`.
    pub fn check_dim(&self, d: usize) -> Result<(), NormError> {
        match self {
            NormKind::Euclidean | NormKind::Max | NormKind::One => Ok(()),
            NormKind::WeightedDiag(l) => {
                if l.len() != d {
                    return Err(NormError::DimensionMismatch {
                        expected: l.len(),
                        got: d,
                    });
                }
                match l.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
                    Some(i) => Err(NormError::NonPositiveWeight(i)),
                    None => Ok(()),
                }
            }
            NormKind::BlockMax(p) if p.dim() != d => Err(NormError::DimensionMismatch {
                expected: p.dim(),
                got: d,
            }),
            NormKind::BlockMax(_) => Ok(()),
        }
    }

    /// Short lowercase label, used in reports and test output.
    pub fn label(&self) -> &'static str {
        match self {
            NormKind::Euclidean => "euclidean",
            NormKind::Max => "max",
            NormKind::One => "one",
            NormKind::WeightedDiag(_) => "weighted",
            NormKind::BlockMax(_) => "blockmax",
        }
    }

    /// `max ‖x‖` over the Euclidean unit ball in dimension `d`; converts a
    /// Euclidean radius into a radius in this norm.
    pub fn euclidean_ball_radius(&self, d: usize) -> f64 {
        match self {
            NormKind::Euclidean | NormKind::Max | NormKind::BlockMax(_) => 1.0,
            NormKind::One => (d as f64).sqrt(),
            NormKind::WeightedDiag(l) => l.iter().copied().fold(0.0, f64::max).sqrt(),
        }
    }

    /// Largest `c` with `‖z‖*² ≥ c·‖z‖₂²` for all `z`; turns a Euclidean
    /// PL constant into one for this geometry.
    pub fn dual_lower_ratio(&self, d: usize) -> f64 {
        match self {
            NormKind::Euclidean | NormKind::Max | NormKind::BlockMax(_) => 1.0,
            NormKind::One => 1.0 / d as f64,
            NormKind::WeightedDiag(l) => 1.0 / l.iter().copied().fold(0.0, f64::max),
        }
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => l2(x),
            NormKind::Max => linf(x),
            NormKind::One => l1(x),
            NormKind::WeightedDiag(l) => x
                .iter()
                .zip(l)
                .map(|(xi, li)| li * xi * xi)
                .sum::<f64>()
                .sqrt(),
            NormKind::BlockMax(p) => p
                .blocks()
                .iter()
                .map(|b| block_l2(x, b))
                .fold(0.0, f64::max),
        }
    }

    pub(crate) fn dual_norm_unchecked(&self, z: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => l2(z),
            NormKind::Max => l1(z),
            NormKind::One => linf(z),
            NormKind::WeightedDiag(l) => z
                .iter()
                .zip(l)
                .map(|(zi, li)| zi * zi / li)
                .sum::<f64>()
                .sqrt(),
            NormKind::BlockMax(p) => p.blocks().iter().map(|b| block_l2(z, b)).sum(),
        }
    }

    pub(crate) fn steepest_op_unchecked(&self, z: &[f64]) -> Vec<f64> {
        match self {
            NormKind::Euclidean => z.to_vec(),
            NormKind::Max => {
                let scale = l1(z);
                z.iter().map(|&zi| scale * sign(zi)).collect()
            }
            NormKind::One => {
                let mut out = vec![0.0; z.len()];
                if let Some(imax) = argmax_abs(z) {
                    out[imax] = z[imax];
                }
                out
            }
            NormKind::WeightedDiag(l) => z.iter().zip(l).map(|(zi, li)| zi / li).collect(),
            NormKind::BlockMax(p) => {
                let scale = self.dual_norm_unchecked(z);
                let mut out = vec![0.0; z.len()];
                for b in p.blocks() {
                    let nb = block_l2(z, b);
                    if nb > 0.0 {
                        for &i in b {
                            out[i] = scale * z[i] / nb;
                        }
                    }
                }
                out
            }
        }
    }
}

/// Sign with the convention `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn block_l2(x: &[f64], block: &[usize]) -> f64 {
    block.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
}

/// First index of the largest absolute entry.
fn argmax_abs(z: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in z.iter().enumerate() {
        let a = v.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

pub fn norm(x: &[f64], kind: &NormKind) -> Result<f64, NormError> {
    kind.check_dim(x.len())?;
    Ok(kind.norm_unchecked(x))
}

pub fn dual_norm(z: &[f64], kind: &NormKind) -> Result<f64, NormError> {
    kind.check_dim(z.len())?;
    Ok(kind.dual_norm_unchecked(z))
}

/// The steepest-descent direction `P(z)`. Zero maps to zero; ties in the
/// ℓ1 geometry go to the smallest index and `sign(0) = +1` in the ℓ∞ one.
pub fn steepest_op(z: &[f64], kind: &NormKind) -> Result<Vec<f64>, NormError> {
    kind.check_dim(z.len())?;
    Ok(kind.steepest_op_unchecked(z))
}

/// `φ(z) = ‖z‖₁² / (d·‖z‖₂²)`, in `[1/d, 1]`.
pub fn gradient_density(z: &[f64]) -> Result<f64, NormError> {
    let s2: f64 = z.iter().map(|v| v * v).sum();
    if s2 == 0.0 || z.is_empty() {
        return Err(NormError::ZeroVector);
    }
    let s1 = l1(z);
    Ok(s1 * s1 / (z.len() as f64 * s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(d: usize) -> Vec<NormKind> {
        let weights = (0..d).map(|i| 0.5 + i as f64).collect();
        let half = d / 2;
        let blocks = BlockPartition::contiguous(&[half.max(1), d - half.max(1)])
            .unwrap_or_else(|_| BlockPartition::whole(d));
        vec![
            NormKind::Euclidean,
            NormKind::Max,
            NormKind::One,
            NormKind::WeightedDiag(weights),
            NormKind::BlockMax(blocks),
        ]
    }

    #[test]
    fn table_values() {
        assert_eq!(norm(&[3.0, -4.0], &NormKind::Euclidean).unwrap(), 5.0);
        assert_eq!(norm(&[1.0, -2.0, 0.0], &NormKind::Max).unwrap(), 2.0);
        assert_eq!(norm(&[1.0, -2.0, 0.0], &NormKind::One).unwrap(), 3.0);
        let w = NormKind::WeightedDiag(vec![1.0, 4.0]);
        assert_eq!(norm(&[2.0, 2.0], &w).unwrap(), 20f64.sqrt());
        assert_eq!(dual_norm(&[1.0, -2.0], &NormKind::Max).unwrap(), 3.0);
        assert_eq!(dual_norm(&[3.0, 4.0], &NormKind::Euclidean).unwrap(), 5.0);
    }

    #[test]
    fn steepest_directions() {
        assert_eq!(
            steepest_op(&[1.0, -2.0], &NormKind::Max).unwrap(),
            vec![3.0, -3.0]
        );
        assert_eq!(
            steepest_op(&[1.0, -2.0], &NormKind::One).unwrap(),
            vec![0.0, -2.0]
        );
        assert_eq!(
            steepest_op(&[2.0, -2.0], &NormKind::One).unwrap(),
            vec![2.0, 0.0]
        );
        for kind in kinds(3) {
            assert_eq!(steepest_op(&[0.0; 3], &kind).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn block_zero_block_maps_to_zero() {
        let p = BlockPartition::contiguous(&[2, 2]).unwrap();
        let out = steepest_op(&[0.0, 0.0, 3.0, 4.0], &NormKind::BlockMax(p)).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 3.0, 4.0]);
    }

    #[test]
    fn densities() {
        assert_eq!(gradient_density(&[1.0; 4]).unwrap(), 1.0);
        assert_eq!(gradient_density(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        assert!((gradient_density(&[3.0, 4.0]).unwrap() - 0.98).abs() < 1e-15);
        assert_eq!(gradient_density(&[0.0, 0.0]), Err(NormError::ZeroVector));
    }

    #[test]
    fn invalid_kinds_are_rejected() {
        assert!(norm(&[1.0], &NormKind::WeightedDiag(vec![1.0, 2.0])).is_err());
        assert_eq!(
            norm(&[1.0, 1.0], &NormKind::WeightedDiag(vec![1.0, 0.0])),
            Err(NormError::NonPositiveWeight(1))
        );
        assert!(BlockPartition::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(BlockPartition::new(vec![vec![0], vec![]]).is_err());
        assert!(BlockPartition::new(vec![vec![0, 2]]).is_err());
        let p = BlockPartition::contiguous(&[1, 1]).unwrap();
        assert!(steepest_op(&[1.0, 2.0, 3.0], &NormKind::BlockMax(p)).is_err());
    }

    #[test]
    fn json_forms() {
        let parsed: Vec<NormKind> = serde_json::from_str(
            r#"["euclidean", "max", "one", {"weighted": [1.0, 2.0]}, {"blockmax": [[0, 2], [1]]}]"#,
        )
        .unwrap();
        assert_eq!(parsed[0], NormKind::Euclidean);
        assert_eq!(parsed[3], NormKind::WeightedDiag(vec![1.0, 2.0]));
        assert_eq!(
            parsed[4],
            NormKind::BlockMax(BlockPartition::new(vec![vec![0, 2], vec![1]]).unwrap())
        );
        let back = serde_json::to_string(&parsed).unwrap();
        assert_eq!(
            back,
            r#"["euclidean","max","one",{"weighted":[1.0,2.0]},{"blockmax":[[0,2],[1]]}]"#
        );
        assert!(serde_json::from_str::<NormKind>(r#"{"blockmax": [[0], [0]]}"#).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 6)
    }

    proptest! {
        #[test]
        fn dual_identities(z in vec_strategy()) {
            for kind in kinds(6) {
                let p = kind.steepest_op_unchecked(&z);
                let pn = kind.norm_unchecked(&p);
                let dn = kind.dual_norm_unchecked(&z);
                let scale = 1f64.max(dn * dn);
                prop_assert!((pn * pn - dot(&z, &p)).abs() <= 1e-10 * scale, "{kind:?}");
                prop_assert!((pn - dn).abs() <= 1e-10 * 1f64.max(dn), "{kind:?}");
            }
        }

        #[test]
        fn holder_inequality(x in vec_strategy(), z in vec_strategy()) {
            for kind in kinds(6) {
                let lhs = dot(&x, &z);
                let rhs = kind.norm_unchecked(&x) * kind.dual_norm_unchecked(&z);
                prop_assert!(lhs <= rhs + 1e-10 * 1f64.max(rhs.abs()));
                // the steepest direction attains the dual norm
                let p = kind.steepest_op_unchecked(&z);
                let pn = kind.norm_unchecked(&p);
                if pn > 0.0 {
                    let attained = dot(&z, &p) / pn;
                    prop_assert!((attained - kind.dual_norm_unchecked(&z)).abs() <= 1e-9 * 1f64.max(attained));
                }
            }
        }

        #[test]
        fn steepest_op_is_optimal(z in vec_strategy(), dx in prop::collection::vec(-1.0f64..1.0, 6), scale in 1e-3f64..2.0) {
            for kind in kinds(6) {
                let p = kind.steepest_op_unchecked(&z);
                let obj = |x: &[f64]| dot(&z, x) - 0.5 * kind.norm_unchecked(x).powi(2);
                let best = obj(&p);
                let x: Vec<f64> = p.iter().zip(&dx).map(|(a, b)| a + scale * b).collect();
                prop_assert!(obj(&x) <= best + 1e-10 * 1f64.max(best.abs()), "{kind:?}");
            }
        }

        #[test]
        fn norm_sandwich(z in vec_strategy()) {
            let d = z.len() as f64;
            let tol = 1e-12 * 1f64.max(l1(&z));
            prop_assert!(linf(&z) <= l2(&z) + tol);
            prop_assert!(l2(&z) <= l1(&z) + tol);
            prop_assert!(l1(&z) <= d.sqrt() * l2(&z) + tol);
            prop_assert!(d.sqrt() * l2(&z) <= d * linf(&z) + tol);
        }

        #[test]
        fn density_scale_invariant(z in vec_strategy(), c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
            prop_assume!(l2(&z) > 1e-6);
            let phi = gradient_density(&z).unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
            prop_assert!((gradient_density(&scaled).unwrap() - phi).abs() < 1e-12);
            let d = z.len() as f64;
            prop_assert!(phi >= 1.0 / d - 1e-12 && phi <= 1.0 + 1e-12);
        }

        #[test]
        fn singleton_blocks_match_max(z in vec_strategy()) {
            let block = NormKind::BlockMax(BlockPartition::singletons(6));
            prop_assert!((block.norm_unchecked(&z) - NormKind::Max.norm_unchecked(&z)).abs() <= 1e-12);
            prop_assert!((block.dual_norm_unchecked(&z) - NormKind::Max.dual_norm_unchecked(&z)).abs() <= 1e-12);
            let pb = block.steepest_op_unchecked(&z);
            let pm = NormKind::Max.steepest_op_unchecked(&z);
            for (a, b) in pb.iter().zip(&pm) {
                // zero coordinates differ only by the sign(0) convention
                if *a != 0.0 {
                    prop_assert!((a - b).abs() <= 1e-12 * 1f64.max(b.abs()));
                }
            }
        }
    }
}
