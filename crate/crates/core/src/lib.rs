//! Steepest descent under arbitrary norms, including sign-based and
//! Adam-type methods, with tools for measuring how well a Hessian suits
//! each geometry.

pub mod analysis;
pub mod experiments;
pub mod matrix;
pub mod norms;
pub mod optim;
pub mod problems;

pub use analysis::{AnalysisError, BlockReport, LinfBounds, SmoothnessReport};
pub use matrix::{EigenDecomposition, Matrix, MatrixError, SymMatrix};
pub use norms::{BlockPartition, NormError, NormKind};
pub use optim::{AdamConfig, AdamVariant, OptimError, RunOptions, StepSchedule, Trace};
pub use problems::{CoshProblem, Oracle, ProblemError, QuadraticProblem};
