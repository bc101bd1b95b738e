use std::io::{self, Write};

/// Summary of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub f: f64,
    /// Dual norm of the gradient in the run's geometry.
    pub dual_grad_norm: f64,
    /// `‖x_t − x*‖₂²` when the minimizer is known.
    pub dist_sq: Option<f64>,
}

/// Per-iteration history of a run, `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub x_final: Vec<f64>,
    /// First iteration whose dual gradient norm met the stopping tolerance.
    pub first_hit: Option<usize>,
    /// Every iterate `x_0, …, x_T`, kept only on request.
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn f0(&self) -> f64 {
        self.records[0].f
    }

    pub fn last(&self) -> &StepRecord {
        self.records
            .last()
            .expect("trace holds at least the initial point")
    }

    /// Writes `t,f,dual_grad_norm,dist_sq` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,f,dual_grad_norm,dist_sq")?;
        for r in &self.records {
            let dist = r.dist_sq.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                r.t, r.f, r.dual_grad_norm, dist
            )?;
        }
        Ok(())
    }
}

/// Iteration budget and recording options shared by all runners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub iters: usize,
    pub keep_iterates: bool,
}

impl RunOptions {
    pub fn new(iters: usize) -> Self {
        Self {
            iters,
            keep_iterates: false,
        }
    }

    pub fn keep_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }
}
