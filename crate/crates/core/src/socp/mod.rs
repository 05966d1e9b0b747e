//! Conic programs with a linear objective over zero, nonnegative, second-order
//! and rotated second-order cones.
//!
//! A program is stated as
//!
//! ```text
//! minimize    qᵀx
//! subject to  A_i x + c_i ∈ K_i      for every block i
//! ```
//!
//! with the dual multipliers `y_i ∈ K_i*` attached to each block. All four cone
//! families are self-dual, so the KKT conditions read
//!
//! ```text
//! Σ A_iᵀ y_i = q,   A_i x + c_i ∈ K_i,   y_i ∈ K_i,   Σ y_iᵀ(A_i x + c_i) = 0.
//! ```
//!
//! The rotated cone of dimension `d` is `{(u, v, z) : 2uv ≥ ‖z‖², u, v ≥ 0}`.

mod dump;
mod kkt;
mod solve;

pub use dump::write_standard_form;
pub use kkt::{cone_distance, kkt_residuals, ResidualRecord};
pub use solve::{solve, solve_with, SolverSettings};

use crate::{Error, Result};

/// Cone attached to one affine block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    /// `(t, z)` with `‖z‖ ≤ t`; the dimension counts `t`.
    Soc(usize),
    /// `(u, v, z)` with `2uv ≥ ‖z‖²`.
    Rsoc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonneg(d) | Cone::Soc(d) | Cone::Rsoc(d) => d,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Cone::Zero(_) => "ZERO",
            Cone::Nonneg(_) => "NONNEG",
            Cone::Soc(_) => "SOC",
            Cone::Rsoc(_) => "RSOC",
        }
    }
}

/// Sparse row: `(variable index, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// One constraint `A x + c ∈ K`.
#[derive(Clone, Debug)]
pub struct AffineBlock {
    pub cone: Cone,
    pub rows: Vec<SparseRow>,
    pub constant: Vec<f64>,
}

impl AffineBlock {
    pub fn new(cone: Cone, rows: Vec<SparseRow>, constant: Vec<f64>) -> Self {
        AffineBlock { cone, rows, constant }
    }

    /// Evaluates `A x + c` for this block.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.constant)
            .map(|(row, c)| c + row.iter().map(|&(j, a)| a * x[j]).sum::<f64>())
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<AffineBlock>,
}

impl ConeProgram {
    pub fn new(num_vars: usize) -> Self {
        ConeProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            blocks: Vec::new(),
        }
    }

    /// Appends a block, checking its shape against the cone and variable count.
    pub fn push(&mut self, block: AffineBlock) -> Result<()> {
        let d = block.cone.dim();
        let min_dim = match block.cone {
            Cone::Zero(_) | Cone::Nonneg(_) => 1,
            Cone::Soc(_) => 2,
            Cone::Rsoc(_) => 3,
        };
        if d < min_dim {
            return Err(Error::invalid(format!(
                "{} cone of dimension {d} (minimum {min_dim})",
                block.cone.tag()
            )));
        }
        if block.rows.len() != d || block.constant.len() != d {
            return Err(Error::invalid(format!(
                "{} block has {} rows and {} constants for cone dimension {d}",
                block.cone.tag(),
                block.rows.len(),
                block.constant.len()
            )));
        }
        if let Some(&(j, _)) = block.rows.iter().flatten().find(|&&(j, _)| j >= self.num_vars) {
            return Err(Error::invalid(format!(
                "variable index {j} out of range for {} variables",
                self.num_vars
            )));
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.dim()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::invalid(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        let mut check = ConeProgram::new(self.num_vars);
        for b in &self.blocks {
            check.push(b.clone())?;
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(q, x)| q * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalError,
}

/// Solver output. For `Infeasible` the dual vector holds a certificate `y`
/// normalized so that `cᵀy = -1`, and `x` is meaningless.
#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub iterations: u32,
}

impl ConeSolution {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.duality_gap)
    }
}
