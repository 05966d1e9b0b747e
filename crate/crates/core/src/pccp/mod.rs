//! Joint AP selection and precoding by the penalized convex-concave procedure.
//!
//! The binary activation constraint `b_n ∈ {0, 1}` is split into a convex part
//! `b_n² − b_n ≤ 0` and a concave part that is linearized around the previous
//! iterate and relaxed by penalized slacks. Each outer iteration solves one
//! second-order cone program; the penalty weight grows geometrically so the
//! slacks are driven to zero and `b` to a binary point.

mod ccp;
mod fixed;
mod oracle;
mod restore;

pub use ccp::run_pccp;
pub use fixed::{solve_fixed_active_set, FixedSetOutcome};
pub use oracle::{exhaustive_oracle, exhaustive_oracle_with, OracleResult, SubsetOutcome, MAX_ORACLE_APS};
pub use restore::{round_and_restore, Restored};

use crate::probform::{ActivationVector, PrecoderSet, SubproblemForm};
use crate::socp::SolverSettings;
use crate::{Error, Result};

/// How the penalty weight evolves between iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LambdaUpdate {
    /// `λ ← min(ρλ, λ_max)`.
    #[default]
    Capped,
    /// `λ ← max(ρλ, λ_max)`, which jumps to `λ_max` after the first step.
    LiteralMax,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PccpParams {
    pub lambda0: f64,
    pub rho: f64,
    pub lambda_max: f64,
    /// Largest total slack accepted at convergence.
    pub psi: f64,
    /// Largest change in `b` between iterations accepted at convergence.
    pub omega: f64,
    /// Iterations per restart.
    pub t_max: usize,
    pub max_restarts: usize,
    pub rng_seed: u64,
    pub lambda_update: LambdaUpdate,
    pub form: SubproblemForm,
    pub solver: SolverSettings,
}

impl Default for PccpParams {
    fn default() -> Self {
        PccpParams {
            lambda0: 5e-2,
            rho: 2.0,
            lambda_max: 1e4,
            psi: 1e-5,
            omega: 1e-5,
            t_max: 100,
            max_restarts: 5,
            rng_seed: 0,
            lambda_update: LambdaUpdate::Capped,
            form: SubproblemForm::Perspective,
            solver: SolverSettings::default(),
        }
    }
}

impl PccpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("PCCP parameter {what}")));
        if !(self.rho > 1.0) {
            return bad("ρ must exceed 1");
        }
        if !(self.lambda0 > 0.0) {
            return bad("λ0 must be positive");
        }
        if !(self.lambda_max >= self.lambda0) {
            return bad("λ_max must be ≥ λ0");
        }
        if !(self.psi > 0.0) {
            return bad("ψ must be positive");
        }
        if !(self.omega > 0.0) {
            return bad("ω must be positive");
        }
        if self.t_max == 0 {
            return bad("T_max must be ≥ 1");
        }
        self.solver.validate()
    }

    pub(crate) fn next_lambda(&self, lambda: f64) -> f64 {
        match self.lambda_update {
            LambdaUpdate::Capped => (lambda * self.rho).min(self.lambda_max),
            LambdaUpdate::LiteralMax => (lambda * self.rho).max(self.lambda_max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PccpStatus {
    Feasible,
    Infeasible,
    RestartExhausted,
}

impl PccpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PccpStatus::Feasible => "FEASIBLE",
            PccpStatus::Infeasible => "INFEASIBLE",
            PccpStatus::RestartExhausted => "RESTART_EXHAUSTED",
        }
    }
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub restart: usize,
    pub iteration: usize,
    pub lambda: f64,
    pub slack_sum: f64,
    pub b: Vec<f64>,
    pub objective: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "restart,iteration,lambda,slack_sum,objective,b";

    /// CSV row; `b` is a `;`-separated list.
    pub fn to_csv(&self) -> String {
        let b: Vec<String> = self.b.iter().map(|v| format!("{v:?}")).collect();
        format!(
            "{},{},{:?},{:?},{:?},{}",
            self.restart,
            self.iteration,
            self.lambda,
            self.slack_sum,
            self.objective,
            b.join(";")
        )
    }
}

#[derive(Clone, Debug)]
pub struct PccpResult {
    pub w: PrecoderSet,
    pub b: ActivationVector,
    pub tpc_watts: f64,
    pub transmit_power_watts: f64,
    pub active_count: usize,
    pub status: PccpStatus,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub restarts: usize,
}

impl PccpResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from(TraceRow::CSV_HEADER);
        out.push('\n');
        for row in &self.trace {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}
