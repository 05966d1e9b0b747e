use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::kkt::{kkt_residuals, rsoc_to_soc_head};
use super::{Cone, ConeProgram, ConeSolution, SolveStatus};
use crate::{Error, Result};

type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Bound on the recomputed residuals for an `Optimal` or `Infeasible` verdict.
    pub tol: f64,
    pub max_iter: u32,
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!(
                "solver tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("solver iteration limit must be ≥ 1"));
        }
        Ok(())
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

pub fn solve(program: &ConeProgram, tol: f64, max_iter: u32) -> Result<ConeSolution> {
    solve_with(program, &SolverSettings { tol, max_iter })
}

/// Solves the program with a primal-dual interior point method (Clarabel) and
/// certifies the answer with [`kkt_residuals`].
///
/// Rotated cones are mapped onto standard second-order cones through the
/// orthogonal head rotation, and duals are mapped back before reporting. An
/// `Optimal` or `Infeasible` status is only returned when the recomputed
/// residuals are within `tol`; otherwise the status is `NumericalError` and the
/// residual fields say by how much the iterate missed. The backend stops on
/// its own scaled criteria, so a verdict that misses `tol` is retried once
/// with backend tolerances a hundred times tighter.
pub fn solve_with(program: &ConeProgram, settings: &SolverSettings) -> Result<ConeSolution> {
    settings.validate()?;
    program.validate()?;
    let first = backend_solve(program, settings, settings.tol)?;
    if first.status != SolveStatus::NumericalError || first.primal_residual.is_nan() {
        return Ok(first);
    }
    let retry = backend_solve(program, settings, (settings.tol * 1e-2).max(1e-14))?;
    Ok(if retry.status == SolveStatus::NumericalError {
        first
    } else {
        retry
    })
}

fn backend_solve(program: &ConeProgram, settings: &SolverSettings, backend_tol: f64) -> Result<ConeSolution> {
    let m = program.num_rows();
    let n = program.num_vars;

    let mut rows_i = Vec::new();
    let mut cols_j = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = Vec::with_capacity(m);
    let mut cones = Vec::with_capacity(program.blocks.len());
    let mut offset = 0;
    for block in &program.blocks {
        let d = block.cone.dim();
        match block.cone {
            Cone::Rsoc(_) => {
                let (h0, h1) = rotate_head(&block.rows[0], &block.rows[1]);
                for (j, a) in h0 {
                    rows_i.push(offset);
                    cols_j.push(j);
                    vals.push(-a);
                }
                for (j, a) in h1 {
                    rows_i.push(offset + 1);
                    cols_j.push(j);
                    vals.push(-a);
                }
                let (c0, c1) = rsoc_to_soc_head(block.constant[0], block.constant[1]);
                rhs.push(c0);
                rhs.push(c1);
                for (r, row) in block.rows.iter().enumerate().skip(2) {
                    for &(j, a) in row {
                        rows_i.push(offset + r);
                        cols_j.push(j);
                        vals.push(-a);
                    }
                }
                rhs.extend_from_slice(&block.constant[2..]);
            }
            _ => {
                for (r, row) in block.rows.iter().enumerate() {
                    for &(j, a) in row {
                        rows_i.push(offset + r);
                        cols_j.push(j);
                        vals.push(-a);
                    }
                }
                rhs.extend_from_slice(&block.constant);
            }
        }
        cones.push(match block.cone {
            Cone::Zero(d) => SupportedConeT::ZeroConeT(d),
            Cone::Nonneg(d) => SupportedConeT::NonnegativeConeT(d),
            Cone::Soc(d) | Cone::Rsoc(d) => SupportedConeT::SecondOrderConeT(d),
        });
        offset += d;
    }

    let a = CscMatrix::new_from_triplets(m, n, rows_i, cols_j, vals);
    let p = CscMatrix::<f64>::zeros((n, n));
    let backend_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_threads(1)
        .max_iter(settings.max_iter)
        .tol_gap_abs(backend_tol)
        .tol_gap_rel(backend_tol)
        .tol_feas(backend_tol)
        .tol_infeas_abs(backend_tol)
        .tol_infeas_rel(backend_tol)
        .build()
        .map_err(|e| Error::Solver(format!("settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &program.objective, &a, &rhs, &cones, backend_settings)
        .map_err(|e| Error::Solver(format!("setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;

    let mut y = sol.z.clone();
    let mut offset = 0;
    for block in &program.blocks {
        if let Cone::Rsoc(_) = block.cone {
            let (u, v) = rsoc_to_soc_head(y[offset], y[offset + 1]);
            y[offset] = u;
            y[offset + 1] = v;
        }
        offset += block.cone.dim();
    }

    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIter,
        _ => SolveStatus::NumericalError,
    };

    if status == SolveStatus::Infeasible {
        let cty: f64 = program
            .blocks
            .iter()
            .flat_map(|b| b.constant.iter())
            .zip(&y)
            .map(|(c, y)| c * y)
            .sum();
        if cty < 0.0 {
            y.iter_mut().for_each(|v| *v /= -cty);
        }
    }

    let mut out = ConeSolution {
        objective: if status == SolveStatus::Optimal {
            program.objective_value(&sol.x)
        } else {
            f64::NAN
        },
        x: sol.x.clone(),
        y,
        status,
        primal_residual: 0.0,
        dual_residual: 0.0,
        duality_gap: 0.0,
        iterations: sol.iterations,
    };
    if matches!(status, SolveStatus::Unbounded) {
        out.primal_residual = f64::NAN;
        out.dual_residual = f64::NAN;
        out.duality_gap = f64::NAN;
        return Ok(out);
    }
    let res = kkt_residuals(program, &out);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.duality_gap = res.gap;
    if matches!(status, SolveStatus::Optimal | SolveStatus::Infeasible) && !(res.max() <= settings.tol) {
        out.status = SolveStatus::NumericalError;
    }
    Ok(out)
}

fn rotate_head(r0: &[(usize, f64)], r1: &[(usize, f64)]) -> (SparseRow, SparseRow) {
    use std::collections::BTreeMap;
    let mut u: BTreeMap<usize, f64> = BTreeMap::new();
    let mut v: BTreeMap<usize, f64> = BTreeMap::new();
    for &(j, a) in r0 {
        *u.entry(j).or_default() += a;
    }
    for &(j, a) in r1 {
        *v.entry(j).or_default() += a;
    }
    let keys: std::collections::BTreeSet<usize> = u.keys().chain(v.keys()).copied().collect();
    let mut h0 = Vec::with_capacity(keys.len());
    let mut h1 = Vec::with_capacity(keys.len());
    for j in keys {
        let (a, b) = rsoc_to_soc_head(u.get(&j).copied().unwrap_or(0.0), v.get(&j).copied().unwrap_or(0.0));
        if a != 0.0 {
            h0.push((j, a));
        }
        if b != 0.0 {
            h1.push((j, b));
        }
    }
    (h0, h1)
}
