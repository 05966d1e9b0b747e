use crate::chanmod::ChannelRealization;
use crate::probform::{assemble_fixed_active_set, PrecoderSet, SystemParams};
use crate::socp::{solve_with, SolveStatus, SolverSettings};
use crate::{CMatrix, CVector, Error, Result};

#[derive(Clone, Debug)]
pub enum FixedSetOutcome {
    Feasible {
        w: PrecoderSet,
        /// `Σ_k ‖w_k‖²`, watts.
        transmit_power: f64,
    },
    Infeasible,
}

impl FixedSetOutcome {
    pub fn transmit_power(&self) -> Option<f64> {
        match self {
            FixedSetOutcome::Feasible { transmit_power, .. } => Some(*transmit_power),
            FixedSetOutcome::Infeasible => None,
        }
    }
}

/// Minimum transmit power meeting every SINR target with only `active` APs
/// allowed to transmit, under their per-AP budgets.
pub fn solve_fixed_active_set(
    h: &ChannelRealization,
    params: &SystemParams,
    active: &[usize],
    solver: &SolverSettings,
) -> Result<FixedSetOutcome> {
    let fp = assemble_fixed_active_set(h, params, active)?;
    if sum_power_exceeds_budget(h, params, active) {
        return Ok(FixedSetOutcome::Infeasible);
    }
    solve_program(h, params, fp, solver)
}

/// The conic solve alone, without the sum-power screen.
#[cfg(test)]
pub(crate) fn solve_fixed_active_set_conic(
    h: &ChannelRealization,
    params: &SystemParams,
    active: &[usize],
    solver: &SolverSettings,
) -> Result<FixedSetOutcome> {
    solve_program(h, params, assemble_fixed_active_set(h, params, active)?, solver)
}

fn solve_program(
    h: &ChannelRealization,
    params: &SystemParams,
    fp: crate::probform::FixedSetProgram,
    solver: &SolverSettings,
) -> Result<FixedSetOutcome> {
    let sol = solve_with(&fp.program, solver)?;
    match sol.status {
        SolveStatus::Optimal => {
            let mut w = fp.layout.extract(&sol.x);
            lift_to_targets(h, params, &mut w);
            let transmit_power = w.transmit_power();
            Ok(FixedSetOutcome::Feasible { w, transmit_power })
        }
        SolveStatus::Infeasible => Ok(FixedSetOutcome::Infeasible),
        other => Err(Error::Solver(format!(
            "fixed-active-set solve ended with {other:?} (residuals {:.2e}/{:.2e}/{:.2e})",
            sol.primal_residual, sol.dual_residual, sol.duality_gap
        ))),
    }
}

/// Scales all precoders by a common `c ≥ 1` so that every SINR reaches `γ0`
/// exactly instead of within the solver tolerance. Scaling raises each SINR
/// (noise stays fixed), and the smallest sufficient factor is
/// `c² = max_k γ0σ² / (S_k − γ0 I_k)` for signal `S_k` and interference
/// `I_k`. The factor is capped where an AP would exceed its budget.
fn lift_to_targets(h: &ChannelRealization, params: &SystemParams, w: &mut PrecoderSet) {
    let mut c2: f64 = 1.0;
    for (k, hk) in h.h.iter().enumerate() {
        let (mut signal, mut interference) = (0.0, 0.0);
        for (j, wj) in w.w.iter().enumerate() {
            let p = hk.dotc(wj).norm_sqr();
            if j == k {
                signal = p;
            } else {
                interference += p;
            }
        }
        let room = signal - params.gamma0 * interference;
        if !(room > 0.0) {
            return;
        }
        c2 = c2.max(params.gamma0 * params.sigma2 / room);
    }
    let cap = (0..params.n_aps)
        .map(|n| (n, w.ap_power(n)))
        .filter(|&(_, p)| p > 0.0)
        .map(|(n, p)| params.p_max[n] / p)
        .fold(f64::INFINITY, f64::min);
    let c = (c2 * (1.0 + 1e-12)).min(cap).sqrt();
    if c > 1.0 {
        let c = crate::Complex64::new(c, 0.0);
        w.w.iter_mut().for_each(|wk| *wk *= c);
    }
}

/// Cheap infeasibility certificate. Dropping the per-AP budgets in favour of
/// their sum leaves the classic sum-power problem, whose minimum is `σ² Σ q_k`
/// at the fixed point of the uplink iteration
/// `q_k ← γ0 / h_kᴴ (I + Σ_{j≠k} q_j h_j h_jᴴ)⁻¹ h_k`.
/// Started from `q = 0` the iterates increase monotonically towards that
/// fixed point (or diverge when there is none), so each one bounds the
/// minimum from below. Returns `true` once a bound exceeds the total budget
/// of the active APs; `false` means only that the screen was inconclusive.
pub(crate) fn sum_power_exceeds_budget(h: &ChannelRealization, params: &SystemParams, active: &[usize]) -> bool {
    const MAX_ITER: usize = 500;
    let budget: f64 = active.iter().map(|&n| params.p_max[n]).sum();
    let limit = budget * (1.0 + 1e-6) / params.sigma2;
    let m = active.len() * h.n_ant;
    let k_users = h.n_ues();
    let channels: Vec<CVector> = (0..k_users)
        .map(|k| {
            let mut v = CVector::zeros(m);
            for (slot, &n) in active.iter().enumerate() {
                v.rows_mut(slot * h.n_ant, h.n_ant).copy_from(&h.block(k, n));
            }
            v
        })
        .collect();
    let mut q = vec![0.0f64; k_users];
    for _ in 0..MAX_ITER {
        let mut a = CMatrix::identity(m, m);
        for (qj, hj) in q.iter().zip(&channels) {
            if *qj > 0.0 {
                a.ger(
                    crate::Complex64::new(*qj, 0.0),
                    hj,
                    &hj.conjugate(),
                    crate::Complex64::new(1.0, 0.0),
                );
            }
        }
        let Some(chol) = a.cholesky() else {
            return false;
        };
        let mut next = Vec::with_capacity(k_users);
        for (qk, hk) in q.iter().zip(&channels) {
            // hᴴ(A − q h hᴴ)⁻¹h = s / (1 − q s) with s = hᴴA⁻¹h
            let s = chol.solve(hk).dotc(hk).re;
            let denom = s / (1.0 - qk * s);
            if !(denom > 0.0 && denom.is_finite()) {
                return false;
            }
            next.push(params.gamma0 / denom);
        }
        let total: f64 = next.iter().sum();
        let change = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs() / a.max(1e-300))
            .fold(0.0, f64::max);
        q = next;
        if total > limit {
            return true;
        }
        if change < 1e-12 {
            return false;
        }
    }
    false
}
