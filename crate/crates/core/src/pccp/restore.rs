use super::fixed::{solve_fixed_active_set, FixedSetOutcome};
use crate::chanmod::ChannelRealization;
use crate::probform::{ActivationVector, PrecoderSet, SystemParams};
use crate::socp::SolverSettings;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Restored {
    pub b: ActivationVector,
    pub w: PrecoderSet,
    pub transmit_power: f64,
}

/// Turns a relaxed activation into a binary one with feasible precoders.
///
/// APs with `b_n ≥ 0.5` are kept and the precoders are re-optimized on that
/// set. While the set is empty or infeasible, the inactive AP with the largest
/// relaxed activation (ties broken by its relaxed transmit power) is switched
/// on. A subset on which the solver fails numerically counts as unusable and
/// escalation continues. Returns `None` when even the full set is infeasible,
/// and the solver error when the full set is the one that failed.
pub fn round_and_restore(
    h: &ChannelRealization,
    params: &SystemParams,
    relaxed_b: &ActivationVector,
    relaxed_w: &PrecoderSet,
    solver: &SolverSettings,
) -> Result<Option<Restored>> {
    restore_with(h, params, relaxed_b, relaxed_w, solver, None)
}

/// [`round_and_restore`] reusing an already computed outcome for the full set.
pub(crate) fn restore_with(
    h: &ChannelRealization,
    params: &SystemParams,
    relaxed_b: &ActivationVector,
    relaxed_w: &PrecoderSet,
    solver: &SolverSettings,
    all_on: Option<&FixedSetOutcome>,
) -> Result<Option<Restored>> {
    let n_aps = params.n_aps;
    if relaxed_b.b.len() != n_aps {
        return Err(Error::invalid("relaxed activation length does not match N"));
    }
    if relaxed_w.w.len() != params.n_ues || relaxed_w.n_aps != n_aps {
        return Err(Error::invalid("relaxed precoders do not match the system size"));
    }
    let mut on: Vec<bool> = relaxed_b.b.iter().map(|&v| v >= 0.5).collect();

    let mut order: Vec<usize> = (0..n_aps).collect();
    order.sort_by(|&a, &b| {
        relaxed_b.b[b]
            .total_cmp(&relaxed_b.b[a])
            .then(relaxed_w.ap_power(b).total_cmp(&relaxed_w.ap_power(a)))
            .then(a.cmp(&b))
    });
    let mut escalation = order.into_iter();

    loop {
        let active: Vec<usize> = (0..n_aps).filter(|&n| on[n]).collect();
        let mut failure = None;
        if !active.is_empty() {
            let outcome = match all_on {
                Some(known) if active.len() == n_aps => Ok(known.clone()),
                _ => solve_fixed_active_set(h, params, &active, solver),
            };
            match outcome {
                Ok(FixedSetOutcome::Feasible { w, transmit_power }) => {
                    return Ok(Some(Restored {
                        b: ActivationVector::from_active_set(n_aps, &active),
                        w,
                        transmit_power,
                    }));
                }
                Ok(FixedSetOutcome::Infeasible) => {}
                Err(e) => failure = Some(e),
            }
        }
        match escalation.find(|&n| !on[n]) {
            Some(n) => on[n] = true,
            None => return failure.map_or(Ok(None), Err),
        }
    }
}
