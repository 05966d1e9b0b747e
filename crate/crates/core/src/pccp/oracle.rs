use std::collections::BTreeMap;

use super::fixed::{solve_fixed_active_set, FixedSetOutcome};
use crate::chanmod::ChannelRealization;
use crate::par::{map_indexed, Execution};
use crate::probform::SystemParams;
use crate::socp::SolverSettings;
use crate::{Error, Result};

/// Largest AP count the exhaustive search accepts (4095 subsets).
pub const MAX_ORACLE_APS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubsetOutcome {
    Feasible { transmit_power: f64, tpc: f64 },
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// `None` when no subset is feasible.
    pub best_subset: Option<Vec<usize>>,
    pub tpc_watts: Option<f64>,
    pub per_subset: BTreeMap<Vec<usize>, SubsetOutcome>,
}

/// Ground truth for small instances: solves the fixed-active-set problem on
/// every non-empty AP subset and keeps the lowest total power consumption.
pub fn exhaustive_oracle(
    h: &ChannelRealization,
    params: &SystemParams,
    solver: &SolverSettings,
) -> Result<OracleResult> {
    exhaustive_oracle_with(h, params, solver, Execution::default())
}

pub fn exhaustive_oracle_with(
    h: &ChannelRealization,
    params: &SystemParams,
    solver: &SolverSettings,
    exec: Execution,
) -> Result<OracleResult> {
    params.validate()?;
    params.check_channels(h)?;
    let n = params.n_aps;
    if n > MAX_ORACLE_APS {
        return Err(Error::invalid(format!(
            "exhaustive oracle refuses N = {n} (limit {MAX_ORACLE_APS})"
        )));
    }
    let count = (1usize << n) - 1;
    let outcomes = map_indexed(count, exec, |i| {
        let mask = i + 1;
        let subset: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let outcome = solve_fixed_active_set(h, params, &subset, solver).map(|o| match o {
            FixedSetOutcome::Feasible { transmit_power, .. } => SubsetOutcome::Feasible {
                transmit_power,
                tpc: transmit_power / params.eta + params.p_fix * subset.len() as f64,
            },
            FixedSetOutcome::Infeasible => SubsetOutcome::Infeasible,
        });
        (subset, outcome)
    });

    let mut per_subset = BTreeMap::new();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for (subset, outcome) in outcomes {
        let outcome = outcome?;
        if let SubsetOutcome::Feasible { tpc, .. } = outcome {
            let better = match &best {
                None => true,
                Some((s, b)) => tpc < *b || (tpc == *b && subset.len() < s.len()),
            };
            if better {
                best = Some((subset.clone(), tpc));
            }
        }
        per_subset.insert(subset, outcome);
    }
    Ok(OracleResult {
        tpc_watts: best.as_ref().map(|b| b.1),
        best_subset: best.map(|b| b.0),
        per_subset,
    })
}
